//! The five stages wired together over an output directory.
//!
//! Every stage writes plain CSV/JSONL artifacts before the next one starts and
//! records a cache key in `manifest.json`: a SHA-256 over the stage's own
//! config section and the keys of the stages it reads from (the corpus stage
//! hashes its input files instead). A stage whose key and output hashes still
//! match is loaded from disk rather than recomputed.
//!
//! Per-ego work runs on a dedicated thread pool; results are collected in ego
//! order and written by a single writer, so the artifacts do not depend on the
//! number of jobs. Neither the job count nor the output directory enters any
//! cache key.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    engagement_verdict, group_by_ego, parse_interaction_log, summarize_timeline, EngagementPolicy,
    InteractionKind, InteractionRecord, Skip,
};
use crate::egonet::{
    active_alters, build_ego_network, read_ego_networks, write_ego_networks, EgoNetwork,
    MeanShiftConfig, PairActivity, TieFrequency, DEFAULT_ACTIVE_THRESHOLD,
    DEFAULT_DURATION_FLOOR_DAYS,
};
use crate::report::{build_report, render_report, DatasetReport, EgoAnalysis, RenderFormat, ReportOptions};
use crate::sentiment::{label_interaction, Lexicon, LexiconScorer, Polarity, ScorerConfig};
use crate::signing::{
    read_signed_edges, sign_relationship, validate_threshold, write_signed_edges, RelationshipStats,
    SignedRelationship, DEFAULT_THRESHOLD,
};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Corpus,
    Sentiment,
    Signing,
    Egonet,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Corpus, Stage::Sentiment, Stage::Signing, Stage::Egonet, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Sentiment => "sentiment",
            Stage::Signing => "signing",
            Stage::Egonet => "egonet",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage: {message}")]
    Input { stage: Stage, message: String },
    #[error("{stage} stage: {message}")]
    Internal { stage: Stage, message: String },
}

impl PipelineError {
    /// 1 for bad inputs, 2 for bad configuration, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input { .. } => 1,
            PipelineError::Config(_) => 2,
            PipelineError::Internal { .. } => 3,
        }
    }
}

fn input_err<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Input {
        stage,
        message: e.to_string(),
    }
}

fn internal_err<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Internal {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub paths: Vec<PathBuf>,
    /// Tab-separated `token<TAB>valence`; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Row label in the report tables.
    pub dataset: String,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            paths: Vec::new(),
            lexicon: None,
            dataset: "dataset".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigningConfig {
    pub threshold: f64,
}

impl Default for SigningConfig {
    fn default() -> Self {
        SigningConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgonetConfig {
    /// Interactions per year an alter needs to be active.
    pub active_threshold: f64,
    pub duration_floor_days: f64,
    pub meanshift: MeanShiftConfig,
}

impl Default for EgonetConfig {
    fn default() -> Self {
        EgonetConfig {
            active_threshold: DEFAULT_ACTIVE_THRESHOLD,
            duration_floor_days: DEFAULT_DURATION_FLOOR_DAYS,
            meanshift: MeanShiftConfig::default(),
        }
    }
}

/// Everything a run needs, one TOML section per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the bootstrap when the report uses bootstrap intervals.
    pub seed: u64,
    /// Worker threads; 0 means one per available processor.
    pub jobs: usize,
    pub input: InputConfig,
    pub output: OutputConfig,
    pub corpus: EngagementPolicy,
    pub sentiment: ScorerConfig,
    pub signing: SigningConfig,
    pub egonet: EgonetConfig,
    pub report: ReportOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.input.paths.iter_mut().for_each(resolve);
        if let Some(lexicon) = config.input.lexicon.as_mut() {
            resolve(lexicon);
        }
        resolve(&mut config.output.dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |e: &dyn fmt::Display| PipelineError::Config(e.to_string());
        self.corpus.validate().map_err(|e| cfg(&e))?;
        self.sentiment.validate().map_err(|e| cfg(&e))?;
        validate_threshold(self.signing.threshold).map_err(|e| cfg(&e))?;
        self.egonet.meanshift.validate().map_err(|e| cfg(&e))?;
        if !(self.egonet.active_threshold > 0.0) || !(self.egonet.duration_floor_days > 0.0) {
            return Err(PipelineError::Config(
                "egonet.active_threshold and egonet.duration_floor_days must be positive".into(),
            ));
        }
        let level = self.report.ci.level;
        if !(level > 0.0 && level < 1.0) {
            return Err(PipelineError::Config(format!("report.ci.level {level} outside (0, 1)")));
        }
        if self.report.restrict_k == 0 {
            return Err(PipelineError::Config("report.restrict_k must be positive".into()));
        }
        if self.input.paths.is_empty() {
            return Err(PipelineError::Config("no input paths".into()));
        }
        Ok(())
    }

    /// Worker count after resolving 0 to the processor count.
    pub fn effective_jobs(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

// ----- hashing and the manifest -----

fn hash_file(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut file = File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn stage_key<T: Serialize>(stage: Stage, config: &T, upstream: &[&str]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_str().as_bytes());
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    for key in upstream {
        hasher.update(key.as_bytes());
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: String,
    /// Output path relative to the run directory -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<Stage, StageRecord>,
}

impl Manifest {
    fn load(dir: &Path) -> Manifest {
        fs::read(dir.join(MANIFEST))
            .ok()
            .and_then(|bytes| serde_json::from_slice(&bytes).ok())
            .unwrap_or_default()
    }

    fn save(&self, dir: &Path, stage: Stage) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(self).map_err(internal_err(stage))?;
        text.push('\n');
        fs::write(dir.join(MANIFEST), text).map_err(internal_err(stage))
    }

    /// True when the stage ran with this key and its outputs are untouched.
    fn is_fresh(&self, dir: &Path, stage: Stage, key: &str) -> bool {
        let Some(record) = self.stages.get(&stage) else {
            return false;
        };
        record.key == key
            && record
                .outputs
                .iter()
                .all(|(name, hash)| hash_file(&dir.join(name)).is_ok_and(|h| &h == hash))
    }
}

struct ArtifactDir<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl ArtifactDir<'_> {
    fn write(&self, stage: Stage, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(internal_err(stage))?;
        }
        let file = File::create(&path).map_err(internal_err(stage))?;
        let mut out = BufWriter::new(file);
        write(&mut out).map_err(internal_err(stage))?;
        out.flush().map_err(internal_err(stage))
    }

    fn open(&self, stage: Stage, name: &str) -> Result<BufReader<File>, PipelineError> {
        let path = self.dir.join(name);
        File::open(&path)
            .map(BufReader::new)
            .map_err(|e| PipelineError::Input {
                stage,
                message: format!("{}: {e}", path.display()),
            })
    }

    fn commit(&mut self, stage: Stage, key: String, outputs: &[&str]) -> Result<(), PipelineError> {
        let mut record = StageRecord {
            key,
            outputs: BTreeMap::new(),
        };
        for name in outputs {
            let hash = hash_file(&self.dir.join(name)).map_err(internal_err(stage))?;
            record.outputs.insert((*name).to_string(), hash);
        }
        self.manifest.stages.insert(stage, record);
        self.manifest.save(self.dir, stage)
    }
}

// ----- corpus stage -----

/// One row of `egos.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EgoRow {
    pub ego: String,
    pub total: u64,
    pub first_ts: i64,
    pub last_ts: i64,
    pub active_months: usize,
    pub low_months: usize,
    pub engaged: bool,
}

/// One row of `skips.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRow {
    pub file: String,
    pub line_number: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct CorpusOutput {
    pub egos: Vec<EgoRow>,
    /// Every directed pair in the input, ego then alter order.
    pub pairs: Vec<PairActivity>,
    pub skipped_lines: usize,
}

impl CorpusOutput {
    pub fn engaged(&self) -> impl Iterator<Item = &EgoRow> {
        self.egos.iter().filter(|e| e.engaged)
    }
}

fn read_inputs(paths: &[PathBuf]) -> Result<(Vec<InteractionRecord>, Vec<SkipRow>), PipelineError> {
    let stage = Stage::Corpus;
    let mut records = Vec::new();
    let mut skips = Vec::new();
    for path in paths {
        let file = File::open(path).map_err(|e| PipelineError::Input {
            stage,
            message: format!("{}: {e}", path.display()),
        })?;
        let log = parse_interaction_log(BufReader::new(file)).map_err(|e| PipelineError::Input {
            stage,
            message: format!("{}: {e}", path.display()),
        })?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        skips.extend(log.skips.iter().map(|Skip { line, reason }| SkipRow {
            file: name.clone(),
            line_number: *line,
            reason: reason.to_string(),
        }));
        records.extend(log.records);
    }
    Ok((records, skips))
}

fn pairs_of(records: &[InteractionRecord]) -> Vec<PairActivity> {
    let mut pairs: BTreeMap<&str, PairActivity> = BTreeMap::new();
    for r in records {
        pairs
            .entry(r.alter_id.as_str())
            .and_modify(|p| p.add(r.ts))
            .or_insert_with(|| PairActivity {
                ego_id: r.ego_id.clone(),
                alter_id: r.alter_id.clone(),
                n_interactions: 1,
                first_ts: r.ts,
                last_ts: r.ts,
            });
    }
    pairs.into_values().collect()
}

/// Parses the inputs and applies the engagement filter. Returns the records
/// of engaged egos alongside the stage output.
pub fn corpus_stage(
    paths: &[PathBuf],
    policy: &EngagementPolicy,
) -> Result<(CorpusOutput, BTreeMap<String, Vec<InteractionRecord>>, Vec<SkipRow>), PipelineError> {
    let (records, skips) = read_inputs(paths)?;
    let mut out = CorpusOutput {
        skipped_lines: skips.len(),
        ..CorpusOutput::default()
    };
    let mut engaged = BTreeMap::new();
    for (ego, records) in group_by_ego(records) {
        let summary = summarize_timeline(&records).map_err(internal_err(Stage::Corpus))?;
        let verdict = engagement_verdict(&summary, policy);
        out.pairs.extend(pairs_of(&records));
        out.egos.push(EgoRow {
            ego: ego.clone(),
            total: summary.total_interactions,
            first_ts: summary.first_ts,
            last_ts: summary.last_ts,
            active_months: verdict.active_months,
            low_months: verdict.low_months,
            engaged: verdict.engaged(),
        });
        if verdict.engaged() {
            engaged.insert(ego, records);
        }
    }
    Ok((out, engaged, skips))
}

fn write_csv_rows<T: Serialize>(rows: &[T], header: &[&str], out: &mut impl Write) -> Result<(), String> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(out);
    if rows.is_empty() {
        w.write_record(header).map_err(|e| e.to_string())?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn read_csv_rows<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

const EGO_HEADER: [&str; 7] = ["ego", "total", "first_ts", "last_ts", "active_months", "low_months", "engaged"];
const PAIR_HEADER: [&str; 5] = ["ego", "alter", "n_interactions", "first_ts", "last_ts"];

// ----- sentiment stage -----

/// One row of `labels.jsonl`: the input record plus its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub ego: String,
    pub alter: String,
    pub kind: InteractionKind,
    pub ts: i64,
    pub text: String,
    pub compound: f64,
    pub polarity: Polarity,
}

pub fn build_scorer(config: &RunConfig) -> Result<LexiconScorer, PipelineError> {
    let lexicon = match &config.input.lexicon {
        Some(path) => Lexicon::load(path).map_err(input_err(Stage::Sentiment))?,
        None => Lexicon::bundled(),
    };
    Ok(LexiconScorer::new(lexicon, config.sentiment.clone()))
}

pub fn sentiment_stage(
    engaged: BTreeMap<String, Vec<InteractionRecord>>,
    scorer: &LexiconScorer,
) -> Vec<Vec<LabeledRecord>> {
    let egos: Vec<Vec<InteractionRecord>> = engaged.into_values().collect();
    egos.into_par_iter()
        .map(|records| {
            records
                .into_iter()
                .map(|r| {
                    let label = label_interaction(&r, scorer, scorer.config());
                    LabeledRecord {
                        ego: r.ego_id,
                        alter: r.alter_id,
                        kind: r.kind,
                        ts: r.ts,
                        text: r.text,
                        compound: label.compound,
                        polarity: label.polarity,
                    }
                })
                .collect()
        })
        .collect()
}

fn write_labels(labels: &[Vec<LabeledRecord>], out: &mut impl Write) -> Result<(), String> {
    for row in labels.iter().flatten() {
        serde_json::to_writer(&mut *out, row).map_err(|e| e.to_string())?;
        out.write_all(b"\n").map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn read_labels(input: impl BufRead) -> Result<Vec<Vec<LabeledRecord>>, String> {
    let mut egos: Vec<Vec<LabeledRecord>> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let row: LabeledRecord = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
        match egos.last_mut() {
            Some(group) if group[0].ego == row.ego => group.push(row),
            _ => egos.push(vec![row]),
        }
    }
    Ok(egos)
}

// ----- signing stage -----

pub fn signing_stage(labels: &[Vec<LabeledRecord>], threshold: f64) -> Vec<SignedRelationship> {
    let per_ego: Vec<Vec<SignedRelationship>> = labels
        .par_iter()
        .map(|rows| {
            let mut by_alter: BTreeMap<&str, RelationshipStats> = BTreeMap::new();
            for r in rows {
                let stats = by_alter.entry(r.alter.as_str()).or_insert_with(|| RelationshipStats {
                    ego_id: r.ego.clone(),
                    alter_id: r.alter.clone(),
                    n_total: 0,
                    n_negative: 0,
                    n_positive: 0,
                    n_neutral: 0,
                });
                stats.n_total += 1;
                match r.polarity {
                    Polarity::Negative => stats.n_negative += 1,
                    Polarity::Positive => stats.n_positive += 1,
                    Polarity::Neutral => stats.n_neutral += 1,
                }
            }
            by_alter.into_values().map(|s| sign_relationship(s, threshold)).collect()
        })
        .collect();
    per_ego.into_iter().flatten().collect()
}

// ----- egonet stage -----

/// One row of `ties.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieRow {
    pub ego: String,
    pub alter: String,
    pub n_interactions: u64,
    pub duration_days: f64,
    pub freq_per_year: f64,
    pub active: bool,
}

#[derive(Debug, Default)]
pub struct EgonetOutput {
    pub ties: Vec<TieRow>,
    pub networks: Vec<EgoNetwork>,
}

/// Frequencies are measured up to each ego's last interaction.
pub fn egonet_stage(corpus: &CorpusOutput, config: &EgonetConfig) -> Result<EgonetOutput, PipelineError> {
    let stage = Stage::Egonet;
    let mut pairs_by_ego: HashMap<&str, Vec<&PairActivity>> = HashMap::new();
    for p in &corpus.pairs {
        pairs_by_ego.entry(p.ego_id.as_str()).or_default().push(p);
    }
    let engaged: Vec<&EgoRow> = corpus.engaged().collect();
    let per_ego: Vec<Result<(Vec<TieRow>, Option<EgoNetwork>), PipelineError>> = engaged
        .par_iter()
        .map(|ego| {
            let pairs = pairs_by_ego.get(ego.ego.as_str()).map_or(&[][..], |v| v.as_slice());
            let freqs: Vec<TieFrequency> = pairs
                .iter()
                .map(|p| p.frequency(ego.last_ts, config.duration_floor_days))
                .collect::<Result<_, _>>()
                .map_err(input_err(stage))?;
            let ties = freqs
                .iter()
                .map(|f| TieRow {
                    ego: f.ego_id.clone(),
                    alter: f.alter_id.clone(),
                    n_interactions: f.n_interactions,
                    duration_days: f.duration_days,
                    freq_per_year: f.freq_per_year,
                    active: f.freq_per_year >= config.active_threshold,
                })
                .collect();
            let active = active_alters(&freqs, config.active_threshold);
            if active.is_empty() {
                log::warn!("ego {} has no active alters", ego.ego);
                return Ok((ties, None));
            }
            let network = build_ego_network(&ego.ego, &active, &config.meanshift).map_err(internal_err(stage))?;
            Ok((ties, Some(network)))
        })
        .collect();
    let mut out = EgonetOutput::default();
    for result in per_ego {
        let (ties, network) = result?;
        out.ties.extend(ties);
        out.networks.extend(network);
    }
    Ok(out)
}

const TIE_HEADER: [&str; 6] = ["ego", "alter", "n_interactions", "duration_days", "freq_per_year", "active"];

// ----- report stage -----

pub fn report_stage(
    dataset: &str,
    corpus: &CorpusOutput,
    edges: &[SignedRelationship],
    egonet: &EgonetOutput,
    options: &ReportOptions,
) -> Result<DatasetReport, PipelineError> {
    let mut by_ego: BTreeMap<&str, EgoAnalysis> = corpus
        .engaged()
        .map(|e| {
            (
                e.ego.as_str(),
                EgoAnalysis {
                    ego_id: e.ego.clone(),
                    edges: Vec::new(),
                    active: BTreeSet::new(),
                    network: None,
                },
            )
        })
        .collect();
    for e in edges {
        if let Some(a) = by_ego.get_mut(e.stats.ego_id.as_str()) {
            a.edges.push(e.clone());
        }
    }
    for t in egonet.ties.iter().filter(|t| t.active) {
        if let Some(a) = by_ego.get_mut(t.ego.as_str()) {
            a.active.insert(t.alter.clone());
        }
    }
    for n in &egonet.networks {
        if let Some(a) = by_ego.get_mut(n.ego_id.as_str()) {
            a.network = Some(n.clone());
        }
    }
    let egos: Vec<EgoAnalysis> = by_ego.into_values().collect();
    build_report(dataset, &corpus.pairs, &egos, options).map_err(internal_err(Stage::Report))
}

// ----- orchestration -----

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    /// Stages loaded from existing artifacts instead of recomputed.
    pub cached: Vec<Stage>,
    pub executed: Vec<Stage>,
    pub egos: usize,
    pub engaged_egos: usize,
    pub skipped_lines: usize,
    pub relationships: usize,
    pub networks: usize,
}

#[derive(Serialize)]
struct CorpusKey<'a> {
    policy: &'a EngagementPolicy,
    inputs: Vec<String>,
}

#[derive(Serialize)]
struct SentimentKey<'a> {
    scorer: &'a ScorerConfig,
    lexicon: Option<String>,
}

#[derive(Serialize)]
struct ReportKey<'a> {
    dataset: &'a str,
    options: &'a ReportOptions,
}

/// Runs every stage up to and including `until`.
pub fn run_pipeline(config: &RunConfig, until: Stage) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    for path in &config.input.paths {
        if !path.is_file() {
            return Err(PipelineError::Input {
                stage: Stage::Corpus,
                message: format!("input {} does not exist", path.display()),
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_jobs())
        .build()
        .map_err(internal_err(Stage::Corpus))?;
    pool.install(|| run_stages(config, until))
}

fn run_stages(config: &RunConfig, until: Stage) -> Result<RunSummary, PipelineError> {
    let dir = config.output.dir.as_path();
    fs::create_dir_all(dir).map_err(internal_err(Stage::Corpus))?;
    let mut art = ArtifactDir {
        dir,
        manifest: Manifest::load(dir),
    };
    let mut summary = RunSummary::default();

    // corpus
    let stage = Stage::Corpus;
    let inputs = config
        .input
        .paths
        .iter()
        .map(|p| hash_file(p).map_err(input_err(stage)))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus_key = stage_key(stage, &CorpusKey { policy: &config.corpus, inputs }, &[]);
    let corpus_outputs = ["skips.csv", "egos.csv", "pairs.csv"];
    let mut engaged_records = None;
    let corpus = if art.manifest.is_fresh(dir, stage, &corpus_key) {
        summary.cached.push(stage);
        let egos = read_csv_rows(art.open(stage, "egos.csv")?).map_err(input_err(stage))?;
        let pairs = read_csv_rows(art.open(stage, "pairs.csv")?).map_err(input_err(stage))?;
        let skipped_lines = read_csv_rows::<SkipRow>(art.open(stage, "skips.csv")?).map_err(input_err(stage))?.len();
        CorpusOutput { egos, pairs, skipped_lines }
    } else {
        summary.executed.push(stage);
        let (corpus, engaged, skip_rows) = corpus_stage(&config.input.paths, &config.corpus)?;
        art.write(stage, "skips.csv", |w| write_csv_rows(&skip_rows, &["file", "line_number", "reason"], w))?;
        art.write(stage, "egos.csv", |w| write_csv_rows(&corpus.egos, &EGO_HEADER, w))?;
        art.write(stage, "pairs.csv", |w| write_csv_rows(&corpus.pairs, &PAIR_HEADER, w))?;
        art.commit(stage, corpus_key.clone(), &corpus_outputs)?;
        engaged_records = Some(engaged);
        corpus
    };
    summary.egos = corpus.egos.len();
    summary.engaged_egos = corpus.engaged().count();
    summary.skipped_lines = corpus.skipped_lines;
    if until == Stage::Corpus {
        return Ok(summary);
    }

    // sentiment
    let stage = Stage::Sentiment;
    let lexicon_hash = match &config.input.lexicon {
        Some(p) => Some(hash_file(p).map_err(|e| PipelineError::Input {
            stage,
            message: format!("{}: {e}", p.display()),
        })?),
        None => None,
    };
    let sentiment_key = stage_key(
        stage,
        &SentimentKey {
            scorer: &config.sentiment,
            lexicon: lexicon_hash,
        },
        &[&corpus_key],
    );
    let labels = if art.manifest.is_fresh(dir, stage, &sentiment_key) {
        summary.cached.push(stage);
        read_labels(art.open(stage, "labels.jsonl")?).map_err(input_err(stage))?
    } else {
        summary.executed.push(stage);
        let engaged = match engaged_records.take() {
            Some(e) => e,
            None => corpus_stage(&config.input.paths, &config.corpus)?.1,
        };
        let scorer = build_scorer(config)?;
        let labels = sentiment_stage(engaged, &scorer);
        art.write(stage, "labels.jsonl", |w| write_labels(&labels, w))?;
        art.commit(stage, sentiment_key.clone(), &["labels.jsonl"])?;
        labels
    };
    drop(engaged_records);
    if until == Stage::Sentiment {
        return Ok(summary);
    }

    // signing
    let stage = Stage::Signing;
    let signing_key = stage_key(stage, &config.signing, &[&sentiment_key]);
    let edges = if art.manifest.is_fresh(dir, stage, &signing_key) {
        summary.cached.push(stage);
        read_signed_edges(art.open(stage, "signed_edges.csv")?, config.signing.threshold).map_err(input_err(stage))?
    } else {
        summary.executed.push(stage);
        let edges = signing_stage(&labels, config.signing.threshold);
        art.write(stage, "signed_edges.csv", |w| write_signed_edges(&edges, w).map_err(|e| e.to_string()))?;
        art.commit(stage, signing_key.clone(), &["signed_edges.csv"])?;
        edges
    };
    drop(labels);
    summary.relationships = edges.len();
    if until == Stage::Signing {
        return Ok(summary);
    }

    // egonet
    let stage = Stage::Egonet;
    let egonet_key = stage_key(stage, &config.egonet, &[&corpus_key]);
    let egonet = if art.manifest.is_fresh(dir, stage, &egonet_key) {
        summary.cached.push(stage);
        EgonetOutput {
            ties: read_csv_rows(art.open(stage, "ties.csv")?).map_err(input_err(stage))?,
            networks: read_ego_networks(art.open(stage, "egonets.jsonl")?).map_err(input_err(stage))?,
        }
    } else {
        summary.executed.push(stage);
        let egonet = egonet_stage(&corpus, &config.egonet)?;
        art.write(stage, "ties.csv", |w| write_csv_rows(&egonet.ties, &TIE_HEADER, w))?;
        art.write(stage, "egonets.jsonl", |w| write_ego_networks(&egonet.networks, w).map_err(|e| e.to_string()))?;
        art.commit(stage, egonet_key.clone(), &["ties.csv", "egonets.jsonl"])?;
        egonet
    };
    summary.networks = egonet.networks.len();
    if until == Stage::Egonet {
        return Ok(summary);
    }

    // report
    let stage = Stage::Report;
    let mut options = config.report.clone();
    options.ci.seed = config.seed;
    let report_key = stage_key(
        stage,
        &ReportKey {
            dataset: &config.input.dataset,
            options: &options,
        },
        &[&corpus_key, &signing_key, &egonet_key],
    );
    let mut files = render_report(&DatasetReport::empty("", options.restrict_k), RenderFormat::Markdown);
    files.extend(render_report(&DatasetReport::empty("", options.restrict_k), RenderFormat::Csv));
    let names: Vec<String> = files.iter().map(|f| f.name.clone()).collect();
    if art.manifest.is_fresh(dir, stage, &report_key) {
        summary.cached.push(stage);
    } else {
        summary.executed.push(stage);
        let report = report_stage(&config.input.dataset, &corpus, &edges, &egonet, &options)?;
        let mut files = render_report(&report, RenderFormat::Markdown);
        files.extend(render_report(&report, RenderFormat::Csv));
        for f in &files {
            art.write(stage, &f.name, |w| w.write_all(f.contents.as_bytes()).map_err(|e| e.to_string()))?;
        }
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        art.commit(stage, report_key, &names)?;
    }
    Ok(summary)
}

/// Loads the signed edges and ego networks of a finished run, e.g. for
/// checking them against synthetic ground truth.
pub fn load_run_outputs(dir: &Path) -> Result<(Vec<SignedRelationship>, Vec<EgoNetwork>), PipelineError> {
    let art = ArtifactDir {
        dir,
        manifest: Manifest::default(),
    };
    let edges = read_signed_edges(art.open(Stage::Signing, "signed_edges.csv")?, DEFAULT_THRESHOLD)
        .map_err(input_err(Stage::Signing))?;
    let networks = read_ego_networks(art.open(Stage::Egonet, "egonets.jsonl")?).map_err(input_err(Stage::Egonet))?;
    Ok((edges, networks))
}
