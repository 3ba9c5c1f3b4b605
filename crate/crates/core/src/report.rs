//! Dataset-level tables: counts, full vs. active negativity, circle counts and
//! sizes, and per-circle negativity for egos with a common circle count.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egonet::{EgoNetwork, PairActivity};
use crate::signing::SignedRelationship;
use crate::stats::{CiOptions, MeanWithCI, StatsError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no egos with in-scope relationships")]
    NoEligibleEgos,
    #[error("unknown report format {0:?} (expected csv or markdown)")]
    UnknownFormat(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub egos: u64,
    pub alters: u64,
    pub relationships: u64,
    pub interactions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Full,
    Active,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Full => "full",
            Scope::Active => "active",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Per-ego percentage, then the mean over egos.
    #[default]
    Ego,
    /// One 0/100 indicator per relationship, averaged over all relationships.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub averaging: Averaging,
    pub ci: CiOptions,
    pub restrict_k: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            averaging: Averaging::Ego,
            ci: CiOptions::default(),
            restrict_k: 5,
        }
    }
}

/// Everything the report needs about one engaged ego.
#[derive(Debug, Clone)]
pub struct EgoAnalysis {
    pub ego_id: String,
    /// All signed relationships (full network).
    pub edges: Vec<SignedRelationship>,
    pub active: BTreeSet<String>,
    pub network: Option<EgoNetwork>,
}

impl EgoAnalysis {
    fn in_scope<'a>(&'a self, scope: Scope) -> impl Iterator<Item = &'a SignedRelationship> + 'a {
        self.edges
            .iter()
            .filter(move |e| scope == Scope::Full || self.active.contains(&e.stats.alter_id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativitySummary {
    pub ci: MeanWithCI,
    /// Egos without any relationship in scope.
    pub excluded: usize,
}

pub fn negativity_summary(
    egos: &[EgoAnalysis],
    scope: Scope,
    averaging: Averaging,
    ci: &CiOptions,
) -> Result<NegativitySummary, ReportError> {
    let mut values = Vec::new();
    let mut excluded = 0;
    for ego in egos {
        let (mut neg, mut total) = (0usize, 0usize);
        for e in ego.in_scope(scope) {
            total += 1;
            let negative = e.sign.is_negative();
            neg += usize::from(negative);
            if averaging == Averaging::Pooled {
                values.push(if negative { 100.0 } else { 0.0 });
            }
        }
        if total == 0 {
            excluded += 1;
            continue;
        }
        if averaging == Averaging::Ego {
            values.push(100.0 * neg as f64 / total as f64);
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} egos have no {} relationships", scope.as_str());
    }
    if values.is_empty() {
        return Err(ReportError::NoEligibleEgos);
    }
    Ok(NegativitySummary {
        ci: ci.interval(&values)?,
        excluded,
    })
}

/// Per-circle means over egos whose optimum circle count equals `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleTables {
    pub k: usize,
    pub n_egos: usize,
    pub size_means: Vec<f64>,
    pub negative_count_means: Vec<f64>,
    pub negative_pct_means: Vec<f64>,
}

impl CircleTables {
    pub fn is_empty(&self) -> bool {
        self.n_egos == 0
    }
}

pub fn circle_tables(egos: &[EgoAnalysis], restrict_k: usize) -> CircleTables {
    let mut sizes = vec![0.0; restrict_k];
    let mut counts = vec![0.0; restrict_k];
    let mut pcts = vec![0.0; restrict_k];
    let mut n_egos = 0usize;
    for ego in egos {
        let Some(net) = ego.network.as_ref().filter(|n| n.optimum_circles == restrict_k) else {
            continue;
        };
        n_egos += 1;
        let negative: HashSet<&str> = ego
            .edges
            .iter()
            .filter(|e| e.sign.is_negative())
            .map(|e| e.stats.alter_id.as_str())
            .collect();
        let mut neg_so_far = 0usize;
        for (c, ring) in net.rings.iter().enumerate() {
            neg_so_far += ring.alters.iter().filter(|a| negative.contains(a.as_str())).count();
            let size = net.circle_sizes[c];
            sizes[c] += size as f64;
            counts[c] += neg_so_far as f64;
            pcts[c] += 100.0 * neg_so_far as f64 / size as f64;
        }
    }
    if n_egos == 0 {
        log::warn!("no egos with {restrict_k} circles; circle tables are empty");
        return CircleTables {
            k: restrict_k,
            n_egos: 0,
            size_means: Vec::new(),
            negative_count_means: Vec::new(),
            negative_pct_means: Vec::new(),
        };
    }
    let avg = |v: Vec<f64>| v.into_iter().map(|x| x / n_egos as f64).collect();
    CircleTables {
        k: restrict_k,
        n_egos,
        size_means: avg(sizes),
        negative_count_means: avg(counts),
        negative_pct_means: avg(pcts),
    }
}

/// Counts over every pair in the input, before any filtering.
pub fn counts_from_pairs<'a>(pairs: impl IntoIterator<Item = &'a PairActivity>) -> Counts {
    let mut egos = HashSet::new();
    let mut alters = HashSet::new();
    let mut counts = Counts::default();
    for p in pairs {
        egos.insert(p.ego_id.as_str());
        alters.insert(p.alter_id.as_str());
        counts.relationships += 1;
        counts.interactions += p.n_interactions;
    }
    counts.egos = egos.len() as u64;
    counts.alters = alters.len() as u64;
    counts
}

/// Engaged egos restricted to their active relationships.
pub fn active_counts(egos: &[EgoAnalysis]) -> Counts {
    let mut alters = HashSet::new();
    let mut counts = Counts {
        egos: egos.len() as u64,
        ..Counts::default()
    };
    for ego in egos {
        for e in ego.in_scope(Scope::Active) {
            alters.insert(e.stats.alter_id.as_str());
            counts.relationships += 1;
            counts.interactions += e.stats.n_total;
        }
    }
    counts.alters = alters.len() as u64;
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub counts_full: Counts,
    pub counts_active: Counts,
    pub negativity_full: Option<NegativitySummary>,
    pub negativity_active: Option<NegativitySummary>,
    pub mean_optimum_circles: Option<MeanWithCI>,
    pub mean_active_size: Option<MeanWithCI>,
    pub circles: CircleTables,
}

impl DatasetReport {
    pub fn empty(dataset: &str, restrict_k: usize) -> Self {
        DatasetReport {
            dataset: dataset.to_string(),
            counts_full: Counts::default(),
            counts_active: Counts::default(),
            negativity_full: None,
            negativity_active: None,
            mean_optimum_circles: None,
            mean_active_size: None,
            circles: CircleTables {
                k: restrict_k,
                n_egos: 0,
                size_means: Vec::new(),
                negative_count_means: Vec::new(),
                negative_pct_means: Vec::new(),
            },
        }
    }
}

fn optional<T>(r: Result<T, ReportError>) -> Result<Option<T>, ReportError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(ReportError::NoEligibleEgos | ReportError::Stats(StatsError::Empty)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn build_report(
    dataset: &str,
    all_pairs: &[PairActivity],
    egos: &[EgoAnalysis],
    options: &ReportOptions,
) -> Result<DatasetReport, ReportError> {
    let networks: Vec<&EgoNetwork> = egos.iter().filter_map(|e| e.network.as_ref()).collect();
    let optimum: Vec<f64> = networks.iter().map(|n| n.optimum_circles as f64).collect();
    let sizes: Vec<f64> = networks.iter().map(|n| n.active_size as f64).collect();
    Ok(DatasetReport {
        dataset: dataset.to_string(),
        counts_full: counts_from_pairs(all_pairs),
        counts_active: active_counts(egos),
        negativity_full: optional(negativity_summary(egos, Scope::Full, options.averaging, &options.ci))?,
        negativity_active: optional(negativity_summary(egos, Scope::Active, options.averaging, &options.ci))?,
        mean_optimum_circles: optional(options.ci.interval(&optimum).map_err(ReportError::from))?,
        mean_active_size: optional(options.ci.interval(&sizes).map_err(ReportError::from))?,
        circles: circle_tables(egos, options.restrict_k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Csv,
    Markdown,
}

impl FromStr for RenderFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(RenderFormat::Csv),
            "markdown" | "md" => Ok(RenderFormat::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    /// Relative path, e.g. `report.md` or `tables/counts.csv`.
    pub name: String,
    pub contents: String,
}

pub fn render_report(report: &DatasetReport, format: RenderFormat) -> Vec<RenderedFile> {
    render_reports(std::slice::from_ref(report), format)
}

/// One table row per dataset.
pub fn render_reports(reports: &[DatasetReport], format: RenderFormat) -> Vec<RenderedFile> {
    match format {
        RenderFormat::Markdown => vec![RenderedFile {
            name: "report.md".into(),
            contents: markdown(reports),
        }],
        RenderFormat::Csv => csv_tables(reports),
    }
}

fn ci_cell(ci: &MeanWithCI) -> String {
    format!("{:.2} [{:.2}, {:.2}]", ci.mean, ci.lo, ci.hi)
}

fn table_header(out: &mut String, title: &str, columns: &[String]) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "| {} |", columns.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(columns.len()));
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn circle_cols(k: usize) -> Vec<String> {
    std::iter::once("Dataset".to_string())
        .chain((1..=k).map(|c| format!("Circle {c}")))
        .collect()
}

fn markdown(reports: &[DatasetReport]) -> String {
    let mut out = String::from("# Signed ego network report\n\n");
    let count_cols = cols(&["Dataset", "Egos", "Alters", "Relationships", "Interactions"]);
    for (title, pick) in [
        ("Full networks, before removing unengaged egos", (|r: &DatasetReport| r.counts_full) as fn(&DatasetReport) -> Counts),
        ("Active networks, after removing unengaged egos", |r: &DatasetReport| r.counts_active),
    ] {
        table_header(&mut out, title, &count_cols);
        for r in reports {
            let c = pick(r);
            if c.egos > 0 {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.dataset, c.egos, c.alters, c.relationships, c.interactions
                );
            }
        }
        out.push('\n');
    }

    table_header(
        &mut out,
        "Mean percentage of negative relationships",
        &cols(&["Dataset", "Full Negatives (%)", "Active Negatives (%)", "Difference"]),
    );
    for r in reports {
        if let (Some(full), Some(active)) = (&r.negativity_full, &r.negativity_active) {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:+.2} |",
                r.dataset,
                ci_cell(&full.ci),
                ci_cell(&active.ci),
                active.ci.mean - full.ci.mean
            );
        }
    }
    out.push('\n');

    table_header(
        &mut out,
        "Optimum circle count and active network size",
        &cols(&["Dataset", "Mean Optimum Circles", "Mean Ego Network Size"]),
    );
    for r in reports {
        if let (Some(opt), Some(size)) = (&r.mean_optimum_circles, &r.mean_active_size) {
            let _ = writeln!(out, "| {} | {} | {} |", r.dataset, ci_cell(opt), ci_cell(size));
        }
    }
    out.push('\n');

    let k = reports.first().map_or(5, |r| r.circles.k);
    table_header(&mut out, &format!("Mean circle sizes, egos with {k} circles"), &circle_cols(k));
    for r in reports.iter().filter(|r| !r.circles.is_empty()) {
        let cells: Vec<String> = r.circles.size_means.iter().map(|v| format!("{v:.2}")).collect();
        let _ = writeln!(out, "| {} | {} |", r.dataset, cells.join(" | "));
    }
    out.push('\n');

    table_header(
        &mut out,
        &format!("Negative relationships per circle, egos with {k} circles"),
        &circle_cols(k),
    );
    for r in reports.iter().filter(|r| !r.circles.is_empty()) {
        let cells: Vec<String> = r
            .circles
            .negative_count_means
            .iter()
            .zip(&r.circles.negative_pct_means)
            .map(|(n, p)| format!("{n:.2} ({p:.2}%)"))
            .collect();
        let _ = writeln!(out, "| {} | {} |", r.dataset, cells.join(" | "));
    }
    out
}

struct CsvTable {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    fn new(name: &'static str, header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("write to memory");
        CsvTable { name, writer }
    }

    fn row(&mut self, fields: Vec<String>) {
        self.writer.write_record(&fields).expect("write to memory");
    }

    fn finish(self) -> RenderedFile {
        let bytes = self.writer.into_inner().expect("flush to memory");
        RenderedFile {
            name: format!("tables/{}.csv", self.name),
            contents: String::from_utf8(bytes).expect("CSV of UTF-8 fields"),
        }
    }
}

fn ci_fields(ci: &MeanWithCI) -> Vec<String> {
    vec![
        ci.mean.to_string(),
        ci.lo.to_string(),
        ci.hi.to_string(),
        ci.n.to_string(),
        ci.level.to_string(),
    ]
}

fn csv_tables(reports: &[DatasetReport]) -> Vec<RenderedFile> {
    let mut counts = CsvTable::new(
        "counts",
        &["dataset", "scope", "egos", "alters", "relationships", "interactions"],
    );
    let mut negativity = CsvTable::new(
        "negativity",
        &["dataset", "scope", "mean", "lo", "hi", "n", "level", "excluded_egos"],
    );
    let mut networks = CsvTable::new(
        "ego_networks",
        &["dataset", "metric", "mean", "lo", "hi", "n", "level"],
    );
    let mut sizes = CsvTable::new("circle_sizes", &["dataset", "k", "n_egos", "circle", "mean_size"]);
    let mut circle_neg = CsvTable::new(
        "circle_negativity",
        &["dataset", "k", "n_egos", "circle", "mean_negative_count", "mean_negative_pct"],
    );
    for r in reports {
        for (scope, c) in [(Scope::Full, r.counts_full), (Scope::Active, r.counts_active)] {
            if c.egos > 0 {
                counts.row(vec![
                    r.dataset.clone(),
                    scope.as_str().into(),
                    c.egos.to_string(),
                    c.alters.to_string(),
                    c.relationships.to_string(),
                    c.interactions.to_string(),
                ]);
            }
        }
        for (scope, s) in [(Scope::Full, &r.negativity_full), (Scope::Active, &r.negativity_active)] {
            if let Some(s) = s {
                let mut row = vec![r.dataset.clone(), scope.as_str().into()];
                row.extend(ci_fields(&s.ci));
                row.push(s.excluded.to_string());
                negativity.row(row);
            }
        }
        for (metric, ci) in [
            ("optimum_circles", &r.mean_optimum_circles),
            ("active_size", &r.mean_active_size),
        ] {
            if let Some(ci) = ci {
                let mut row = vec![r.dataset.clone(), metric.into()];
                row.extend(ci_fields(ci));
                networks.row(row);
            }
        }
        let t = &r.circles;
        for c in 0..t.size_means.len() {
            let lead = vec![r.dataset.clone(), t.k.to_string(), t.n_egos.to_string(), (c + 1).to_string()];
            let mut row = lead.clone();
            row.push(t.size_means[c].to_string());
            sizes.row(row);
            let mut row = lead;
            row.push(t.negative_count_means[c].to_string());
            row.push(t.negative_pct_means[c].to_string());
            circle_neg.row(row);
        }
    }
    vec![
        counts.finish(),
        negativity.finish(),
        networks.finish(),
        sizes.finish(),
        circle_neg.finish(),
    ]
}

/// Per-ego lookup of relationship signs, keyed by alter.
pub fn signs_by_alter(edges: &[SignedRelationship]) -> HashMap<&str, bool> {
    edges
        .iter()
        .map(|e| (e.stats.alter_id.as_str(), e.sign.is_negative()))
        .collect()
}
