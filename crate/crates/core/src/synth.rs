//! Synthetic corpora with planted ground truth.
//!
//! Each ego gets five concentric bands of alters whose interaction counts are
//! drawn around a per-band rate, plus a set of one-off inactive alters. Every
//! tie gets a planned sign and an exact number of negative interactions; the
//! texts are picked from pools whose labels were checked against the scorer,
//! so the realised negative fraction equals the plan.
//!
//! Before an ego is accepted its realised frequencies are checked for band
//! separation: every band must be narrower than the auto bandwidth and every
//! gap between adjacent bands wider than `separation_factor` bandwidths. Under
//! those two conditions a flat-kernel mean shift converges every point to its
//! band mean in one step, so exact recovery is guaranteed rather than hoped
//! for. Egos failing the check are redrawn.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{InteractionKind, InteractionRecord, SECONDS_PER_DAY};
use crate::egonet::{
    estimate_bandwidth, EgoNetwork, PairActivity, DAYS_PER_YEAR, DEFAULT_ACTIVE_THRESHOLD,
    DEFAULT_DURATION_FLOOR_DAYS,
};
use crate::sentiment::{Polarity, ScorerConfig, SentimentScorer};
use crate::signing::{Sign, SignedRelationship, DEFAULT_THRESHOLD};

const CANDIDATES: &str = include_str!("../data/synth_candidates.txt");

/// 2020-01-01T00:00:00Z.
pub const DEFAULT_WINDOW_START: i64 = 1_577_836_800;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("no candidate text scores {0}")]
    EmptyPool(&'static str),
    #[error("truth and pipeline outputs disagree on ids: {0}")]
    IdMismatch(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_egos: usize,
    pub seed: u64,
    pub window_start: i64,
    pub window_days: f64,
    /// Planted rate of each band in interactions per year, innermost first.
    pub band_modes: Vec<f64>,
    /// Inclusive `[min, max]` number of alters per band.
    pub band_sizes: Vec<[usize; 2]>,
    /// Inclusive range of one-interaction alters outside the active network.
    pub inactive_alters: [usize; 2],
    /// Counts are Poisson draws rejected unless within this many
    /// interactions per year of the band rate.
    pub count_halfwidth_per_year: f64,
    pub band_negative_prob: Vec<f64>,
    pub inactive_negative_prob: f64,
    /// Inclusive range of negative fractions for negative ties.
    pub negative_fraction: [f64; 2],
    /// Inclusive range of negative fractions for positive ties.
    pub positive_fraction: [f64; 2],
    /// Share of non-negative interactions emitted as plain retweets.
    pub retweet_share: f64,
    pub sign_threshold: f64,
    pub active_threshold: f64,
    pub duration_floor_days: f64,
    /// Quantile the pipeline uses for its auto bandwidth.
    pub bandwidth_quantile: f64,
    pub separation_factor: f64,
    pub max_redraws: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_egos: 500,
            seed: 1,
            window_start: DEFAULT_WINDOW_START,
            window_days: 1.5 * DAYS_PER_YEAR,
            band_modes: vec![160.0, 80.0, 40.0, 18.0, 2.0],
            band_sizes: vec![[1, 2], [3, 4], [9, 11], [33, 37], [95, 105]],
            inactive_alters: [20, 40],
            count_halfwidth_per_year: 1.0,
            band_negative_prob: vec![0.6, 0.55, 0.5, 0.45, 0.4],
            inactive_negative_prob: 0.1,
            negative_fraction: [0.25, 1.0],
            positive_fraction: [0.0, 0.15],
            retweet_share: 0.3,
            sign_threshold: DEFAULT_THRESHOLD,
            active_threshold: DEFAULT_ACTIVE_THRESHOLD,
            duration_floor_days: DEFAULT_DURATION_FLOOR_DAYS,
            bandwidth_quantile: 0.3,
            separation_factor: 1.25,
            max_redraws: 200,
        }
    }
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: SynthSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let k = self.band_modes.len();
        if k == 0 {
            return bad("band_modes is empty".into());
        }
        if self.band_sizes.len() != k || self.band_negative_prob.len() != k {
            return bad(format!(
                "band_modes, band_sizes and band_negative_prob must have equal length, got {k}, {}, {}",
                self.band_sizes.len(),
                self.band_negative_prob.len()
            ));
        }
        if self.band_modes.windows(2).any(|w| w[0] <= w[1]) {
            return bad("band_modes must be strictly decreasing".into());
        }
        if self.band_sizes.iter().any(|[lo, hi]| *lo == 0 || lo > hi) {
            return bad("band_sizes must be non-empty ranges with min >= 1".into());
        }
        if self.inactive_alters[0] > self.inactive_alters[1] {
            return bad("inactive_alters min exceeds max".into());
        }
        let probs = self.band_negative_prob.iter().chain([&self.inactive_negative_prob, &self.retweet_share]);
        for &p in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        if !(self.window_days > 0.0) || !(self.count_halfwidth_per_year >= 0.0) {
            return bad("window_days must be positive and count_halfwidth_per_year non-negative".into());
        }
        if self.window_start <= 0 {
            return bad("window_start must be a positive timestamp".into());
        }
        let [nlo, nhi] = self.negative_fraction;
        let [plo, phi] = self.positive_fraction;
        if !(nlo > self.sign_threshold && nlo <= nhi && nhi <= 1.0) {
            return bad(format!(
                "negative_fraction must lie in (sign_threshold, 1], got [{nlo}, {nhi}]"
            ));
        }
        if !(0.0 <= plo && plo <= phi && phi <= self.sign_threshold) {
            return bad(format!(
                "positive_fraction must lie in [0, sign_threshold], got [{plo}, {phi}]"
            ));
        }
        if !(self.bandwidth_quantile > 0.0 && self.bandwidth_quantile < 1.0) {
            return bad("bandwidth_quantile must be in (0, 1)".into());
        }
        if !(self.separation_factor >= 1.0) {
            return bad("separation_factor must be at least 1".into());
        }
        if self.max_redraws == 0 {
            return bad("max_redraws must be positive".into());
        }
        Ok(())
    }

    fn window_seconds(&self) -> i64 {
        (self.window_days * SECONDS_PER_DAY as f64) as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieTruth {
    pub ego: String,
    pub alter: String,
    pub sign: Sign,
    pub negative_fraction: f64,
    pub n_negative: u64,
    pub n_total: u64,
    /// Planted band, innermost 0; `None` for inactive alters.
    pub band: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoTruth {
    pub ego: String,
    /// Cumulative planted band sizes, innermost first.
    pub circle_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ties: Vec<TieTruth>,
    pub egos: Vec<EgoTruth>,
}

impl GroundTruth {
    pub fn write_json<W: Write>(&self, out: W) -> Result<(), SynthError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, SynthError> {
        Ok(serde_json::from_reader(input)?)
    }
}

/// Candidate texts split by the label the scorer gives them.
#[derive(Debug, Clone)]
pub struct TextPools {
    pub negative: Vec<String>,
    pub positive: Vec<String>,
    pub neutral: Vec<String>,
    /// Texts whose label survives an `@handle ` prefix.
    prefix_safe: HashMap<String, bool>,
}

impl TextPools {
    pub fn from_candidates<S: SentimentScorer + ?Sized>(
        candidates: &str,
        scorer: &S,
        config: &ScorerConfig,
    ) -> Result<Self, SynthError> {
        let mut pools = TextPools {
            negative: Vec::new(),
            positive: Vec::new(),
            neutral: Vec::new(),
            prefix_safe: HashMap::new(),
        };
        for line in candidates.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let polarity = config.polarity(scorer.compound(line));
            let prefixed = config.polarity(scorer.compound(&format!("@handle {line}")));
            pools.prefix_safe.insert(line.to_string(), prefixed == polarity);
            match polarity {
                Polarity::Negative => pools.negative.push(line.to_string()),
                Polarity::Positive => pools.positive.push(line.to_string()),
                Polarity::Neutral => pools.neutral.push(line.to_string()),
            }
        }
        if pools.negative.is_empty() {
            return Err(SynthError::EmptyPool("negative"));
        }
        if pools.positive.is_empty() && pools.neutral.is_empty() {
            return Err(SynthError::EmptyPool("non-negative"));
        }
        Ok(pools)
    }

    pub fn bundled<S: SentimentScorer + ?Sized>(scorer: &S, config: &ScorerConfig) -> Result<Self, SynthError> {
        Self::from_candidates(CANDIDATES, scorer, config)
    }

    fn non_negative(&self, rng: &mut ChaCha8Rng) -> &str {
        let pool = if self.neutral.is_empty() || (!self.positive.is_empty() && rng.random_bool(0.5)) {
            &self.positive
        } else {
            &self.neutral
        };
        pool.choose(rng).expect("non-empty pool")
    }

    fn any(&self, rng: &mut ChaCha8Rng) -> &str {
        let total = self.negative.len() + self.positive.len() + self.neutral.len();
        let i = rng.random_range(0..total);
        self.negative
            .iter()
            .chain(&self.positive)
            .chain(&self.neutral)
            .nth(i)
            .expect("index in range")
    }

    fn authored(&self, text: &str, kind: InteractionKind, alter: &str, rng: &mut ChaCha8Rng) -> String {
        let addressable = matches!(kind, InteractionKind::Reply | InteractionKind::Mention);
        if addressable && self.prefix_safe.get(text).copied().unwrap_or(false) && rng.random_bool(0.5) {
            format!("@{alter} {text}")
        } else {
            text.to_string()
        }
    }
}

/// Number of negatives for a tie of `n` interactions with a fraction drawn
/// from the inclusive `range`; errors when no integer count fits.
pub fn plan_negatives(n: u64, range: [f64; 2], rng: &mut impl Rng) -> Result<u64, SynthError> {
    let eps = 1e-12;
    let lo = ((range[0] * n as f64) - eps).ceil().max(0.0) as u64;
    let hi = ((range[1] * n as f64) + eps).floor().min(n as f64) as u64;
    if lo > hi {
        return Err(SynthError::Infeasible(format!(
            "no negative count in [{}, {}] for {n} interactions",
            range[0], range[1]
        )));
    }
    Ok(rng.random_range(lo..=hi))
}

struct PlannedTie {
    alter: String,
    band: Option<usize>,
    timestamps: Vec<i64>,
}

fn draw_count(rate_per_year: f64, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<u64, SynthError> {
    let years = spec.window_days / DAYS_PER_YEAR;
    let mean = rate_per_year * years;
    let halfwidth = spec.count_halfwidth_per_year * years;
    let lo = (mean - halfwidth).ceil().max(1.0);
    let hi = (mean + halfwidth).floor();
    if lo > hi {
        return Err(SynthError::Infeasible(format!(
            "no interaction count within {halfwidth} of {mean}"
        )));
    }
    let poisson = Poisson::new(mean).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    for _ in 0..10_000 {
        let c = poisson.sample(rng);
        if c >= lo && c <= hi {
            return Ok(c as u64);
        }
    }
    // rejection is hopeless when the window sits far in a tail
    Ok(rng.random_range(lo as u64..=hi as u64))
}

fn plan_ego(ego: &str, spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<PlannedTie>, SynthError> {
    let start = spec.window_start;
    let width = spec.window_seconds();
    // first contact falls in the opening hour, so every tie spans the window
    let opening = 3600.min(width);
    let mut ties = Vec::new();
    let mut index = 0;
    let mut alter_name = || {
        index += 1;
        format!("{ego}a{index:03}")
    };
    for (band, (&rate, &[lo, hi])) in spec.band_modes.iter().zip(&spec.band_sizes).enumerate() {
        for _ in 0..rng.random_range(lo..=hi) {
            let n = draw_count(rate, spec, rng)?;
            let mut ts = vec![start + rng.random_range(0..opening)];
            ts.extend((1..n).map(|_| start + rng.random_range(0..width)));
            ts.sort_unstable();
            ties.push(PlannedTie {
                alter: alter_name(),
                band: Some(band),
                timestamps: ts,
            });
        }
    }
    for _ in 0..rng.random_range(spec.inactive_alters[0]..=spec.inactive_alters[1]) {
        ties.push(PlannedTie {
            alter: alter_name(),
            band: None,
            timestamps: vec![start + rng.random_range(0..opening)],
        });
    }
    Ok(ties)
}

/// Why a drawn ego cannot guarantee exact recovery, if it cannot.
fn separation_problem(ego: &str, ties: &[PlannedTie], spec: &SynthSpec) -> Option<String> {
    let obs_end = ties.iter().filter_map(|t| t.timestamps.last()).copied().max()?;
    let k = spec.band_modes.len();
    let mut bands: Vec<Vec<f64>> = vec![Vec::new(); k];
    for t in ties {
        let mut pair = PairActivity {
            ego_id: ego.to_string(),
            alter_id: t.alter.clone(),
            n_interactions: 0,
            first_ts: t.timestamps[0],
            last_ts: t.timestamps[0],
        };
        t.timestamps.iter().for_each(|&ts| pair.add(ts));
        let freq = pair.frequency(obs_end, spec.duration_floor_days).ok()?.freq_per_year;
        match t.band {
            Some(b) if freq >= spec.active_threshold => bands[b].push(freq),
            None if freq < spec.active_threshold => {}
            _ => return Some(format!("{} lands on the wrong side of the activity cut", t.alter)),
        }
    }
    let all: Vec<f64> = bands.iter().flatten().copied().collect();
    let bandwidth = estimate_bandwidth(&all, spec.bandwidth_quantile).ok()?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (b, band) in bands.iter().enumerate() {
        if max(band) - min(band) >= bandwidth {
            return Some(format!("band {b} is wider than the bandwidth {bandwidth:.3}"));
        }
    }
    for b in 1..k {
        let gap = min(&bands[b - 1]) - max(&bands[b]);
        if gap <= spec.separation_factor * bandwidth {
            return Some(format!(
                "gap {gap:.3} between bands {} and {b} is under {} x {bandwidth:.3}",
                b - 1,
                spec.separation_factor
            ));
        }
    }
    None
}

fn ego_rng(seed: u64, ego_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ego_index as u64);
    rng
}

struct EgoOutput {
    records: Vec<InteractionRecord>,
    ties: Vec<TieTruth>,
    ego: EgoTruth,
}

fn generate_ego(index: usize, spec: &SynthSpec, pools: &TextPools) -> Result<EgoOutput, SynthError> {
    let ego = format!("u{index:04}");
    let mut rng = ego_rng(spec.seed, index);
    let mut planned = None;
    let mut last_problem = String::new();
    for _ in 0..spec.max_redraws {
        let ties = plan_ego(&ego, spec, &mut rng)?;
        match separation_problem(&ego, &ties, spec) {
            None => {
                planned = Some(ties);
                break;
            }
            Some(p) => last_problem = p,
        }
    }
    let ties = planned.ok_or_else(|| {
        SynthError::Infeasible(format!(
            "ego {ego}: no separable draw in {} attempts ({last_problem})",
            spec.max_redraws
        ))
    })?;

    let mut records = Vec::new();
    let mut truths = Vec::with_capacity(ties.len());
    let mut band_sizes = vec![0usize; spec.band_modes.len()];
    for tie in ties {
        let n = tie.timestamps.len() as u64;
        let p_negative = match tie.band {
            Some(b) => spec.band_negative_prob[b],
            None => spec.inactive_negative_prob,
        };
        let sign = if rng.random_bool(p_negative) { Sign::Negative } else { Sign::Positive };
        let range = match sign {
            Sign::Negative => spec.negative_fraction,
            Sign::Positive => spec.positive_fraction,
        };
        let n_negative = plan_negatives(n, range, &mut rng)?;
        let mut negative = vec![false; n as usize];
        negative[..n_negative as usize].fill(true);
        negative.shuffle(&mut rng);
        for (&ts, is_negative) in tie.timestamps.iter().zip(negative) {
            let (kind, text) = if is_negative {
                let kind = *[InteractionKind::Reply, InteractionKind::Mention, InteractionKind::QuoteRetweet]
                    .choose(&mut rng)
                    .expect("non-empty");
                (kind, pools.negative.choose(&mut rng).expect("non-empty pool").as_str())
            } else if rng.random_bool(spec.retweet_share) {
                (InteractionKind::Retweet, pools.any(&mut rng))
            } else {
                let kind = *[InteractionKind::Reply, InteractionKind::Mention, InteractionKind::QuoteRetweet]
                    .choose(&mut rng)
                    .expect("non-empty");
                (kind, pools.non_negative(&mut rng))
            };
            let text = pools.authored(text, kind, &tie.alter, &mut rng);
            records.push(InteractionRecord {
                ego_id: ego.clone(),
                alter_id: tie.alter.clone(),
                kind,
                ts,
                text,
            });
        }
        if let Some(b) = tie.band {
            band_sizes[b] += 1;
        }
        truths.push(TieTruth {
            ego: ego.clone(),
            alter: tie.alter,
            sign,
            negative_fraction: n_negative as f64 / n as f64,
            n_negative,
            n_total: n,
            band: tie.band,
        });
    }
    records.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.alter_id.cmp(&b.alter_id)));
    let circle_sizes = band_sizes
        .iter()
        .scan(0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    Ok(EgoOutput {
        records,
        ties: truths,
        ego: EgoTruth { ego, circle_sizes },
    })
}

/// Generates the corpus and its ground truth. Output depends only on the generator spec
/// (including its seed) and the scorer, not on the thread count.
pub fn generate_corpus<S: SentimentScorer + ?Sized>(
    spec: &SynthSpec,
    scorer: &S,
    scorer_config: &ScorerConfig,
) -> Result<(Vec<InteractionRecord>, GroundTruth), SynthError> {
    spec.validate()?;
    let pools = TextPools::bundled(scorer, scorer_config)?;
    let egos: Vec<EgoOutput> = (0..spec.n_egos)
        .into_par_iter()
        .map(|i| generate_ego(i, spec, &pools))
        .collect::<Result<_, _>>()?;
    let mut records = Vec::new();
    let mut truth = GroundTruth::default();
    for e in egos {
        records.extend(e.records);
        truth.ties.extend(e.ties);
        truth.egos.push(e.ego);
    }
    Ok((records, truth))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignMismatch {
    pub ego: String,
    pub alter: String,
    pub planted: Sign,
    pub observed: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BandMismatch {
    pub ego: String,
    pub alter: String,
    pub planted: Option<usize>,
    pub observed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CircleCountMismatch {
    pub ego: String,
    pub planted: usize,
    pub observed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiscrepancyReport {
    pub sign_mismatches: Vec<SignMismatch>,
    pub band_mismatches: Vec<BandMismatch>,
    pub circle_count_mismatches: Vec<CircleCountMismatch>,
}

impl DiscrepancyReport {
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        self.sign_mismatches.len() + self.band_mismatches.len() + self.circle_count_mismatches.len()
    }
}

/// Compares pipeline outputs against the planted truth. Every truth tie must
/// have a signed edge and vice versa; egos missing an ego network count as
/// having zero circles.
pub fn verify_pipeline(
    truth: &GroundTruth,
    edges: &[SignedRelationship],
    networks: &[EgoNetwork],
) -> Result<DiscrepancyReport, SynthError> {
    let mut observed: HashMap<(&str, &str), Sign> = HashMap::with_capacity(edges.len());
    for e in edges {
        observed.insert((e.stats.ego_id.as_str(), e.stats.alter_id.as_str()), e.sign);
    }
    if observed.len() != truth.ties.len() {
        return Err(SynthError::IdMismatch(format!(
            "{} planted ties but {} signed edges",
            truth.ties.len(),
            observed.len()
        )));
    }
    let by_ego: BTreeMap<&str, &EgoNetwork> = networks.iter().map(|n| (n.ego_id.as_str(), n)).collect();
    let planted_egos: HashMap<&str, &EgoTruth> = truth.egos.iter().map(|e| (e.ego.as_str(), e)).collect();
    if let Some(unknown) = by_ego.keys().find(|e| !planted_egos.contains_key(*e)) {
        return Err(SynthError::IdMismatch(format!("ego network for unknown ego {unknown}")));
    }

    let mut report = DiscrepancyReport::default();
    for t in &truth.ties {
        let Some(&sign) = observed.get(&(t.ego.as_str(), t.alter.as_str())) else {
            return Err(SynthError::IdMismatch(format!("no signed edge for {} -> {}", t.ego, t.alter)));
        };
        if sign != t.sign {
            report.sign_mismatches.push(SignMismatch {
                ego: t.ego.clone(),
                alter: t.alter.clone(),
                planted: t.sign,
                observed: sign,
            });
        }
        let band = by_ego.get(t.ego.as_str()).and_then(|n| n.ring_of(&t.alter));
        if band != t.band {
            report.band_mismatches.push(BandMismatch {
                ego: t.ego.clone(),
                alter: t.alter.clone(),
                planted: t.band,
                observed: band,
            });
        }
    }
    for e in &truth.egos {
        let observed = by_ego.get(e.ego.as_str()).map_or(0, |n| n.optimum_circles);
        let planted = e.circle_sizes.len();
        if observed != planted {
            report.circle_count_mismatches.push(CircleCountMismatch {
                ego: e.ego.clone(),
                planted,
                observed,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiment::LexiconScorer;

    fn small_spec(n_egos: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            n_egos,
            seed,
            ..SynthSpec::default()
        }
    }

    fn generate(spec: &SynthSpec) -> (Vec<InteractionRecord>, GroundTruth) {
        let scorer = LexiconScorer::bundled();
        generate_corpus(spec, &scorer, scorer.config()).unwrap()
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = small_spec(3, 1);
        assert_eq!(generate(&spec), generate(&spec));
        let other = generate(&small_spec(3, 2));
        assert_ne!(generate(&spec).0, other.0);
    }

    #[test]
    fn zero_negative_probability_plants_only_positive_signs() {
        let spec = SynthSpec {
            band_negative_prob: vec![0.0; 5],
            inactive_negative_prob: 0.0,
            ..small_spec(2, 4)
        };
        let (_, truth) = generate(&spec);
        assert!(truth.ties.iter().all(|t| t.sign == Sign::Positive));
    }

    #[test]
    fn infeasible_fraction_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(plan_negatives(1, [0.5, 0.5], &mut rng), Err(SynthError::Infeasible(_))));
        assert_eq!(plan_negatives(2, [0.5, 0.5], &mut rng).unwrap(), 1);
        assert_eq!(plan_negatives(5, [0.0, 0.15], &mut rng).unwrap(), 0);
    }

    #[test]
    fn infeasible_spec_fraction_with_single_interaction() {
        let spec = SynthSpec {
            negative_fraction: [0.5, 0.5],
            inactive_negative_prob: 1.0,
            ..small_spec(1, 3)
        };
        let scorer = LexiconScorer::bundled();
        assert!(matches!(
            generate_corpus(&spec, &scorer, scorer.config()),
            Err(SynthError::Infeasible(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec::default().validate().is_ok());
        let overlapping = SynthSpec {
            negative_fraction: [0.1, 1.0],
            ..SynthSpec::default()
        };
        assert!(overlapping.validate().is_err());
        let ragged = SynthSpec {
            band_modes: vec![10.0, 5.0],
            ..SynthSpec::default()
        };
        assert!(ragged.validate().is_err());
        assert!(matches!(
            SynthSpec::from_toml("n_egos = 3\nbogus = 1\n"),
            Err(SynthError::Toml(_))
        ));
        assert_eq!(SynthSpec::from_toml("n_egos = 3\n").unwrap().n_egos, 3);
    }

    #[test]
    fn planted_sizes_and_counts_are_consistent() {
        let (records, truth) = generate(&small_spec(2, 9));
        assert_eq!(truth.egos.len(), 2);
        let total: u64 = truth.ties.iter().map(|t| t.n_total).sum();
        assert_eq!(records.len() as u64, total);
        for e in &truth.egos {
            let active = truth.ties.iter().filter(|t| t.ego == e.ego && t.band.is_some()).count();
            assert_eq!(e.circle_sizes.last().copied(), Some(active));
        }
        for t in &truth.ties {
            assert_eq!(t.sign.is_negative(), t.negative_fraction > 0.17, "{t:?}");
        }
    }

    #[test]
    fn pools_respect_labels() {
        let scorer = LexiconScorer::bundled();
        let config = scorer.config().clone();
        let pools = TextPools::bundled(&scorer, &config).unwrap();
        assert!(pools.negative.len() >= 10 && pools.positive.len() >= 10 && pools.neutral.len() >= 10);
        for t in &pools.negative {
            assert_eq!(config.polarity(scorer.compound(t)), Polarity::Negative, "{t}");
        }
    }
}
