//! Ego networks from interaction frequencies.
//!
//! Each Ego -> Alter pair gets a frequency in interactions per year. Alters
//! contacted at least once a year form the active network, which is clustered
//! with a flat-kernel 1-D MeanShift. The clusters, ordered from the highest
//! frequency outward, are the rings; cumulative ring sizes are the circles.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Write};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{InteractionRecord, SECONDS_PER_DAY};

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const DEFAULT_DURATION_FLOOR_DAYS: f64 = 30.0;
/// Once a year.
pub const DEFAULT_ACTIVE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EgonetError {
    #[error("no interactions for pair")]
    EmptyPair,
    #[error("pair records mix egos or alters")]
    MixedPair,
    #[error("observation end {end} precedes last interaction {last}")]
    ObservationBeforeLastRecord { end: i64, last: i64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate: identical points")]
    IdenticalPoints,
    #[error("degenerate: estimated bandwidth is zero")]
    ZeroBandwidth,
    #[error("invalid MeanShift config: {0}")]
    InvalidConfig(&'static str),
    #[error("ego {0} has no active alters")]
    EmptyActiveSet(String),
    #[error("frequencies must be positive for log-space clustering")]
    NonPositiveFrequency,
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Interaction totals and time range of one directed pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairActivity {
    #[serde(rename = "ego")]
    pub ego_id: String,
    #[serde(rename = "alter")]
    pub alter_id: String,
    pub n_interactions: u64,
    pub first_ts: i64,
    pub last_ts: i64,
}

impl PairActivity {
    pub fn from_records(records: &[InteractionRecord]) -> Result<Self, EgonetError> {
        let first = records.first().ok_or(EgonetError::EmptyPair)?;
        let mut pair = PairActivity {
            ego_id: first.ego_id.clone(),
            alter_id: first.alter_id.clone(),
            n_interactions: 0,
            first_ts: first.ts,
            last_ts: first.ts,
        };
        for r in records {
            if r.ego_id != pair.ego_id || r.alter_id != pair.alter_id {
                return Err(EgonetError::MixedPair);
            }
            pair.add(r.ts);
        }
        Ok(pair)
    }

    pub fn add(&mut self, ts: i64) {
        self.n_interactions += 1;
        self.first_ts = self.first_ts.min(ts);
        self.last_ts = self.last_ts.max(ts);
    }

    /// Frequency over `[first_ts, observation_end]`, never shorter than `floor_days`.
    pub fn frequency(&self, observation_end: i64, floor_days: f64) -> Result<TieFrequency, EgonetError> {
        if self.n_interactions == 0 {
            return Err(EgonetError::EmptyPair);
        }
        if observation_end < self.last_ts {
            return Err(EgonetError::ObservationBeforeLastRecord {
                end: observation_end,
                last: self.last_ts,
            });
        }
        let raw_days = (observation_end - self.first_ts) as f64 / SECONDS_PER_DAY as f64;
        let duration_days = raw_days.max(floor_days);
        Ok(TieFrequency {
            ego_id: self.ego_id.clone(),
            alter_id: self.alter_id.clone(),
            n_interactions: self.n_interactions,
            duration_days,
            freq_per_year: self.n_interactions as f64 * DAYS_PER_YEAR / duration_days,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieFrequency {
    #[serde(rename = "ego")]
    pub ego_id: String,
    #[serde(rename = "alter")]
    pub alter_id: String,
    pub n_interactions: u64,
    pub duration_days: f64,
    pub freq_per_year: f64,
}

pub fn tie_frequency(
    records: &[InteractionRecord],
    observation_end: i64,
    floor_days: f64,
) -> Result<TieFrequency, EgonetError> {
    PairActivity::from_records(records)?.frequency(observation_end, floor_days)
}

fn by_frequency_desc(a: &TieFrequency, b: &TieFrequency) -> Ordering {
    b.freq_per_year
        .total_cmp(&a.freq_per_year)
        .then_with(|| a.alter_id.cmp(&b.alter_id))
}

/// Alters at or above `min_freq` interactions per year, most frequent first.
pub fn active_alters(freqs: &[TieFrequency], min_freq: f64) -> Vec<TieFrequency> {
    let mut active: Vec<TieFrequency> = freqs
        .iter()
        .filter(|f| f.freq_per_year >= min_freq)
        .cloned()
        .collect();
    active.sort_by(by_frequency_desc);
    active
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(b) => s.serialize_f64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(Bandwidth::Fixed(b)),
            Raw::Int(b) => Ok(Bandwidth::Fixed(b as f64)),
            Raw::Str(s) if s == "auto" => Ok(Bandwidth::Auto),
            Raw::Str(s) => Err(de::Error::custom(format!(
                "bandwidth must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanShiftConfig {
    pub bandwidth: Bandwidth,
    /// Neighbour rank for automatic bandwidth, as a fraction of the point count.
    pub quantile: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    /// Defaults to the bandwidth.
    pub mode_merge_radius: Option<f64>,
    /// Cluster `ln(frequency)` instead of raw frequencies.
    pub log_space: bool,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            bandwidth: Bandwidth::Auto,
            quantile: 0.3,
            max_iterations: 300,
            convergence_tol: 1e-4,
            mode_merge_radius: None,
            log_space: false,
        }
    }
}

impl MeanShiftConfig {
    pub fn validate(&self) -> Result<(), EgonetError> {
        if let Bandwidth::Fixed(b) = self.bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return Err(EgonetError::InvalidConfig("bandwidth must be positive"));
            }
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(EgonetError::InvalidConfig("quantile must be in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(EgonetError::InvalidConfig("max_iterations must be positive"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(EgonetError::InvalidConfig("convergence_tol must be positive"));
        }
        if let Some(r) = self.mode_merge_radius {
            if !(r > 0.0) {
                return Err(EgonetError::InvalidConfig("mode_merge_radius must be positive"));
            }
        }
        Ok(())
    }
}

/// Rank of the neighbour used for bandwidth estimation: `ceil(quantile * n)`,
/// clamped to `1..=n-1`.
pub fn neighbour_rank(n: usize, quantile: f64) -> usize {
    // 0.3 * 10 is 3.0000000000000004 in binary floating point
    let k = (quantile * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n.saturating_sub(1)).max(1)
}

fn sorted_copy(points: &[f64]) -> Vec<f64> {
    let mut v = points.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Mean over all points of the distance to their k-th nearest other point.
pub fn estimate_bandwidth(points: &[f64], quantile: f64) -> Result<f64, EgonetError> {
    let n = points.len();
    if n < 2 {
        return Err(EgonetError::TooFewPoints { needed: 2, got: n });
    }
    let sorted = sorted_copy(points);
    if sorted[0] == sorted[n - 1] {
        return Err(EgonetError::IdenticalPoints);
    }
    let k = neighbour_rank(n, quantile);
    let mut kth = Vec::with_capacity(n);
    for i in 0..n {
        // merge outward from i over both sides of the sorted array
        let (mut left, mut right) = (i, i + 1);
        let mut dist = 0.0;
        for _ in 0..k {
            let dl = if left > 0 { sorted[i] - sorted[left - 1] } else { f64::INFINITY };
            let dr = if right < n { sorted[right] - sorted[i] } else { f64::INFINITY };
            if dl <= dr {
                dist = dl;
                left -= 1;
            } else {
                dist = dr;
                right += 1;
            }
        }
        kth.push(dist);
    }
    // equal values share a distance profile, so any copy's slot will do;
    // summing in input order keeps the result independent of the sort
    let total: f64 = points
        .iter()
        .map(|p| kth[sorted.partition_point(|v| v < p)])
        .sum();
    let bandwidth = total / n as f64;
    if bandwidth > 0.0 {
        Ok(bandwidth)
    } else {
        Err(EgonetError::ZeroBandwidth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanShiftResult {
    /// Cluster index per input point; 0 is the highest mode.
    pub labels: Vec<usize>,
    /// Strictly decreasing.
    pub modes: Vec<f64>,
    pub bandwidth: f64,
    /// Points that hit `max_iterations` and were attached to the nearest mode.
    pub unconverged: usize,
}

impl MeanShiftResult {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }

    fn single(points: &[f64], bandwidth: f64) -> Self {
        let mode = points.iter().sum::<f64>() / points.len() as f64;
        MeanShiftResult {
            labels: vec![0; points.len()],
            modes: vec![mode],
            bandwidth,
            unconverged: 0,
        }
    }
}

/// Smallest gap between distinct values, halved; keeps every distinct value apart.
fn distinct_value_bandwidth(points: &[f64]) -> f64 {
    let sorted = sorted_copy(points);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min)
        / 2.0
}

fn resolve_bandwidth(points: &[f64], config: &MeanShiftConfig) -> Result<Option<f64>, EgonetError> {
    match config.bandwidth {
        Bandwidth::Fixed(b) => Ok(Some(b)),
        Bandwidth::Auto => match estimate_bandwidth(points, config.quantile) {
            Ok(b) => Ok(Some(b)),
            Err(EgonetError::TooFewPoints { .. } | EgonetError::IdenticalPoints) => Ok(None),
            Err(EgonetError::ZeroBandwidth) => Ok(Some(distinct_value_bandwidth(points))),
            Err(e) => Err(e),
        },
    }
}

/// Flat-kernel mean shift of a single seed over sorted points.
/// Returns the final position and whether it converged.
fn shift_seed(sorted: &[f64], seed: f64, bandwidth: f64, config: &MeanShiftConfig) -> (f64, bool) {
    let mut center = seed;
    for _ in 0..config.max_iterations {
        let lo = sorted.partition_point(|&v| v < center - bandwidth);
        let hi = sorted.partition_point(|&v| v <= center + bandwidth);
        let window = &sorted[lo..hi];
        let next = window.iter().sum::<f64>() / window.len() as f64;
        let moved = (next - center).abs();
        center = next;
        if moved < config.convergence_tol {
            return (center, true);
        }
    }
    (center, false)
}

/// Clusters 1-D points. Every point is a seed; converged seeds closer than the
/// merge radius to the previous (higher) mode join it, scanning downward.
pub fn mean_shift_1d(points: &[f64], config: &MeanShiftConfig) -> Result<MeanShiftResult, EgonetError> {
    if points.is_empty() {
        return Err(EgonetError::TooFewPoints { needed: 1, got: 0 });
    }
    config.validate()?;
    let Some(bandwidth) = resolve_bandwidth(points, config)? else {
        return Ok(MeanShiftResult::single(points, 0.0));
    };
    let radius = config.mode_merge_radius.unwrap_or(bandwidth);
    let sorted = sorted_copy(points);

    let finals: Vec<(f64, bool)> = points
        .iter()
        .map(|&p| shift_seed(&sorted, p, bandwidth, config))
        .collect();
    let unconverged = finals.iter().filter(|(_, ok)| !ok).count();
    let all_failed = unconverged == points.len();
    if unconverged > 0 {
        log::warn!(
            "mean shift: {unconverged} of {} points did not converge in {} iterations",
            points.len(),
            config.max_iterations
        );
    }

    let mut order: Vec<usize> = (0..points.len())
        .filter(|&i| finals[i].1 || all_failed)
        .collect();
    order.sort_by(|&a, &b| finals[b].0.total_cmp(&finals[a].0).then(a.cmp(&b)));

    // (leader position, member sum, member count)
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    let mut labels = vec![usize::MAX; points.len()];
    for &i in &order {
        let pos = finals[i].0;
        match groups.last_mut() {
            Some(g) if g.0 - pos <= radius => {
                g.1 += pos;
                g.2 += 1;
            }
            _ => groups.push((pos, pos, 1)),
        }
        labels[i] = groups.len() - 1;
    }
    let modes: Vec<f64> = groups.iter().map(|g| g.1 / g.2 as f64).collect();

    for (i, label) in labels.iter_mut().enumerate() {
        if *label == usize::MAX {
            let pos = finals[i].0;
            // first minimum wins, i.e. the higher mode on a tie
            let mut best = 0;
            for (m, mode) in modes.iter().enumerate() {
                if (mode - pos).abs() < (modes[best] - pos).abs() {
                    best = m;
                }
            }
            *label = best;
        }
    }

    Ok(MeanShiftResult {
        labels,
        modes,
        bandwidth,
        unconverged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub mode_freq: f64,
    /// Most frequent first.
    pub alters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoNetwork {
    #[serde(rename = "ego")]
    pub ego_id: String,
    pub optimum_circles: usize,
    /// Cumulative ring sizes, innermost first.
    pub circle_sizes: Vec<usize>,
    pub rings: Vec<Ring>,
    pub active_size: usize,
}

impl EgoNetwork {
    /// Ring index (0 = innermost) of an alter, if active.
    pub fn ring_of(&self, alter_id: &str) -> Option<usize> {
        self.rings
            .iter()
            .position(|r| r.alters.iter().any(|a| a == alter_id))
    }

    /// Checks the structural invariants; `freqs` supplies each alter's frequency
    /// for the concentricity check.
    pub fn check_invariants(&self, freq_of: impl Fn(&str) -> Option<f64>) -> Result<(), String> {
        if self.optimum_circles != self.rings.len() || self.circle_sizes.len() != self.rings.len() {
            return Err("ring count mismatch".into());
        }
        if self.circle_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("circle sizes not increasing: {:?}", self.circle_sizes));
        }
        if self.circle_sizes.last().copied() != Some(self.active_size) {
            return Err("outermost circle differs from active size".into());
        }
        if self.rings.windows(2).any(|w| w[0].mode_freq <= w[1].mode_freq) {
            return Err("ring modes not strictly decreasing".into());
        }
        let mut seen = std::collections::HashSet::new();
        for ring in &self.rings {
            for a in &ring.alters {
                if !seen.insert(a.as_str()) {
                    return Err(format!("alter {a} in more than one ring"));
                }
            }
        }
        if seen.len() != self.active_size {
            return Err("ring union differs from active size".into());
        }
        for w in self.rings.windows(2) {
            let inner_min = w[0].alters.iter().filter_map(|a| freq_of(a)).fold(f64::INFINITY, f64::min);
            let outer_max = w[1].alters.iter().filter_map(|a| freq_of(a)).fold(f64::NEG_INFINITY, f64::max);
            if inner_min < outer_max {
                return Err(format!("rings overlap: {inner_min} < {outer_max}"));
            }
        }
        Ok(())
    }
}

/// Clusters an ego's active alters into concentric circles.
pub fn build_ego_network(
    ego_id: &str,
    active: &[TieFrequency],
    config: &MeanShiftConfig,
) -> Result<EgoNetwork, EgonetError> {
    if active.is_empty() {
        return Err(EgonetError::EmptyActiveSet(ego_id.to_string()));
    }
    let points: Vec<f64> = if config.log_space {
        if active.iter().any(|f| f.freq_per_year <= 0.0) {
            return Err(EgonetError::NonPositiveFrequency);
        }
        active.iter().map(|f| f.freq_per_year.ln()).collect()
    } else {
        active.iter().map(|f| f.freq_per_year).collect()
    };
    let clusters = mean_shift_1d(&points, config)?;

    let mut members: Vec<Vec<&TieFrequency>> = vec![Vec::new(); clusters.modes.len()];
    for (tie, &label) in active.iter().zip(&clusters.labels) {
        members[label].push(tie);
    }
    let mut rings = Vec::with_capacity(members.len());
    for (mode, mut ties) in clusters.modes.iter().zip(members) {
        if ties.is_empty() {
            continue;
        }
        ties.sort_by(|a, b| by_frequency_desc(a, b));
        rings.push(Ring {
            mode_freq: if config.log_space { mode.exp() } else { *mode },
            alters: ties.iter().map(|t| t.alter_id.clone()).collect(),
        });
    }
    let circle_sizes: Vec<usize> = rings
        .iter()
        .scan(0, |acc, r| {
            *acc += r.alters.len();
            Some(*acc)
        })
        .collect();
    Ok(EgoNetwork {
        ego_id: ego_id.to_string(),
        optimum_circles: rings.len(),
        active_size: active.len(),
        circle_sizes,
        rings,
    })
}

pub fn write_ego_networks<W: Write>(networks: &[EgoNetwork], mut out: W) -> Result<(), EgonetError> {
    for net in networks {
        serde_json::to_writer(&mut out, net)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ego_networks<R: BufRead>(input: R) -> Result<Vec<EgoNetwork>, EgonetError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
