//! Means with confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no values")]
    Empty,
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("non-finite value")]
    NonFinite,
    #[error("bootstrap needs at least one resample")]
    NoResamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithCI {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub level: f64,
}

impl MeanWithCI {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

fn check(values: &[f64], level: f64) -> Result<(), StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased (n - 1) sample standard deviation; 0 for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Two-sided Student-t quantile `t_{df, (1 + level) / 2}`.
pub fn t_critical(level: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0)
}

/// `mean ± t * s / sqrt(n)` with n - 1 degrees of freedom.
pub fn mean_confidence_interval(values: &[f64], level: f64) -> Result<MeanWithCI, StatsError> {
    check(values, level)?;
    let n = values.len();
    let m = mean(values);
    let s = sample_std(values);
    let half = if n < 2 || s == 0.0 {
        0.0
    } else {
        t_critical(level, (n - 1) as f64) * s / (n as f64).sqrt()
    };
    Ok(MeanWithCI {
        mean: m,
        lo: m - half,
        hi: m + half,
        n,
        level,
    })
}

/// Percentile bootstrap of the mean, seeded for reproducibility.
pub fn bootstrap_mean_ci(
    values: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<MeanWithCI, StatsError> {
    check(values, level)?;
    if resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    let n = values.len();
    let m = mean(values);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = percentile_sorted(&means, alpha);
    let hi = percentile_sorted(&means, 1.0 - alpha);
    // a skewed resample distribution can leave the sample mean just outside
    Ok(MeanWithCI {
        mean: m,
        lo: lo.min(m),
        hi: hi.max(m),
        n,
        level,
    })
}

/// Linear interpolation between closest ranks.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    StudentT,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CiOptions {
    pub method: CiMethod,
    pub level: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for CiOptions {
    fn default() -> Self {
        CiOptions {
            method: CiMethod::StudentT,
            level: 0.95,
            bootstrap_resamples: 10_000,
            seed: 0,
        }
    }
}

impl CiOptions {
    pub fn interval(&self, values: &[f64]) -> Result<MeanWithCI, StatsError> {
        match self.method {
            CiMethod::StudentT => mean_confidence_interval(values, self.level),
            CiMethod::Bootstrap => {
                bootstrap_mean_ci(values, self.level, self.bootstrap_resamples, self.seed)
            }
        }
    }
}
