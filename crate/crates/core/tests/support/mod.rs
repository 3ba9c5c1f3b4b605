//! Reference computations shared by the integration and acceptance tests.
//! Each one is written the slow, obvious way and knows nothing about the
//! library's internals.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Distance from each point to its k-th nearest *other* point, averaged.
/// `k = ceil(quantile * n)` clamped to `1..=n-1`, computed with an exact
/// rational comparison instead of floating-point ceil.
pub fn brute_force_bandwidth(points: &[f64], quantile_num: usize, quantile_den: usize) -> f64 {
    let n = points.len();
    let k = ((quantile_num * n + quantile_den - 1) / quantile_den).clamp(1, n - 1);
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut d: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| (q - p).abs())
            .collect();
        d.sort_by(f64::total_cmp);
        total += d[k - 1];
    }
    total / n as f64
}

/// Flat-kernel mean shift by exhaustive window scans. Returns the cluster
/// index of every point, 0 being the highest mode.
pub fn naive_mean_shift(points: &[f64], bandwidth: f64, tol: f64, max_iter: usize) -> Vec<usize> {
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut finals = Vec::new();
    for &seed in points {
        let mut c = seed;
        let mut converged = false;
        for _ in 0..max_iter {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &q in &sorted {
                if q >= c - bandwidth && q <= c + bandwidth {
                    sum += q;
                    count += 1;
                }
            }
            let next = sum / count as f64;
            let moved = (next - c).abs();
            c = next;
            if moved < tol {
                converged = true;
                break;
            }
        }
        finals.push((c, converged));
    }

    // walk converged positions from the top; a position joins the current
    // group while it is within one bandwidth of the group's first member
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| finals[i].1).collect();
    if order.is_empty() {
        order = (0..points.len()).collect();
    }
    order.sort_by(|&a, &b| finals[b].0.total_cmp(&finals[a].0).then(a.cmp(&b)));
    let mut leaders: Vec<f64> = Vec::new();
    let mut members: Vec<Vec<f64>> = Vec::new();
    let mut labels = vec![None; points.len()];
    for i in order {
        let pos = finals[i].0;
        if leaders.last().is_none_or(|l| l - pos > bandwidth) {
            leaders.push(pos);
            members.push(Vec::new());
        }
        members.last_mut().unwrap().push(pos);
        labels[i] = Some(leaders.len() - 1);
    }
    let modes: Vec<f64> = members.iter().map(|m| m.iter().sum::<f64>() / m.len() as f64).collect();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.unwrap_or_else(|| {
                let pos = finals[i].0;
                let mut best = 0;
                for m in 1..modes.len() {
                    if (modes[m] - pos).abs() < (modes[best] - pos).abs() {
                        best = m;
                    }
                }
                best
            })
        })
        .collect()
}

/// Student-t quantile for one degree of freedom (Cauchy).
pub fn t_quantile_df1(p: f64) -> f64 {
    (PI * (p - 0.5)).tan()
}

/// Student-t quantile for two degrees of freedom.
pub fn t_quantile_df2(p: f64) -> f64 {
    (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt()
}

/// The frozen reference scores: `(sentence, compound)` pairs.
pub fn reference_scores() -> Vec<(String, f64)> {
    include_str!("../../data/sentiment_reference.tsv")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (text, score) = l.rsplit_once('\t').expect("sentence<TAB>compound");
            (text.to_string(), score.trim().parse().expect("numeric compound"))
        })
        .collect()
}

/// Polarity from a compound score with the conventional ±0.05 cut.
pub fn reference_polarity(compound: f64) -> i8 {
    if compound >= 0.05 {
        1
    } else if compound <= -0.05 {
        -1
    } else {
        0
    }
}

/// Days since 1970-01-01 of a proleptic Gregorian date (Howard Hinnant's
/// `days_from_civil`).
pub fn days_from_civil(year: i64, month: i64, day: i64) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (month + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

pub fn month_start(year: i64, month: i64) -> i64 {
    days_from_civil(year, month, 1) * 86_400
}

pub fn days_in_month(year: i64, month: i64) -> i64 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    days_from_civil(ny, nm, 1) - days_from_civil(year, month, 1)
}

/// `count` timestamps spread evenly over the given month, all strictly
/// inside it.
pub fn spread_over_month(year: i64, month: i64, count: u64) -> Vec<i64> {
    let start = month_start(year, month);
    let len = days_in_month(year, month) * 86_400;
    (0..count as i64).map(|i| start + 1 + i * (len - 2) / count.max(1) as i64).collect()
}

/// A few clusters with random centres and spreads, so some instances have
/// clean gaps and others have windows that bridge neighbouring groups.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(1..=50);
    let groups = rng.random_range(1..=5);
    let centres: Vec<f64> = (0..groups).map(|_| rng.random_range(0.0..100.0)).collect();
    let spreads: Vec<f64> = (0..groups).map(|_| rng.random_range(0.1..8.0)).collect();
    (0..n)
        .map(|_| {
            let g = rng.random_range(0..groups);
            let x = centres[g] + rng.random_range(-spreads[g]..spreads[g]);
            // occasional exact duplicates
            if rng.random_bool(0.1) { x.round() } else { x }
        })
        .collect()
}
