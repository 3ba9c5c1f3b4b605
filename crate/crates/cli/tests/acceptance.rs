//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
//! budgets are the constants next to each check.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use segnet::corpus::{
    is_engaged, summarize_timeline, write_records_jsonl, EngagementPolicy, InteractionKind, InteractionRecord,
};
use segnet::egonet::{mean_shift_1d, Bandwidth, MeanShiftConfig};
use segnet::pipeline::{load_run_outputs, run_pipeline, LabeledRecord, RunConfig, Stage};
use segnet::sentiment::{label_interaction, LexiconScorer, Polarity, SentimentScorer};
use segnet::signing::{sign_relationship, RelationshipStats, Sign};
use segnet::stats::mean_confidence_interval;
use segnet::synth::{generate_corpus, verify_pipeline, GroundTruth, SynthSpec};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:.2?}, budget {budget:?}"))
}

fn generate(spec: &SynthSpec) -> (Vec<InteractionRecord>, GroundTruth) {
    let scorer = LexiconScorer::bundled();
    generate_corpus(spec, &scorer, scorer.config()).expect("generator")
}

fn write_corpus(records: &[InteractionRecord], path: &Path) {
    write_records_jsonl(records, File::create(path).expect("create corpus")).expect("write corpus");
}

fn run_library(records: &[InteractionRecord], dir: &Path, until: Stage) -> RunConfig {
    let input = dir.join("corpus.jsonl");
    write_corpus(records, &input);
    let mut config = RunConfig::default();
    config.input.paths = vec![input];
    config.output.dir = dir.join("out");
    run_pipeline(&config, until).expect("pipeline run");
    config
}

// 1. negative iff fraction > threshold, checked against exact rationals

fn criterion_1() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(1);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut planted: Vec<(u64, u64)> = (0..1000)
        .map(|i| {
            // every tenth total is a multiple of 300, which puts exact ties on all thresholds
            let total = if i % 10 == 0 { 300 * rng.random_range(1..4) } else { rng.random_range(1..=400) };
            (rng.random_range(0..=total), total)
        })
        .collect();
    planted.extend([(50, 300), (51, 300), (1, 6), (1, 5), (17, 100), (60, 300), (0, 9), (9, 9)]);
    // thresholds as exact fractions p/q
    let thresholds: [(u64, u64); 5] = [(0, 1), (1, 6), (17, 100), (1, 5), (1, 1)];
    let mut mismatches = 0;
    for &(p, q) in &thresholds {
        let t = p as f64 / q as f64;
        for (i, &(neg, total)) in planted.iter().enumerate() {
            let stats = RelationshipStats {
                ego_id: "e".into(),
                alter_id: format!("a{i}"),
                n_total: total,
                n_negative: neg,
                n_positive: total - neg,
                n_neutral: 0,
            };
            let expected = neg * q > p * total;
            mismatches += usize::from(sign_relationship(stats, t).sign.is_negative() != expected);
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    let sign = |neg, total| {
        let stats = RelationshipStats {
            ego_id: "e".into(),
            alter_id: "a".into(),
            n_total: total,
            n_negative: neg,
            n_positive: total - neg,
            n_neutral: 0,
        };
        sign_relationship(stats, 0.17).sign
    };
    ensure(sign(1, 6) == Sign::Positive, || "1/6 should be positive at 0.17".into())?;
    ensure(sign(1, 5) == Sign::Negative, || "1/5 should be negative at 0.17".into())?;
    within(BUDGET, start)?;
    Ok(format!("{} relationships x {} thresholds, 0 mismatches", planted.len(), thresholds.len()))
}

// 2. retweets are forced neutral; a quote retweet of the same text is scored

fn criterion_2(dir: &Path) -> Outcome {
    const BUDGET: Duration = Duration::from_secs(5);
    let (records, _) = generate(&SynthSpec {
        n_egos: 40,
        seed: 2,
        ..SynthSpec::default()
    });
    let start = Instant::now();
    let scorer = LexiconScorer::bundled();
    let config = scorer.config();
    let (mut retweets, mut flipped) = (0usize, 0usize);
    for r in records.iter().filter(|r| r.kind == InteractionKind::Retweet) {
        retweets += 1;
        let label = label_interaction(r, &scorer, config);
        ensure(label.forced_neutral && label.polarity == Polarity::Neutral && label.compound == 0.0, || {
            format!("retweet {} -> {} not neutral", r.ego_id, r.alter_id)
        })?;
        if scorer.compound(&r.text) <= -0.05 {
            let quote = InteractionRecord {
                kind: InteractionKind::QuoteRetweet,
                ..r.clone()
            };
            let label = label_interaction(&quote, &scorer, config);
            ensure(label.polarity == Polarity::Negative, || format!("quote of {:?} not negative", r.text))?;
            flipped += 1;
        }
    }
    ensure(flipped > 0, || "no negative retweet text to flip".into())?;

    // the same holds for the labels the pipeline writes
    let run = run_library(&records, dir, Stage::Sentiment);
    let labels = fs::read_to_string(run.output.dir.join("labels.jsonl")).map_err(|e| e.to_string())?;
    let mut written = 0;
    for line in labels.lines() {
        let l: LabeledRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if l.kind == InteractionKind::Retweet {
            written += 1;
            ensure(l.polarity == Polarity::Neutral && l.compound == 0.0, || format!("labels.jsonl: {line}"))?;
        }
    }
    ensure(written == retweets, || format!("{written} retweets in labels.jsonl, {retweets} in the corpus"))?;
    within(BUDGET, start)?;
    Ok(format!("{retweets} retweets neutral, {flipped} negative quote flips"))
}

// 3. mean shift against the naive reference

fn criterion_3() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(10);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let points = support::random_instance(&mut rng);
        let bw = rng.random_range(0.5..15.0);
        let config = MeanShiftConfig {
            bandwidth: if case % 2 == 0 { Bandwidth::Fixed(bw) } else { Bandwidth::Auto },
            ..MeanShiftConfig::default()
        };
        let got = mean_shift_1d(&points, &config).map_err(|e| e.to_string())?;
        let distinct = points.iter().any(|p| *p != points[0]);
        let expected = if points.len() < 2 || !distinct {
            vec![0; points.len()]
        } else {
            support::naive_mean_shift(&points, got.bandwidth, config.convergence_tol, config.max_iterations)
        };
        ensure(got.labels == expected, || format!("case {case} differs: {points:?}"))?;
    }
    let fixed = MeanShiftConfig {
        bandwidth: Bandwidth::Fixed(1.0),
        ..MeanShiftConfig::default()
    };
    let k = mean_shift_1d(&[0.9, 1.0, 1.1, 9.9, 10.1, 100.0], &fixed)
        .map_err(|e| e.to_string())?
        .n_clusters();
    ensure(k == 3, || format!("fixed example gave {k} clusters"))?;
    within(BUDGET, start)?;
    Ok("200/200 instances identical, fixed example 3 clusters".into())
}

// 4. planted Dunbar structure is recovered end to end

fn criterion_4(dir: &Path) -> Outcome {
    const BUDGET: Duration = Duration::from_secs(60);
    const MIN_FIVE_CIRCLES: f64 = 0.95;
    const MIN_BAND_EXACT: f64 = 0.99;
    const RATIO: (f64, f64) = (2.0, 4.0);
    let start = Instant::now();
    let (records, truth) = generate(&SynthSpec {
        n_egos: 500,
        ..SynthSpec::default()
    });
    let config = run_library(&records, dir, Stage::Report);
    let elapsed = start.elapsed();
    let (edges, networks) = load_run_outputs(&config.output.dir).map_err(|e| e.to_string())?;
    let report = verify_pipeline(&truth, &edges, &networks).map_err(|e| e.to_string())?;

    let five: Vec<_> = networks.iter().filter(|n| n.optimum_circles == 5).collect();
    let five_share = five.len() as f64 / truth.egos.len() as f64;
    let band_exact = 1.0 - report.band_mismatches.len() as f64 / truth.ties.len() as f64;
    let mut means = [0.0; 5];
    for n in &five {
        for (m, s) in means.iter_mut().zip(&n.circle_sizes) {
            *m += *s as f64 / five.len() as f64;
        }
    }
    let ratio = means.windows(2).map(|w| w[1] / w[0]).sum::<f64>() / 4.0;
    let detail = format!(
        "{} interactions, five circles {:.1}%, bands exact {:.2}%, sign mismatches {}, sizes {:.2?}, ratio {ratio:.2}",
        records.len(),
        100.0 * five_share,
        100.0 * band_exact,
        report.sign_mismatches.len(),
        means,
    );
    ensure(five_share >= MIN_FIVE_CIRCLES, || detail.clone())?;
    ensure(band_exact >= MIN_BAND_EXACT, || detail.clone())?;
    ensure(report.sign_mismatches.is_empty(), || detail.clone())?;
    ensure((RATIO.0..=RATIO.1).contains(&ratio), || detail.clone())?;
    ensure(elapsed < BUDGET, || format!("{detail}; took {elapsed:.2?}"))?;
    Ok(detail)
}

// 5. engagement rule edges

fn timeline(plan: &[((i64, i64), u64)]) -> Vec<InteractionRecord> {
    let mut ts: Vec<i64> = plan
        .iter()
        .flat_map(|&((y, m), n)| support::spread_over_month(y, m, n))
        .collect();
    ts.sort();
    ts.into_iter().map(reply).collect()
}

fn reply(ts: i64) -> InteractionRecord {
    InteractionRecord {
        ego_id: "e".into(),
        alter_id: "a".into(),
        kind: InteractionKind::Reply,
        ts,
        text: String::new(),
    }
}

/// `1998` dense interactions in January to June of 2021, plus one at the
/// start of the year and one `days` (and `extra_secs`) later.
fn span_timeline(days: i64, extra_secs: i64) -> Vec<InteractionRecord> {
    let t0 = support::month_start(2021, 1);
    let mut records = timeline(&(1..=6).map(|m| ((2021, m), 333)).collect::<Vec<_>>());
    records.insert(0, reply(t0));
    records.push(reply(t0 + days * 86_400 + extra_secs));
    records
}

fn criterion_5() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(1);
    let start = Instant::now();
    let policy = EngagementPolicy::default();
    let engaged = |r: &[InteractionRecord]| is_engaged(&summarize_timeline(r).expect("non-empty"), &policy);

    let dense: Vec<_> = (1..=8).map(|m| ((2021, m), 250)).collect();
    let mut short = dense.clone();
    short[3].1 -= 1;

    // five sparse 31-day months (10 < 31/3) and dense months of 500
    let sparse = |m| ((2021, m), 10);
    let half_low = vec![
        sparse(1),
        ((2021, 2), 500),
        sparse(3),
        ((2021, 4), 500),
        sparse(5),
        ((2021, 6), 500),
        sparse(7),
        sparse(8),
        ((2021, 9), 500),
        ((2021, 10), 500),
    ];
    let mut over_half: Vec<_> = half_low.clone();
    over_half.remove(8);
    let mut just_regular = over_half.clone();
    just_regular[0].1 = 11;

    let cases: Vec<(&str, Vec<InteractionRecord>, bool)> = vec![
        ("2000 interactions", timeline(&dense), true),
        ("1999 interactions", timeline(&short), false),
        ("182-day span", span_timeline(182, 0), true),
        ("181-day span", span_timeline(181, 0), false),
        ("182 days less a second", span_timeline(182, -1), false),
        ("low fraction 5/10", timeline(&half_low), true),
        ("low fraction 5/9", timeline(&over_half), false),
        ("low fraction 4/9 (11 in 31 days)", timeline(&just_regular), true),
    ];
    for (name, records, expected) in &cases {
        ensure(engaged(records) == *expected, || format!("{name}: expected engaged = {expected}"))?;
    }
    within(BUDGET, start)?;
    Ok(format!("{} boundary timelines decided exactly", cases.len()))
}

// 6. negativity planted among strong ties raises active-network negativity

fn negativity_means(dir: &Path) -> Result<BTreeMap<String, f64>, String> {
    let text = fs::read_to_string(dir.join("tables/negativity.csv")).map_err(|e| e.to_string())?;
    let mut means = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        means.insert(cells[1].to_string(), cells[2].parse::<f64>().map_err(|e| e.to_string())?);
    }
    Ok(means)
}

fn criterion_6(dir: &Path) -> Outcome {
    const BUDGET: Duration = Duration::from_secs(10);
    let start = Instant::now();
    let (records, _) = generate(&SynthSpec {
        n_egos: 60,
        seed: 6,
        band_negative_prob: vec![0.6, 0.5, 0.4, 0.0, 0.0],
        inactive_negative_prob: 0.0,
        ..SynthSpec::default()
    });
    let config = run_library(&records, dir, Stage::Report);
    let means = negativity_means(&config.output.dir)?;
    let (full, active) = (means["full"], means["active"]);
    let detail = format!("full {full:.2}%, active {active:.2}%, difference {:+.2}", active - full);
    ensure(active > full, || detail.clone())?;
    within(BUDGET, start)?;
    Ok(detail)
}

// 7. t intervals

fn criterion_7() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(30);
    const EXACT: f64 = 1e-9;
    const COVERAGE: (f64, f64) = (0.94, 0.96);
    let start = Instant::now();
    let ci = mean_confidence_interval(&[0.0, 10.0], 0.95).map_err(|e| e.to_string())?;
    let half = 5.0 * support::t_quantile_df1(0.975);
    ensure((ci.lo - (5.0 - half)).abs() < EXACT && (ci.hi - (5.0 + half)).abs() < EXACT, || {
        format!("{{0, 10}}: [{}, {}]", ci.lo, ci.hi)
    })?;
    let ci = mean_confidence_interval(&[1.0, 2.0, 3.0], 0.95).map_err(|e| e.to_string())?;
    let half = support::t_quantile_df2(0.975) / 3f64.sqrt();
    ensure((ci.half_width() - half).abs() < EXACT && (ci.mean - 2.0).abs() < EXACT, || {
        format!("{{1, 2, 3}}: [{}, {}]", ci.lo, ci.hi)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(10.0, 3.0).expect("valid normal");
    let trials = 10_000;
    let mut covered = 0;
    for _ in 0..trials {
        let sample: Vec<f64> = (0..10).map(|_| normal.sample(&mut rng)).collect();
        let ci = mean_confidence_interval(&sample, 0.95).map_err(|e| e.to_string())?;
        covered += usize::from(ci.lo <= 10.0 && 10.0 <= ci.hi);
    }
    let coverage = covered as f64 / trials as f64;
    ensure((COVERAGE.0..=COVERAGE.1).contains(&coverage), || format!("coverage {coverage:.4}"))?;
    within(BUDGET, start)?;
    Ok(format!("closed forms within {EXACT:e}, coverage {:.2}%", 100.0 * coverage))
}

// 8. identical artifact trees across runs and thread counts

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn segnet(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_segnet"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("segnet {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn criterion_8(dir: &Path) -> Outcome {
    let start = Instant::now();
    let synth = dir.join("synth");
    let s = synth.to_str().expect("utf-8 path");
    segnet(&["synth", "--egos", "25", "--seed", "8", "--out", s])?;
    let corpus = synth.join("corpus.jsonl");
    let corpus = corpus.to_str().expect("utf-8 path");

    let mut trees: Vec<(String, BTreeMap<PathBuf, Vec<u8>>)> = Vec::new();
    for jobs in ["1", "8"] {
        for attempt in 0..2 {
            let out = dir.join(format!("run-j{jobs}-{attempt}"));
            let o = out.to_str().expect("utf-8 path");
            segnet(&["--jobs", jobs, "--seed", "1", "--out", o, "run", corpus])?;
            trees.push((format!("--jobs {jobs} #{attempt}"), tree(&out)));
        }
    }
    // a rerun into an existing directory leaves the same tree
    let again = dir.join("run-j8-1");
    segnet(&["--jobs", "8", "--seed", "1", "--out", again.to_str().expect("utf-8 path"), "run", corpus])?;
    trees.push(("--jobs 8 #1 rerun".into(), tree(&again)));

    let (first_name, first) = &trees[0];
    ensure(first.contains_key(Path::new("report.md")), || "no report.md".into())?;
    for (name, t) in &trees[1..] {
        let differing: Vec<_> = first
            .keys()
            .chain(t.keys())
            .filter(|k| first.get(*k) != t.get(*k))
            .map(|k| k.display().to_string())
            .collect();
        ensure(differing.is_empty(), || format!("{name} differs from {first_name}: {differing:?}"))?;
    }
    Ok(format!(
        "{} runs, {} files each, byte-identical ({:.1?})",
        trees.len(),
        first.len(),
        start.elapsed()
    ))
}

// 9. sentiment fidelity against the frozen reference scores

fn criterion_9() -> Outcome {
    const MAX_MAE: f64 = 0.05;
    const MIN_AGREEMENT: f64 = 0.90;
    let scorer = LexiconScorer::bundled();
    let reference = support::reference_scores();
    let mut abs_err = 0.0;
    let mut agree = 0;
    let mut disagreements: HashMap<&str, (f64, f64)> = HashMap::new();
    for (text, expected) in &reference {
        let got = scorer.compound(text);
        abs_err += (got - expected).abs();
        if support::reference_polarity(got) == support::reference_polarity(*expected) {
            agree += 1;
        } else {
            disagreements.insert(text, (got, *expected));
        }
    }
    let mae = abs_err / reference.len() as f64;
    let agreement = agree as f64 / reference.len() as f64;
    let detail = format!("{} sentences, MAE {mae:.4}, agreement {:.0}%", reference.len(), 100.0 * agreement);
    ensure(mae <= MAX_MAE && agreement >= MIN_AGREEMENT, || format!("{detail}; {disagreements:?}"))?;
    Ok(detail)
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let sub = |name: &str| {
        let p = scratch.path().join(name);
        fs::create_dir_all(&p).expect("scratch subdir");
        p
    };
    let criteria: Vec<(u32, Box<dyn FnOnce() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new({
            let d = sub("c2");
            move || criterion_2(&d)
        })),
        (3, Box::new(criterion_3)),
        (4, Box::new({
            let d = sub("c4");
            move || criterion_4(&d)
        })),
        (5, Box::new(criterion_5)),
        (6, Box::new({
            let d = sub("c6");
            move || criterion_6(&d)
        })),
        (7, Box::new(criterion_7)),
        (8, Box::new({
            let d = sub("c8");
            move || criterion_8(&d)
        })),
        (9, Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS - {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL - {detail} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
