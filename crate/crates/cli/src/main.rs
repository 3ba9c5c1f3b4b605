use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use segnet::corpus::{parse_interaction_log, write_records_jsonl, write_skip_report};
use segnet::pipeline::{load_run_outputs, run_pipeline, PipelineError, RunConfig, RunSummary, Stage};
use segnet::sentiment::LexiconScorer;
use segnet::synth::{generate_corpus, verify_pipeline, GroundTruth, SynthError, SynthSpec};

const EXIT_INPUT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Signed ego networks from directed interaction logs.
#[derive(Debug, Parser)]
#[command(name = "segnet", version)]
struct Cli {
    /// TOML run config with one section per stage.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for the bootstrap and the generator.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Interaction logs (JSONL); replaces the config's input paths.
    #[arg(value_name = "INPUT")]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a log and print its skip report as CSV; exits 1 if any line is skipped.
    Validate {
        #[arg(value_name = "INPUT", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Parse the logs and apply the engagement filter.
    Filter(Inputs),
    /// Label every interaction of the engaged egos.
    Sentiment(Inputs),
    /// Sign every relationship of the engaged egos.
    Sign(Inputs),
    /// Build the ego networks.
    Egonet(Inputs),
    /// Write report.md and tables/*.csv.
    Report(Inputs),
    /// All stages in order.
    Run(Inputs),
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        /// TOML generator spec; defaults otherwise.
        #[arg(long, value_name = "PATH")]
        spec: Option<PathBuf>,
        /// Override the number of egos.
        #[arg(long, value_name = "N")]
        egos: Option<usize>,
    },
    /// Compare a finished run against a generator's truth.json.
    Verify {
        #[arg(long, value_name = "PATH")]
        truth: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) | SynthError::Toml(_) | SynthError::Infeasible(_) => Failure::config(e.to_string()),
            SynthError::IdMismatch(_) | SynthError::Json(_) => Failure::input(e.to_string()),
            SynthError::EmptyPool(_) | SynthError::Io(_) => Failure::internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("segnet: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Validate { inputs } => validate(inputs),
        Command::Filter(i) => run_until(cli, i, Stage::Corpus),
        Command::Sentiment(i) => run_until(cli, i, Stage::Sentiment),
        Command::Sign(i) => run_until(cli, i, Stage::Signing),
        Command::Egonet(i) => run_until(cli, i, Stage::Egonet),
        Command::Report(i) | Command::Run(i) => run_until(cli, i, Stage::Report),
        Command::Synth { spec, egos } => synth(cli, spec.as_deref(), *egos),
        Command::Verify { truth } => verify(cli, truth),
    }
}

fn validate(inputs: &[PathBuf]) -> Result<u8, Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut any_skips = false;
    for path in inputs {
        let file = File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let log = parse_interaction_log(BufReader::new(file))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        eprintln!(
            "{}: {} lines, {} records, {} skipped",
            path.display(),
            log.line_count(),
            log.records.len(),
            log.skips.len()
        );
        if inputs.len() > 1 {
            writeln!(out, "# {}", path.display()).map_err(|e| Failure::internal(e.to_string()))?;
        }
        write_skip_report(&log.skips, &mut out).map_err(|e| Failure::internal(e.to_string()))?;
        any_skips |= !log.skips.is_empty();
    }
    Ok(if any_skips { EXIT_INPUT } else { 0 })
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run_until(cli: &Cli, inputs: &Inputs, until: Stage) -> Result<u8, Failure> {
    let mut config = load_config(cli)?;
    if !inputs.inputs.is_empty() {
        config.input.paths = inputs.inputs.clone();
    }
    let summary = run_pipeline(&config, until)?;
    report_summary(&config, &summary);
    Ok(0)
}

fn report_summary(config: &RunConfig, s: &RunSummary) {
    let names = |stages: &[Stage]| stages.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
    eprintln!(
        "{}: {} egos ({} engaged), {} skipped lines, {} relationships, {} ego networks",
        config.output.dir.display(),
        s.egos,
        s.engaged_egos,
        s.skipped_lines,
        s.relationships,
        s.networks
    );
    if !s.cached.is_empty() {
        eprintln!("reused: {}", names(&s.cached));
    }
    if !s.executed.is_empty() {
        eprintln!("ran: {}", names(&s.executed));
    }
}

fn synth(cli: &Cli, spec_path: Option<&Path>, egos: Option<usize>) -> Result<u8, Failure> {
    let mut spec = match spec_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            SynthSpec::from_toml(&text)?
        }
        None => SynthSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(n) = egos {
        spec.n_egos = n;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let scorer = LexiconScorer::bundled();
    let (records, truth) = generate_corpus(&spec, &scorer, scorer.config())?;
    fs::create_dir_all(&out).map_err(|e| Failure::internal(format!("{}: {e}", out.display())))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<(), String>| -> Result<(), Failure> {
        let path = out.join(name);
        let file = File::create(&path).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(Failure::internal)?;
        w.flush().map_err(|e| Failure::internal(e.to_string()))
    };
    write("corpus.jsonl", &|w| write_records_jsonl(&records, w).map_err(|e| e.to_string()))?;
    write("truth.json", &|w| truth.write_json(w).map_err(|e| e.to_string()))?;
    eprintln!(
        "{}: {} egos, {} ties, {} interactions",
        out.display(),
        truth.egos.len(),
        truth.ties.len(),
        records.len()
    );
    Ok(0)
}

fn verify(cli: &Cli, truth_path: &Path) -> Result<u8, Failure> {
    let config = load_config(cli)?;
    let file = File::open(truth_path).map_err(|e| Failure::input(format!("{}: {e}", truth_path.display())))?;
    let truth = GroundTruth::read_json(BufReader::new(file))?;
    let (edges, networks) = load_run_outputs(&config.output.dir)?;
    let report = verify_pipeline(&truth, &edges, &networks)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::internal(e.to_string()))?;
    println!("{json}");
    eprintln!(
        "{} sign, {} band and {} circle-count mismatches",
        report.sign_mismatches.len(),
        report.band_mismatches.len(),
        report.circle_count_mismatches.len()
    );
    Ok(if report.is_empty() { 0 } else { EXIT_INPUT })
}
