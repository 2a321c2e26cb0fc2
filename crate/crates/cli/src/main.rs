//! `flbandit`: replay experiments, synthetic datasets, debugging sessions
//! and the session HTTP server.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flbandit_core::report::Approach;
use flbandit_core::{
    generate_synthetic, load_path, run_experiment, AggregatorKind, ArmId, ExamScore, ExperimentConfig, FaultRank,
    Method, MissingPolicy, PolicyConfig, SynthArm, SynthConfig,
};
use flbandit_session::{ArmLocation, RoundOutcome, RoundReport, SessionService, SessionStore, STORE_ENV};

#[derive(Debug, Parser)]
#[command(name = "flbandit", version, about = "Bandit-driven selection of fault-localization techniques")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay the bandit, every fixed technique and a random baseline over a dataset.
    Replay(ReplayArgs),
    /// Write a synthetic EXAM-score dataset as CSV.
    Synth(SynthArgs),
    /// Work with debugging sessions in a local store.
    Session(SessionArgs),
    /// Serve the session HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Md,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Aggregator {
    #[value(alias = "average")]
    Avg,
    #[value(alias = "mdn")]
    Median,
}

impl From<Aggregator> for AggregatorKind {
    fn from(a: Aggregator) -> Self {
        match a {
            Aggregator::Avg => AggregatorKind::Average,
            Aggregator::Median => AggregatorKind::Median,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Missing {
    Skip,
    Worst,
}

impl From<Missing> for MissingPolicy {
    fn from(m: Missing) -> Self {
        match m {
            Missing::Skip => MissingPolicy::Skip,
            Missing::Worst => MissingPolicy::Worst,
        }
    }
}

fn parse_arm(s: &str) -> Result<ArmId, String> {
    s.parse().map_err(|e: flbandit_core::Error| e.to_string())
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Dataset CSV with header `module_id,method,formula,exam`.
    #[arg(long)]
    dataset: PathBuf,
    /// Bandit aggregators to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["avg", "median"])]
    aggregator: Vec<Aggregator>,
    /// Exploration probability of the bandit.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Number of repetitions; per-run statistics are averaged across them.
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    /// Base seed; repetition r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw a new module order for every repetition.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    reshuffle_per_rep: bool,
    /// Replay modules in file order instead of shuffling.
    #[arg(long)]
    preserve_order: bool,
    /// Force the bandit's first selection.
    #[arg(long, value_parser = parse_arm)]
    first_pick: Option<ArmId>,
    /// Restrict to these arms (comma separated, e.g. sbfl+ochiai,mbfl+ochiai).
    #[arg(long, value_delimiter = ',', value_parser = parse_arm)]
    arms: Option<Vec<ArmId>>,
    /// Modules lacking a score for some arm are skipped or scored 1.0.
    #[arg(long, value_enum, default_value = "skip")]
    missing: Missing,
    /// Leave out the fixed-technique columns.
    #[arg(long)]
    no_fixed: bool,
    /// Leave out the random baseline.
    #[arg(long)]
    no_random: bool,
    /// Report as JSON or as a markdown table.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 133)]
    modules: usize,
    /// Number of techniques; the first four mirror the published arm set.
    #[arg(long, default_value_t = 4)]
    arms: usize,
    /// Mean EXAM per arm, comma separated; defaults to built-in values.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Half-width of each arm's uniform score distribution.
    #[arg(long, default_value_t = 0.01)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Directory holding session files.
    #[arg(long, env = STORE_ENV, default_value = ".flbandit/sessions", global = true)]
    store: PathBuf,
    #[command(subcommand)]
    command: SessionCommand,
}

#[derive(Debug, Subcommand)]
enum SessionCommand {
    /// Start a session over the given arms.
    New {
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_arm)]
        arms: Vec<ArmId>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "avg")]
        aggregator: Aggregator,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a session with its aggregates and recommendation.
    Show {
        #[arg(long)]
        id: String,
    },
    /// List stored sessions.
    List,
    /// Print the technique to use on the next module.
    Recommend {
        #[arg(long)]
        id: String,
    },
    /// Report the outcome for one debugged module.
    Report {
        #[arg(long)]
        id: String,
        /// Label of the debugged module.
        #[arg(long)]
        module: String,
        /// EXAM per arm as ARM=VALUE, e.g. sbfl+ochiai=0.003 (repeatable).
        #[arg(long, conflicts_with = "rank")]
        exam: Vec<String>,
        /// Fault rank per arm as ARM=RANK/TOTAL_LINES, e.g. sbfl+ochiai=5/100 (repeatable).
        #[arg(long)]
        rank: Vec<String>,
    },
    /// Close a session.
    Close {
        #[arg(long)]
        id: String,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory holding session files.
    #[arg(long, env = STORE_ENV, default_value = ".flbandit/sessions")]
    store: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay(args) => replay(args),
        Command::Synth(args) => synth(args),
        Command::Session(args) => session(args),
        Command::Serve(args) => serve(args),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn replay(args: ReplayArgs) -> Result<()> {
    let dataset = load_path(&args.dataset, args.missing.into())
        .with_context(|| format!("loading {}", args.dataset.display()))?;
    let arms = args.arms.clone().unwrap_or_else(|| dataset.arms().to_vec());

    let mut approaches = Vec::new();
    if !args.no_fixed {
        approaches.extend(arms.iter().map(|arm| Approach::Fixed { arm: arm.clone() }));
    }
    let mut kinds: Vec<AggregatorKind> = Vec::new();
    for kind in args.aggregator.iter().copied().map(AggregatorKind::from) {
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    approaches.extend(kinds.into_iter().map(|aggregator| Approach::Bandit { aggregator }));
    if !args.no_random {
        approaches.push(Approach::Random);
    }

    let config = ExperimentConfig {
        dataset_label: args.dataset.file_name().map(|n| n.to_string_lossy().into_owned()),
        arms: args.arms,
        approaches: Some(approaches),
        repetitions: args.repetitions,
        base_seed: args.seed,
        epsilon: args.epsilon,
        reshuffle_per_rep: args.reshuffle_per_rep,
        preserve_order: args.preserve_order,
        first_pick: args.first_pick,
    };
    let report = run_experiment(&dataset, &config)?;
    let text = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Md => report.to_markdown(),
    };
    emit(&text, args.out.as_deref())
}

/// Arm set and mean EXAM values used when none are given.
const DEFAULT_ARMS: [(Method, &str, f64); 4] = [
    (Method::Sbfl, "ochiai", 0.050049),
    (Method::Sbfl, "tarantula", 0.010374),
    (Method::Mbfl, "ochiai", 0.010026),
    (Method::Sbfl, "dstar2", 0.011164),
];

fn synth(args: SynthArgs) -> Result<()> {
    if args.arms < 1 {
        bail!("--arms must be at least 1");
    }
    if let Some(means) = &args.means {
        if means.len() != args.arms {
            bail!("--means lists {} values for {} arms", means.len(), args.arms);
        }
    }
    let arms = (0..args.arms)
        .map(|i| {
            let (arm, default_mean) = match DEFAULT_ARMS.get(i) {
                Some(&(method, formula, mean)) => (ArmId::new(method, formula)?, mean),
                None => (ArmId::new(Method::Sbfl, &format!("formula{}", i + 1))?, 0.05),
            };
            let mean = args.means.as_ref().map_or(default_mean, |m| m[i]);
            Ok(SynthArm { arm, mean, spread: args.spread })
        })
        .collect::<flbandit_core::Result<Vec<_>>>()?;
    let dataset = generate_synthetic(&SynthConfig { module_count: args.modules, arms, seed: args.seed })?;
    emit(&dataset.to_csv_string(), args.out.as_deref())
}

fn split_assignment(s: &str) -> Result<(ArmId, &str)> {
    let (arm, value) = s.split_once('=').with_context(|| format!("{s:?} is not ARM=VALUE"))?;
    Ok((arm.parse()?, value))
}

fn round_report(module: String, exam: &[String], rank: &[String]) -> Result<RoundReport> {
    if !exam.is_empty() {
        let mut map = BTreeMap::new();
        for item in exam {
            let (arm, value) = split_assignment(item)?;
            let value: f64 = value.parse().with_context(|| format!("EXAM {value:?} is not a number"))?;
            if map.insert(arm.clone(), ExamScore::new(value)?).is_some() {
                bail!("arm {arm} given twice");
            }
        }
        return Ok(RoundReport { module, outcome: RoundOutcome::Exam(map) });
    }
    if !rank.is_empty() {
        let mut map = BTreeMap::new();
        for item in rank {
            let (arm, value) = split_assignment(item)?;
            let (r, total) = value.split_once('/').with_context(|| format!("{value:?} is not RANK/TOTAL"))?;
            let fault = FaultRank {
                rank: r.parse().with_context(|| format!("rank {r:?} is not a number"))?,
                total_lines: total.parse().with_context(|| format!("total {total:?} is not an integer"))?,
            };
            if map.insert(arm.clone(), ArmLocation::Rank(fault)).is_some() {
                bail!("arm {arm} given twice");
            }
        }
        return Ok(RoundReport { module, outcome: RoundOutcome::Locations(map) });
    }
    bail!("give per-arm scores with --exam or --rank")
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn session(args: SessionArgs) -> Result<()> {
    let svc = SessionService::new(SessionStore::open(&args.store)?);
    match args.command {
        SessionCommand::New { arms, epsilon, aggregator, seed } => {
            let policy = PolicyConfig::new(epsilon, aggregator.into(), seed)?;
            print_json(&svc.create_session(arms, policy)?.view())
        }
        SessionCommand::Show { id } => print_json(&svc.get_session(&id)?.view()),
        SessionCommand::List => print_json(&svc.list_sessions()?),
        SessionCommand::Recommend { id } => print_json(&svc.recommend(&id)?),
        SessionCommand::Report { id, module, exam, rank } => {
            let report = round_report(module, &exam, &rank)?;
            print_json(&svc.report_round(&id, &report)?.view())
        }
        SessionCommand::Close { id } => print_json(&svc.close_session(&id)?.view()),
    }
}

fn serve(args: ServeArgs) -> Result<()> {
    let svc = Arc::new(SessionService::new(SessionStore::open(&args.store)?));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("serving sessions from {} on http://{}", args.store.display(), args.addr);
    runtime.block_on(flbandit_session::http::serve(args.addr, svc))?;
    Ok(())
}
