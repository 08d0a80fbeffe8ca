//! Command-line front end: one subcommand per experiment, plus `list` and
//! `check`.
//!
//! Exit codes: 0 success, 1 config error, 2 a numerical +-inf sentinel
//! escalated by --strict (or a failed check).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vexp::error::Error;
use vexp::harness::{self, checks, ExperimentConfig};

#[derive(Parser)]
#[command(name = "vexp", version, about = "Variable-exponent Lebesgue space experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Exit with code 2 when the table contains a +-inf sentinel.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate experiments with a description of what each measures.
    List,
    /// Run the verification battery, one pass/fail line per criterion.
    Check,
    /// Partition-sum vs sequence-norm ratio brackets.
    PartitionRatio(RunArgs),
    /// Full-domain norm vs per-cube aggregate.
    LocalGlobal(RunArgs),
    /// Averaging-operator trend on the lacunary exponent.
    LernerScan(RunArgs),
    /// Square-function norm equivalence bracket.
    SfEquiv(RunArgs),
    /// Vector-valued local maximal bound.
    FsVector(RunArgs),
    /// Indicator-norm product constant probe.
    ApxReport(RunArgs),
    /// Shift-averaged dyadic maximal domination constant.
    ShiftDyadic(RunArgs),
    /// N-function inequality and alpha bracket checks.
    NfunChecks(RunArgs),
    /// Domination probe with optional level-integrated sums.
    Domination(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (id, desc) in harness::experiments() {
                println!("{id:<14} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Check => {
            let outcomes = checks::run_all();
            let mut failed = 0;
            for o in &outcomes {
                println!("{}", o.line());
                if !o.passed {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("all {} checks passed", outcomes.len());
                ExitCode::SUCCESS
            } else {
                println!("{failed} of {} checks failed", outcomes.len());
                ExitCode::from(2)
            }
        }
        Command::PartitionRatio(a) => run("partition-ratio", a),
        Command::LocalGlobal(a) => run("local-global", a),
        Command::LernerScan(a) => run("lerner-scan", a),
        Command::SfEquiv(a) => run("sf-equiv", a),
        Command::FsVector(a) => run("fs-vector", a),
        Command::ApxReport(a) => run("apx-report", a),
        Command::ShiftDyadic(a) => run("shift-dyadic", a),
        Command::NfunChecks(a) => run("nfun-checks", a),
        Command::Domination(a) => run("domination", a),
    }
}

fn run(id: &str, args: RunArgs) -> ExitCode {
    match try_run(id, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Io(_) | Error::Json(_) => ExitCode::from(1),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn try_run(id: &str, args: &RunArgs) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if cfg.experiment != id {
        return Err(Error::Config {
            fields: vec![format!(
                "experiment: config says {:?} but the subcommand is {id:?}",
                cfg.experiment
            )],
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let table = harness::run_experiment(&cfg)?;
    let rendered = match args.format.as_str() {
        "json" => table.to_json(),
        _ => table.to_csv(),
    };
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            file.write_all(rendered.as_bytes())?;
        }
        None => print!("{rendered}"),
    }
    if args.strict && table.has_sentinel() {
        eprintln!("strict mode: table contains a non-finite sentinel");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
