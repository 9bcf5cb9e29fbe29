use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qprob::checks::{self, Suite};
use qprob::scenario::{self, Scenario, ScenarioError, Z_LIMIT};

#[derive(Parser)]
#[command(name = "qprob", version, about = "Consecutive-event quantum probabilities from JSON scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every query of a scenario.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Override the scenario's reduced Planck constant.
        #[arg(long)]
        hbar: Option<f64>,
    },
    /// Monte Carlo sample one query of a scenario.
    Sample {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in self-checks.
    Check {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Invariants,
    #[value(alias = "paper")]
    Tables,
    All,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load(file: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    scenario::parse_scenario(&text).map_err(|e| format!("{}: {e}", file.display()))
}

fn document_error(e: ScenarioError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(EXIT_USAGE)
}

fn run(file: PathBuf, format: Format, hbar: Option<f64>) -> ExitCode {
    let mut s = match load(&file) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(h) = hbar {
        if !(h > 0.0) || !h.is_finite() {
            eprintln!("--hbar must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        s.hbar = h;
    }
    let report = match scenario::run_queries(&s) {
        Ok(r) => r,
        Err(e) => return document_error(e),
    };
    match format {
        Format::Json => print!("{}", report.to_json_lines()),
        Format::Table => print!("{}", report.to_table()),
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn sample(file: PathBuf, query: String, trials: Option<u64>, seed: Option<u64>) -> ExitCode {
    let s = match load(&file) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if trials == Some(0) {
        eprintln!("--trials must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let report = match scenario::sample_query(&s, &query, trials, seed) {
        Ok(r) => r,
        Err(e) => return document_error(e),
    };
    println!("{}", serde_json::to_string(&report).expect("serialisable"));
    let pass = report.exact_match.unwrap_or(true) && report.z_score.is_none_or(|z| z.abs() <= Z_LIMIT);
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn check(suite: SuiteArg, seed: u64, instances: usize) -> ExitCode {
    let suite = match suite {
        SuiteArg::Invariants => Suite::Invariants,
        SuiteArg::Tables => Suite::Tables,
        SuiteArg::All => Suite::All,
    };
    let outcomes = checks::run(suite, seed, instances);
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        if let Some(t) = &o.table {
            for line in t.lines() {
                println!("    {line}");
            }
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} checks, {failed} failed", outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { file, format, hbar } => run(file, format, hbar),
        Command::Sample { file, query, trials, seed } => sample(file, query, trials, seed),
        Command::Check { suite, seed, instances } => check(suite, seed, instances),
    }
}
