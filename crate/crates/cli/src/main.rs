use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fejer_core::moduli::Budget;
use fejer_core::scenario::{self, Format, Scenario};
use fejer_core::Error;

/// Certificates and simulations for continuous-time Fejer monotone flows.
#[derive(Parser)]
#[command(name = "fejer", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or `builtin:NAME` (`builtin:suite`, `builtin:all`).
    Run {
        config: String,
        /// Artifact directory.
        #[arg(long, default_value = "fejer-out")]
        out: PathBuf,
        /// Worker threads; overrides FEJER_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List builtin scenarios whose name contains FILTER, then the theorem registry.
    List { filter: Option<String> },
    /// Compute one certificate: `fejer certify ball_total_boundedness d=1 b=1 eps=1`.
    Certify {
        theorem: String,
        /// key=value pairs.
        params: Vec<String>,
        /// key=value, same as a positional pair.
        #[arg(long = "param")]
        extra: Vec<String>,
    },
    /// Summarize a run directory.
    Report {
        dir: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Exit 2: the input could not be used.
struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Usage {
        Usage(e.to_string())
    }
}

fn load(config: &str) -> Result<Vec<Scenario>, Usage> {
    if let Some(name) = config.strip_prefix("builtin:") {
        return Ok(scenario::resolve_builtin(name)?);
    }
    let text = std::fs::read_to_string(config).map_err(|e| Usage(format!("{config}: {e}")))?;
    Ok(scenario::parse_config(&text)?)
}

fn threads(flag: Option<usize>) -> Result<usize, Usage> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("FEJER_THREADS") {
        Ok(s) => s.trim().parse().map_err(|_| Usage(format!("FEJER_THREADS must be a nonnegative integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn run(config: &str, out: &Path, threads_flag: Option<usize>) -> Result<bool, Usage> {
    let list = load(config)?;
    let outcomes = scenario::run_all(&list, &Budget::from_env(), threads(threads_flag)?)?;
    scenario::write_outcomes(out, &outcomes)?;
    let reports: Vec<_> = outcomes.iter().map(scenario::ScenarioReports::from_outcome).collect();
    emit(&scenario::render(&reports, Format::Text)?);
    emit(&format!("artifacts written to {}\n", out.display()));
    Ok(outcomes.iter().any(|o| o.violated()))
}

fn list(filter: Option<&str>) -> Result<(), Usage> {
    let f = filter.unwrap_or("");
    for (name, text, negative) in scenario::BUILTINS {
        if !name.contains(f) {
            continue;
        }
        let sc = Scenario::from_json(text)?;
        let tag = if *negative { " [negative]" } else { "" };
        emit(&format!("{name:<30} {}{tag}\n", sc.description));
    }
    if filter.is_none() {
        let mut text = format!("\ntheorems (second-order keys: {}):\n", scenario::SECOND_ORDER_PARAMS);
        for t in scenario::THEOREMS {
            text += &format!("  {:<26} {}\n  {:<26} params: {}\n", t.id, t.summary, "", t.params);
        }
        let cov = scenario::coverage()?;
        text += &if cov.missing.is_empty() {
            "\ncoverage: every theorem is exercised by a builtin scenario\n".to_string()
        } else {
            format!("\ncoverage: no builtin scenario for {}\n", cov.missing.join(", "))
        };
        emit(&text);
    }
    Ok(())
}

fn certify(theorem: &str, pairs: &[String]) -> Result<(), Usage> {
    let c = scenario::certify_pairs(theorem, pairs, &Budget::from_env())?;
    emit(&(serde_json::to_string_pretty(&c).map_err(|e| Usage(e.to_string()))? + "\n"));
    Ok(())
}

fn report(dir: &Path, format: &str) -> Result<(), Usage> {
    let fmt: Format = format.parse()?;
    let list = scenario::load_reports(dir)?;
    emit(&scenario::render(&list, fmt)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Command::Run { config, out, threads } => run(config, out, *threads).map(|violated| if violated { 1 } else { 0 }),
        Command::List { filter } => list(filter.as_deref()).map(|_| 0),
        Command::Certify { theorem, params, extra } => {
            let all: Vec<String> = params.iter().chain(extra).cloned().collect();
            certify(theorem, &all).map(|_| 0)
        }
        Command::Report { dir, format } => report(dir, format).map(|_| 0),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
