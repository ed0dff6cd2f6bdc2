//! `gamma-noise`: batch front end for the gamma white-noise toolkit.
//!
//! Every run writes `summary.json` with one record per tolerance check and
//! exits with status 0 only if all of them pass. Invalid input or a failed
//! computation exits with status 2 and an `error` record.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod commands;
mod config;
mod report;

use commands::Command;
use config::RunConfig;
use report::{write_summary, ErrorRecord, Report, Summary};

#[derive(Debug, Parser)]
#[command(name = "gamma-noise", version, about = "Gamma white-noise samplers, Laguerre chaos, Wick algebra and the Wick-Verhulst equation")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo size of the selected command.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Partition cells for commands with a chaos space.
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Chaos truncation degree.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Output directory (default `out`, or $GAMMA_NOISE_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

/// Marks errors caused by the input rather than the computation.
#[derive(Debug)]
struct InvalidConfig(String);

impl fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidConfig {}

pub(crate) fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidConfig(msg.into()).into()
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use gamma_noise::Error as E;
    if err.downcast_ref::<InvalidConfig>().is_some() {
        return "invalid_config";
    }
    match err.downcast_ref::<E>() {
        Some(E::TruncationLoss { .. }) => "truncation_loss",
        Some(E::Singular(_)) => "singular",
        Some(E::Io(_)) => "io",
        Some(_) => "computation",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "runtime",
    }
}

fn failure(dir: &Path, command: &str, seed: u64, kind: &str, message: String) -> ExitCode {
    let summary = Summary {
        command: command.to_string(),
        seed,
        passed: false,
        checks: Vec::new(),
        values: Default::default(),
        artifacts: Vec::new(),
        error: Some(ErrorRecord { kind: kind.to_string(), message }),
    };
    eprintln!("{}", serde_json::to_string(&summary).expect("serializable summary"));
    // best effort: the output directory itself may be the problem
    let _ = write_summary(dir, &summary);
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = serde_json::json!({
                "passed": false,
                "error": { "kind": "usage", "message": e.to_string() },
            });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };

    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                let mut fallback = RunConfig::default();
                fallback.resolve_out(cli.out.clone());
                return failure(&fallback.out, "", fallback.seed, "invalid_config", e.to_string());
            }
        },
        None => RunConfig::default(),
    };
    cfg.resolve_out(cli.out.clone());
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.samples = cli.samples.or(cfg.samples);
    cfg.cells = cli.cells.or(cfg.cells);
    cfg.degree = cli.degree.or(cfg.degree);

    let command = match (cli.command, cfg.command.as_deref()) {
        (Some(c), _) => c,
        (None, Some(name)) => match Command::from_name(name) {
            Some(c) => c,
            None => return failure(&cfg.out, name, cfg.seed, "unknown_command", format!("unknown command `{name}`")),
        },
        (None, None) => {
            return failure(&cfg.out, "", cfg.seed, "usage", "no command given (flag or config `command`)".into())
        }
    };
    cfg.command = Some(command.name().to_string());

    let mut report = match Report::new(&cfg.out, command.name(), cfg.seed) {
        Ok(r) => r,
        Err(e) => return failure(&cfg.out, command.name(), cfg.seed, "io", format!("{e:#}")),
    };
    if let Err(e) = command.run(&cfg, &mut report) {
        return failure(&cfg.out, command.name(), cfg.seed, error_kind(&e), format!("{e:#}"));
    }
    let passed = report.passed();
    let summary = match report.finish() {
        Ok(s) => s,
        Err(e) => return failure(&cfg.out, command.name(), cfg.seed, "io", format!("{e:#}")),
    };
    for c in &summary.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {} = {:e} ({:?} {:e})", c.name, c.value, c.relation, c.tolerance);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
