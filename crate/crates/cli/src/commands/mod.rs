//! One module per subcommand. Every command records its checks in a
//! [`Report`] and writes its artifacts through it.

use clap::Subcommand;

use crate::config::RunConfig;
use crate::report::Report;

mod cf;
mod levy;
mod lln;
mod ortho;
mod paths;
mod verhulst;
mod wick;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Monte Carlo characteristic functional against the closed form.
    CfCheck,
    /// Jump-truncation sampler against exact gamma increments.
    LevyCheck,
    /// Export sampled paths in increment and jump form.
    Paths,
    /// Law of large numbers and growth of path fluctuations.
    Lln,
    /// Laguerre orthogonality, α-composition and chaos cross moments.
    Ortho,
    /// Ring laws, inverse and S-transform factorization of the Wick product.
    WickSelftest,
    /// Wick-Verhulst closed form against the coefficient ODE.
    Verhulst,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::CfCheck,
        Command::LevyCheck,
        Command::Paths,
        Command::Lln,
        Command::Ortho,
        Command::WickSelftest,
        Command::Verhulst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CfCheck => "cf-check",
            Command::LevyCheck => "levy-check",
            Command::Paths => "paths",
            Command::Lln => "lln",
            Command::Ortho => "ortho",
            Command::WickSelftest => "wick-selftest",
            Command::Verhulst => "verhulst",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn run(self, cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
        match self {
            Command::CfCheck => cf::run(cfg, report),
            Command::LevyCheck => levy::run(cfg, report),
            Command::Paths => paths::run(cfg, report),
            Command::Lln => lln::run(cfg, report),
            Command::Ortho => ortho::run(cfg, report),
            Command::WickSelftest => wick::run(cfg, report),
            Command::Verhulst => verhulst::run(cfg, report),
        }
    }
}

/// Sample count after the `--samples` override, at least `min`.
fn samples(cfg: &RunConfig, default: usize, min: usize) -> anyhow::Result<usize> {
    let n = cfg.samples.unwrap_or(default);
    if n < min {
        return Err(crate::invalid(format!("need at least {min} samples, got {n}")));
    }
    Ok(n)
}
