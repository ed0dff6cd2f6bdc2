//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use gamma_noise::chaos::MultiIndex;
use gamma_noise::model::{Partition, StepSpec};
use serde::{Deserialize, Serialize};

pub const OUT_ENV: &str = "GAMMA_NOISE_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: u64,
    /// Monte Carlo size of the selected command; overrides the per-command value.
    pub samples: Option<usize>,
    /// Number of partition cells for commands with a truncated chaos space.
    pub cells: Option<usize>,
    /// Chaos truncation degree for the same commands.
    pub degree: Option<usize>,
    pub out: PathBuf,
    pub cf_check: CfCheck,
    pub levy_check: LevyCheck,
    pub paths: Paths,
    pub lln: Lln,
    pub ortho: Ortho,
    pub wick: WickSelftest,
    pub verhulst: Verhulst,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 20_240_917,
            samples: None,
            cells: None,
            degree: None,
            out: PathBuf::from("out"),
            cf_check: CfCheck::default(),
            levy_check: LevyCheck::default(),
            paths: Paths::default(),
            lln: Lln::default(),
            ortho: Ortho::default(),
            wick: WickSelftest::default(),
            verhulst: Verhulst::default(),
        }
    }
}

fn step_spec(edges: &[f64], values: &[f64]) -> StepSpec {
    StepSpec { edges: edges.to_vec(), values: Some(values.to_vec()) }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfCheck {
    pub thetas: Vec<StepSpec>,
    pub samples: usize,
    pub sigmas: f64,
}

impl Default for CfCheck {
    fn default() -> Self {
        CfCheck {
            thetas: vec![
                step_spec(&[0.0, 2.0], &[0.5]),
                step_spec(&[0.0, 1.0, 3.0], &[1.0, 2.0]),
                step_spec(&[0.0, 0.5], &[-0.3]),
            ],
            samples: 1_000_000,
            sigmas: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevyCheck {
    pub horizon: f64,
    pub delta: f64,
    pub samples: usize,
    pub ks_min_p: f64,
    pub count_sigmas: f64,
    /// Test function for the two-sampler CF comparison; must fit the horizon.
    pub theta: StepSpec,
    pub cf_sigmas: f64,
}

impl Default for LevyCheck {
    fn default() -> Self {
        LevyCheck {
            horizon: 1.0,
            delta: 1e-6,
            samples: 100_000,
            ks_min_p: 0.01,
            count_sigmas: 3.0,
            theta: step_spec(&[0.0, 0.4, 1.0], &[1.5, -0.7]),
            cf_sigmas: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub partition: Partition,
    pub count: usize,
    pub delta: f64,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            partition: Partition::uniform(20, 1.0).expect("valid default"),
            count: 4,
            delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lln {
    pub tau: f64,
    pub band: f64,
    pub paths: usize,
    pub min_fraction: f64,
    /// Short horizon where the band should mostly fail.
    pub tau_short: f64,
    pub max_fraction_short: f64,
    /// Horizons reported in `lln.csv`.
    pub report_taus: Vec<f64>,
    pub probe_paths: usize,
    pub probe_points_per_decade: usize,
    pub probe_low: f64,
    pub probe_high: f64,
    pub probe_level: f64,
    pub probe_min_fraction: f64,
}

impl Default for Lln {
    fn default() -> Self {
        Lln {
            tau: 1e6,
            band: 0.01,
            paths: 1000,
            min_fraction: 0.98,
            tau_short: 1e2,
            max_fraction_short: 0.5,
            report_taus: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            probe_paths: 500,
            probe_points_per_decade: 10,
            probe_low: 1e2,
            probe_high: 1e4,
            probe_level: 10.0,
            probe_min_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ortho {
    pub shapes: Vec<f64>,
    pub max_degree: usize,
    pub nodes: usize,
    pub quadrature_tol: f64,
    pub alpha_degree: usize,
    pub alpha_tol: f64,
    /// Partition of the Monte Carlo cross-moment check.
    pub partition: Partition,
    pub mc_degree: usize,
    pub samples: usize,
    pub sigmas: f64,
}

impl Default for Ortho {
    fn default() -> Self {
        Ortho {
            shapes: vec![0.5, 1.0, 2.7],
            max_degree: 12,
            nodes: 32,
            quadrature_tol: 1e-9,
            alpha_degree: 8,
            alpha_tol: 1e-12,
            partition: Partition::new(vec![0.0, 0.7, 2.0]).expect("valid default"),
            mc_degree: 3,
            samples: 1_000_000,
            sigmas: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WickSelftest {
    pub cells: usize,
    pub degree: usize,
    pub horizon: f64,
    /// Random triples for the ring laws and random elements for the inverse.
    pub samples: usize,
    pub min_constant: f64,
    pub multiplicative_tol: f64,
}

impl Default for WickSelftest {
    fn default() -> Self {
        WickSelftest {
            cells: 4,
            degree: 8,
            horizon: 2.0,
            samples: 100,
            min_constant: 0.1,
            multiplicative_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Verhulst {
    pub cells: usize,
    pub degree: usize,
    pub horizon: f64,
    pub r: f64,
    pub a: f64,
    /// `Y_0` as `[multi-index, J-coefficient]` pairs; absent means
    /// `0.5 + 0.1·J_{e_1}`.
    pub y0: Option<Vec<(MultiIndex, f64)>>,
    pub t_step: f64,
    pub dt: f64,
    pub loss_bound: f64,
    /// Also write every coefficient at every output time.
    pub coefficients: bool,
    pub sup_tol: f64,
    pub mean_tol: f64,
    pub residual_tol: f64,
    pub residual_nodes: usize,
}

impl Default for Verhulst {
    fn default() -> Self {
        Verhulst {
            cells: 4,
            degree: 6,
            horizon: 2.0,
            r: 1.0,
            a: 0.5,
            y0: None,
            t_step: 0.1,
            dt: gamma_noise::verhulst::DEFAULT_DT,
            loss_bound: gamma_noise::verhulst::DEFAULT_LOSS_BOUND,
            coefficients: false,
            sup_tol: 1e-6,
            mean_tol: 1e-8,
            residual_tol: 1e-6,
            residual_nodes: 16,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    /// Output directory: `--out`, then the environment, then the config.
    pub fn resolve_out(&mut self, flag: Option<PathBuf>) {
        if let Some(out) = flag {
            self.out = out;
        } else if let Some(env) = std::env::var_os(OUT_ENV) {
            self.out = PathBuf::from(env);
        }
    }
}
