//! The Wick-Verhulst equation driven by gamma noise,
//!
//! `Y_t = Y_0 + r ∫_0^t Y_s ◇ (1 - Y_s) ds + a ∫_0^t Y_s ◇ (1 - Y_s) ◇ ξ'_s ds`,
//!
//! solved in the S-domain. With `S(ξ'_s)(θ) = 1 - θ(s)` the S-transform
//! `y = S Y(θ)` obeys the logistic equation `y' = (r + a - a θ(t)) y (1 - y)`,
//! whose solution gives the closed form
//!
//! `Y_t = [1 + (Y_0^{◇(-1)} - 1) ◇ E_t]^{◇(-1)}`,
//! `S E_t(θ) = exp{-(r + a) t + a Σ_k λ_k |Δ_k ∩ [0, t]|}`.
//!
//! [`ode_solve`] integrates the S-coefficient system directly with classical
//! RK4 as an independent check of the closed form.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::chaos::MultiIndex;
use crate::wick::{ChaosElement, ChaosSpace};

/// Parameters of one Wick-Verhulst problem.
#[derive(Debug, Clone)]
pub struct VerhulstConfig {
    /// Growth rate `r`.
    pub r: f64,
    /// Noise intensity `a ≥ 0`.
    pub a: f64,
    pub y0: ChaosElement,
    /// Output times, increasing, inside `[0, T]`.
    pub t_grid: Vec<f64>,
    /// RK4 step.
    pub dt: f64,
    /// Largest instantaneous truncation loss the integrator accepts.
    pub loss_bound: f64,
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_LOSS_BOUND: f64 = 5e-2;

impl VerhulstConfig {
    /// `Y_0 = y0_mean + y0_slope·J_{e_1}` on `d` equal cells over `[0, 2]`,
    /// truncated at degree `n`; output every 0.1.
    pub fn reference(d: usize, n: usize, r: f64, a: f64, y0_mean: f64, y0_slope: f64) -> Result<Self> {
        let partition = crate::model::Partition::uniform(d, 2.0)?;
        let space = ChaosSpace::new(partition, n);
        let mut terms = vec![(MultiIndex::zero(d), y0_mean)];
        if y0_slope != 0.0 {
            terms.push((MultiIndex::unit(d, 0), y0_slope));
        }
        let y0 = ChaosElement::from_terms(&space, &terms)?;
        Ok(VerhulstConfig {
            r,
            a,
            y0,
            t_grid: (0..=20).map(|i| i as f64 / 10.0).collect(),
            dt: DEFAULT_DT,
            loss_bound: DEFAULT_LOSS_BOUND,
        })
    }

    pub fn space(&self) -> &Arc<ChaosSpace> {
        self.y0.space()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("noise intensity must be nonnegative, got {}", self.a)));
        }
        if !self.r.is_finite() {
            return Err(Error::Domain(format!("growth rate must be finite, got {}", self.r)));
        }
        if self.y0.expectation() == 0.0 {
            return Err(Error::Singular("the initial value needs ⟨⟨Y_0, 1⟩⟩ ≠ 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Domain(format!("step must be positive, got {}", self.dt)));
        }
        let horizon = self.y0.partition().horizon();
        if self.t_grid.is_empty() {
            return Err(Error::Domain("empty time grid".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
        if self.t_grid[0] < 0.0 || self.t_grid[self.t_grid.len() - 1] > horizon {
            return Err(Error::Domain(format!("time grid must lie in [0, {horizon}]")));
        }
        Ok(())
    }
}

/// The element `E_t` with `S E_t(θ) = exp{-(r+a)t + a Σ_k λ_k w_k(t)}`,
/// `w_k(t) = |Δ_k ∩ [0, t]|`:  `ŝ_n = e^{-(r+a)t} Π_k (a w_k)^{n_k} / n_k!`.
pub fn exponential_element(r: f64, a: f64, t: f64, space: &Arc<ChaosSpace>) -> Result<ChaosElement> {
    let horizon = space.partition().horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside the horizon [0, {horizon}]")));
    }
    let weights: Vec<f64> = space.partition().overlaps(t).iter().map(|w| a * w).collect();
    let scale = (-(r + a) * t).exp();
    let s = space
        .indices()
        .iter()
        .map(|n| {
            (0..n.dim())
                .map(|k| {
                    let m = n.get(k);
                    let fact: f64 = (1..=m).map(|i| i as f64).product();
                    weights[k].powi(m as i32) / fact
                })
                .product::<f64>()
                * scale
        })
        .collect();
    ChaosElement::from_s_coeffs(space, s)
}

/// Closed-form solution at one time, reusing `Y_0^{◇(-1)} - 1`.
fn closed_form_with(cfg: &VerhulstConfig, shifted_inverse: &ChaosElement, t: f64) -> Result<ChaosElement> {
    let e = exponential_element(cfg.r, cfg.a, t, cfg.space())?;
    let inner = shifted_inverse.wick_mul(&e)?.add_constant(1.0);
    if inner.expectation() == 0.0 {
        return Err(Error::Singular(format!("1 + (Y_0^(-1) - 1)◇E_t has zero mean at t = {t}")));
    }
    inner.wick_inv()
}

fn shifted_inverse(cfg: &VerhulstConfig) -> Result<ChaosElement> {
    let inv = cfg.y0.wick_inv().map_err(|_| {
        Error::Singular("the initial value needs ⟨⟨Y_0, 1⟩⟩ ≠ 0".into())
    })?;
    Ok(inv.add_constant(-1.0))
}

/// `Y_t = [1 + (Y_0^{◇(-1)} - 1) ◇ E_t]^{◇(-1)}`.
pub fn closed_form_solution(cfg: &VerhulstConfig, t: f64) -> Result<ChaosElement> {
    cfg.validate()?;
    closed_form_with(cfg, &shifted_inverse(cfg)?, t)
}

/// Solution values on `cfg.t_grid`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ChaosElement>,
    /// Truncation loss attached to each state.
    pub losses: Vec<f64>,
}

impl Trajectory {
    /// `sup_{t, n} |ŝ_n(t) - ŝ'_n(t)|`.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.s_coeffs().iter().zip(b.s_coeffs()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn closed_form_trajectory(cfg: &VerhulstConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let base = shifted_inverse(cfg)?;
    let states = cfg
        .t_grid
        .iter()
        .map(|&t| closed_form_with(cfg, &base, t))
        .collect::<Result<Vec<_>>>()?;
    let losses = states.iter().map(ChaosElement::truncation_loss).collect();
    Ok(Trajectory { times: cfg.t_grid.clone(), states, losses })
}

/// Right-hand side `(r+a) q - a λ_k q`, `q = ŝ - ŝ⋆ŝ`, for time in cell `k`,
/// together with the truncation loss of its evaluation.
fn rhs(space: &ChaosSpace, r: f64, a: f64, cell: usize, s: &[f64]) -> (Vec<f64>, f64) {
    let (sq, lost_product) = space.product(s, s);
    let q: Vec<f64> = s.iter().zip(&sq).map(|(x, y)| x - y).collect();
    let (shifted, lost_shift) = space.shift(&q, cell);
    let out = q.iter().zip(&shifted).map(|(q, sh)| (r + a) * q - a * sh).collect();
    (out, lost_product + a * lost_shift)
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Integrates the S-coefficient system with fixed-step RK4. Steps never
/// straddle a cell edge, where the coefficient of the noise term jumps.
pub fn ode_solve(cfg: &VerhulstConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let space = Arc::clone(cfg.space());
    let partition = space.partition().clone();
    let t_end = cfg.t_grid[cfg.t_grid.len() - 1];

    let mut stops: Vec<f64> = cfg.t_grid.clone();
    stops.extend(partition.edges().iter().copied().filter(|&e| e > 0.0 && e < t_end));
    stops.push(0.0);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut state = cfg.y0.s_coeffs().to_vec();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(cfg.t_grid.len());
    let mut losses = Vec::with_capacity(cfg.t_grid.len());
    let mut next_out = 0;

    let record = |t: f64, state: &[f64], states: &mut Vec<ChaosElement>, losses: &mut Vec<f64>| -> Result<()> {
        let cell = partition.cell_of(t).unwrap_or(partition.cells() - 1);
        let (_, loss) = rhs(&space, cfg.r, cfg.a, cell, state);
        states.push(ChaosElement::from_s_coeffs(&space, state.to_vec())?);
        losses.push(loss);
        Ok(())
    };

    for &stop in &stops {
        if stop > t {
            let cell = partition
                .cell_of(0.5 * (t + stop))
                .expect("segment inside the horizon");
            let steps = ((stop - t) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
            let h = (stop - t) / steps as f64;
            for i in 0..steps {
                let now = t + i as f64 * h;
                let (k1, loss) = rhs(&space, cfg.r, cfg.a, cell, &state);
                if loss > cfg.loss_bound {
                    return Err(Error::TruncationLoss { t: now, loss, bound: cfg.loss_bound });
                }
                let (k2, _) = rhs(&space, cfg.r, cfg.a, cell, &axpy(&state, 0.5 * h, &k1));
                let (k3, _) = rhs(&space, cfg.r, cfg.a, cell, &axpy(&state, 0.5 * h, &k2));
                let (k4, _) = rhs(&space, cfg.r, cfg.a, cell, &axpy(&state, h, &k3));
                for (j, s) in state.iter_mut().enumerate() {
                    *s += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            t = stop;
        }
        while next_out < cfg.t_grid.len() && cfg.t_grid[next_out] <= t {
            record(t, &state, &mut states, &mut losses)?;
            next_out += 1;
        }
    }
    Ok(Trajectory { times: cfg.t_grid.clone(), states, losses })
}

/// Step-halving estimate of the RK4 error: `sup |Y_dt - Y_{dt/2}| · 16/15`.
pub fn richardson_error(cfg: &VerhulstConfig) -> Result<f64> {
    let coarse = ode_solve(cfg)?;
    let mut half = cfg.clone();
    half.dt = cfg.dt / 2.0;
    let fine = ode_solve(&half)?;
    Ok(coarse.sup_distance(&fine) * 16.0 / 15.0)
}

/// Largest coefficient residual of the closed form in the integral form of
/// the S-transformed equation over `cfg.t_grid`, with Gauss-Legendre
/// quadrature on every piece between grid times and cell edges.
pub fn integral_residual(cfg: &VerhulstConfig, nodes: usize) -> Result<f64> {
    cfg.validate()?;
    let space = Arc::clone(cfg.space());
    let partition = space.partition().clone();
    let base = shifted_inverse(cfg)?;
    let rule = gauss_legendre(nodes);
    let y_start = closed_form_with(cfg, &base, 0.0)?;
    let mut integral = vec![0.0; space.len()];
    let mut t = 0.0;
    let mut worst: f64 = 0.0;
    for &target in &cfg.t_grid {
        let mut cuts: Vec<f64> = partition
            .edges()
            .iter()
            .copied()
            .filter(|&e| e > t && e < target)
            .collect();
        cuts.push(target);
        for stop in cuts {
            if stop <= t {
                continue;
            }
            let cell = partition.cell_of(0.5 * (t + stop)).expect("inside horizon");
            let (c, hw) = (0.5 * (t + stop), 0.5 * (stop - t));
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let y = closed_form_with(cfg, &base, c + hw * x)?;
                let (f, _) = rhs(&space, cfg.r, cfg.a, cell, y.s_coeffs());
                for (acc, v) in integral.iter_mut().zip(&f) {
                    *acc += hw * w * v;
                }
            }
            t = stop;
        }
        let y = closed_form_with(cfg, &base, target)?;
        for ((yt, y0), int) in y.s_coeffs().iter().zip(y_start.s_coeffs()).zip(&integral) {
            worst = worst.max((yt - y0 - int).abs());
        }
    }
    Ok(worst)
}

/// Scalar logistic solution `y0 / (y0 + (1 - y0) e^{-rate t})`.
pub fn logistic(y0: f64, rate: f64, t: f64) -> f64 {
    y0 / (y0 + (1.0 - y0) * (-rate * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub truncation_loss: f64,
}

pub fn moment_report(traj: &Trajectory) -> Vec<MomentRow> {
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(&traj.losses)
        .map(|((&t, y), &loss)| MomentRow {
            t,
            mean: y.expectation(),
            variance: y.variance(),
            truncation_loss: loss,
        })
        .collect()
}

/// `t,mean,variance,truncation_loss`.
pub fn write_moments_csv<W: Write>(rows: &[MomentRow], mut w: W) -> Result<()> {
    writeln!(w, "t,mean,variance,truncation_loss")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.t, r.mean, r.variance, r.truncation_loss)?;
    }
    Ok(())
}

/// `t,multiindex,c,nu,s_coeff` for every state, graded order within each time.
pub fn write_coefficients_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "t,multiindex,c,nu,s_coeff")?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let space = y.space();
        for ((n, &s), &nu) in space.indices().iter().zip(y.s_coeffs()).zip(space.norms()) {
            writeln!(w, "{t},{n},{},{nu},{s}", s / nu)?;
        }
    }
    Ok(())
}
