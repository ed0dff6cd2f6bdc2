//! Gamma-process simulation two independent ways and the Monte Carlo
//! estimators built on it.
//!
//! * Exact increments: independent `Gamma(t_k, 1)` draws, one per cell.
//! * Truncated compound Poisson: `Poisson(T β((δ, ∞)))` jumps with uniform
//!   times and sizes drawn from the normalized Lévy density on `(δ, ∞)`.
//!
//! Each path draws from its own `(seed, path index)` stream, so batches are
//! generated in parallel without changing the result.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{levy_small_jump_mean, levy_tail_mass, Partition, StepFunction};
use crate::quadrature::gauss_legendre;
use crate::rng::{stream, StreamRng};
use crate::stats::{mean_stderr, pairwise_sum};

/// Number of log-spaced knots of the jump-size inverse-CDF table.
pub const JUMP_TABLE_KNOTS: usize = 4096;
/// Upper end of the tabulated range; sizes beyond it come from the tail sampler.
pub const JUMP_TABLE_UPPER: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// A sampled gamma-process trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaPath {
    /// Increments `G_k = ξ(u_{k+1}) - ξ(u_k)` over the cells of a partition.
    Increments { partition: Arc<Partition>, increments: Vec<f64> },
    /// Jumps above `delta` on `[0, horizon]`, sorted by time.
    Jumps { horizon: f64, delta: f64, jumps: Vec<Jump> },
}

impl GammaPath {
    /// `⟨x, θ⟩` for the sampled path `x`.
    pub fn pairing(&self, theta: &StepFunction) -> Result<f64> {
        match self {
            GammaPath::Increments { partition, increments } => {
                if partition.as_ref() != theta.partition() {
                    return Err(Error::PartitionMismatch(
                        "increment path and test function live on different partitions".into(),
                    ));
                }
                Ok(increments.iter().zip(theta.values()).map(|(g, l)| g * l).sum())
            }
            GammaPath::Jumps { horizon, jumps, .. } => {
                if theta.partition().horizon() > *horizon {
                    return Err(Error::PartitionMismatch(format!(
                        "jump path horizon {horizon} does not cover test function horizon {}",
                        theta.partition().horizon()
                    )));
                }
                let mut acc = 0.0;
                for j in jumps {
                    if let Some(k) = theta.partition().cell_of(j.time) {
                        acc += theta.values()[k] * j.size;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Total increase `ξ(T)` of the path.
    pub fn total(&self) -> f64 {
        match self {
            GammaPath::Increments { increments, .. } => increments.iter().sum(),
            GammaPath::Jumps { jumps, .. } => jumps.iter().map(|j| j.size).sum(),
        }
    }

    /// `cell_index,length,increment` or `time,size`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match self {
            GammaPath::Increments { partition, increments } => {
                writeln!(w, "cell_index,length,increment")?;
                for (k, g) in increments.iter().enumerate() {
                    writeln!(w, "{},{},{}", k, partition.length(k), g)?;
                }
            }
            GammaPath::Jumps { jumps, .. } => {
                writeln!(w, "time,size")?;
                for j in jumps {
                    writeln!(w, "{},{}", j.time, j.size)?;
                }
            }
        }
        Ok(())
    }
}

/// Exact-increment sampler for a fixed partition.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    partition: Arc<Partition>,
    laws: Vec<Gamma<f64>>,
}

impl IncrementSampler {
    pub fn new(partition: &Partition) -> Self {
        let laws = partition
            .lengths()
            .into_iter()
            .map(|t| Gamma::new(t, 1.0).expect("cell lengths are positive"))
            .collect();
        IncrementSampler { partition: Arc::new(partition.clone()), laws }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    fn fill(&self, rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.laws.iter().map(|law| law.sample(rng)));
    }

    /// Increments of path `index` under `seed`.
    pub fn increments(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.laws.len());
        self.fill(&mut stream(seed, index), &mut out);
        out
    }

    pub fn path(&self, seed: u64, index: u64) -> GammaPath {
        GammaPath::Increments {
            partition: Arc::clone(&self.partition),
            increments: self.increments(seed, index),
        }
    }

    /// `⟨x, θ⟩` of path `index` without materializing the path.
    fn pairing(&self, seed: u64, index: u64, lambda: &[f64]) -> f64 {
        let mut rng = stream(seed, index);
        self.laws.iter().zip(lambda).map(|(law, l)| l * law.sample(&mut rng)).sum()
    }

    pub fn batch(&self, n: usize, seed: u64) -> Vec<GammaPath> {
        (0..n as u64).into_par_iter().map(|i| self.path(seed, i)).collect()
    }
}

/// Independent `Gamma(t_k, 1)` increments over the cells of `partition`.
pub fn sample_increments(partition: &Partition, seed: u64) -> GammaPath {
    IncrementSampler::new(partition).path(seed, 0)
}

/// Inverse-CDF table for jump sizes with density `∝ e^{-u}/u` on `(δ, ∞)`.
///
/// Knots are uniform in `v = ln u` on `[ln δ, ln 40]`; inside a segment the
/// density in `v`, `exp(-e^v)`, is inverted as an exponential whose rate is
/// fitted at the segment end points. Sizes above 40 come from a rejection
/// sampler on the exact tail.
#[derive(Debug, Clone)]
pub struct JumpSizeTable {
    delta: f64,
    log_knots: Vec<f64>,
    cumulative: Vec<f64>,
    tail_start: f64,
    tail_mass: f64,
}

impl JumpSizeTable {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!(
                "jump truncation threshold must be positive and finite, got {delta}"
            )));
        }
        let tail_start = delta.max(JUMP_TABLE_UPPER);
        let mut log_knots = Vec::new();
        let mut cumulative = Vec::new();
        if delta < JUMP_TABLE_UPPER {
            let (lo, hi) = (delta.ln(), JUMP_TABLE_UPPER.ln());
            let last = (JUMP_TABLE_KNOTS - 1) as f64;
            log_knots = (0..JUMP_TABLE_KNOTS)
                .map(|i| lo + (hi - lo) * i as f64 / last)
                .collect();
            log_knots[JUMP_TABLE_KNOTS - 1] = hi;
            let rule = gauss_legendre(8);
            cumulative.reserve(JUMP_TABLE_KNOTS);
            cumulative.push(0.0);
            let mut acc = 0.0;
            for w in log_knots.windows(2) {
                acc += rule.apply_on(w[0], w[1], |v| (-v.exp()).exp());
                cumulative.push(acc);
            }
        }
        let tail_mass = levy_tail_mass(tail_start)?;
        Ok(JumpSizeTable { delta, log_knots, cumulative, tail_start, tail_mass })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total tabulated plus tail mass; equals `β((δ, ∞))`.
    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0) + self.tail_mass
    }

    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // proposal start + Exp(1), accepted with probability start/u
        loop {
            let e: f64 = Exp1.sample(rng);
            let u = self.tail_start + e;
            let accept: f64 = rng.random();
            if accept * u < self.tail_start {
                return u;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let table_mass = self.cumulative.last().copied().unwrap_or(0.0);
        let target = rng.random::<f64>() * (table_mass + self.tail_mass);
        if target >= table_mass {
            return self.sample_tail(rng);
        }
        let segs = self.log_knots.len() - 1;
        let i = self.cumulative.partition_point(|&c| c <= target).saturating_sub(1).min(segs - 1);
        let (v0, v1) = (self.log_knots[i], self.log_knots[i + 1]);
        let h = v1 - v0;
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let frac = ((target - self.cumulative[i]) / seg).clamp(0.0, 1.0);
        let rate = (v1.exp() - v0.exp()) / h;
        let q = -(-rate * h).exp_m1();
        let x = (-(-frac * q).ln_1p() / rate).clamp(0.0, h);
        let u = (v0 + x).exp();
        if u > self.delta {
            u
        } else {
            self.delta.next_up()
        }
    }

    /// Exact CDF of the normalized jump-size law.
    pub fn cdf(&self, u: f64) -> Result<f64> {
        if u <= self.delta {
            return Ok(0.0);
        }
        let total = levy_tail_mass(self.delta)?;
        Ok(((total - levy_tail_mass(u)?) / total).clamp(0.0, 1.0))
    }
}

/// Truncated compound-Poisson sampler on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    horizon: f64,
    rate: f64,
    count: Poisson<f64>,
    sizes: JumpSizeTable,
}

impl JumpSampler {
    pub fn new(horizon: f64, delta: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if !(delta > 0.0) {
            return Err(Error::Domain(format!(
                "jump truncation threshold must be positive (infinite activity at 0), got {delta}"
            )));
        }
        let sizes = JumpSizeTable::new(delta)?;
        let rate = horizon * levy_tail_mass(delta)?;
        let count = Poisson::new(rate)
            .map_err(|e| Error::Domain(format!("Poisson rate {rate}: {e}")))?;
        Ok(JumpSampler { horizon, rate, count, sizes })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delta(&self) -> f64 {
        self.sizes.delta
    }

    /// Expected number of jumps, `T β((δ, ∞))`.
    pub fn expected_jumps(&self) -> f64 {
        self.rate
    }

    /// Bound on the mass lost per path by dropping jumps below `δ`:
    /// `T (1 - e^{-δ})`.
    pub fn truncation_bias(&self) -> f64 {
        self.horizon * levy_small_jump_mean(self.sizes.delta).expect("delta validated")
    }

    pub fn sizes(&self) -> &JumpSizeTable {
        &self.sizes
    }

    pub fn jumps(&self, seed: u64, index: u64) -> Vec<Jump> {
        let mut rng = stream(seed, index);
        let n = self.count.sample(&mut rng) as usize;
        let mut jumps: Vec<Jump> = (0..n)
            .map(|_| {
                let time = rng.random::<f64>() * self.horizon;
                let size = self.sizes.sample(&mut rng);
                Jump { time, size }
            })
            .collect();
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        jumps
    }

    pub fn path(&self, seed: u64, index: u64) -> GammaPath {
        GammaPath::Jumps { horizon: self.horizon, delta: self.sizes.delta, jumps: self.jumps(seed, index) }
    }

    pub fn batch(&self, n: usize, seed: u64) -> Vec<GammaPath> {
        (0..n as u64).into_par_iter().map(|i| self.path(seed, i)).collect()
    }
}

/// Compound-Poisson path with jumps above `delta` on `[0, horizon]`.
pub fn sample_jumps(horizon: f64, delta: f64, seed: u64) -> Result<GammaPath> {
    Ok(JumpSampler::new(horizon, delta)?.path(seed, 0))
}

/// `E|⟨x, θ⟩ - ⟨x_δ, θ⟩| ≤ Σ_k |λ_k| t_k (1 - e^{-δ})`, which also bounds the bias of
/// the jump-based characteristic-function estimate.
pub fn truncation_bias_bound(theta: &StepFunction, delta: f64) -> Result<f64> {
    let per_time = levy_small_jump_mean(delta)?;
    Ok(theta
        .values()
        .iter()
        .enumerate()
        .map(|(k, l)| l.abs() * theta.partition().length(k))
        .sum::<f64>()
        * per_time)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: Complex64,
    /// `sqrt(se_re² + se_im²)`, the standard error of the complex mean.
    pub stderr: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub n_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct McEstimateRepr {
    value_re: f64,
    value_im: f64,
    stderr: f64,
    n: usize,
}

impl Serialize for McEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        McEstimateRepr {
            value_re: self.value.re,
            value_im: self.value.im,
            stderr: self.stderr,
            n: self.n_samples,
        }
        .serialize(s)
    }
}

impl McEstimate {
    pub fn from_real(samples: &[f64]) -> Self {
        let (m, se) = mean_stderr(samples);
        McEstimate {
            value: Complex64::new(m, 0.0),
            stderr: se,
            stderr_re: se,
            stderr_im: 0.0,
            n_samples: samples.len(),
        }
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        let re: Vec<f64> = phases.iter().map(|p| p.cos()).collect();
        let im: Vec<f64> = phases.iter().map(|p| p.sin()).collect();
        let (mr, sr) = mean_stderr(&re);
        let (mi, si) = mean_stderr(&im);
        McEstimate {
            value: Complex64::new(mr, mi),
            stderr: sr.hypot(si),
            stderr_re: sr,
            stderr_im: si,
            n_samples: phases.len(),
        }
    }

    /// `|value - target|` in units of the standard error (∞ if stderr = 0 and
    /// the values differ).
    pub fn z_score(&self, target: Complex64) -> f64 {
        let err = (self.value - target).norm();
        if err == 0.0 {
            0.0
        } else {
            err / self.stderr
        }
    }
}

/// `(1/n) Σ exp{i⟨x_j, θ⟩}` over a batch of paths.
pub fn empirical_cf(paths: &[GammaPath], theta: &StepFunction) -> Result<McEstimate> {
    if paths.is_empty() {
        return Err(Error::Domain("empirical CF needs at least one path".into()));
    }
    let phases: Vec<f64> = paths
        .par_iter()
        .map(|p| p.pairing(theta))
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_phases(&phases))
}

/// Empirical CF from `n` exact-increment paths on θ's partition, without
/// storing the paths.
pub fn increment_cf(theta: &StepFunction, n: usize, seed: u64) -> McEstimate {
    let sampler = IncrementSampler::new(theta.partition());
    let phases: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.pairing(seed, i, theta.values()))
        .collect();
    McEstimate::from_phases(&phases)
}

/// Empirical CF from `n` jump paths with threshold `delta` over θ's horizon.
pub fn jump_cf(theta: &StepFunction, n: usize, delta: f64, seed: u64) -> Result<McEstimate> {
    let sampler = JumpSampler::new(theta.partition().horizon(), delta)?;
    let phases: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.path(seed, i).pairing(theta))
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_phases(&phases))
}

fn gamma_value<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

/// Fraction of `n_paths` paths with `|y(τ)/τ - 1| ≤ band`, `y(τ) ~ Gamma(τ)`.
pub fn lln_statistic(tau: f64, n_paths: usize, band: f64, seed: u64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if n_paths == 0 {
        return Err(Error::Domain("need at least one path".into()));
    }
    let hits: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let y = gamma_value(tau, &mut stream(seed, i));
            if (y / tau - 1.0).abs() <= band {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(pairwise_sum(&hits) / n_paths as f64)
}

/// Per-path running maxima of `|y(τ) - τ|` along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessProbe {
    pub tau_grid: Vec<f64>,
    /// `running_max[path][j] = max_{i ≤ j} |y(τ_i) - τ_i|`.
    pub running_max: Vec<Vec<f64>>,
}

impl BoundednessProbe {
    /// Per-path maximum over grid points `τ ≤ tau_max`.
    pub fn max_up_to(&self, tau_max: f64) -> Vec<f64> {
        let j = self.tau_grid.partition_point(|&t| t <= tau_max);
        self.running_max
            .iter()
            .map(|row| if j == 0 { 0.0 } else { row[j - 1] })
            .collect()
    }

    pub fn final_max(&self) -> Vec<f64> {
        self.running_max.iter().map(|row| row.last().copied().unwrap_or(0.0)).collect()
    }
}

/// Samples `n_paths` gamma paths on `tau_grid` and tracks `max |y(τ) - τ|`.
pub fn boundedness_probe(tau_grid: &[f64], n_paths: usize, seed: u64) -> Result<BoundednessProbe> {
    if tau_grid.is_empty() || !(tau_grid[0] > 0.0) {
        return Err(Error::Domain("tau grid must be non-empty and start above 0".into()));
    }
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("tau grid must be strictly increasing".into()));
    }
    let running_max = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut prev_tau = 0.0;
            let mut y = 0.0;
            let mut best: f64 = 0.0;
            tau_grid
                .iter()
                .map(|&tau| {
                    y += gamma_value(tau - prev_tau, &mut rng);
                    prev_tau = tau;
                    best = best.max((y - tau).abs());
                    best
                })
                .collect()
        })
        .collect();
    Ok(BoundednessProbe { tau_grid: tau_grid.to_vec(), running_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, median, sample_variance};
    use statrs::function::gamma::gamma_lr;

    #[test]
    fn increments_deterministic_and_nonnegative() {
        let p = Partition::new(vec![0.0, 0.3, 1.0, 2.5]).unwrap();
        let a = sample_increments(&p, 11);
        let b = sample_increments(&p, 11);
        assert_eq!(a, b);
        assert_ne!(a, sample_increments(&p, 12));
        if let GammaPath::Increments { increments, .. } = &a {
            assert_eq!(increments.len(), 3);
            assert!(increments.iter().all(|&g| g >= 0.0));
        } else {
            unreachable!();
        }
    }

    #[test]
    fn increment_moments() {
        let p = Partition::new(vec![0.0, 0.25, 1.25, 4.25]).unwrap();
        let s = IncrementSampler::new(&p);
        let n = 200_000;
        let draws: Vec<Vec<f64>> = (0..n as u64).into_par_iter().map(|i| s.increments(5, i)).collect();
        for (k, t) in p.lengths().into_iter().enumerate() {
            let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let (m, _) = mean_stderr(&col);
            let se = (t / n as f64).sqrt();
            assert!((m - t).abs() < 5.0 * se, "cell {k}: mean {m} vs {t}");
            let v = sample_variance(&col);
            assert!((v - t).abs() < 0.03 * t.max(0.5), "cell {k}: var {v} vs {t}");
        }
    }

    #[test]
    fn tiny_shape_concentrates_at_zero() {
        let p = Partition::new(vec![0.0, 1e-4]).unwrap();
        let s = IncrementSampler::new(&p);
        let g: Vec<f64> = (0..1001).map(|i| s.increments(3, i)[0]).collect();
        assert!(median(&g) < 1e-6);
    }

    #[test]
    fn increments_match_gamma_cdf() {
        for &t in &[0.4, 1.0, 2.7] {
            let p = Partition::new(vec![0.0, t]).unwrap();
            let s = IncrementSampler::new(&p);
            let g: Vec<f64> = (0..100_000u64).into_par_iter().map(|i| s.increments(21, i)[0]).collect();
            let r = ks_one_sample(&g, |x| if x > 0.0 { gamma_lr(t, x) } else { 0.0 });
            assert!(r.p_value > 0.01, "t={t}: {r:?}");
        }
    }

    #[test]
    fn jump_table_mass_matches_tail_integral() {
        for &d in &[1e-6, 0.01, 1.0] {
            let table = JumpSizeTable::new(d).unwrap();
            let want = levy_tail_mass(d).unwrap();
            assert!((table.total_mass() - want).abs() < 1e-11, "δ={d}");
        }
        let big = JumpSizeTable::new(60.0).unwrap();
        assert!((big.total_mass() - levy_tail_mass(60.0).unwrap()).abs() < 1e-30);
        assert!(JumpSizeTable::new(0.0).is_err());
    }

    #[test]
    fn jump_sizes_follow_levy_law() {
        let table = JumpSizeTable::new(1e-3).unwrap();
        let sizes: Vec<f64> = (0..20_000u64)
            .into_par_iter()
            .map(|i| table.sample(&mut stream(9, i)))
            .collect();
        assert!(sizes.iter().all(|&u| u > 1e-3));
        let r = ks_one_sample(&sizes, |u| table.cdf(u).unwrap());
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn tail_sampler_above_start() {
        let table = JumpSizeTable::new(45.0).unwrap();
        let mut rng = stream(1, 1);
        let xs: Vec<f64> = (0..2000).map(|_| table.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&u| u > 45.0));
        // the law of u - 45 is close to Exp(1) (mean slightly below 1)
        let mean = xs.iter().map(|u| u - 45.0).sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.98).abs() < 0.1, "{mean}");
    }

    #[test]
    fn jump_paths_are_nondecreasing_and_inside_horizon() {
        let s = JumpSampler::new(2.0, 1e-4).unwrap();
        for i in 0..50 {
            if let GammaPath::Jumps { jumps, delta, .. } = s.path(3, i) {
                assert!(jumps.windows(2).all(|w| w[0].time <= w[1].time));
                assert!(jumps.iter().all(|j| j.size > delta && (0.0..=2.0).contains(&j.time)));
            }
        }
        assert!(sample_jumps(1.0, 0.0, 1).is_err());
        assert!(sample_jumps(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn jump_count_and_mass_means() {
        let delta = 0.05;
        let s = JumpSampler::new(1.0, delta).unwrap();
        let n = 50_000;
        let paths = s.batch(n, 17);
        let counts: Vec<f64> = paths
            .iter()
            .map(|p| match p {
                GammaPath::Jumps { jumps, .. } => jumps.len() as f64,
                _ => unreachable!(),
            })
            .collect();
        let (m, se) = mean_stderr(&counts);
        assert!((m - levy_tail_mass(delta).unwrap()).abs() < 5.0 * se);
        let totals: Vec<f64> = paths.iter().map(GammaPath::total).collect();
        let (m, se) = mean_stderr(&totals);
        assert!((m - (-delta).exp()).abs() < 5.0 * se, "{m} vs {}", (-delta).exp());
    }

    #[test]
    fn empirical_cf_zero_theta_is_exact() {
        let p = Partition::new(vec![0.0, 1.0, 2.0]).unwrap();
        let theta = StepFunction::zero(p.clone());
        let paths = IncrementSampler::new(&p).batch(500, 1);
        let est = empirical_cf(&paths, &theta).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
        assert_eq!(est.stderr, 0.0);
        let jumps = JumpSampler::new(2.0, 1e-3).unwrap().batch(100, 1);
        let est = empirical_cf(&jumps, &theta).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn empirical_cf_rejects_mismatch() {
        let p = Partition::new(vec![0.0, 1.0, 2.0]).unwrap();
        let q = Partition::new(vec![0.0, 2.0]).unwrap();
        let paths = IncrementSampler::new(&p).batch(3, 1);
        assert!(empirical_cf(&paths, &StepFunction::zero(q)).is_err());
        let short = JumpSampler::new(1.0, 0.1).unwrap().batch(3, 1);
        assert!(empirical_cf(&short, &StepFunction::zero(p)).is_err());
        assert!(empirical_cf(&[], &StepFunction::indicator(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn batch_and_streaming_agree() {
        let theta = StepFunction::new(Partition::new(vec![0.0, 1.0, 3.0]).unwrap(), vec![1.0, 2.0]).unwrap();
        let paths = IncrementSampler::new(theta.partition()).batch(1000, 4);
        let a = empirical_cf(&paths, &theta).unwrap();
        let b = increment_cf(&theta, 1000, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn two_samplers_agree_on_cf() {
        let theta = StepFunction::new(Partition::new(vec![0.0, 0.5, 1.5]).unwrap(), vec![0.7, -1.2]).unwrap();
        let n = 100_000;
        let inc = increment_cf(&theta, n, 2);
        let jmp = jump_cf(&theta, n, 1e-6, 3).unwrap();
        let bias = truncation_bias_bound(&theta, 1e-6).unwrap();
        let err = (inc.value - jmp.value).norm();
        assert!(err < 5.0 * inc.stderr.hypot(jmp.stderr) + bias, "{inc:?} vs {jmp:?}");
    }

    #[test]
    fn estimate_json() {
        let est = McEstimate::from_real(&[1.0, 3.0]);
        let v = serde_json::to_value(est).unwrap();
        assert_eq!(v["value_re"], 2.0);
        assert_eq!(v["value_im"], 0.0);
        assert_eq!(v["n"], 2);
        assert!(v.get("stderr").is_some());
    }

    #[test]
    fn stderr_scales_with_sample_count() {
        let theta = StepFunction::indicator(2.0, 0.5).unwrap();
        let small = increment_cf(&theta, 10_000, 8);
        let large = increment_cf(&theta, 160_000, 8);
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn lln_fraction_limits() {
        assert_eq!(lln_statistic(5.0, 200, f64::INFINITY, 1).unwrap(), 1.0);
        let f = lln_statistic(1e6, 1000, 0.01, 1).unwrap();
        assert!(f >= 0.98);
        // P(|Gamma(100)/100 - 1| ≤ 0.01) from the regularized incomplete gamma
        let want = gamma_lr(100.0, 101.0) - gamma_lr(100.0, 99.0);
        let f = lln_statistic(100.0, 20_000, 0.01, 2).unwrap();
        assert!((f - want).abs() < 5.0 * (want * (1.0 - want) / 20_000.0).sqrt(), "{f} vs {want}");
        assert!(lln_statistic(0.0, 10, 0.1, 1).is_err());
    }

    #[test]
    fn probe_growth() {
        let grid: Vec<f64> = (0..=400).map(|j| 10f64.powf(j as f64 / 100.0)).collect();
        let probe = boundedness_probe(&grid, 500, 4).unwrap();
        for row in &probe.running_max {
            assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
        let m2 = median(&probe.max_up_to(1e2));
        let m4 = median(&probe.max_up_to(1e4));
        assert!(m4 > m2);
        let big = probe.final_max().iter().filter(|&&m| m > 10.0).count();
        assert!(big as f64 >= 0.95 * 500.0);
        assert!(boundedness_probe(&[1.0, 1.0], 1, 1).is_err());
    }
}
