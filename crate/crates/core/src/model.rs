//! Partitions, step functions and the closed-form measure-level quantities of
//! the gamma noise: characteristic functional, gamma density, Lévy triple and
//! the power series of the orthogonalizing map `λ ↦ λ/(λ-1)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma as special;

use crate::error::{Error, Result};
use crate::quadrature::{self, LEVY_ABS_TOL};

/// Ordered contiguous cells `[u_k, u_{k+1})` covering `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct Partition {
    edges: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    edges: Vec<f64>,
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = Error;

    fn try_from(r: PartitionRepr) -> Result<Self> {
        Partition::new(r.edges)
    }
}

impl From<Partition> for PartitionRepr {
    fn from(p: Partition) -> Self {
        PartitionRepr { edges: p.edges }
    }
}

impl Partition {
    /// Builds a partition from its edges `0 = u_0 < u_1 < ... < u_d = T`.
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidPartition(format!(
                "need at least two edges, got {}",
                edges.len()
            )));
        }
        if edges[0] != 0.0 {
            return Err(Error::InvalidPartition(format!("first edge must be 0, got {}", edges[0])));
        }
        for (k, w) in edges.windows(2).enumerate() {
            if !w[1].is_finite() || !(w[1] > w[0]) {
                return Err(Error::InvalidPartition(format!(
                    "cell {k} has non-positive length: [{}, {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Partition { edges })
    }

    /// `cells` equal cells over `[0, horizon]`.
    pub fn uniform(cells: usize, horizon: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidPartition("need at least one cell".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidPartition(format!("horizon must be positive, got {horizon}")));
        }
        let edges = (0..=cells).map(|k| horizon * k as f64 / cells as f64).collect();
        Partition::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn length(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell containing `time`; the right end point `T` belongs to the last cell.
    pub fn cell_of(&self, time: f64) -> Option<usize> {
        if !(time >= 0.0 && time <= self.horizon()) {
            return None;
        }
        let k = self.edges.partition_point(|&e| e <= time);
        Some(k.saturating_sub(1).min(self.cells() - 1))
    }

    /// Overlap lengths `|Δ_k ∩ [0, t]|` for each cell.
    pub fn overlaps(&self, t: f64) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| (t.min(w[1]) - w[0]).max(0.0))
            .collect()
    }

    /// Splits every cell into `factor` equal pieces.
    pub fn refine(&self, factor: usize) -> Partition {
        let factor = factor.max(1);
        let mut edges = Vec::with_capacity(self.cells() * factor + 1);
        for w in self.edges.windows(2) {
            for j in 0..factor {
                edges.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
            }
        }
        edges.push(self.horizon());
        Partition { edges }
    }
}

/// A function that is constant on each cell of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T = f64> {
    partition: Partition,
    values: Vec<T>,
}

impl<T: Copy> StepFunction<T> {
    pub fn new(partition: Partition, values: Vec<T>) -> Result<Self> {
        if values.len() != partition.cells() {
            return Err(Error::ValueCount { cells: partition.cells(), values: values.len() });
        }
        Ok(StepFunction { partition, values })
    }

    pub fn constant(partition: Partition, value: T) -> Self {
        let values = vec![value; partition.cells()];
        StepFunction { partition, values }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value_at(&self, time: f64) -> Option<T> {
        self.partition.cell_of(time).map(|k| self.values[k])
    }

    /// The same function on a partition refined by `factor`.
    pub fn refine(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, factor))
            .collect();
        StepFunction { partition: self.partition.refine(factor), values }
    }
}

impl StepFunction<f64> {
    pub fn zero(partition: Partition) -> Self {
        Self::constant(partition, 0.0)
    }

    /// `value·χ_{[0, length]}` on a single-cell partition.
    pub fn indicator(length: f64, value: f64) -> Result<Self> {
        Self::new(Partition::new(vec![0.0, length])?, vec![value])
    }

    pub fn to_complex(&self) -> StepFunction<Complex64> {
        StepFunction {
            partition: self.partition.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// `⟨f, 1⟩ = Σ_k t_k f_k`.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| v * self.partition.length(k))
            .sum()
    }

    pub fn neg(&self) -> Self {
        StepFunction {
            partition: self.partition.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// JSON form shared by partitions and real step functions:
/// `{"edges": [u_0, ..., u_d], "values": [λ_1, ..., λ_d]}`, values optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub edges: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl StepSpec {
    pub fn partition(&self) -> Result<Partition> {
        Partition::new(self.edges.clone())
    }

    /// The step function, or `None` when the description carries no values.
    pub fn step_function(&self) -> Result<Option<StepFunction>> {
        match &self.values {
            None => Ok(None),
            Some(v) => StepFunction::new(self.partition()?, v.clone()).map(Some),
        }
    }
}

impl From<&Partition> for StepSpec {
    fn from(p: &Partition) -> Self {
        StepSpec { edges: p.edges.clone(), values: None }
    }
}

impl From<&StepFunction> for StepSpec {
    fn from(f: &StepFunction) -> Self {
        StepSpec { edges: f.partition.edges.clone(), values: Some(f.values.clone()) }
    }
}

impl fmt::Display for StepFunction<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .zip(self.partition.edges.windows(2))
            .map(|(v, w)| format!("{v}·χ[{},{}]", w[0], w[1]))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Logarithm of the characteristic functional, `-Σ_k t_k log(1 - iλ_k)`,
/// principal branch.
pub fn log_cf(theta: &StepFunction<Complex64>) -> Result<Complex64> {
    let i = Complex64::i();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &lambda) in theta.values().iter().enumerate() {
        let z = Complex64::new(1.0, 0.0) - i * lambda;
        if z.im == 0.0 && z.re <= 0.0 {
            return Err(Error::BranchCut { cell: k, value: format!("{z}") });
        }
        acc -= theta.partition().length(k) * z.ln();
    }
    Ok(acc)
}

/// Characteristic functional `E exp{i⟨x, θ⟩}` for a complex step function.
pub fn cf(theta: &StepFunction<Complex64>) -> Result<Complex64> {
    log_cf(theta).map(Complex64::exp)
}

/// Characteristic functional for a real test function (never on the cut).
pub fn cf_real(theta: &StepFunction) -> Complex64 {
    cf(&theta.to_complex()).expect("real step values never hit the branch cut")
}

/// `Γ(t)`. Lanczos approximation on `(0, 2]`; larger arguments are reduced
/// into `(1, 2]` with `Γ(t) = (t-1)Γ(t-1)`. The Lanczos power term loses
/// accuracy quickly as `t` grows, the product of exact shifts does not.
pub fn gamma_function(t: f64) -> f64 {
    if !(t > 2.0) || !t.is_finite() {
        return special::gamma(t);
    }
    let shifts = (t - 2.0).ceil();
    let mut x = t - shifts;
    let mut acc = special::gamma(x);
    for _ in 0..shifts as usize {
        acc *= x;
        x += 1.0;
    }
    acc
}

pub fn ln_gamma(t: f64) -> f64 {
    special::ln_gamma(t)
}

/// Density of the Γ(t) law, `s^{t-1} e^{-s} / Γ(t)` on `(0, ∞)`.
pub fn gamma_density(t: f64, s: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("gamma shape must be positive, got {t}")));
    }
    if !(s > 0.0) {
        return Ok(0.0);
    }
    Ok(((t - 1.0) * s.ln() - s - ln_gamma(t)).exp())
}

/// Lévy density of the gamma process, `e^{-u}/u` on `(0, ∞)`.
pub fn levy_density(u: f64) -> f64 {
    if u > 0.0 {
        (-u).exp() / u
    } else {
        0.0
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "truncation threshold must be positive (the Lévy measure is infinite at 0), got {delta}"
        )))
    }
}

/// `β((δ, ∞)) = ∫_δ^∞ e^{-u}/u du`, the exponential integral `E_1(δ)`.
///
/// Integrated in `v = ln u`, where the integrand becomes `exp(-e^v)`.
pub fn levy_tail_mass(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if delta.is_infinite() {
        return Ok(0.0);
    }
    let lo = delta.ln();
    let hi = (delta + 750.0).ln();
    let r = quadrature::integrate(|v| (-v.exp()).exp(), lo, hi, LEVY_ABS_TOL)?;
    Ok(r.value)
}

/// `∫_0^δ u β(du) = 1 - e^{-δ}`: jump mass per unit time below `δ`.
pub fn levy_small_jump_mean(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(-(-delta).exp_m1())
}

/// Lévy triple `(a, σ², β)` of the gamma process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyTriple {
    drift: f64,
}

impl LevyTriple {
    pub fn gamma_process() -> Result<Self> {
        let r = quadrature::integrate(|u| (-u).exp() / (1.0 + u * u), 0.0, 750.0, LEVY_ABS_TOL)?;
        Ok(LevyTriple { drift: r.value })
    }

    /// `a = ∫_0^∞ e^{-u}/(1+u²) du`.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn gaussian_variance(&self) -> f64 {
        0.0
    }

    pub fn levy_density(&self, u: f64) -> f64 {
        levy_density(u)
    }

    /// `m₁(β) = ∫ u β(du)`, by quadrature.
    pub fn first_moment(&self) -> Result<f64> {
        Ok(quadrature::integrate(|u| (-u).exp(), 0.0, 750.0, LEVY_ABS_TOL)?.value)
    }
}

/// Power-series coefficients of `λ ↦ λ/(λ-1)` at 0 through degree `n_max`.
pub fn alpha_mu_series(n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|m| if m == 0 { 0.0 } else { -1.0 }).collect()
}

/// Product of two power series truncated at degree `n`.
pub fn series_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Formal composition `outer(inner(λ))` truncated at degree `n`; `inner`
/// must vanish at 0.
pub fn compose_series(outer: &[f64], inner: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Some(&c) = inner.first() {
        if c != 0.0 {
            return Err(Error::NonzeroConstantTerm(c));
        }
    }
    let mut out = vec![0.0; n + 1];
    for &c in outer.iter().take(n + 1).rev() {
        out = series_mul(&out, inner, n);
        out[0] += c;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.5, 1.0]).is_err());
        assert!(Partition::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Partition::new(vec![0.0, 2.0, 1.0]).is_err());
        let p = Partition::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(p.lengths(), vec![1.0, 2.0]);
        assert_eq!(p.horizon(), 3.0);
        assert_eq!(p.cell_of(0.0), Some(0));
        assert_eq!(p.cell_of(1.0), Some(1));
        assert_eq!(p.cell_of(3.0), Some(1));
        assert_eq!(p.cell_of(3.1), None);
        assert_eq!(p.overlaps(2.0), vec![1.0, 1.0]);
    }

    #[test]
    fn partition_json() {
        let f: StepSpec = serde_json::from_str(r#"{"edges":[0,1,3],"values":[1,2]}"#).unwrap();
        let theta = f.step_function().unwrap().unwrap();
        assert_eq!(theta.values(), &[1.0, 2.0]);
        let p: StepSpec = serde_json::from_str(r#"{"edges":[0,1,3]}"#).unwrap();
        assert!(p.step_function().unwrap().is_none());
        let part: Partition = serde_json::from_str(r#"{"edges":[0,0.5]}"#).unwrap();
        assert_eq!(serde_json::to_string(&part).unwrap(), r#"{"edges":[0.0,0.5]}"#);
        assert!(serde_json::from_str::<Partition>(r#"{"edges":[0,-1]}"#).is_err());
    }

    #[test]
    fn cf_single_cell() {
        let theta = StepFunction::indicator(2.0, 0.5).unwrap();
        let got = cf_real(&theta);
        let want = c(1.0, -0.5).powf(-2.0);
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn cf_zero_and_two_cells() {
        let p = Partition::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(log_cf(&StepFunction::zero(p.clone()).to_complex()).unwrap(), c(0.0, 0.0));
        let theta = StepFunction::new(p, vec![1.0, 2.0]).unwrap();
        let want = c(1.0, -1.0).inv() * c(1.0, -2.0).powi(-2);
        assert!((cf_real(&theta) - want).norm() < 1e-15);
    }

    #[test]
    fn cf_branch_cut_names_cell() {
        let p = Partition::new(vec![0.0, 1.0, 2.0]).unwrap();
        // 1 - i*(i*(-2)) = 1 - 2 = -1: on the cut
        let theta = StepFunction::new(p, vec![c(0.3, 0.0), c(0.0, -2.0)]).unwrap();
        match log_cf(&theta) {
            Err(Error::BranchCut { cell, .. }) => assert_eq!(cell, 1),
            other => panic!("expected branch cut error, got {other:?}"),
        }
    }

    #[test]
    fn gamma_density_values() {
        assert!((gamma_density(1.0, 2.0).unwrap() - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(gamma_density(3.3, -1.0).unwrap(), 0.0);
        assert!((gamma_density(2.0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(gamma_density(0.0, 1.0).is_err());
        assert!(gamma_density(-1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_function_accuracy() {
        let pi = std::f64::consts::PI;
        let cases = [(0.5, pi.sqrt()), (1.0, 1.0), (10.0, 362_880.0), (0.1, 9.513_507_698_668_732)];
        for (t, want) in cases {
            let got = gamma_function(t);
            assert!(((got - want) / want).abs() < 1e-13, "Γ({t}) = {got}");
        }
        // 30-digit reference values
        let reference = [
            (0.03, 32.784_998_351_794_137),
            (5.36, 41.855_903_574_975_352),
            (25.4, 2.237_661_629_077_110_8e24),
            (65.5, 1.021_029_763_587_673_6e90),
            (137.9, 3.063_892_313_668_932_3e234),
            (169.5, 3.281_470_451_067_846_4e303),
        ];
        for (t, want) in reference {
            let got = gamma_function(t);
            assert!(((got - want) / want).abs() < 1e-13, "Γ({t}) = {got}");
        }
        // Γ(170) = 169!
        let fact: f64 = (1..170).map(|k| k as f64).product();
        assert!(((gamma_function(170.0) - fact) / fact).abs() < 1e-13);
    }

    #[test]
    fn tail_mass_values() {
        // E_1(1) from the convergent series -γ - ln x - Σ (-x)^k/(k k!)
        let euler = 0.577_215_664_901_532_9;
        let series = |x: f64| {
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 1..60 {
                term *= -x / k as f64;
                sum += term / k as f64;
            }
            -euler - x.ln() - sum
        };
        for &d in &[1.0, 0.1, 1e-6, 2.5] {
            let got = levy_tail_mass(d).unwrap();
            assert!((got - series(d)).abs() < 1e-11, "δ={d}: {got} vs {}", series(d));
        }
        assert!((levy_tail_mass(1.0).unwrap() - 0.219_383_934_395_520_3).abs() < 1e-12);
        let small = levy_tail_mass(1e-6).unwrap();
        assert!((small - 13.2).abs() < 0.05);
        assert!(levy_tail_mass(500.0).unwrap() < 1e-200);
        assert!(levy_tail_mass(0.0).is_err());
        assert!(levy_tail_mass(-1.0).is_err());
    }

    #[test]
    fn small_jump_mean() {
        assert!((levy_small_jump_mean(0.1).unwrap() - 0.095_162_581_964_040_4).abs() < 1e-15);
        let q = quadrature::integrate(|u| (-u).exp(), 0.0, 0.1, 1e-14).unwrap();
        assert!((q.value - levy_small_jump_mean(0.1).unwrap()).abs() < 1e-14);
        assert_eq!(levy_small_jump_mean(1e300).unwrap(), 1.0);
        assert!(levy_small_jump_mean(1e-300).unwrap() < 1e-299);
        assert!(levy_small_jump_mean(0.0).is_err());
    }

    #[test]
    fn first_moment_splits_at_delta() {
        for &d in &[1e-6, 0.1, 1.0, 5.0] {
            let big = quadrature::integrate(|u| u * levy_density(u), d, d + 750.0, 1e-13).unwrap();
            let total = levy_small_jump_mean(d).unwrap() + big.value;
            assert!((total - 1.0).abs() < 1e-10, "δ={d}: {total}");
        }
    }

    #[test]
    fn levy_triple() {
        let triple = LevyTriple::gamma_process().unwrap();
        assert!((triple.drift() - 0.621_449_624_235_813_3).abs() < 1e-12);
        assert_eq!(triple.gaussian_variance(), 0.0);
        assert!((triple.first_moment().unwrap() - 1.0).abs() < 1e-12);
        assert!(triple.levy_density(0.5) > 0.0);
        assert_eq!(triple.levy_density(0.0), 0.0);
    }

    #[test]
    fn alpha_series_and_involution() {
        assert_eq!(alpha_mu_series(0), vec![0.0]);
        assert_eq!(alpha_mu_series(3), vec![0.0, -1.0, -1.0, -1.0]);
        let a = alpha_mu_series(12);
        let id = compose_series(&a, &a, 12).unwrap();
        let mut want = vec![0.0; 13];
        want[1] = 1.0;
        assert_eq!(id, want);
        assert!(matches!(compose_series(&a, &[1.0, 1.0], 3), Err(Error::NonzeroConstantTerm(_))));
    }

    #[test]
    fn alpha_series_matches_function() {
        let a = alpha_mu_series(60);
        let lam: f64 = 0.3;
        let sum: f64 = a.iter().enumerate().map(|(m, c)| c * lam.powi(m as i32)).sum();
        assert!((sum - lam / (lam - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn refinement_keeps_integral() {
        let p = Partition::new(vec![0.0, 1.0, 3.0]).unwrap();
        let f = StepFunction::new(p, vec![1.0, -2.0]).unwrap();
        let g = f.refine(3);
        assert_eq!(g.partition().cells(), 6);
        assert!((f.integral() - g.integral()).abs() < 1e-15);
    }
}
