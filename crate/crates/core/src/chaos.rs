//! Laguerre and Appell polynomial systems of the gamma law and the
//! multi-index orthogonal chaos basis over a partition.
//!
//! In one cell of length `t` the generating function of the orthogonal
//! system is `(1-λ)^{-t} exp{sλ/(λ-1)} = Σ_n L_n^{(t-1)}(s) λ^n`; it is the
//! Appell generating function `e^{sλ}(1-λ)^t` evaluated at `λ/(λ-1)`.
//! Over a partition the basis is the product `J_n = Π_k L_{n_k}^{(t_k-1)}(G_k)`
//! of the cell increments `G_k`, with squared norms
//! `ν_n = Π_k Γ(n_k + t_k) / (n_k! Γ(t_k))`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alpha_mu_series, series_mul, Partition, StepFunction};
use crate::sampler::{GammaPath, IncrementSampler};
use crate::stats::pairwise_sum;
use crate::wick::{ChaosElement, ChaosSpace};

/// Polynomial in `s` (monomial basis, `coeffs[j]` multiplies `s^j`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolySeries {
    pub coeffs: Vec<f64>,
    pub shape: Option<f64>,
}

impl PolySeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolySeries { coeffs, shape: None }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PolySeries { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), shape: self.shape }
    }
}

fn check_shape(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("shape must be positive, got {t}")))
    }
}

/// Generalized binomial coefficient `C(x, k)`.
pub fn gen_binomial(x: f64, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (x - k as f64 + i as f64) / i as f64)
}

/// `L_0 ... L_{n_max}` of `L_n^{(t-1)}(s)` by the three-term recurrence.
pub fn laguerre_all(n_max: usize, t: f64, s: f64) -> Result<Vec<f64>> {
    check_shape(t)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(t - s);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + t - s) * out[n] - (nf + t - 1.0) * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    Ok(out)
}

/// `L_n^{(t-1)}(s)`.
pub fn laguerre_eval(n: usize, t: f64, s: f64) -> Result<f64> {
    Ok(laguerre_all(n, t, s)?[n])
}

/// Monomial coefficients of `L_n^{(t-1)}`: `(-1)^j C(n+t-1, n-j) / j!`.
pub fn laguerre_coeffs(n: usize, t: f64) -> Result<PolySeries> {
    check_shape(t)?;
    let mut fact = 1.0;
    let coeffs = (0..=n)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * gen_binomial(n as f64 + t - 1.0, n - j) / fact
        })
        .collect();
    Ok(PolySeries { coeffs, shape: Some(t) })
}

/// `|Σ_{n≤N} L_n(s) λ^n - (1-λ)^{-t} exp{sλ/(λ-1)}|`.
pub fn generating_function_check(t: f64, s: f64, lambda: f64, n_max: usize) -> Result<f64> {
    check_shape(t)?;
    if !(lambda.abs() < 1.0) {
        return Err(Error::Domain(format!("|λ| must be below 1, got {lambda}")));
    }
    let values = laguerre_all(n_max, t, s)?;
    let mut power = 1.0;
    let mut partial = 0.0;
    for v in values {
        partial += v * power;
        power *= lambda;
    }
    let closed = (1.0 - lambda).powf(-t) * (s * lambda / (lambda - 1.0)).exp();
    Ok((partial - closed).abs())
}

/// Appell polynomial `P_n` of the gamma law: `e^{sλ}(1-λ)^t = Σ P_n(s) λ^n / n!`,
/// so `P_n(s) = Σ_j (-1)^j C(t, j) n!/(n-j)! s^{n-j}`.
pub fn appell_coeffs(n: usize, t: f64) -> Result<PolySeries> {
    check_shape(t)?;
    let mut coeffs = vec![0.0; n + 1];
    let mut falling = 1.0; // n!/(n-j)!
    for j in 0..=n {
        if j > 0 {
            falling *= (n - j + 1) as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n - j] = sign * gen_binomial(t, j) * falling;
    }
    Ok(PolySeries { coeffs, shape: Some(t) })
}

pub fn appell_family(n_max: usize, t: f64) -> Result<Vec<PolySeries>> {
    (0..=n_max).map(|n| appell_coeffs(n, t)).collect()
}

pub fn laguerre_family(n_max: usize, t: f64) -> Result<Vec<PolySeries>> {
    (0..=n_max).map(|n| laguerre_coeffs(n, t)).collect()
}

/// Re-expands the generating series `Σ_n f_n(s) λ^n` after substituting
/// `λ ↦ inner(λ)`: returns `g_m(s) = Σ_n f_n(s) [λ^m] inner(λ)^n`.
pub fn compose_family(series: &[PolySeries], inner: &[f64], n_max: usize) -> Result<Vec<PolySeries>> {
    if let Some(&c) = inner.first() {
        if c != 0.0 {
            return Err(Error::NonzeroConstantTerm(c));
        }
    }
    if series.len() < n_max + 1 {
        return Err(Error::Domain(format!(
            "need {} series terms for degree {n_max}, got {}",
            n_max + 1,
            series.len()
        )));
    }
    let width = series.iter().take(n_max + 1).map(|p| p.coeffs.len()).max().unwrap_or(1);
    let mut out = vec![vec![0.0; width]; n_max + 1];
    let mut power = vec![0.0; n_max + 1];
    power[0] = 1.0;
    for f in series.iter().take(n_max + 1) {
        for (m, &pm) in power.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for (j, &c) in f.coeffs.iter().enumerate() {
                out[m][j] += c * pm;
            }
        }
        power = series_mul(&power, inner, n_max);
    }
    let shape = series.first().and_then(|p| p.shape);
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(m, mut c)| {
            c.truncate(m + 1);
            PolySeries { coeffs: c, shape }
        })
        .collect())
}

/// Substitutes `λ/(λ-1)` into the Appell generating function. Input is the
/// Appell family `P_0 ... P_N`; output coefficients are those of the
/// Laguerre family `L_0^{(t-1)} ... L_N^{(t-1)}`.
pub fn compose_with_alpha(appell: &[PolySeries], n_max: usize) -> Result<Vec<PolySeries>> {
    let mut fact = 1.0;
    let normalized: Vec<PolySeries> = appell
        .iter()
        .take(n_max + 1)
        .enumerate()
        .map(|(n, p)| {
            if n > 0 {
                fact *= n as f64;
            }
            p.scaled(1.0 / fact)
        })
        .collect();
    compose_family(&normalized, &alpha_mu_series(n_max), n_max)
}

/// `n,coeff_0,...,coeff_n`, one row per degree.
pub fn write_family_csv<W: Write>(family: &[PolySeries], mut w: W) -> Result<()> {
    let width = family.iter().map(|p| p.coeffs.len()).max().unwrap_or(1);
    let header: Vec<String> = (0..width).map(|j| format!("coeff_{j}")).collect();
    writeln!(w, "n,{}", header.join(","))?;
    for (n, p) in family.iter().enumerate() {
        let row: Vec<String> = p.coeffs.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{n},{}", row.join(","))?;
    }
    Ok(())
}

/// Multi-index `n = (n_1, ..., n_d)`, one degree per partition cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// `e_k` (zero-based cell `k`).
    pub fn unit(d: usize, k: usize) -> Self {
        let mut v = vec![0; d];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k] as usize
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(';')
            .map(|p| p.trim().parse::<u32>().map_err(|e| Error::InvalidMultiIndex(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }
}

/// All multi-indices of dimension `d` and total degree `≤ n_max` in graded
/// lexicographic order: by total degree, then lexicographically descending
/// (`e_1` before `e_2`).
pub fn graded_indices(d: usize, n_max: usize) -> Vec<MultiIndex> {
    fn fill(rem: usize, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = rem as u32;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in (0..=rem).rev() {
            cur[pos] = v as u32;
            fill(rem - v, pos + 1, cur, out);
        }
    }
    let mut out = Vec::with_capacity(index_count(d, n_max));
    if d == 0 {
        out.push(MultiIndex(Vec::new()));
        return out;
    }
    let mut cur = vec![0; d];
    for g in 0..=n_max {
        fill(g, 0, &mut cur, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of multi-indices of dimension `d` with degree exactly `g`.
fn compositions(g: usize, d: usize) -> usize {
    if d == 0 {
        usize::from(g == 0)
    } else {
        binomial(g + d - 1, d - 1)
    }
}

/// `C(n_max + d, d)`, the size of the graded index set.
pub fn index_count(d: usize, n_max: usize) -> usize {
    binomial(n_max + d, d)
}

/// Position of `n` in the graded order; independent of the truncation degree.
pub fn graded_rank(n: &MultiIndex) -> usize {
    let d = n.dim();
    let g = n.degree();
    let mut pos = if g == 0 { 0 } else { index_count(d, g - 1) };
    let mut rem = g;
    for k in 0..d.saturating_sub(1) {
        let nk = n.get(k);
        for v in nk + 1..=rem {
            pos += compositions(rem - v, d - k - 1);
        }
        rem -= nk;
    }
    pos
}

/// `Γ(n + t) / (n! Γ(t))` for a single cell.
pub fn cell_norm(n: usize, t: f64) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * (i as f64 - 1.0 + t) / i as f64)
}

/// Squared norm `ν_n = E[J_n²] = Π_k Γ(n_k + t_k) / (n_k! Γ(t_k))`.
pub fn chaos_norm(n: &MultiIndex, partition: &Partition) -> Result<f64> {
    if n.dim() != partition.cells() {
        return Err(Error::InvalidMultiIndex(format!(
            "{n} has {} entries for {} cells",
            n.dim(),
            partition.cells()
        )));
    }
    Ok((0..n.dim()).map(|k| cell_norm(n.get(k), partition.length(k))).product())
}

/// `J_n(x) = Π_k L_{n_k}^{(t_k-1)}(G_k)` for an increment path.
pub fn basis_eval(n: &MultiIndex, path: &GammaPath) -> Result<f64> {
    match path {
        GammaPath::Increments { partition, increments } => {
            if n.dim() != partition.cells() {
                return Err(Error::PartitionMismatch(format!(
                    "multi-index {n} vs {} cells",
                    partition.cells()
                )));
            }
            let mut acc = 1.0;
            for (k, &g) in increments.iter().enumerate() {
                acc *= laguerre_eval(n.get(k), partition.length(k), g)?;
            }
            Ok(acc)
        }
        GammaPath::Jumps { .. } => Err(Error::PartitionMismatch(
            "basis evaluation needs an increment-form path".into(),
        )),
    }
}

/// Values of every basis element of `space` on one increment path, computed
/// from one Laguerre recurrence per cell.
pub fn basis_eval_all(space: &ChaosSpace, increments: &[f64]) -> Result<Vec<f64>> {
    let partition = space.partition();
    if increments.len() != partition.cells() {
        return Err(Error::PartitionMismatch(format!(
            "{} increments for {} cells",
            increments.len(),
            partition.cells()
        )));
    }
    let tables: Vec<Vec<f64>> = increments
        .iter()
        .enumerate()
        .map(|(k, &g)| laguerre_all(space.degree(), partition.length(k), g))
        .collect::<Result<_>>()?;
    Ok(space
        .indices()
        .iter()
        .map(|n| (0..n.dim()).map(|k| tables[k][n.get(k)]).product())
        .collect())
}

/// Chaos expansion of `⟨x, f⟩ = Σ_k f_k G_k = Σ_k f_k (t_k J_0 - J_{e_k})`.
pub fn expand_linear(space: &Arc<ChaosSpace>, f: &StepFunction) -> Result<ChaosElement> {
    if f.partition() != space.partition() {
        return Err(Error::PartitionMismatch("linear functional lives on another partition".into()));
    }
    if space.degree() == 0 {
        return Err(Error::Domain("linear functionals need truncation degree ≥ 1".into()));
    }
    let d = space.partition().cells();
    let mut coeffs = vec![0.0; space.len()];
    coeffs[0] = f.integral();
    for (k, &v) in f.values().iter().enumerate() {
        coeffs[graded_rank(&MultiIndex::unit(d, k))] = -v;
    }
    ChaosElement::from_j_coeffs(space, coeffs)
}

/// `multiindex,nu` for every index of `space`.
pub fn write_norm_csv<W: Write>(space: &ChaosSpace, mut w: W) -> Result<()> {
    writeln!(w, "multiindex,nu")?;
    for (n, nu) in space.indices().iter().zip(space.norms()) {
        writeln!(w, "{n},{nu}")?;
    }
    Ok(())
}

/// Monte Carlo estimate of `E[J_n J_m]` against the orthogonality relation
/// `δ_{nm} ν_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossMoment {
    pub left: MultiIndex,
    pub right: MultiIndex,
    pub value: f64,
    pub stderr: f64,
    pub expected: f64,
}

impl CrossMoment {
    /// Deviation in standard errors; zero when the estimate is exact.
    pub fn z_score(&self) -> f64 {
        let err = (self.value - self.expected).abs();
        if err == 0.0 {
            0.0
        } else {
            err / self.stderr
        }
    }
}

const CROSS_CHUNK: usize = 4096;

/// `E[J_n J_m]` for every pair `n ≤ m` of `space` (graded order) from
/// `n_samples` exact-increment paths. Work is split into fixed chunks of
/// path indices, so the result does not depend on the thread count.
pub fn cross_moments(space: &Arc<ChaosSpace>, n_samples: usize, seed: u64) -> Result<Vec<CrossMoment>> {
    if n_samples < 2 {
        return Err(Error::Domain("cross moments need at least two samples".into()));
    }
    let sampler = IncrementSampler::new(space.partition());
    let m = space.len();
    let pairs = m * (m + 1) / 2;
    let chunks = n_samples.div_ceil(CROSS_CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(0.0, 0.0); pairs];
            let end = ((c + 1) * CROSS_CHUNK).min(n_samples);
            for i in c * CROSS_CHUNK..end {
                let values = basis_eval_all(space, &sampler.increments(seed, i as u64))?;
                let mut p = 0;
                for a in 0..m {
                    for b in a..m {
                        let v = values[a] * values[b];
                        acc[p].0 += v;
                        acc[p].1 += v * v;
                        p += 1;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let n = n_samples as f64;
    let mut out = Vec::with_capacity(pairs);
    let mut p = 0;
    for a in 0..m {
        for b in a..m {
            let sum = pairwise_sum(&partial.iter().map(|c| c[p].0).collect::<Vec<_>>());
            let sq = pairwise_sum(&partial.iter().map(|c| c[p].1).collect::<Vec<_>>());
            let mean = sum / n;
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            out.push(CrossMoment {
                left: space.indices()[a].clone(),
                right: space.indices()[b].clone(),
                value: mean,
                stderr: (var / n).sqrt(),
                expected: if a == b { space.norms()[a] } else { 0.0 },
            });
            p += 1;
        }
    }
    Ok(out)
}

/// `left,right,value,expected,stderr,z`.
pub fn write_cross_moments_csv<W: Write>(moments: &[CrossMoment], mut w: W) -> Result<()> {
    writeln!(w, "left,right,value,expected,stderr,z")?;
    for c in moments {
        writeln!(w, "{},{},{},{},{},{}", c.left, c.right, c.value, c.expected, c.stderr, c.z_score())?;
    }
    Ok(())
}
