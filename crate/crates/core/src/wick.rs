//! Truncated chaos elements and the Wick algebra.
//!
//! An element `Φ = Σ_n c_n J_n` is stored through its S-coefficients
//! `ŝ_n = ν_n c_n`, the coefficients of its S-transform
//! `S Φ(θ) = Σ_n ŝ_n Π_k λ_k^{n_k}` as a polynomial in the step values of `θ`.
//! The Wick product is multiplication of S-transforms, so every Wick
//! operation here is truncated multivariate power-series arithmetic on the
//! S-coefficients. Products drop total degrees above `N`; the sum of the
//! absolute values of every dropped coefficient is kept as the element's
//! truncation loss.

use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::chaos::{cell_norm, graded_indices, graded_rank, index_count};
use crate::error::{Error, Result};
use crate::model::{Partition, StepFunction};

pub use crate::chaos::MultiIndex;

const NO_TARGET: u32 = u32::MAX;

/// Partition, truncation degree and the derived index tables shared by all
/// elements of one truncated chaos space.
pub struct ChaosSpace {
    partition: Partition,
    degree: usize,
    indices: Vec<MultiIndex>,
    degrees: Vec<usize>,
    norms: Vec<f64>,
    tables: OnceLock<Tables>,
}

struct Tables {
    /// Number of indices of degree `≤ 2N`.
    extended_len: usize,
    /// `pair[i * len + j]`: graded rank of `n_i + n_j`.
    pair: Vec<u32>,
    /// `shift[i * d + k]`: rank of `n_i + e_k`, or `NO_TARGET` above degree `N`.
    shift: Vec<u32>,
}

impl fmt::Debug for ChaosSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChaosSpace")
            .field("partition", &self.partition)
            .field("degree", &self.degree)
            .field("len", &self.indices.len())
            .finish()
    }
}

impl PartialEq for ChaosSpace {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.partition == other.partition
    }
}

impl ChaosSpace {
    pub fn new(partition: Partition, degree: usize) -> Arc<Self> {
        let d = partition.cells();
        let indices = graded_indices(d, degree);
        let degrees = indices.iter().map(MultiIndex::degree).collect();
        let lengths = partition.lengths();
        let norms = indices
            .iter()
            .map(|n| (0..d).map(|k| cell_norm(n.get(k), lengths[k])).product())
            .collect();
        Arc::new(ChaosSpace { partition, degree, indices, degrees, norms, tables: OnceLock::new() })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Truncation degree `N`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Position of `n`, if it belongs to the space.
    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        (n.dim() == self.partition.cells() && n.degree() <= self.degree).then(|| graded_rank(n))
    }

    fn tables(&self) -> &Tables {
        self.tables.get_or_init(|| {
            let len = self.len();
            let d = self.partition.cells();
            let mut pair = Vec::with_capacity(len * len);
            for a in &self.indices {
                for b in &self.indices {
                    pair.push(graded_rank(&a.add(b)) as u32);
                }
            }
            let mut shift = Vec::with_capacity(len * d);
            for n in &self.indices {
                for k in 0..d {
                    let target = if n.degree() < self.degree {
                        graded_rank(&n.add(&MultiIndex::unit(d, k))) as u32
                    } else {
                        NO_TARGET
                    };
                    shift.push(target);
                }
            }
            Tables { extended_len: index_count(d, 2 * self.degree), pair, shift }
        })
    }

    /// Truncated S-polynomial product; returns the kept coefficients and the
    /// sum of `|dropped coefficient|` over degrees `N+1 .. 2N`.
    pub fn product(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let len = self.len();
        let t = self.tables();
        let mut acc = vec![0.0; t.extended_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &t.pair[i * len..(i + 1) * len];
            for (j, &y) in b.iter().enumerate() {
                if y != 0.0 {
                    acc[row[j] as usize] += x * y;
                }
            }
        }
        let loss = acc[len..].iter().map(|v| v.abs()).sum();
        acc.truncate(len);
        (acc, loss)
    }

    /// Multiplies the S-polynomial by `λ_k`, dropping degree `N` terms;
    /// returns the result and the dropped absolute mass.
    pub fn shift(&self, a: &[f64], k: usize) -> (Vec<f64>, f64) {
        let d = self.partition.cells();
        let t = self.tables();
        let mut out = vec![0.0; self.len()];
        let mut loss = 0.0;
        for (i, &x) in a.iter().enumerate() {
            match t.shift[i * d + k] {
                NO_TARGET => loss += x.abs(),
                j => out[j as usize] += x,
            }
        }
        (out, loss)
    }
}

/// Finite Laguerre-chaos expansion truncated at total degree `N`.
#[derive(Debug, Clone)]
pub struct ChaosElement {
    space: Arc<ChaosSpace>,
    s: Vec<f64>,
    loss: f64,
}

impl PartialEq for ChaosElement {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.s == other.s
    }
}

fn same_space(a: &ChaosElement, b: &ChaosElement) -> Result<()> {
    if Arc::ptr_eq(&a.space, &b.space) || a.space == b.space {
        return Ok(());
    }
    if a.space.degree != b.space.degree {
        return Err(Error::TruncationMismatch { left: a.space.degree, right: b.space.degree });
    }
    Err(Error::PartitionMismatch("chaos elements on different partitions".into()))
}

impl ChaosElement {
    pub fn from_s_coeffs(space: &Arc<ChaosSpace>, s: Vec<f64>) -> Result<Self> {
        if s.len() != space.len() {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                space.len(),
                s.len()
            )));
        }
        Ok(ChaosElement { space: Arc::clone(space), s, loss: 0.0 })
    }

    pub fn from_j_coeffs(space: &Arc<ChaosSpace>, c: Vec<f64>) -> Result<Self> {
        if c.len() != space.len() {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                space.len(),
                c.len()
            )));
        }
        let s = c.iter().zip(space.norms()).map(|(c, nu)| c * nu).collect();
        Ok(ChaosElement { space: Arc::clone(space), s, loss: 0.0 })
    }

    /// Builds `Σ c_n J_n` from `(n, c_n)` pairs; entries must be distinct.
    pub fn from_terms(space: &Arc<ChaosSpace>, terms: &[(MultiIndex, f64)]) -> Result<Self> {
        let mut c = vec![0.0; space.len()];
        let mut seen = vec![false; space.len()];
        for (n, v) in terms {
            let p = space.position(n).ok_or_else(|| {
                Error::InvalidMultiIndex(format!(
                    "{n} is outside the space (d = {}, N = {})",
                    space.partition.cells(),
                    space.degree
                ))
            })?;
            if seen[p] {
                return Err(Error::InvalidMultiIndex(format!("{n} appears twice")));
            }
            seen[p] = true;
            c[p] = *v;
        }
        Self::from_j_coeffs(space, c)
    }

    pub fn constant(space: &Arc<ChaosSpace>, value: f64) -> Self {
        let mut s = vec![0.0; space.len()];
        s[0] = value;
        ChaosElement { space: Arc::clone(space), s, loss: 0.0 }
    }

    pub fn zero(space: &Arc<ChaosSpace>) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn one(space: &Arc<ChaosSpace>) -> Self {
        Self::constant(space, 1.0)
    }

    /// The basis element `J_n`.
    pub fn basis(space: &Arc<ChaosSpace>, n: &MultiIndex) -> Result<Self> {
        Self::from_terms(space, &[(n.clone(), 1.0)])
    }

    pub fn space(&self) -> &Arc<ChaosSpace> {
        &self.space
    }

    pub fn partition(&self) -> &Partition {
        &self.space.partition
    }

    pub fn degree(&self) -> usize {
        self.space.degree
    }

    /// `ŝ_n = ν_n c_n`, in graded order.
    pub fn s_coeffs(&self) -> &[f64] {
        &self.s
    }

    /// `c_n`, in graded order.
    pub fn j_coeffs(&self) -> Vec<f64> {
        self.s.iter().zip(self.space.norms()).map(|(s, nu)| s / nu).collect()
    }

    pub fn j_coeff(&self, n: &MultiIndex) -> f64 {
        self.space.position(n).map_or(0.0, |p| self.s[p] / self.space.norms[p])
    }

    pub fn s_coeff(&self, n: &MultiIndex) -> f64 {
        self.space.position(n).map_or(0.0, |p| self.s[p])
    }

    /// Accumulated truncation loss of the operations that produced this element.
    pub fn truncation_loss(&self) -> f64 {
        self.loss
    }

    /// Highest total degree with a nonzero coefficient.
    pub fn effective_degree(&self) -> usize {
        self.s
            .iter()
            .rposition(|&v| v != 0.0)
            .map_or(0, |p| self.space.degrees[p])
    }

    /// `E Φ = c_0 = S Φ(0)`.
    pub fn expectation(&self) -> f64 {
        self.s[0]
    }

    /// `Σ_{n≠0} c_n² ν_n`.
    pub fn variance(&self) -> f64 {
        self.s
            .iter()
            .zip(self.space.norms())
            .skip(1)
            .map(|(s, nu)| s * s / nu)
            .sum()
    }

    fn with(&self, s: Vec<f64>, loss: f64) -> Self {
        ChaosElement { space: Arc::clone(&self.space), s, loss }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        same_space(self, other)?;
        let s = self.s.iter().zip(&other.s).map(|(a, b)| a + b).collect();
        Ok(self.with(s, self.loss + other.loss))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        same_space(self, other)?;
        let s = self.s.iter().zip(&other.s).map(|(a, b)| a - b).collect();
        Ok(self.with(s, self.loss + other.loss))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.with(self.s.iter().map(|v| v * factor).collect(), self.loss * factor.abs())
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut s = self.s.clone();
        s[0] += value;
        self.with(s, self.loss)
    }

    /// `S Φ(θ) = Σ_n ŝ_n Π_k λ_k^{n_k}`.
    pub fn s_transform(&self, theta: &StepFunction) -> Result<f64> {
        if theta.partition() != self.partition() {
            return Err(Error::PartitionMismatch("test function lives on another partition".into()));
        }
        let n_max = self.space.degree;
        let powers: Vec<Vec<f64>> = theta
            .values()
            .iter()
            .map(|&l| {
                std::iter::successors(Some(1.0), |p| Some(p * l))
                    .take(n_max + 1)
                    .collect()
            })
            .collect();
        Ok(self
            .space
            .indices
            .iter()
            .zip(&self.s)
            .map(|(n, &s)| s * (0..n.dim()).map(|k| powers[k][n.get(k)]).product::<f64>())
            .sum())
    }

    /// `Φ ◇ Ψ`: S-transforms multiply.
    pub fn wick_mul(&self, other: &Self) -> Result<Self> {
        same_space(self, other)?;
        let (s, dropped) = self.space.product(&self.s, &other.s);
        Ok(self.with(s, self.loss + other.loss + dropped))
    }

    /// `Φ^{◇k}`.
    pub fn wick_pow(&self, k: u32) -> Self {
        let mut result = ChaosElement::one(&self.space);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.wick_mul(&base).expect("same space");
            }
            e >>= 1;
            if e > 0 {
                base = base.wick_mul(&base).expect("same space");
            }
        }
        result
    }

    /// `Φ^{◇(-1)}`, the truncated reciprocal of the S-polynomial. Requires
    /// `⟨⟨Φ, 1⟩⟩ = c_0 ≠ 0`.
    pub fn wick_inv(&self) -> Result<Self> {
        let c0 = self.s[0];
        if c0 == 0.0 || !c0.is_finite() {
            return Err(Error::Singular(format!(
                "Wick inverse needs ⟨⟨Φ,1⟩⟩ ≠ 0, got {c0}"
            )));
        }
        // Φ = c0 (1 + h), (1 + h)^{-1} = 1 - h (1 - h (1 - ...)), N levels
        let h = self.scale(1.0 / c0).add_constant(-1.0);
        let one = ChaosElement::one(&self.space);
        let mut inv = one.clone();
        for _ in 0..self.space.degree {
            inv = one.checked_sub(&h.wick_mul(&inv)?)?;
        }
        Ok(inv.scale(1.0 / c0))
    }

    /// Wick exponential: `exp` of the S-polynomial, truncated at `N`.
    pub fn wick_exp(&self) -> Self {
        let c0 = self.s[0];
        let g = self.add_constant(-c0);
        let one = ChaosElement::one(&self.space);
        let mut acc = one.clone();
        for m in (1..=self.space.degree).rev() {
            acc = one
                .checked_add(&g.wick_mul(&acc).expect("same space").scale(1.0 / m as f64))
                .expect("same space");
        }
        acc.scale(c0.exp())
    }

    /// `multiindex,c,nu,s_coeff` in graded order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "multiindex,c,nu,s_coeff")?;
        for ((n, &s), &nu) in self.space.indices.iter().zip(&self.s).zip(&self.space.norms) {
            writeln!(w, "{n},{},{nu},{s}", s / nu)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ChaosElementRepr {
    partition: Partition,
    #[serde(rename = "N")]
    degree: usize,
    coeffs: Vec<(MultiIndex, f64)>,
    #[serde(default)]
    truncation_loss: f64,
}

impl Serialize for ChaosElement {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ChaosElementRepr {
            partition: self.space.partition.clone(),
            degree: self.space.degree,
            coeffs: self.space.indices.iter().cloned().zip(self.j_coeffs()).collect(),
            truncation_loss: self.loss,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ChaosElement {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ChaosElementRepr::deserialize(de)?;
        let space = ChaosSpace::new(repr.partition, repr.degree);
        let mut el = ChaosElement::from_terms(&space, &repr.coeffs).map_err(serde::de::Error::custom)?;
        el.loss = repr.truncation_loss;
        Ok(el)
    }
}

impl Add for &ChaosElement {
    type Output = ChaosElement;

    /// Panics if the operands live in different spaces.
    fn add(self, rhs: &ChaosElement) -> ChaosElement {
        self.checked_add(rhs).expect("chaos elements in different spaces")
    }
}

impl Sub for &ChaosElement {
    type Output = ChaosElement;

    fn sub(self, rhs: &ChaosElement) -> ChaosElement {
        self.checked_sub(rhs).expect("chaos elements in different spaces")
    }
}

impl Mul<f64> for &ChaosElement {
    type Output = ChaosElement;

    fn mul(self, rhs: f64) -> ChaosElement {
        self.scale(rhs)
    }
}

impl Neg for &ChaosElement {
    type Output = ChaosElement;

    fn neg(self) -> ChaosElement {
        self.scale(-1.0)
    }
}
