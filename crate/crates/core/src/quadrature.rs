//! Numerical integration: a globally adaptive Gauss-Kronrod scheme for the
//! Lévy integrals and Gauss rules built from three-term recurrences.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used for all Lévy-measure integrals.
pub const LEVY_ABS_TOL: f64 = 1e-12;

const MAX_INTERVALS: usize = 4000;

// 15-point Kronrod nodes on [0, 1] (symmetric half) and the embedded
// 7-point Gauss weights at the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over the finite interval `[a, b]`, bisecting the interval
/// with the largest error estimate until the summed estimate drops below
/// `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0, intervals: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    // (lo, hi, value, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&f, lo, hi);
    pieces.push((lo, hi, v, e));
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || pieces.len() >= MAX_INTERVALS {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval cannot be split further in floating point
            pieces.push((pa, pb, gk15(&f, pa, pb).0, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        pieces.push((pa, mid, v1, e1));
        pieces.push((mid, pb, v2, e2));
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value: f64 = pieces.iter().map(|p| p.2).sum();
    let abs_error: f64 = pieces.iter().map(|p| p.3).sum();
    if !value.is_finite() {
        return Err(Error::Domain(format!("integrand is not finite on [{lo}, {hi}]")));
    }
    Ok(Integral { value: sign * value, abs_error, intervals: pieces.len() })
}

/// A Gauss quadrature rule `Σ w_i f(x_i)` for a positive measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Applies a rule for `[-1, 1]` to the interval `[a, b]`.
    pub fn apply_on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self.apply(|x| f(c + h * x))
    }
}

/// Evaluates the orthonormal polynomials at `x`: returns `(p_n, p_n', Σ_{k<n} p_k²)`.
fn orthonormal_at(x: f64, diag: &[f64], offdiag: &[f64], mu0: f64, n: usize) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let back = if k == 0 { 0.0 } else { offdiag[k] };
        let p_next = ((x - diag[k]) * p - back * p_prev) / offdiag[k + 1];
        let dp_next = ((x - diag[k]) * dp + p - back * dp_prev) / offdiag[k + 1];
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p, dp, sum_sq)
}

/// Golub-Welsch construction of the `n`-point Gauss rule for the measure whose
/// monic orthogonal polynomials satisfy `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`
/// and whose total mass is `mu0`. `a` needs `n` entries, `b` needs `n + 1`.
///
/// Nodes are the eigenvalues of the Jacobi matrix, polished by Newton steps on
/// the degree-`n` orthonormal polynomial. The weight of each node is the
/// squared first component of its normalized eigenvector, evaluated through
/// the explicit eigenvector `(p_0(x), ..., p_{n-1}(x))`, which keeps small
/// weights accurate in relative terms.
pub fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> GaussRule {
    let n = a.len();
    assert!(b.len() > n, "need n + 1 recurrence coefficients b_k");
    if n == 0 {
        return GaussRule { nodes: Vec::new(), weights: Vec::new() };
    }
    let offdiag: Vec<f64> = b.iter().map(|v| v.max(0.0).sqrt()).collect();
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            a[i]
        } else if i == j + 1 {
            offdiag[i]
        } else if j == i + 1 {
            offdiag[j]
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (p, dp, _) = orthonormal_at(*x, a, &offdiag, mu0, n);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_at(*x, a, &offdiag, mu0, n);
        weights.push(1.0 / sum_sq);
    }
    GaussRule { nodes, weights }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    let a = vec![0.0; n];
    let b: Vec<f64> = (0..=n)
        .map(|k| {
            let k = k as f64;
            k * k / (4.0 * k * k - 1.0)
        })
        .collect();
    golub_welsch(&a, &b, 2.0)
}

/// `n`-point generalized Gauss-Laguerre rule for the gamma probability weight
/// `s^{shape-1} e^{-s} / Γ(shape)` on `(0, ∞)`.
pub fn gauss_laguerre(n: usize, shape: f64) -> Result<GaussRule> {
    if !(shape > 0.0) {
        return Err(Error::Domain(format!("gamma shape must be positive, got {shape}")));
    }
    let alpha = shape - 1.0;
    let a: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + shape).collect();
    let b: Vec<f64> = (0..=n).map(|k| k as f64 * (k as f64 + alpha)).collect();
    Ok(golub_welsch(&a, &b, 1.0))
}
