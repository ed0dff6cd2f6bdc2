use std::io::Write;
use std::sync::Arc;

use gamma_noise::model::{Partition, StepFunction};
use gamma_noise::rng::{derive_seed, stream, StreamRng};
use gamma_noise::wick::{ChaosElement, ChaosSpace};
use rand::Rng;

use crate::config::RunConfig;
use crate::report::{Relation, Report};

/// Small integer S-coefficients: every product stays exactly representable.
fn integer_element(space: &Arc<ChaosSpace>, rng: &mut StreamRng) -> ChaosElement {
    let s = (0..space.len()).map(|_| f64::from(rng.random_range(-3i32..=3))).collect();
    ChaosElement::from_s_coeffs(space, s).expect("sized to the space")
}

/// `c_0 = ±2^{-k}`, `k ≤ 3`, and a few `±1` coefficients: the inverse has
/// dyadic coefficients of moderate size, so `φ ◇ φ^{-1}` is computed exactly.
fn dyadic_element(space: &Arc<ChaosSpace>, rng: &mut StreamRng) -> ChaosElement {
    let mut s = vec![0.0; space.len()];
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    s[0] = sign * 0.5f64.powi(rng.random_range(0..=3));
    for _ in 0..6 {
        let at = rng.random_range(1..space.len());
        s[at] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    ChaosElement::from_s_coeffs(space, s).expect("sized to the space")
}

fn real_element(space: &Arc<ChaosSpace>, rng: &mut StreamRng, min_c0: f64, max_degree: usize) -> ChaosElement {
    let s = space
        .indices()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            if i == 0 {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random_range(min_c0..=2.0)
            } else if n.degree() <= max_degree {
                rng.random_range(-1.0..1.0) * 0.5f64.powi(n.degree() as i32)
            } else {
                0.0
            }
        })
        .collect();
    ChaosElement::from_s_coeffs(space, s).expect("sized to the space")
}

fn mismatches(a: &ChaosElement, b: &ChaosElement) -> usize {
    a.s_coeffs().iter().zip(b.s_coeffs()).filter(|(x, y)| x != y).count()
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.wick;
    let trials = super::samples(cfg, c.samples, 1)?;
    let cells = cfg.cells.unwrap_or(c.cells);
    let degree = cfg.degree.unwrap_or(c.degree);
    if degree == 0 {
        return Err(crate::invalid("wick self-test needs degree ≥ 1"));
    }
    let partition = Partition::uniform(cells, c.horizon).map_err(|e| crate::invalid(format!("wick partition: {e}")))?;
    let space = ChaosSpace::new(partition, degree);
    let one = ChaosElement::one(&space);

    let ring_seed = derive_seed(cfg.seed, "wick/ring");
    let inv_seed = derive_seed(cfg.seed, "wick/inverse");
    let real_seed = derive_seed(cfg.seed, "wick/real-inverse");
    let mult_seed = derive_seed(cfg.seed, "wick/multiplicative");

    let mut rows = Vec::with_capacity(trials);
    let (mut comm, mut assoc, mut distr, mut inv_exact) = (0, 0, 0, 0);
    let (mut worst_rounding, mut worst_mult): (f64, f64) = (0.0, 0.0);
    for i in 0..trials as u64 {
        let mut rng = stream(ring_seed, i);
        let (x, y, z) = (
            integer_element(&space, &mut rng),
            integer_element(&space, &mut rng),
            integer_element(&space, &mut rng),
        );
        let xy = x.wick_mul(&y)?;
        let m_comm = mismatches(&xy, &y.wick_mul(&x)?);
        let m_assoc = mismatches(&xy.wick_mul(&z)?, &x.wick_mul(&y.wick_mul(&z)?)?);
        let m_distr = mismatches(&x.wick_mul(&y.checked_add(&z)?)?, &xy.checked_add(&x.wick_mul(&z)?)?);

        let phi = dyadic_element(&space, &mut stream(inv_seed, i));
        let m_inv = mismatches(&phi.wick_mul(&phi.wick_inv()?)?, &one);

        // real coefficients: residual against the rounding scale of the product
        let psi = real_element(&space, &mut stream(real_seed, i), c.min_constant, degree);
        let inv = psi.wick_inv()?;
        let (prod, _) = space.product(psi.s_coeffs(), inv.s_coeffs());
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
        let (scale, _) = space.product(&abs(psi.s_coeffs()), &abs(inv.s_coeffs()));
        let rounding = prod
            .iter()
            .zip(&scale)
            .enumerate()
            .map(|(k, (p, b))| (p - if k == 0 { 1.0 } else { 0.0 }).abs() / (f64::EPSILON * b))
            .fold(0.0, f64::max);

        // S-transform factorization where the product is not truncated
        let mut rng = stream(mult_seed, i);
        let half = degree / 2;
        let (a, b) = (real_element(&space, &mut rng, 0.0, half), real_element(&space, &mut rng, 0.0, degree - half));
        let lambdas = (0..cells).map(|_| rng.random_range(-0.9..0.9)).collect();
        let theta = StepFunction::new(space.partition().clone(), lambdas)?;
        let ab = a.wick_mul(&b)?;
        let expected = a.s_transform(&theta)? * b.s_transform(&theta)?;
        let mult = (ab.s_transform(&theta)? - expected).abs() / (1.0 + expected.abs()) + ab.truncation_loss();

        comm += m_comm;
        assoc += m_assoc;
        distr += m_distr;
        inv_exact += m_inv;
        worst_rounding = worst_rounding.max(rounding);
        worst_mult = worst_mult.max(mult);
        rows.push((i, m_comm, m_assoc, m_distr, m_inv, rounding, mult));
    }
    report.check("commutativity_mismatches", comm as f64, Relation::AtMost, 0.0);
    report.check("associativity_mismatches", assoc as f64, Relation::AtMost, 0.0);
    report.check("distributivity_mismatches", distr as f64, Relation::AtMost, 0.0);
    report.check("inverse_mismatches", inv_exact as f64, Relation::AtMost, 0.0);
    // forward error of N + 1 convolution levels, each a sum of at most
    // Π (n_k + 1) products
    let longest = space
        .indices()
        .iter()
        .map(|n| (0..n.dim()).map(|k| n.get(k) + 1).product::<usize>())
        .max()
        .unwrap_or(1);
    let rounding_bound = ((degree + 1) * longest) as f64;
    report.check("inverse_rounding_units", worst_rounding, Relation::AtMost, rounding_bound);
    report.check("s_transform_factorization", worst_mult, Relation::AtMost, c.multiplicative_tol);
    report.value("trials", trials);
    report.value("cells", cells);
    report.value("degree", degree);
    report.value("space_size", space.len());
    report.artifact("wick_selftest.csv", |w| {
        writeln!(
            w,
            "trial,commutativity_mismatches,associativity_mismatches,distributivity_mismatches,inverse_mismatches,inverse_rounding_units,s_transform_factorization"
        )?;
        for (i, comm, assoc, distr, inv, rounding, mult) in &rows {
            writeln!(w, "{i},{comm},{assoc},{distr},{inv},{rounding},{mult}")?;
        }
        Ok(())
    })
}
