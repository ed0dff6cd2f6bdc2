use std::io::Write;

use gamma_noise::chaos::{
    appell_family, cell_norm, compose_with_alpha, cross_moments, laguerre_all, laguerre_family,
    write_cross_moments_csv, write_family_csv, write_norm_csv,
};
use gamma_noise::model::Partition;
use gamma_noise::quadrature::gauss_laguerre;
use gamma_noise::rng::derive_seed;
use gamma_noise::wick::ChaosSpace;

use crate::config::RunConfig;
use crate::report::{Relation, Report};

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.ortho;
    if c.shapes.iter().any(|&t| !(t > 0.0)) {
        return Err(crate::invalid("ortho.shapes must be positive"));
    }

    // E[L_n L_m] under the Γ(t) law by generalized Gauss-Laguerre quadrature
    let mut quad_rows = Vec::new();
    let mut worst_quad: f64 = 0.0;
    for &t in &c.shapes {
        let rule = gauss_laguerre(c.nodes, t)?;
        let values: Vec<Vec<f64>> = rule
            .nodes
            .iter()
            .map(|&s| laguerre_all(c.max_degree, t, s))
            .collect::<Result<_, _>>()?;
        for n in 0..=c.max_degree {
            for m in 0..=c.max_degree {
                let e: f64 = values.iter().zip(&rule.weights).map(|(v, w)| w * v[n] * v[m]).sum();
                let nu = cell_norm(n, t);
                let want = if n == m { nu } else { 0.0 };
                let scaled = (e - want).abs() / nu.max(1.0);
                worst_quad = worst_quad.max(scaled);
                quad_rows.push((t, n, m, e, want, scaled));
            }
        }
    }
    report.check("quadrature_orthogonality", worst_quad, Relation::AtMost, c.quadrature_tol);

    // Appell family composed with λ/(λ-1) against the Laguerre coefficients
    let mut alpha_rows = Vec::new();
    let mut worst_alpha: f64 = 0.0;
    let mut families = Vec::new();
    for &t in &c.shapes {
        let composed = compose_with_alpha(&appell_family(c.alpha_degree, t)?, c.alpha_degree)?;
        let lag = laguerre_family(c.alpha_degree, t)?;
        for (n, (a, b)) in composed.iter().zip(&lag).enumerate() {
            let len = a.coeffs.len().max(b.coeffs.len());
            for k in 0..len {
                let x = a.coeffs.get(k).copied().unwrap_or(0.0);
                let y = b.coeffs.get(k).copied().unwrap_or(0.0);
                worst_alpha = worst_alpha.max((x - y).abs());
                alpha_rows.push((t, n, k, x, y));
            }
        }
        families.push(lag);
    }
    report.check("alpha_composition", worst_alpha, Relation::AtMost, c.alpha_tol);

    // Monte Carlo cross moments of the multi-index basis
    let partition = match cfg.cells {
        Some(d) => Partition::uniform(d, c.partition.horizon()).map_err(|e| crate::invalid(format!("--cells: {e}")))?,
        None => c.partition.clone(),
    };
    let space = ChaosSpace::new(partition, cfg.degree.unwrap_or(c.mc_degree));
    let n = super::samples(cfg, c.samples, 2)?;
    let moments = cross_moments(&space, n, derive_seed(cfg.seed, "ortho/cross-moments"))?;
    let worst_z = moments.iter().map(|m| m.z_score()).fold(0.0, f64::max);
    report.check("max_cross_moment_z", worst_z, Relation::AtMost, c.sigmas);

    report.value("samples", n);
    report.value("cells", space.partition().cells());
    report.value("degree", space.degree());
    report.value("pairs", moments.len());

    report.artifact("ortho_quadrature.csv", |w| {
        writeln!(w, "t,n,m,value,expected,scaled_error")?;
        for (t, n, m, e, want, scaled) in &quad_rows {
            writeln!(w, "{t},{n},{m},{e},{want},{scaled}")?;
        }
        Ok(())
    })?;
    report.artifact("ortho_alpha.csv", |w| {
        writeln!(w, "t,n,k,composed,laguerre")?;
        for (t, n, k, x, y) in &alpha_rows {
            writeln!(w, "{t},{n},{k},{x},{y}")?;
        }
        Ok(())
    })?;
    for (i, fam) in families.iter().enumerate() {
        report.artifact(&format!("laguerre_shape_{i}.csv"), |w| Ok(write_family_csv(fam, w)?))?;
    }
    report.artifact("ortho_norms.csv", |w| Ok(write_norm_csv(&space, w)?))?;
    report.artifact("ortho_cross_moments.csv", |w| Ok(write_cross_moments_csv(&moments, w)?))
}
