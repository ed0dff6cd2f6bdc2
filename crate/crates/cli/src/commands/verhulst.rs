use std::io::Write;

use gamma_noise::chaos::MultiIndex;
use gamma_noise::model::Partition;
use gamma_noise::verhulst::{
    closed_form_trajectory, integral_residual, logistic, moment_report, ode_solve, richardson_error,
    write_coefficients_csv, write_moments_csv, Trajectory, VerhulstConfig,
};
use gamma_noise::wick::{ChaosElement, ChaosSpace};

use crate::config::RunConfig;
use crate::report::{Relation, Report};

fn max_mean_error(traj: &Trajectory, y0: f64, rate: f64) -> f64 {
    moment_report(traj)
        .iter()
        .map(|row| (row.mean - logistic(y0, rate, row.t)).abs())
        .fold(0.0, f64::max)
}

/// Largest coefficient distance from the constant element 1.
fn distance_from_one(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .flat_map(|y| y.s_coeffs().iter().enumerate().map(|(i, &s)| (s - if i == 0 { 1.0 } else { 0.0 }).abs()))
        .fold(0.0, f64::max)
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.verhulst;
    let cells = cfg.cells.unwrap_or(c.cells);
    let degree = cfg.degree.unwrap_or(c.degree);
    let partition = Partition::uniform(cells, c.horizon).map_err(|e| crate::invalid(format!("verhulst partition: {e}")))?;
    let space = ChaosSpace::new(partition, degree);
    let terms = match &c.y0 {
        Some(t) => t.clone(),
        None => vec![(MultiIndex::zero(cells), 0.5), (MultiIndex::unit(cells, 0), 0.1)],
    };
    let y0 = ChaosElement::from_terms(&space, &terms).map_err(|e| crate::invalid(format!("verhulst.y0: {e}")))?;
    if !(c.t_step > 0.0) {
        return Err(crate::invalid("verhulst.t_step must be positive"));
    }
    let steps = (c.horizon / c.t_step).round() as usize;
    let t_grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * c.t_step).min(c.horizon)).collect();
    let problem = VerhulstConfig { r: c.r, a: c.a, y0, t_grid, dt: c.dt, loss_bound: c.loss_bound };
    problem.validate().map_err(|e| crate::invalid(format!("verhulst: {e}")))?;
    let mean0 = problem.y0.expectation();

    let closed = closed_form_trajectory(&problem)?;
    let ode = ode_solve(&problem)?;
    let sup = closed.sup_distance(&ode);
    report.check("sup_coefficient_discrepancy", sup, Relation::AtMost, c.sup_tol);
    report.check("step_halving_error", richardson_error(&problem)?, Relation::AtMost, c.sup_tol);
    report.check("mean_vs_logistic_closed", max_mean_error(&closed, mean0, c.r + c.a), Relation::AtMost, c.mean_tol);
    report.check("mean_vs_logistic_ode", max_mean_error(&ode, mean0, c.r + c.a), Relation::AtMost, c.mean_tol);
    report.check(
        "integral_residual",
        integral_residual(&problem, c.residual_nodes)?,
        Relation::AtMost,
        c.residual_tol,
    );

    // without noise and with a deterministic start the equation is scalar
    let mut quiet = problem.clone();
    quiet.a = 0.0;
    quiet.y0 = ChaosElement::constant(&space, mean0);
    let (quiet_closed, quiet_ode) = (closed_form_trajectory(&quiet)?, ode_solve(&quiet)?);
    let quiet_err = max_mean_error(&quiet_closed, mean0, c.r).max(max_mean_error(&quiet_ode, mean0, c.r));
    report.check("noise_free_vs_logistic", quiet_err, Relation::AtMost, c.mean_tol);
    let quiet_var = moment_report(&quiet_closed)
        .iter()
        .chain(&moment_report(&quiet_ode))
        .map(|r| r.variance.abs())
        .fold(0.0, f64::max);
    report.check("noise_free_variance", quiet_var, Relation::AtMost, 0.0);

    let mut fixed = problem.clone();
    fixed.y0 = ChaosElement::one(&space);
    let fixed_err = distance_from_one(&closed_form_trajectory(&fixed)?).max(distance_from_one(&ode_solve(&fixed)?));
    report.check("unit_start_constant", fixed_err, Relation::AtMost, 0.0);

    let max_loss = |t: &Trajectory| t.losses.iter().copied().fold(0.0, f64::max);
    report.value("cells", cells);
    report.value("degree", degree);
    report.value("space_size", space.len());
    report.value("max_truncation_loss_closed", max_loss(&closed));
    report.value("max_truncation_loss_ode", max_loss(&ode));

    report.artifact("verhulst_moments.csv", |w| Ok(write_moments_csv(&moment_report(&closed), w)?))?;
    report.artifact("verhulst_ode_moments.csv", |w| Ok(write_moments_csv(&moment_report(&ode), w)?))?;
    report.artifact("verhulst_comparison.csv", |w| {
        writeln!(w, "t,discrepancy,mean,logistic_mean")?;
        for ((t, a), b) in closed.times.iter().zip(&closed.states).zip(&ode.states) {
            let d = a.s_coeffs().iter().zip(b.s_coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            writeln!(w, "{t},{d},{},{}", a.expectation(), logistic(mean0, c.r + c.a, *t))?;
        }
        Ok(())
    })?;
    if c.coefficients {
        report.artifact("verhulst_coefficients.csv", |w| Ok(write_coefficients_csv(&closed, w)?))?;
    }
    Ok(())
}
