use std::io::Write;

use gamma_noise::model::{cf_real, StepSpec};
use gamma_noise::rng::derive_seed;
use gamma_noise::sampler::{increment_cf, McEstimate};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{Relation, Report};

#[derive(Serialize)]
struct Row {
    theta: StepSpec,
    closed_re: f64,
    closed_im: f64,
    estimate: McEstimate,
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.cf_check;
    let n = super::samples(cfg, c.samples, 2)?;
    if c.thetas.is_empty() {
        return Err(crate::invalid("cf_check.thetas is empty"));
    }
    let mut rows = Vec::with_capacity(c.thetas.len());
    for (i, step) in c.thetas.iter().enumerate() {
        let theta = step
            .step_function()
            .map_err(|e| crate::invalid(format!("cf_check.thetas[{i}]: {e}")))?
            .ok_or_else(|| crate::invalid(format!("cf_check.thetas[{i}] has no values")))?;
        let closed = cf_real(&theta);
        let est = increment_cf(&theta, n, derive_seed(cfg.seed, &format!("cf-check/{i}")));
        report.check(
            format!("theta_{i}_abs_error"),
            (est.value - closed).norm(),
            Relation::AtMost,
            c.sigmas * est.stderr,
        );
        report.value(&format!("theta_{i}"), theta.to_string());
        rows.push(Row { theta: step.clone(), closed_re: closed.re, closed_im: closed.im, estimate: est });
    }
    report.value("samples", n);
    report.artifact("cf_check.csv", |w| {
        writeln!(w, "theta_index,closed_re,closed_im,value_re,value_im,stderr,abs_error,z")?;
        for (i, r) in rows.iter().enumerate() {
            let closed = num_complex::Complex64::new(r.closed_re, r.closed_im);
            let e = &r.estimate;
            writeln!(
                w,
                "{i},{},{},{},{},{},{},{}",
                r.closed_re,
                r.closed_im,
                e.value.re,
                e.value.im,
                e.stderr,
                (e.value - closed).norm(),
                e.z_score(closed)
            )?;
        }
        Ok(())
    })?;
    report.json_artifact("cf_estimates.json", &rows)
}
