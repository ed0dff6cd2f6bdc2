use std::io::Write;

use gamma_noise::model::{cf_real, Partition};
use gamma_noise::rng::derive_seed;
use gamma_noise::sampler::{
    empirical_cf, increment_cf, truncation_bias_bound, GammaPath, IncrementSampler, JumpSampler,
};
use gamma_noise::stats::{ks_two_sample, mean_stderr};
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Relation, Report};

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.levy_check;
    let n = super::samples(cfg, c.samples, 2)?;
    let span = Partition::new(vec![0.0, c.horizon]).map_err(|e| crate::invalid(format!("levy_check.horizon: {e}")))?;
    let jumps = JumpSampler::new(c.horizon, c.delta).map_err(|e| crate::invalid(format!("levy_check.delta: {e}")))?;
    let theta = c
        .theta
        .step_function()
        .map_err(|e| crate::invalid(format!("levy_check.theta: {e}")))?
        .ok_or_else(|| crate::invalid("levy_check.theta has no values"))?;
    if theta.partition().horizon() > c.horizon {
        return Err(crate::invalid("levy_check.theta extends past the horizon"));
    }

    let exact: Vec<f64> = IncrementSampler::new(&span)
        .batch(n, derive_seed(cfg.seed, "levy-check/increments"))
        .iter()
        .map(GammaPath::total)
        .collect();
    let jump_paths = jumps.batch(n, derive_seed(cfg.seed, "levy-check/jumps"));
    let truncated: Vec<f64> = jump_paths.iter().map(GammaPath::total).collect();
    let counts: Vec<f64> = jump_paths
        .iter()
        .map(|p| match p {
            GammaPath::Jumps { jumps, .. } => jumps.len() as f64,
            GammaPath::Increments { .. } => unreachable!("jump sampler output"),
        })
        .collect();
    let bad_jumps = jump_paths
        .iter()
        .flat_map(|p| match p {
            GammaPath::Jumps { jumps, .. } => jumps.as_slice(),
            GammaPath::Increments { .. } => &[],
        })
        .filter(|j| !(j.size > c.delta && (0.0..=c.horizon).contains(&j.time)))
        .count();

    let ks = ks_two_sample(&exact, &truncated);
    report.check("ks_p_value", ks.p_value, Relation::Above, c.ks_min_p);

    let expected = jumps.expected_jumps();
    let (mean_count, count_se) = mean_stderr(&counts);
    report.check("jump_count_abs_error", (mean_count - expected).abs(), Relation::AtMost, c.count_sigmas * count_se);
    report.check("invalid_jumps", bad_jumps as f64, Relation::AtMost, 0.0);

    let inc_cf = increment_cf(&theta, n, derive_seed(cfg.seed, "levy-check/cf"));
    let jump_cf = empirical_cf(&jump_paths, &theta)?;
    let bias = truncation_bias_bound(&theta, c.delta)?;
    report.check(
        "two_sampler_cf_difference",
        (inc_cf.value - jump_cf.value).norm(),
        Relation::AtMost,
        c.cf_sigmas * inc_cf.stderr.hypot(jump_cf.stderr) + bias,
    );

    report.value("samples", n);
    report.value("ks_statistic", ks.statistic);
    report.value("expected_jumps", expected);
    report.value("mean_jumps", mean_count);
    report.value("truncation_bias", jumps.truncation_bias());
    report.value("cf_truncation_bias_bound", bias);

    let mut a = exact.clone();
    let mut b = truncated.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    report.artifact("levy_qq.csv", |w| {
        writeln!(w, "p,increment_quantile,jump_quantile")?;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            writeln!(w, "{p},{},{}", quantile(&a, p), quantile(&b, p))?;
        }
        Ok(())
    })?;

    let max_count = counts.iter().fold(0.0f64, |m, &c| m.max(c)) as usize;
    let mut histogram = vec![0usize; max_count + 1];
    for &k in &counts {
        histogram[k as usize] += 1;
    }
    report.artifact("levy_counts.csv", |w| {
        writeln!(w, "count,observed_fraction,poisson_pmf")?;
        let mut pmf = (-expected).exp();
        for (k, &h) in histogram.iter().enumerate() {
            if k > 0 {
                pmf *= expected / k as f64;
            }
            writeln!(w, "{k},{},{pmf}", h as f64 / n as f64)?;
        }
        Ok(())
    })?;

    let closed = cf_real(&theta);
    report.json_artifact(
        "levy_estimates.json",
        &json!({
            "theta": theta.to_string(),
            "closed_re": closed.re,
            "closed_im": closed.im,
            "increment": inc_cf,
            "jump": jump_cf,
            "delta": c.delta,
            "truncation_bias": jumps.truncation_bias(),
        }),
    )
}
