use std::io::Write;

use gamma_noise::rng::derive_seed;
use gamma_noise::sampler::{boundedness_probe, lln_statistic};
use gamma_noise::stats::median;

use crate::config::RunConfig;
use crate::report::{Relation, Report};

fn order_stat(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * p).round() as usize]
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.lln;
    let n_paths = super::samples(cfg, c.paths, 1)?;
    if !(c.probe_high > c.probe_low && c.probe_low >= 1.0) || c.probe_points_per_decade == 0 || c.probe_paths == 0 {
        return Err(crate::invalid("lln probe needs 1 ≤ probe_low < probe_high, points and paths"));
    }
    let fraction = |tau: f64| lln_statistic(tau, n_paths, c.band, derive_seed(cfg.seed, &format!("lln/{tau}")));

    let long = fraction(c.tau)?;
    report.check("fraction_within_band", long, Relation::AtLeast, c.min_fraction);
    let short = fraction(c.tau_short)?;
    report.check("fraction_within_band_short", short, Relation::Below, c.max_fraction_short);

    let rows: Vec<(f64, f64)> = c
        .report_taus
        .iter()
        .map(|&tau| fraction(tau).map(|f| (tau, f)))
        .collect::<Result<_, _>>()?;
    report.artifact("lln.csv", |w| {
        writeln!(w, "tau,fraction,chebyshev_lower_bound")?;
        for (tau, f) in &rows {
            let bound = (1.0 - 1.0 / (tau * c.band * c.band)).max(0.0);
            writeln!(w, "{tau},{f},{bound}")?;
        }
        Ok(())
    })?;

    let decades = c.probe_high.log10();
    let points = (decades * c.probe_points_per_decade as f64).round() as usize;
    let mut grid: Vec<f64> = (0..=points)
        .map(|j| 10f64.powf(j as f64 / c.probe_points_per_decade as f64))
        .collect();
    grid.push(c.probe_low);
    grid.push(c.probe_high);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    let probe = boundedness_probe(&grid, c.probe_paths, derive_seed(cfg.seed, "lln/probe"))?;

    let low = probe.max_up_to(c.probe_low);
    let high = probe.max_up_to(c.probe_high);
    let (median_low, median_high) = (median(&low), median(&high));
    report.check("median_running_max_high", median_high, Relation::Above, median_low);
    let above = high.iter().filter(|&&m| m > c.probe_level).count() as f64 / high.len() as f64;
    report.check("fraction_running_max_above_level", above, Relation::AtLeast, c.probe_min_fraction);
    let decreasing = probe
        .running_max
        .iter()
        .map(|row| row.windows(2).filter(|w| w[1] < w[0]).count())
        .sum::<usize>();
    report.check("running_max_decreases", decreasing as f64, Relation::AtMost, 0.0);

    report.value("paths", n_paths);
    report.value("probe_paths", c.probe_paths);
    report.value("median_running_max_low", median_low);
    report.artifact("lln_probe.csv", |w| {
        writeln!(w, "tau,median_running_max,q05,q95")?;
        for (j, tau) in probe.tau_grid.iter().enumerate() {
            let col: Vec<f64> = probe.running_max.iter().map(|row| row[j]).collect();
            writeln!(w, "{tau},{},{},{}", median(&col), order_stat(&col, 0.05), order_stat(&col, 0.95))?;
        }
        Ok(())
    })
}
