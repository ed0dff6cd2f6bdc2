use gamma_noise::model::Partition;
use gamma_noise::rng::derive_seed;
use gamma_noise::sampler::{GammaPath, IncrementSampler, JumpSampler};

use crate::config::RunConfig;
use crate::report::{Relation, Report};

fn csv_bytes(path: &GammaPath) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn run(cfg: &RunConfig, report: &mut Report) -> anyhow::Result<()> {
    let c = &cfg.paths;
    let count = super::samples(cfg, c.count, 1)?;
    let partition = match cfg.cells {
        Some(d) => Partition::uniform(d, c.partition.horizon()).map_err(|e| crate::invalid(format!("--cells: {e}")))?,
        None => c.partition.clone(),
    };
    let increments = IncrementSampler::new(&partition);
    let jumps = JumpSampler::new(partition.horizon(), c.delta).map_err(|e| crate::invalid(format!("paths.delta: {e}")))?;
    let inc_seed = derive_seed(cfg.seed, "paths/increments");
    let jump_seed = derive_seed(cfg.seed, "paths/jumps");

    let (mut negative, mut invalid, mut unstable, mut n_jumps) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..count as u64 {
        let inc = increments.path(inc_seed, i);
        let jp = jumps.path(jump_seed, i);
        if let GammaPath::Increments { increments, .. } = &inc {
            negative += increments.iter().filter(|&&g| !(g >= 0.0)).count();
        }
        if let GammaPath::Jumps { jumps: list, .. } = &jp {
            n_jumps += list.len();
            invalid += list
                .iter()
                .filter(|j| !(j.size > c.delta && (0.0..=partition.horizon()).contains(&j.time)))
                .count();
            invalid += list.windows(2).filter(|w| w[1].time < w[0].time).count();
        }
        let (a, b) = (csv_bytes(&inc)?, csv_bytes(&jp)?);
        unstable += usize::from(a != csv_bytes(&increments.path(inc_seed, i))?);
        unstable += usize::from(b != csv_bytes(&jumps.path(jump_seed, i))?);
        report.artifact(&format!("paths/increments_{i:03}.csv"), |w| Ok(std::io::Write::write_all(w, &a)?))?;
        report.artifact(&format!("paths/jumps_{i:03}.csv"), |w| Ok(std::io::Write::write_all(w, &b)?))?;
    }
    report.check("negative_increments", negative as f64, Relation::AtMost, 0.0);
    report.check("invalid_jumps", invalid as f64, Relation::AtMost, 0.0);
    report.check("regeneration_mismatches", unstable as f64, Relation::AtMost, 0.0);
    report.value("paths", count);
    report.value("cells", partition.cells());
    report.value("delta", c.delta);
    report.value("total_jumps", n_jumps);
    report.value("truncation_bias", jumps.truncation_bias());
    Ok(())
}
