use gamma_noise::chaos::MultiIndex;
use gamma_noise::model::Partition;
use gamma_noise::rng::stream;
use gamma_noise::verhulst::{
    closed_form_solution, closed_form_trajectory, integral_residual, logistic, moment_report, ode_solve,
    richardson_error, VerhulstConfig,
};
use gamma_noise::wick::{ChaosElement, ChaosSpace};
use rand::Rng;

fn reference() -> VerhulstConfig {
    VerhulstConfig::reference(4, 6, 1.0, 0.5, 0.5, 0.1).unwrap()
}

#[test]
fn reference_closed_form_matches_ode() {
    let cfg = reference();
    let closed = closed_form_trajectory(&cfg).unwrap();
    let ode = ode_solve(&cfg).unwrap();
    let sup = closed.sup_distance(&ode);
    assert!(sup <= 1e-6, "sup discrepancy {sup}");
    assert!(richardson_error(&cfg).unwrap() <= 1e-6);
}

#[test]
fn reference_mean_is_shifted_logistic() {
    let cfg = reference();
    for traj in [closed_form_trajectory(&cfg).unwrap(), ode_solve(&cfg).unwrap()] {
        for row in moment_report(&traj) {
            let want = logistic(0.5, 1.5, row.t);
            assert!((row.mean - want).abs() <= 1e-8, "t={} {} vs {}", row.t, row.mean, want);
        }
    }
}

#[test]
fn reference_residual_small() {
    let mut cfg = reference();
    cfg.t_grid = vec![0.25, 0.5, 1.0, 1.5, 2.0];
    assert!(integral_residual(&cfg, 16).unwrap() <= 1e-6);
}

/// Largest variance change between neighbouring grid times of spacing `h`.
fn max_variance_step(h: f64) -> f64 {
    let mut cfg = reference();
    let steps = (2.0 / h).round() as usize;
    cfg.t_grid = (0..=steps).map(|i| i as f64 * h).collect();
    let rows = moment_report(&closed_form_trajectory(&cfg).unwrap());
    assert!((rows[0].variance - cfg.y0.variance()).abs() < 1e-15);
    for row in &rows {
        assert!(row.variance.is_finite() && row.variance >= 0.0);
        assert!(row.truncation_loss <= cfg.loss_bound);
    }
    rows.windows(2).map(|w| (w[1].variance - w[0].variance).abs()).fold(0.0, f64::max)
}

#[test]
fn reference_variance_finite_and_continuous() {
    // halving the spacing halves the largest jump: no discontinuity on the grid
    let coarse = max_variance_step(0.01);
    let fine = max_variance_step(0.005);
    let ratio = coarse / fine;
    assert!((1.6..2.4).contains(&ratio), "jump ratio {ratio}");
}

#[test]
fn noise_free_reduces_to_logistic() {
    let space = ChaosSpace::new(Partition::uniform(4, 2.0).unwrap(), 6);
    for y0 in [0.05, 0.5, 0.9, 1.7] {
        let mut cfg = reference();
        cfg.a = 0.0;
        cfg.y0 = ChaosElement::constant(&space, y0);
        let ode = ode_solve(&cfg).unwrap();
        for (&t, y) in cfg.t_grid.iter().zip(&ode.states) {
            let closed = closed_form_solution(&cfg, t).unwrap();
            assert!((closed.expectation() - logistic(y0, 1.0, t)).abs() < 1e-14);
            assert_eq!(closed.variance(), 0.0);
            assert!((y.expectation() - logistic(y0, 1.0, t)).abs() < 1e-10);
            assert_eq!(y.variance(), 0.0);
        }
    }
}

#[test]
fn unit_initial_value_is_constant() {
    let mut cfg = reference();
    cfg.y0 = ChaosElement::one(cfg.space());
    let one = ChaosElement::one(cfg.space());
    for y in closed_form_trajectory(&cfg).unwrap().states.iter().chain(&ode_solve(&cfg).unwrap().states) {
        assert_eq!(y, &one);
    }
}

#[test]
fn random_initial_values_agree() {
    let base = reference();
    let space = base.space().clone();
    for seed in 0..10 {
        let mut rng = stream(20_251, seed);
        let s: Vec<f64> = space
            .indices()
            .iter()
            .map(|n| match n.degree() {
                0 => rng.random_range(0.2..0.8),
                1 | 2 => rng.random_range(-0.05..0.05),
                _ => 0.0,
            })
            .collect();
        let mut cfg = base.clone();
        // small c_0 inflates the inverse and with it the dropped mass
        cfg.loss_bound = 1.0;
        cfg.y0 = ChaosElement::from_s_coeffs(&space, s).unwrap();
        let closed = closed_form_trajectory(&cfg).unwrap();
        let ode = ode_solve(&cfg).unwrap();
        assert!(closed.sup_distance(&ode) <= 1e-6, "seed {seed}: {}", closed.sup_distance(&ode));
    }
}

#[test]
fn ode_depends_continuously_on_initial_value() {
    let base = reference();
    let reference_run = ode_solve(&base).unwrap();
    let mut previous = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6] {
        let mut cfg = base.clone();
        let s: Vec<f64> = base
            .space()
            .indices()
            .iter()
            .zip(base.y0.s_coeffs())
            .map(|(n, v)| if n.degree() <= 1 { v + eps } else { *v })
            .collect();
        cfg.y0 = ChaosElement::from_s_coeffs(base.space(), s).unwrap();
        let change = ode_solve(&cfg).unwrap().sup_distance(&reference_run);
        assert!(change < previous);
        assert!(change <= 100.0 * eps, "eps {eps}: change {change}");
        previous = change;
    }
}

#[test]
fn refinement_keeps_moments() {
    let coarse = reference();
    let fine_space = ChaosSpace::new(Partition::uniform(8, 2.0).unwrap(), 6);
    // J_{e_1} on a cell splits into the sum of the two sub-cell first chaoses
    let y0 = ChaosElement::from_terms(
        &fine_space,
        &[
            (MultiIndex::zero(8), 0.5),
            (MultiIndex::unit(8, 0), 0.1),
            (MultiIndex::unit(8, 1), 0.1),
        ],
    )
    .unwrap();
    let mut fine = coarse.clone();
    fine.y0 = y0;
    assert!((fine.y0.variance() - coarse.y0.variance()).abs() < 1e-15);
    // only the θ = 0 slice is partition free; the finer noise resolution
    // changes the higher chaos components
    let a = moment_report(&closed_form_trajectory(&coarse).unwrap());
    let b = moment_report(&closed_form_trajectory(&fine).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.mean - y.mean).abs() <= 1e-8);
    }
}
