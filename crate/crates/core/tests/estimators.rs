use glauber::dynamics::{cftp_samples, CftpOptions, SampleSet};
use glauber::estimators::{
    autocorrelation, autocorrelation_battery, estimate_correlations, gap_check, gnz_defect, poincare_check,
    ruelle_check, AutocorrConfig, CorrelationBins, GnzTest,
};
use glauber::generator::{dirichlet_form_mc, generator_mean, symmetry_defect};
use glauber::observable::battery;
use glauber::{Boundary, Execution, ModelParams, Observable, Potential, QuadratureSpec, Rect, SimBox};

fn exact_samples(params: &ModelParams, n: usize, seed: u64) -> SampleSet {
    let draws = cftp_samples(params, n, seed, &CftpOptions::default(), Execution::Parallel).unwrap();
    SampleSet::independent(draws, 40).unwrap()
}

fn strauss() -> ModelParams {
    ModelParams::new(4.0, Potential::strauss(0.6, 0.12).unwrap(), SimBox::cube(2, 1.0, Boundary::Periodic).unwrap())
        .unwrap()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::with_tol(1e-7)
}

// with no interaction, E(N_W, N_W) = E N_W = z|W| on both sides
#[test]
fn free_count_dirichlet_form_is_the_mean_count() {
    let p = ModelParams::new(3.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
    let f = Observable::count("w", Rect::new(&[0.2, 0.1], &[0.7, 0.5]).unwrap());
    let s = exact_samples(&p, 8_000, 1);
    let d = dirichlet_form_mc(&f, &f, &s, &p, &quad(), Execution::Parallel).unwrap();
    let target = 3.0 * 0.5 * 0.4;
    assert!(d.death_side.consistent_with(target, 4.0), "{:?}", d.death_side);
    assert!((d.birth_side.value - target).abs() < 1e-9, "{:?}", d.birth_side);
}

#[test]
fn dirichlet_sides_agree_under_interaction() {
    let p = strauss();
    let s = exact_samples(&p, 4_000, 2);
    let obs = battery(p.sim_box()).unwrap();
    for (f, g) in [(&obs[0], &obs[1]), (&obs[2], &obs[3]), (&obs[4], &obs[0])] {
        let d = dirichlet_form_mc(f, g, &s, &p, &quad(), Execution::Parallel).unwrap();
        assert!(d.difference.consistent_with(0.0, 4.0), "{} / {}: {:?}", f.name(), g.name(), d.difference);
    }
}

#[test]
fn generator_is_centred_and_symmetric_at_equilibrium() {
    let p = strauss();
    let s = exact_samples(&p, 4_000, 3);
    let obs = battery(p.sim_box()).unwrap();
    for f in &obs {
        let m = generator_mean(f, &s, &p, &quad(), Execution::Parallel).unwrap();
        assert!(m.consistent_with(0.0, 4.0), "{}: {m:?}", f.name());
    }
    let a = symmetry_defect(&obs[0], &obs[3], &s, &p, &quad(), Execution::Parallel).unwrap();
    let b = symmetry_defect(&obs[3], &obs[0], &s, &p, &quad(), Execution::Parallel).unwrap();
    assert!(a.consistent_with(0.0, 4.0) && b.consistent_with(0.0, 4.0), "{a:?} {b:?}");
}

#[test]
fn gnz_battery_balances() {
    let p = strauss();
    let s = exact_samples(&p, 4_000, 4);
    let obs = battery(p.sim_box()).unwrap();
    for t in GnzTest::battery(&obs).unwrap() {
        let d = gnz_defect(&t, &s, &p, &quad(), Execution::Parallel).unwrap();
        assert!(d.sigmas.abs() <= 4.0, "{}: {d:?}", t.name);
    }
}

#[test]
fn free_count_saturates_poincare() {
    // Var N_W = E N_W for Poisson, so the ratio is one
    let p = ModelParams::new(2.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
    let f = Observable::count("w", Rect::new(&[0.0, 0.0], &[0.5, 0.5]).unwrap());
    let s = exact_samples(&p, 20_000, 5);
    let r = poincare_check(&f, &s, &p, Execution::Parallel).unwrap();
    assert!(r.pass);
    assert!((r.ratio - 1.0).abs() < 0.05, "ratio {}", r.ratio);
    assert!(poincare_check(&Observable::constant(2.0), &s, &p, Execution::Parallel).unwrap().pass);
}

#[test]
fn free_count_decays_at_unit_rate() {
    let p = ModelParams::new(5.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
    let f = Observable::count("w", Rect::new(&[0.0, 0.0], &[0.6, 0.6]).unwrap());
    let cfg = AutocorrConfig { run_length: 4_000.0, seed: 6, ..AutocorrConfig::default() };
    let est = autocorrelation(&f, &p, &cfg, Execution::Parallel).unwrap();
    assert!((est.rate.value - 1.0).abs() <= est.ci_half_width.max(0.1), "{:?}", est.rate);
}

#[test]
fn strauss_modes_decay_faster_than_the_bound() {
    let p = strauss();
    let obs = battery(p.sim_box()).unwrap();
    let cfg = AutocorrConfig { run_length: 3_000.0, seed: 7, ..AutocorrConfig::default() };
    let est: Vec<_> = autocorrelation_battery(&obs, &p, &cfg, Execution::Parallel)
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap())
        .collect();
    let rep = gap_check(&est, &p).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn strauss_correlations_obey_ruelle_bounds() {
    let p = strauss();
    let s = exact_samples(&p, 3_000, 8);
    let est = estimate_correlations(&s, &CorrelationBins::new(4, 0.4, 16), Execution::Parallel).unwrap();
    // repulsion lowers the density below the activity
    assert!(est.k1_integral() < p.z() * p.sim_box().volume());
    let rep = ruelle_check(&est, &p).unwrap();
    assert!(rep.pass, "{:?}", rep.failures);
}
