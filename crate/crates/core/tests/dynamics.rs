use glauber::dynamics::{cftp_samples, sample_chains, CftpOptions, ChainState, EventKind, Horizon, SamplingPlan};
use glauber::stats::{chi_square_gof, ks_two_sample};
use glauber::{Boundary, Execution, ModelParams, Potential, SimBox};
use statrs::distribution::{Discrete, Poisson};

fn free(z: f64) -> ModelParams {
    ModelParams::new(z, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap()
}

fn poisson_fit(counts: &[usize], mean: f64) -> f64 {
    let top = counts.iter().copied().max().unwrap_or(0) + 1;
    let mut hist = vec![0u64; top];
    for &n in counts {
        hist[n] += 1;
    }
    let law = Poisson::new(mean).unwrap();
    let probs: Vec<f64> = (0..top).map(|k| law.pmf(k as u64)).collect();
    chi_square_gof(&hist, &probs, 5.0).unwrap().2
}

// started empty, the free count at time t is Poisson(z|box|(1 - e^-t))
#[test]
fn free_transient_count_is_poisson() {
    let p = free(3.0);
    let t: f64 = 0.7;
    let counts: Vec<usize> = (0..20_000u64)
        .map(|c| {
            let mut s = ChainState::empty(&p, 11, c);
            s.advance_to(&p, t, |_, _| {});
            s.config.len()
        })
        .collect();
    let pv = poisson_fit(&counts, 3.0 * (1.0 - (-t).exp()));
    assert!(pv > 1e-3, "p = {pv}");
}

#[test]
fn free_equilibrium_count_is_poisson() {
    let p = free(2.5);
    let set = sample_chains(&p, &SamplingPlan::new(10.0, 2.0, 2_000), 4, 12, Execution::Parallel).unwrap();
    let counts: Vec<usize> = set.iter().map(|c| c.len()).collect();
    let pv = poisson_fit(&counts, 2.5);
    assert!(pv > 1e-3, "p = {pv}");
}

// holding times scaled by the total rate n + z|box| are Exp(1)
#[test]
fn event_clock_uses_the_total_rate() {
    let p = ModelParams::new(1.5, Potential::strauss(0.7, 0.2).unwrap(), SimBox::cube(2, 1.0, Boundary::Periodic).unwrap())
        .unwrap();
    let mut s = ChainState::empty(&p, 5, 0);
    let mut scaled = Vec::new();
    for _ in 0..20_000 {
        let before = s.time();
        let rate = s.config.len() as f64 + p.proposal_rate();
        s.step_event(&p).unwrap();
        scaled.push((s.time() - before) * rate);
    }
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    assert!((mean - 1.0).abs() < 4.0 / (scaled.len() as f64).sqrt(), "mean {mean}");
    // compare with inverse-cdf exponentials on a fixed grid
    let n = scaled.len();
    let reference: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
    let (_, pv) = ks_two_sample(&scaled, &reference).unwrap();
    assert!(pv > 1e-3, "p = {pv}");
}

#[test]
fn free_births_are_uniform() {
    let p = free(4.0);
    let mut s = ChainState::empty(&p, 9, 0);
    let mut xs = Vec::new();
    s.advance_to(&p, 3_000.0, |e, _| {
        if e.kind == EventKind::Birth {
            xs.push(e.location.coords()[0]);
        }
    });
    let n = xs.len();
    assert!(n > 5_000);
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let (_, pv) = ks_two_sample(&xs, &grid).unwrap();
    assert!(pv > 1e-3, "p = {pv}");
}

#[test]
fn deaths_only_remove_present_points_and_replay_is_exact() {
    let p = ModelParams::new(2.0, Potential::hard_core(0.15).unwrap(), SimBox::cube(2, 1.0, Boundary::Empty).unwrap())
        .unwrap();
    let mut s = ChainState::empty(&p, 21, 3);
    let schedule: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
    let traj = s.run(&p, Horizon::Time(10.0), &schedule).unwrap();
    assert_eq!(traj.replay(&p).unwrap(), traj.snapshots);
    assert!(traj.events.windows(2).all(|w| w[0].at_time <= w[1].at_time));
    for snap in &traj.snapshots {
        for (i, a) in snap.points.iter().enumerate() {
            for b in &snap.points[i + 1..] {
                assert!(p.sim_box().dist2(a, b) >= 0.15 * 0.15);
            }
        }
    }
}

#[test]
fn cftp_free_draws_are_poisson() {
    let p = free(1.8);
    let draws = cftp_samples(&p, 5_000, 31, &CftpOptions::default(), Execution::Parallel).unwrap();
    let counts: Vec<usize> = draws.iter().map(|c| c.len()).collect();
    let pv = poisson_fit(&counts, 1.8);
    assert!(pv > 1e-3, "p = {pv}");
}

#[test]
fn sampling_does_not_depend_on_execution_mode() {
    let p = ModelParams::new(1.0, Potential::soft_gaussian(1.0, 0.05).unwrap(), SimBox::cube(2, 1.0, Boundary::Periodic).unwrap())
        .unwrap();
    let plan = SamplingPlan::new(2.0, 0.5, 20);
    let a = sample_chains(&p, &plan, 5, 7, Execution::Parallel).unwrap();
    let b = sample_chains(&p, &plan, 5, 7, Execution::Sequential).unwrap();
    assert_eq!(a.chains(), b.chains());
}
