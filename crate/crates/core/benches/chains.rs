use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glauber::dynamics::{cftp_samples, sample_chains, CftpOptions, SamplingPlan};
use glauber::generator::dirichlet_form_mc;
use glauber::observable::battery;
use glauber::{Boundary, Execution, ModelParams, Potential, QuadratureSpec, SimBox};

fn strauss() -> ModelParams {
    ModelParams::new(0.5, Potential::strauss(1.0, 0.5).unwrap(), SimBox::cube(2, 3.0, Boundary::Periodic).unwrap())
        .unwrap()
}

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn chains(c: &mut Criterion) {
    let p = strauss();
    let plan = SamplingPlan::new(10.0, 1.0, 200);
    let mut g = c.benchmark_group("sample_chains");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 8), &exec, |b, &exec| {
            b.iter(|| black_box(sample_chains(&p, &plan, 8, 1, exec).unwrap().len()))
        });
    }
    g.finish();
}

fn cftp(c: &mut Criterion) {
    let p = strauss();
    let mut g = c.benchmark_group("cftp_samples");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 64), &exec, |b, &exec| {
            b.iter(|| black_box(cftp_samples(&p, 64, 2, &CftpOptions::default(), exec).unwrap().len()))
        });
    }
    g.finish();
}

fn dirichlet(c: &mut Criterion) {
    let p = strauss();
    let samples = sample_chains(&p, &SamplingPlan::new(10.0, 1.0, 25), 8, 3, Execution::Parallel).unwrap();
    let bat = battery(p.sim_box()).unwrap();
    let quad = QuadratureSpec::default();
    let mut g = c.benchmark_group("dirichlet_form");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, samples.len()), &exec, |b, &exec| {
            b.iter(|| black_box(dirichlet_form_mc(&bat[0], &bat[1], &samples, &p, &quad, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, chains, cftp, dirichlet);
criterion_main!(benches);
