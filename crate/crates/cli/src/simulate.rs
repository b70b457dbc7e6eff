use std::io::Write;
use std::time::Instant;

use glauber::dynamics::{initial_chain, Horizon, Trajectory};
use glauber::stats::{BatchMeans, Estimate};
use glauber::{Execution, Point};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{num, Output};

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub chains: usize,
    pub horizon: f64,
    pub burn_in: f64,
    /// Mean point count over snapshots after burn-in.
    pub mean_count: Estimate,
    pub expected_free_count: f64,
    pub acceptance_ratio: Option<f64>,
    pub births: u64,
    pub deaths: u64,
    pub proposals: u64,
    /// Events (rejected proposals included) per unit of process time.
    pub events_per_time: f64,
}

struct ChainRun {
    traj: Trajectory,
    births: u64,
    deaths: u64,
    proposals: u64,
}

fn coords(p: &Point, dim: usize) -> Vec<f64> {
    p.coords()[..dim].to_vec()
}

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<SimulateSummary, CliError> {
    let params = cfg.params()?;
    let out = Output::create(cfg)?;
    let r = &cfg.run;
    let dim = params.dim();
    let schedule: Vec<f64> = (0..)
        .map(|k| k as f64 * r.snapshot_every)
        .take_while(|&t| t <= r.horizon)
        .collect();
    let init = cfg.plan().init;
    let started = Instant::now();
    let runs: Vec<Result<ChainRun, CliError>> = exec.map_range(r.chains, |c| {
        let mut state = initial_chain(&params, init, r.seed, c as u64)?;
        let traj = state.run(&params, Horizon::Time(r.horizon), &schedule)?;
        Ok(ChainRun { traj, births: state.births, deaths: state.deaths, proposals: state.proposals })
    });
    let runs: Vec<ChainRun> = runs.into_iter().collect::<Result<_, _>>()?;
    let wall = started.elapsed().as_secs_f64();

    for (c, run) in runs.iter().enumerate() {
        if let Some(mut w) = out.writer(&format!("trajectory_chain{c}.jsonl"), Format::Jsonl)? {
            let initial: Vec<Vec<f64>> = run.traj.initial.iter().map(|p| coords(p, dim)).collect();
            writeln!(w, "{}", json!({"chain": c, "start_time": run.traj.start_time, "initial": initial}))?;
            for e in &run.traj.events {
                writeln!(
                    w,
                    "{}",
                    json!({"time": e.at_time, "kind": e.kind.as_str(), "x": coords(&e.location, dim)})
                )?;
            }
            w.flush()?;
        }
    }
    let mut counts = Vec::new();
    let mut points = Vec::new();
    for (c, run) in runs.iter().enumerate() {
        for s in &run.traj.snapshots {
            counts.push(vec![c.to_string(), num(s.time), s.points.len().to_string()]);
            for (i, p) in s.points.iter().enumerate() {
                let mut row = vec![c.to_string(), num(s.time), i.to_string()];
                row.extend(coords(p, dim).into_iter().map(num));
                points.push(row);
            }
        }
    }
    out.csv("snapshots.csv", &["chain", "time", "count"], counts)?;
    let axes = ["x", "y", "z"];
    let mut header = vec!["chain", "time", "point"];
    header.extend(&axes[..dim]);
    out.csv("snapshot_points.csv", &header, points)?;

    // four contiguous batches per chain over the post-burn-in snapshots
    let mut bm = BatchMeans::new(1);
    for run in &runs {
        let kept: Vec<[f64; 1]> = run
            .traj
            .snapshots
            .iter()
            .filter(|s| s.time >= r.burn_in.min(r.horizon))
            .map(|s| [s.points.len() as f64])
            .collect();
        let per = 4.min(kept.len()).max(1);
        for b in 0..per {
            let (lo, hi) = (kept.len() * b / per, kept.len() * (b + 1) / per);
            bm.push_batch(kept[lo..hi].iter().map(|r| r.as_slice()));
        }
    }
    let mean_count = if bm.batches() >= 2 {
        bm.estimate(0)?
    } else {
        Estimate::new(bm.mean(0), f64::NAN)
    };
    let (births, deaths, proposals) = runs
        .iter()
        .fold((0, 0, 0), |(b, d, p), r| (b + r.births, d + r.deaths, p + r.proposals));
    let events: usize = runs.iter().map(|r| r.traj.events.len()).sum();
    let total_time = r.horizon * r.chains as f64;
    let summary = SimulateSummary {
        chains: r.chains,
        horizon: r.horizon,
        burn_in: r.burn_in,
        mean_count,
        expected_free_count: params.proposal_rate(),
        acceptance_ratio: (proposals > 0).then(|| births as f64 / proposals as f64),
        births,
        deaths,
        proposals,
        events_per_time: if total_time > 0.0 { events as f64 / total_time } else { 0.0 },
    };
    let text = out.report("summary.json", &summary)?;
    println!("{text}");
    // wall-clock figures vary between runs, so they live apart from the summary
    out.report(
        "timing.json",
        &json!({"wall_seconds": wall, "events": events, "events_per_second": events as f64 / wall.max(1e-9)}),
    )?;
    Ok(summary)
}
