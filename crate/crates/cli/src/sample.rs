use glauber::dynamics::sample_chains;
use glauber::stats::Estimate;
use glauber::Execution;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Output};

#[derive(Debug, Serialize)]
pub struct SampleSummary {
    pub samples: usize,
    pub mean_count: Estimate,
    pub z_volume: f64,
}

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<SampleSummary, CliError> {
    let params = cfg.params()?;
    let out = Output::create(cfg)?;
    let plan = cfg.plan();
    let set = sample_chains(&params, &plan, cfg.run.chains, cfg.run.seed, exec)?;
    let dim = params.dim();
    let mut counts = Vec::new();
    let mut points = Vec::new();
    for (c, chain) in set.chains().iter().enumerate() {
        for (k, g) in chain.iter().enumerate() {
            let t = num(plan.burn_in + (k + 1) as f64 * plan.spacing);
            counts.push(vec![c.to_string(), k.to_string(), t.clone(), g.len().to_string()]);
            for (i, p) in g.iter().enumerate() {
                let mut row = vec![c.to_string(), k.to_string(), t.clone(), i.to_string()];
                row.extend(p.coords()[..dim].iter().map(|&x| num(x)));
                points.push(row);
            }
        }
    }
    out.csv("sample_counts.csv", &["chain", "sample", "time", "count"], counts)?;
    let axes = ["x", "y", "z"];
    let mut header = vec!["chain", "sample", "time", "point"];
    header.extend(&axes[..dim]);
    out.csv("samples.csv", &header, points)?;
    let bm = set.evaluate(exec, 1, |g| Ok(vec![g.len() as f64]))?;
    let mean_count = if bm.batches() >= 2 { bm.estimate(0)? } else { Estimate::new(bm.mean(0), f64::NAN) };
    let summary = SampleSummary { samples: set.len(), mean_count, z_volume: params.proposal_rate() };
    println!("{}", out.report("sample_summary.json", &summary)?);
    Ok(summary)
}
