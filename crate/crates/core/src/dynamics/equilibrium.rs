use rand_distr::{Distribution, Poisson};

use crate::configuration::Configuration;
use crate::dynamics::chain::{chain_rng, ChainState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::ModelParams;
use crate::stats::BatchMeans;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCondition {
    #[default]
    Empty,
    /// A Poisson draw with intensity `z`, the law of the dominating process.
    Poisson,
}

/// Burn-in, spacing and sample count of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub burn_in: f64,
    pub spacing: f64,
    pub samples: usize,
    pub init: InitialCondition,
}

impl SamplingPlan {
    pub fn new(burn_in: f64, spacing: f64, samples: usize) -> Self {
        SamplingPlan { burn_in, spacing, samples, init: InitialCondition::Empty }
    }

    fn validate(&self) -> Result<()> {
        if !(self.burn_in.is_finite() && self.burn_in > 0.0) {
            return Err(Error::Parameter(format!("burn-in must be positive, got {}", self.burn_in)));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::Parameter(format!("spacing must be positive, got {}", self.spacing)));
        }
        if self.samples == 0 {
            return Err(Error::Parameter("at least one sample is required".into()));
        }
        Ok(())
    }
}

/// An equilibrium draw tagged with its process time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub config: Configuration,
}

/// Chain `chain` of `master_seed` at time zero in the requested initial state.
pub fn initial_chain(params: &ModelParams, init: InitialCondition, master_seed: u64, chain: u64) -> Result<ChainState> {
    let mut state = ChainState::new(params.empty_configuration(), chain_rng(master_seed, chain));
    if init == InitialCondition::Poisson {
        let mean = params.proposal_rate();
        let n = if mean > 0.0 {
            Poisson::new(mean).map_err(|e| Error::Parameter(e.to_string()))?.sample(state.rng_mut()) as usize
        } else {
            0
        };
        let b = *params.sim_box();
        for _ in 0..n {
            let x = b.sample_uniform(state.rng_mut());
            state.config.insert(x)?;
        }
    }
    Ok(state)
}

fn run_chain(params: &ModelParams, plan: &SamplingPlan, master_seed: u64, chain: u64) -> Result<Vec<Sample>> {
    plan.validate()?;
    let mut state = initial_chain(params, plan.init, master_seed, chain)?;
    state.advance_to(params, plan.burn_in, |_, _| {});
    let mut out = Vec::with_capacity(plan.samples);
    for k in 1..=plan.samples {
        let t = plan.burn_in + k as f64 * plan.spacing;
        state.advance_to(params, t, |_, _| {});
        out.push(Sample { time: t, config: state.config.clone() });
    }
    Ok(out)
}

/// One chain started from the empty configuration: discards `burn_in` time
/// units, then records `n_samples` configurations `spacing` apart.
pub fn sample_equilibrium(
    params: &ModelParams,
    burn_in: f64,
    n_samples: usize,
    spacing: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    run_chain(params, &SamplingPlan::new(burn_in, spacing, n_samples), seed, 0)
}

/// Independent chains on streams `0..chains` of `master_seed`.
pub fn sample_chains(
    params: &ModelParams,
    plan: &SamplingPlan,
    chains: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<SampleSet> {
    if chains == 0 {
        return Err(Error::Parameter("at least one chain is required".into()));
    }
    plan.validate()?;
    let runs = exec.map_range(chains, |c| run_chain(params, plan, master_seed, c as u64));
    let chains: Vec<Vec<Configuration>> = runs
        .into_iter()
        .map(|r| r.map(|v| v.into_iter().map(|s| s.config).collect()))
        .collect::<Result<_>>()?;
    SampleSet::from_chains(chains, DEFAULT_BATCHES)
}

/// Target number of batches for error bars.
pub const DEFAULT_BATCHES: usize = 32;

/// Equilibrium samples grouped by chain, with a batching rule for error bars.
#[derive(Debug, Clone)]
pub struct SampleSet {
    chains: Vec<Vec<Configuration>>,
    batches_per_chain: usize,
}

impl SampleSet {
    /// Splits each chain into contiguous batches so that the total number of
    /// batches is about `target_batches`.
    pub fn from_chains(chains: Vec<Vec<Configuration>>, target_batches: usize) -> Result<Self> {
        if chains.is_empty() || chains.iter().all(|c| c.is_empty()) {
            return Err(Error::Parameter("sample list is empty".into()));
        }
        let per = target_batches.div_ceil(chains.len()).max(1);
        let shortest = chains.iter().map(|c| c.len()).min().unwrap_or(0).max(1);
        Ok(SampleSet { batches_per_chain: per.min(shortest), chains })
    }

    /// Independent draws (e.g. from coupling from the past).
    pub fn independent(samples: Vec<Configuration>, batches: usize) -> Result<Self> {
        Self::from_chains(vec![samples], batches)
    }

    pub fn chains(&self) -> &[Vec<Configuration>] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Configuration> {
        self.chains.iter().flatten()
    }

    /// Evaluates `f` (returning `width` quantities) on every sample and
    /// accumulates batch means. Evaluation may run in parallel; accumulation
    /// order is fixed.
    pub fn evaluate<F>(&self, exec: Execution, width: usize, f: F) -> Result<BatchMeans>
    where
        F: Fn(&Configuration) -> Result<Vec<f64>> + Sync + Send,
    {
        let flat: Vec<&Configuration> = self.iter().collect();
        let rows = exec.map_slice(&flat, |c| f(c));
        let mut rows = rows.into_iter();
        let mut bm = BatchMeans::new(width);
        for chain in &self.chains {
            let n = chain.len();
            let per = self.batches_per_chain.min(n.max(1));
            let mut taken = 0;
            for b in 0..per {
                let end = n * (b + 1) / per;
                let batch: Vec<Vec<f64>> = (taken..end)
                    .map(|_| rows.next().expect("one row per sample"))
                    .collect::<Result<_>>()?;
                if let Some(bad) = batch.iter().find(|r| r.len() != width) {
                    return Err(Error::Estimation(format!("expected {width} quantities, got {}", bad.len())));
                }
                bm.push_batch(batch.iter().map(|r| r.as_slice()));
                taken = end;
            }
        }
        Ok(bm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Boundary, SimBox};
    use crate::potential::Potential;

    #[test]
    fn zero_spacing_is_a_parameter_error() {
        let p = ModelParams::new(1.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
        assert!(matches!(sample_equilibrium(&p, 1.0, 10, 0.0, 1), Err(Error::Parameter(_))));
        assert!(matches!(sample_equilibrium(&p, 0.0, 10, 1.0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn samples_are_spaced_and_tagged() {
        let p = ModelParams::new(1.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
        let s = sample_equilibrium(&p, 2.0, 5, 0.5, 1).unwrap();
        let t: Vec<f64> = s.iter().map(|s| s.time).collect();
        assert_eq!(t, vec![2.5, 3.0, 3.5, 4.0, 4.5]);
    }

    #[test]
    fn parallel_and_sequential_sampling_agree() {
        let p = ModelParams::new(2.0, Potential::strauss(1.0, 0.2).unwrap(), SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
        let plan = SamplingPlan::new(1.0, 0.5, 20);
        let a = sample_chains(&p, &plan, 4, 9, Execution::Parallel).unwrap();
        let b = sample_chains(&p, &plan, 4, 9, Execution::Sequential).unwrap();
        assert_eq!(a.chains(), b.chains());
    }

    #[test]
    fn batching_covers_every_sample() {
        let p = ModelParams::new(2.0, Potential::Zero, SimBox::cube(1, 1.0, Boundary::Periodic).unwrap()).unwrap();
        let plan = SamplingPlan::new(1.0, 0.5, 13);
        let set = sample_chains(&p, &plan, 3, 1, Execution::Sequential).unwrap();
        let bm = set.evaluate(Execution::Parallel, 1, |_| Ok(vec![1.0])).unwrap();
        assert_eq!(bm.samples(), 39);
        assert_eq!(bm.batches(), 33);
    }
}
