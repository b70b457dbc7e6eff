//! Continuous-time birth-death dynamics: exact event simulation, equilibrium
//! sampling from long runs, and perfect sampling by dominated coupling from
//! the past.

mod cftp;
mod chain;
mod equilibrium;

pub use cftp::{cftp_sample, cftp_samples, CftpOptions};
pub use chain::{chain_rng, ChainState, Event, EventKind, Horizon, Snapshot, Trajectory};
pub use equilibrium::{
    initial_chain, sample_chains, sample_equilibrium, InitialCondition, Sample, SampleSet, SamplingPlan,
};
