//! Dominated coupling from the past for repulsive interactions.
//!
//! The free birth-death process (births at rate `z|box|`, unit deaths)
//! dominates the interacting one when the potential is nonnegative. Its
//! stationary law is Poisson, so it can be drawn at time zero and extended
//! backwards by reversibility. Upper and lower processes are then run forward
//! from `-T` through the dominating events with shared acceptance marks and
//! the cross-over rule for anti-monotone birth rates. If they meet at time
//! zero the common configuration is an exact draw; otherwise `T` doubles
//! and the already generated past is reused.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::configuration::Configuration;
use crate::dynamics::chain::chain_rng;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Point;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CftpOptions {
    /// First backward window.
    pub initial_window: f64,
    /// Largest backward window tried before failing.
    pub max_window: f64,
}

impl Default for CftpOptions {
    fn default() -> Self {
        CftpOptions { initial_window: 1.0, max_window: 4096.0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct DomPoint {
    location: Point,
    mark: f64,
    /// Forward birth time; `None` while the point is alive at the backward
    /// frontier.
    birth: Option<f64>,
    /// Forward death time; infinite for points alive at time zero.
    death: f64,
}

struct Dominating {
    points: Vec<DomPoint>,
    /// Indices of points alive at `frontier`.
    alive: Vec<usize>,
    frontier: f64,
}

impl Dominating {
    fn at_zero(params: &ModelParams, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mean = params.proposal_rate();
        let n = if mean > 0.0 {
            Poisson::new(mean).map_err(|e| Error::Parameter(e.to_string()))?.sample(rng) as usize
        } else {
            0
        };
        let points: Vec<DomPoint> = (0..n)
            .map(|_| DomPoint {
                location: params.sim_box().sample_uniform(rng),
                mark: rng.random(),
                birth: None,
                death: f64::INFINITY,
            })
            .collect();
        Ok(Dominating { alive: (0..n).collect(), points, frontier: 0.0 })
    }

    /// Runs the time-reversed dominating process back to `-window`.
    fn extend_to(&mut self, params: &ModelParams, window: f64, rng: &mut ChaCha8Rng) {
        let target = -window;
        let immigration = params.proposal_rate();
        loop {
            let total = self.alive.len() as f64 + immigration;
            if total == 0.0 {
                break;
            }
            let w: f64 = Exp1.sample(rng);
            let t = self.frontier - w / total;
            if t < target {
                break;
            }
            self.frontier = t;
            let u = rng.random::<f64>() * total;
            if u < self.alive.len() as f64 {
                // going backwards a live point reaches its birth
                let k = (u as usize).min(self.alive.len() - 1);
                let idx = self.alive.swap_remove(k);
                self.points[idx].birth = Some(t);
            } else {
                // going backwards a point appears: it dies forward at t
                self.points.push(DomPoint {
                    location: params.sim_box().sample_uniform(rng),
                    mark: rng.random(),
                    birth: None,
                    death: t,
                });
                self.alive.push(self.points.len() - 1);
            }
        }
        self.frontier = target;
    }
}

enum Step {
    Birth(usize),
    Death(usize),
}

/// Runs upper and lower processes from `-window`; returns the lower process
/// at time zero if they coalesced.
fn sandwich(params: &ModelParams, dom: &Dominating, window: f64) -> Result<Option<Configuration>> {
    let start = -window;
    let mut upper = params.empty_configuration();
    let mut lower = params.empty_configuration();
    for &i in &dom.alive {
        upper.insert(dom.points[i].location)?;
    }
    let mut steps: Vec<(f64, Step)> = Vec::new();
    for (i, p) in dom.points.iter().enumerate() {
        if let Some(b) = p.birth {
            if b > start {
                steps.push((b, Step::Birth(i)));
            }
        }
        if p.death.is_finite() {
            steps.push((p.death, Step::Death(i)));
        }
    }
    steps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite event times"));
    for (_, step) in steps {
        match step {
            Step::Birth(i) => {
                let p = &dom.points[i];
                let to_upper = p.mark < params.birth_weight(&p.location, &lower);
                let to_lower = p.mark < params.birth_weight(&p.location, &upper);
                if to_upper {
                    upper.insert(p.location)?;
                }
                if to_lower {
                    lower.insert(p.location)?;
                }
            }
            Step::Death(i) => {
                let loc = dom.points[i].location;
                upper.remove_point(&loc);
                lower.remove_point(&loc);
            }
        }
    }
    Ok((upper.len() == lower.len()).then_some(lower))
}

fn cftp_with_rng(params: &ModelParams, opts: &CftpOptions, rng: &mut ChaCha8Rng) -> Result<Configuration> {
    if !params.potential().is_positive() {
        return Err(Error::Model("dominated coupling needs a nonnegative potential".into()));
    }
    if !(opts.initial_window > 0.0 && opts.max_window >= opts.initial_window) {
        return Err(Error::Parameter("invalid coupling windows".into()));
    }
    let mut dom = Dominating::at_zero(params, rng)?;
    if params.potential().cutoff() == 0.0 {
        // no interaction: the dominating process is the target
        let pts = dom.points.iter().map(|p| p.location);
        return params.configuration(pts);
    }
    let mut window = opts.initial_window;
    loop {
        dom.extend_to(params, window, rng);
        if let Some(c) = sandwich(params, &dom, window)? {
            return Ok(c);
        }
        if window >= opts.max_window {
            return Err(Error::NoCoalescence { window });
        }
        window = (2.0 * window).min(opts.max_window);
    }
}

/// One exact draw from the finite-volume Gibbs measure.
pub fn cftp_sample(params: &ModelParams, seed: u64) -> Result<Configuration> {
    cftp_with_rng(params, &CftpOptions::default(), &mut chain_rng(seed, 0))
}

/// `n` independent exact draws, draw `i` on stream `i` of `seed`.
pub fn cftp_samples(
    params: &ModelParams,
    n: usize,
    seed: u64,
    opts: &CftpOptions,
    exec: Execution,
) -> Result<Vec<Configuration>> {
    exec.map_range(n, |i| cftp_with_rng(params, opts, &mut chain_rng(seed, i as u64)))
        .into_iter()
        .collect()
}
