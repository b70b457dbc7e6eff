//! One- and two-point correlation functions and the Ruelle-type bound.

use serde::Serialize;

use crate::configuration::Configuration;
use crate::dynamics::SampleSet;
use crate::error::{Error, Result};
use crate::estimators::CheckRecord;
use crate::exec::Execution;
use crate::geometry::{unit_ball_volume, Boundary, SimBox, MAX_DIM};
use crate::model::ModelParams;
use crate::stats::Estimate;

/// Minimum number of samples for a correlation estimate.
pub const MIN_SAMPLES: usize = 100;

/// Binning of the box (for `k1`) and of pair distances (for `k2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationBins {
    /// Bins per axis for the one-point density.
    pub k1_per_axis: usize,
    /// Upper edge of the last distance bin.
    pub r_max: f64,
    pub r_bins: usize,
}

impl CorrelationBins {
    pub fn new(k1_per_axis: usize, r_max: f64, r_bins: usize) -> Self {
        CorrelationBins { k1_per_axis, r_max, r_bins }
    }

    fn validate(&self, sim_box: &SimBox) -> Result<()> {
        if self.k1_per_axis == 0 || self.r_bins == 0 {
            return Err(Error::Parameter("bin counts must be positive".into()));
        }
        let limit = match sim_box.boundary() {
            Boundary::Periodic => 0.5 * sim_box.min_side(),
            Boundary::Empty => sim_box.min_side(),
        };
        if !(self.r_max > 0.0 && self.r_max <= limit) {
            return Err(Error::Parameter(format!("r_max must lie in (0, {limit}], got {}", self.r_max)));
        }
        Ok(())
    }
}

/// Binned `k1` over the box and radial `k2`, with batch-means errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub samples: usize,
    pub dim: usize,
    pub k1_per_axis: usize,
    /// Row-major over axes, first axis fastest.
    pub k1: Vec<Estimate>,
    pub k1_bin_volume: f64,
    /// Point counts per `k1` bin summed over samples.
    pub k1_counts: Vec<u64>,
    pub r_edges: Vec<f64>,
    pub k2: Vec<Estimate>,
    /// Ordered pair counts per distance bin summed over samples.
    pub k2_counts: Vec<u64>,
    pub mean_count: Estimate,
}

impl CorrelationEstimate {
    /// `sum of k1 * bin volume`, the estimated mean number of points.
    pub fn k1_integral(&self) -> f64 {
        self.k1.iter().map(|e| e.value).sum::<f64>() * self.k1_bin_volume
    }

    /// Midpoints of the distance bins.
    pub fn r_mids(&self) -> Vec<f64> {
        self.r_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

fn k1_index(sim_box: &SimBox, per_axis: usize, x: &[f64; MAX_DIM]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for i in 0..sim_box.dim() {
        let c = ((x[i] / sim_box.side(i) * per_axis as f64) as usize).min(per_axis - 1);
        idx += c * stride;
        stride *= per_axis;
    }
    idx
}

/// Per-sample row: `k1` bin densities, `k2` shell densities, point count.
fn sample_row(
    gamma: &Configuration,
    bins: &CorrelationBins,
    k1_vol: f64,
    shell_vol: &[f64],
    k1_counts: &mut [u64],
    k2_counts: &mut [u64],
) -> Vec<f64> {
    let sim_box = gamma.sim_box();
    let n1 = k1_counts.len();
    let mut row = vec![0.0; n1 + bins.r_bins + 1];
    for x in gamma.iter() {
        let k = k1_index(sim_box, bins.k1_per_axis, &x.0);
        row[k] += 1.0 / k1_vol;
        k1_counts[k] += 1;
    }
    let periodic = sim_box.boundary() == Boundary::Periodic;
    let width = bins.r_max / bins.r_bins as f64;
    let r2max = bins.r_max * bins.r_max;
    for (i, x) in gamma.iter().enumerate() {
        gamma.for_each_candidate(x, bins.r_max, |j, y| {
            if i == j {
                return;
            }
            let d = sim_box.displacement(x, y);
            let r2: f64 = d.iter().map(|v| v * v).sum();
            if r2 >= r2max {
                return;
            }
            let b = ((r2.sqrt() / width) as usize).min(bins.r_bins - 1);
            // translation-corrected weight: area of the box shifted by d
            // that stays inside the box
            let w = if periodic {
                1.0 / sim_box.volume()
            } else {
                1.0 / (0..sim_box.dim()).map(|a| sim_box.side(a) - d[a].abs()).product::<f64>()
            };
            row[n1 + b] += w / shell_vol[b];
            k2_counts[b] += 1;
        });
    }
    row[n1 + bins.r_bins] = gamma.len() as f64;
    row
}

/// Estimates `k1` on a regular grid of bins and the radial `k2` on distance
/// shells. Ordered pairs are counted with the box's displacement convention;
/// in a box with empty boundary each pair is weighted by the inverse volume
/// of the box intersected with its translate.
pub fn estimate_correlations(
    samples: &SampleSet,
    bins: &CorrelationBins,
    exec: Execution,
) -> Result<CorrelationEstimate> {
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Parameter(format!(
            "correlation estimates need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let first = samples.iter().next().expect("nonempty");
    let sim_box = *first.sim_box();
    bins.validate(&sim_box)?;
    let dim = sim_box.dim();
    let n1 = bins.k1_per_axis.pow(dim as u32);
    let k1_vol = sim_box.volume() / n1 as f64;
    let width = bins.r_max / bins.r_bins as f64;
    let r_edges: Vec<f64> = (0..=bins.r_bins).map(|i| i as f64 * width).collect();
    let vb = unit_ball_volume(dim);
    let shell_vol: Vec<f64> = r_edges
        .windows(2)
        .map(|w| vb * (w[1].powi(dim as i32) - w[0].powi(dim as i32)))
        .collect();
    let total_width = n1 + bins.r_bins + 1;
    let counted = std::sync::Mutex::new((vec![0u64; n1], vec![0u64; bins.r_bins]));
    let bm = samples.evaluate(exec, total_width, |gamma| {
        if gamma.sim_box() != &sim_box {
            return Err(Error::Parameter("samples live in different boxes".into()));
        }
        let mut c1 = vec![0u64; n1];
        let mut c2 = vec![0u64; bins.r_bins];
        let row = sample_row(gamma, bins, k1_vol, &shell_vol, &mut c1, &mut c2);
        let mut g = counted.lock().expect("counter lock");
        g.0.iter_mut().zip(&c1).for_each(|(a, b)| *a += b);
        g.1.iter_mut().zip(&c2).for_each(|(a, b)| *a += b);
        Ok(row)
    })?;
    let (k1_counts, k2_counts) = counted.into_inner().expect("counter lock");
    let k1 = (0..n1).map(|k| bm.estimate(k)).collect::<Result<_>>()?;
    let k2 = (0..bins.r_bins).map(|k| bm.estimate(n1 + k)).collect::<Result<_>>()?;
    Ok(CorrelationEstimate {
        samples: samples.len(),
        dim,
        k1_per_axis: bins.k1_per_axis,
        k1,
        k1_bin_volume: k1_vol,
        k1_counts,
        r_edges,
        k2,
        k2_counts,
        mean_count: bm.estimate(n1 + bins.r_bins)?,
    })
}

/// Outcome of the bound `k1 <= z`, `k2 <= z^2` checked bin by bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuelleReport {
    pub pass: bool,
    /// Largest `(k1 - z) / stderr` over bins (negative when all below).
    pub k1_worst_sigmas: f64,
    pub k2_worst_sigmas: f64,
    pub failures: Vec<CheckRecord>,
}

/// Checks `k1 <= z + 3 sigma` and `k2 <= z^2 + 3 sigma` in every bin.
pub fn ruelle_check(est: &CorrelationEstimate, params: &ModelParams) -> Result<RuelleReport> {
    if !params.potential().is_positive() {
        return Err(Error::Model("the bound k <= z^n needs a nonnegative potential".into()));
    }
    let z = params.z();
    let mut failures = Vec::new();
    let mut worst = |label: &str, vals: &[Estimate], bound: f64| -> f64 {
        let mut w = f64::NEG_INFINITY;
        for (i, e) in vals.iter().enumerate() {
            let threshold = bound + 3.0 * e.stderr;
            let s = if e.stderr > 0.0 {
                (e.value - bound) / e.stderr
            } else if e.value > bound {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            w = w.max(s);
            if e.value > threshold {
                failures.push(CheckRecord::new(format!("{label}[{i}]"), *e, threshold, false));
            }
        }
        w
    };
    let k1_worst_sigmas = worst("k1", &est.k1, z);
    let k2_worst_sigmas = worst("k2", &est.k2, z * z);
    Ok(RuelleReport { pass: failures.is_empty(), k1_worst_sigmas, k2_worst_sigmas, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::potential::Potential;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn poisson_samples(params: &ModelParams, n: usize, seed: u64) -> SampleSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pois = Poisson::new(params.proposal_rate()).unwrap();
        let v = (0..n)
            .map(|_| {
                let k = pois.sample(&mut rng) as usize;
                let mut g = params.empty_configuration();
                for _ in 0..k {
                    g.insert(params.sim_box().sample_uniform(&mut rng)).unwrap();
                }
                g
            })
            .collect();
        SampleSet::independent(v, 32).unwrap()
    }

    #[test]
    fn poisson_correlations_factorize() {
        for boundary in [Boundary::Periodic, Boundary::Empty] {
            let z = 3.0;
            let p = ModelParams::new(z, Potential::Zero, SimBox::cube(2, 2.0, boundary).unwrap()).unwrap();
            let s = poisson_samples(&p, 4000, 5);
            let est = estimate_correlations(&s, &CorrelationBins::new(3, 0.8, 6), Execution::Parallel).unwrap();
            for e in est.k1.iter() {
                assert!(e.consistent_with(z, 4.0), "{e:?}");
            }
            for e in est.k2.iter().skip(1) {
                assert!(e.consistent_with(z * z, 4.0), "{boundary:?} {e:?}");
            }
            assert!((est.k1_integral() - est.mean_count.value).abs() < 1e-9);
            assert!(ruelle_check(&est, &p).unwrap().pass);
        }
    }

    #[test]
    fn too_few_samples() {
        let p = ModelParams::new(1.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
        let s = poisson_samples(&p, 50, 1);
        assert!(matches!(
            estimate_correlations(&s, &CorrelationBins::new(2, 0.4, 4), Execution::Sequential),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn corrupted_samples_fail_the_bound() {
        let p = ModelParams::new(1.0, Potential::Zero, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap();
        let s = poisson_samples(&p, 400, 2);
        // add a tight cluster to every sample
        let bad: Vec<Configuration> = s
            .iter()
            .map(|g| {
                let mut g = g.clone();
                for k in 0..5 {
                    let _ = g.insert(Point::new(&[0.2 + 0.01 * k as f64, 0.2]).unwrap());
                }
                g
            })
            .collect();
        let s = SampleSet::independent(bad, 32).unwrap();
        let est = estimate_correlations(&s, &CorrelationBins::new(2, 0.4, 4), Execution::Sequential).unwrap();
        let r = ruelle_check(&est, &p).unwrap();
        assert!(!r.pass);
        assert!(!r.failures.is_empty());
    }
}
