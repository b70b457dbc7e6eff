//! Batch-means error bars and the small set of hypothesis tests used by the
//! verification suites.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// `|value - target| <= sigmas * stderr`. An exact estimate must hit the
    /// target to within rounding.
    pub fn consistent_with(&self, target: f64, sigmas: f64) -> bool {
        let slack = (sigmas * self.stderr).max(1e-12 * (1.0 + target.abs()));
        (self.value - target).abs() <= slack
    }
}

/// Per-batch sample counts and sums of several per-sample quantities.
///
/// Batches are contiguous runs of one chain (or groups of independent
/// draws). Merging is a plain concatenation, so accumulators from separate
/// chains combine associatively.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    width: usize,
    counts: Vec<usize>,
    sums: Vec<Vec<f64>>,
}

impl BatchMeans {
    pub fn new(width: usize) -> Self {
        BatchMeans { width, counts: Vec::new(), sums: Vec::new() }
    }

    /// Adds one batch given its per-sample rows.
    pub fn push_batch<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) {
        let mut sums = vec![0.0; self.width];
        let mut n = 0;
        for row in rows {
            debug_assert_eq!(row.len(), self.width);
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
            n += 1;
        }
        if n > 0 {
            self.counts.push(n);
            self.sums.push(sums);
        }
    }

    pub fn merge(&mut self, other: BatchMeans) {
        assert_eq!(self.width, other.width, "merging accumulators of different widths");
        self.counts.extend(other.counts);
        self.sums.extend(other.sums);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn batches(&self) -> usize {
        self.counts.len()
    }

    pub fn samples(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Overall mean of every quantity.
    pub fn means(&self) -> Vec<f64> {
        let n = self.samples() as f64;
        (0..self.width)
            .map(|k| self.sums.iter().map(|s| s[k]).sum::<f64>() / n)
            .collect()
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.means()[k]
    }

    /// Delete-one-batch jackknife of a smooth function of the means. For a
    /// linear function this is the usual batch-means standard error.
    pub fn jackknife(&self, stat: impl Fn(&[f64]) -> f64) -> Result<Estimate> {
        let b = self.batches();
        if b < 2 {
            return Err(Error::Estimation(format!("need at least two batches, got {b}")));
        }
        let total: Vec<f64> = (0..self.width).map(|k| self.sums.iter().map(|s| s[k]).sum()).collect();
        let n = self.samples() as f64;
        let full = stat(&total.iter().map(|t| t / n).collect::<Vec<_>>());
        let leave_out: Vec<f64> = (0..b)
            .map(|i| {
                let m = n - self.counts[i] as f64;
                let means: Vec<f64> = (0..self.width).map(|k| (total[k] - self.sums[i][k]) / m).collect();
                stat(&means)
            })
            .collect();
        let bf = b as f64;
        let avg = leave_out.iter().sum::<f64>() / bf;
        let var = (bf - 1.0) / bf * leave_out.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
        Ok(Estimate { value: full, stderr: var.sqrt() })
    }

    /// Standard estimate of the mean of quantity `k`.
    pub fn estimate(&self, k: usize) -> Result<Estimate> {
        self.jackknife(|m| m[k])
    }
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("KS test needs two nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit of integer `counts` against
/// probabilities `probs` (same support, `probs` summing to one over it plus
/// an implied tail). Cells with expected count below `min_expected` are
/// pooled into their neighbour. Returns `(statistic, dof, p)`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::Parameter("counts and probabilities must align".into()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Parameter("no observations".into()));
    }
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        o += *c as f64;
        e += p * n;
        if e >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    // remaining mass: whatever the probabilities leave, plus the open tail
    let tail_e = e + (1.0 - probs.iter().sum::<f64>()).max(0.0) * n;
    match cells.last_mut() {
        Some(last) if tail_e < min_expected => {
            last.0 += o;
            last.1 += tail_e;
        }
        _ => cells.push((o, tail_e)),
    }
    if cells.len() < 2 {
        return Err(Error::Estimation("fewer than two chi-square cells".into()));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p = 1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::Numerical(e.to_string()))?.cdf(stat);
    Ok((stat, dof, p))
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Two-sided Student-t critical value at confidence `level` with `dof`
/// degrees of freedom.
pub fn t_critical(level: f64, dof: usize) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(t.inverse_cdf(0.5 + level / 2.0))
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Estimation("need at least two points for a line fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Estimation("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Mean and unbiased sample variance.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_linear_statistic_is_batch_means() {
        let mut bm = BatchMeans::new(1);
        let data = [[1.0], [2.0], [4.0], [7.0]];
        for row in &data {
            bm.push_batch([&row[..]]);
        }
        let e = bm.estimate(0).unwrap();
        assert!((e.value - 3.5).abs() < 1e-12);
        let (_, var) = mean_var(&[1.0, 2.0, 4.0, 7.0]);
        assert!((e.stderr - (var / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_batch_is_an_error() {
        let mut bm = BatchMeans::new(1);
        bm.push_batch([&[1.0][..], &[2.0][..]]);
        assert!(bm.estimate(0).is_err());
    }

    #[test]
    fn ks_detects_shift_and_accepts_equal() {
        let a: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.618_033_988_7).fract()).collect();
        let b: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.414_213_562_3).fract()).collect();
        let c: Vec<f64> = b.iter().map(|v| v * 0.8).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 > 0.5);
        assert!(ks_two_sample(&a, &c).unwrap().1 < 1e-6);
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let probs = [0.25, 0.5, 0.25];
        let (stat, dof, p) = chi_square_gof(&[250, 500, 250], &probs, 5.0).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(dof, 2);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_and_fit() {
        assert!((t_critical(0.95, 1_000_000).unwrap() - 1.96).abs() < 1e-2);
        let (a, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
