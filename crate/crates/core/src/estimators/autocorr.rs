//! Stationary time correlations along long trajectories and the fitted
//! exponential decay rate.
//!
//! For a reversible chain `C(t) = Cov(F(X_0), F(X_t))` is a mixture of
//! decaying exponentials whose rates all lie in the spectrum of the
//! generator, so the decay rate of a mean-zero observable is at least the
//! spectral gap.

use serde::Serialize;

use crate::dynamics::{chain_rng, ChainState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::ModelParams;
use crate::observable::Observable;
use crate::stats::{linear_fit, t_critical, Estimate};

/// Run layout for time-correlation estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrConfig {
    /// Independent chains; the confidence interval comes from their spread.
    pub chains: usize,
    pub burn_in: f64,
    /// Process time recorded per chain after burn-in.
    pub run_length: f64,
    /// Sampling interval of the recorded series.
    pub dt: f64,
    pub max_lag: f64,
    /// Normalized correlation where the fit window starts.
    pub fit_upper: f64,
    /// Normalized correlation where the fit window ends.
    pub fit_lower: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for AutocorrConfig {
    fn default() -> Self {
        AutocorrConfig {
            chains: 8,
            burn_in: 20.0,
            run_length: 2000.0,
            dt: 0.05,
            max_lag: 5.0,
            fit_upper: 0.8,
            fit_lower: 0.2,
            confidence: 0.95,
            seed: 0,
        }
    }
}

impl AutocorrConfig {
    fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if self.chains < 2 {
            return Err(Error::Parameter("at least two chains are needed for a confidence interval".into()));
        }
        if !(pos(self.burn_in) && pos(self.run_length) && pos(self.dt) && pos(self.max_lag)) {
            return Err(Error::Parameter("burn-in, run length, dt and max lag must be positive".into()));
        }
        if self.max_lag >= self.run_length {
            return Err(Error::Parameter("max lag must be shorter than the run".into()));
        }
        if !(0.0 < self.fit_lower && self.fit_lower < self.fit_upper && self.fit_upper < 1.0) {
            return Err(Error::Parameter("fit window needs 0 < lower < upper < 1".into()));
        }
        if !(0.0 < self.confidence && self.confidence < 1.0) {
            return Err(Error::Parameter("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        ((self.run_length / self.dt).floor() as usize, (self.max_lag / self.dt).round().max(1.0) as usize)
    }
}

/// Normalized autocorrelation with the fitted decay rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrEstimate {
    pub observable: String,
    pub lags: Vec<f64>,
    /// `C(t) / C(0)`.
    pub values: Vec<f64>,
    /// Delete-one-chain jackknife errors of `values`.
    pub stderr: Vec<f64>,
    pub variance: f64,
    /// Lag interval of the log-linear fit.
    pub fit_range: (f64, f64),
    pub rate: Estimate,
    /// Half width of the confidence interval of the rate.
    pub ci_half_width: f64,
    /// No increase of the normalized correlation by more than three standard errors.
    pub monotone: bool,
}

/// Recorded series `[chain][observable][step]` on the grid
/// `burn_in + k dt`, chains started empty on streams `0..chains`.
pub fn record_series(
    params: &ModelParams,
    observables: &[Observable],
    cfg: &AutocorrConfig,
    exec: Execution,
) -> Result<Vec<Vec<Vec<f64>>>> {
    cfg.validate()?;
    let (n, _) = cfg.steps();
    exec.map_range(cfg.chains, |c| {
        let mut state = ChainState::new(params.empty_configuration(), chain_rng(cfg.seed, c as u64));
        state.advance_to(params, cfg.burn_in, |_, _| {});
        let mut out: Vec<Vec<f64>> = observables.iter().map(|_| Vec::with_capacity(n)).collect();
        for k in 0..n {
            state.advance_to(params, cfg.burn_in + k as f64 * cfg.dt, |_, _| {});
            for (o, f) in out.iter_mut().zip(observables) {
                o.push(f.eval(&state.config));
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect()
}

/// Per-chain raw sums from which pooled covariances can be formed with any
/// subset of chains.
struct LagSums {
    /// `sum_k F_k F_{k+l}`.
    prod: Vec<f64>,
    /// `sum_{k < N-l} F_k`.
    head: Vec<f64>,
    /// `sum_{k >= l} F_k`.
    tail: Vec<f64>,
    count: Vec<f64>,
}

impl LagSums {
    fn new(series: &[f64], max_lag: usize) -> Self {
        let n = series.len();
        let total: f64 = series.iter().sum();
        let mut s = LagSums {
            prod: vec![0.0; max_lag + 1],
            head: vec![0.0; max_lag + 1],
            tail: vec![0.0; max_lag + 1],
            count: vec![0.0; max_lag + 1],
        };
        for l in 0..=max_lag {
            s.prod[l] = series[..n - l].iter().zip(&series[l..]).map(|(a, b)| a * b).sum();
            s.head[l] = total - series[n - l..].iter().sum::<f64>();
            s.tail[l] = total - series[..l].iter().sum::<f64>();
            s.count[l] = (n - l) as f64;
        }
        s
    }
}

fn pooled_correlation(sums: &[&LagSums]) -> (Vec<f64>, f64) {
    let lags = sums[0].prod.len();
    let total: f64 = sums.iter().map(|s| s.head[0]).sum();
    let n: f64 = sums.iter().map(|s| s.count[0]).sum();
    let m = total / n;
    let cov: Vec<f64> = (0..lags)
        .map(|l| {
            let p: f64 = sums.iter().map(|s| s.prod[l]).sum();
            let a: f64 = sums.iter().map(|s| s.head[l]).sum();
            let b: f64 = sums.iter().map(|s| s.tail[l]).sum();
            let c: f64 = sums.iter().map(|s| s.count[l]).sum();
            (p - m * (a + b) + m * m * c) / c
        })
        .collect();
    let c0 = cov[0];
    (cov.iter().map(|c| c / c0).collect(), c0)
}

fn fit_rate(rho: &[f64], dt: f64, lo: usize, hi: usize) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&l| rho[l] > 0.0)
        .map(|l| (l as f64 * dt, rho[l].ln()))
        .unzip();
    let (_, slope) = linear_fit(&x, &y)?;
    Ok(-slope)
}

fn jackknife(full: f64, leave_out: &[f64]) -> Estimate {
    let b = leave_out.len() as f64;
    let avg = leave_out.iter().sum::<f64>() / b;
    let var = (b - 1.0) / b * leave_out.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
    Estimate::new(full, var.sqrt())
}

/// Correlation analysis of one observable from its recorded series.
pub fn analyze_series(name: &str, series: &[&[f64]], cfg: &AutocorrConfig) -> Result<AutocorrEstimate> {
    cfg.validate()?;
    let (_, max_lag) = cfg.steps();
    if series.iter().any(|s| s.len() <= max_lag + 1) {
        return Err(Error::Parameter("series shorter than the maximal lag".into()));
    }
    let sums: Vec<LagSums> = series.iter().map(|s| LagSums::new(s, max_lag)).collect();
    let all: Vec<&LagSums> = sums.iter().collect();
    let (rho, c0) = pooled_correlation(&all);
    let scale = series.iter().flat_map(|s| s.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    if !(c0 > 1e-12 * scale.max(1.0).powi(2)) {
        return Err(Error::Estimation(format!("observable {name} has zero variance")));
    }
    let lo = rho
        .iter()
        .position(|&r| r <= cfg.fit_upper)
        .ok_or_else(|| Error::Estimation(format!("{name}: correlation never drops below {}", cfg.fit_upper)))?;
    let hi = rho
        .iter()
        .position(|&r| r <= cfg.fit_lower)
        .ok_or_else(|| Error::Estimation(format!("{name}: correlation never drops below {}", cfg.fit_lower)))?;
    let lo = lo.min(hi.saturating_sub(1));
    let full = fit_rate(&rho, cfg.dt, lo, hi)?;
    if !(full > 0.0) {
        return Err(Error::Estimation(format!("{name}: fitted decay rate {full} is not positive")));
    }
    let mut leave_rates = Vec::with_capacity(sums.len());
    let mut leave_rho = Vec::with_capacity(sums.len());
    for c in 0..sums.len() {
        let sub: Vec<&LagSums> = sums.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, s)| s).collect();
        let (r, _) = pooled_correlation(&sub);
        leave_rates.push(fit_rate(&r, cfg.dt, lo, hi)?);
        leave_rho.push(r);
    }
    let rate = jackknife(full, &leave_rates);
    let stderr: Vec<f64> = (0..rho.len())
        .map(|l| jackknife(rho[l], &leave_rho.iter().map(|r| r[l]).collect::<Vec<_>>()).stderr)
        .collect();
    let monotone = (0..rho.len() - 1).all(|l| {
        let step = jackknife(
            rho[l + 1] - rho[l],
            &leave_rho.iter().map(|r| r[l + 1] - r[l]).collect::<Vec<_>>(),
        );
        step.value <= 3.0 * step.stderr
    });
    let ci_half_width = t_critical(cfg.confidence, sums.len() - 1)? * rate.stderr;
    Ok(AutocorrEstimate {
        observable: name.to_string(),
        lags: (0..rho.len()).map(|l| l as f64 * cfg.dt).collect(),
        values: rho,
        stderr,
        variance: c0,
        fit_range: (lo as f64 * cfg.dt, hi as f64 * cfg.dt),
        rate,
        ci_half_width,
        monotone,
    })
}

/// Runs the chains once and analyses every observable on the same
/// trajectories.
pub fn autocorrelation_battery(
    observables: &[Observable],
    params: &ModelParams,
    cfg: &AutocorrConfig,
    exec: Execution,
) -> Result<Vec<Result<AutocorrEstimate>>> {
    let rec = record_series(params, observables, cfg, exec)?;
    Ok(observables
        .iter()
        .enumerate()
        .map(|(o, f)| {
            let s: Vec<&[f64]> = rec.iter().map(|c| c[o].as_slice()).collect();
            analyze_series(f.name(), &s, cfg)
        })
        .collect())
}

pub fn autocorrelation(
    observable: &Observable,
    params: &ModelParams,
    cfg: &AutocorrConfig,
    exec: Execution,
) -> Result<AutocorrEstimate> {
    autocorrelation_battery(std::slice::from_ref(observable), params, cfg, exec)?
        .pop()
        .expect("one observable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + (1.0 - phi * phi).sqrt() * e;
                x
            })
            .collect()
    }

    #[test]
    fn recovers_the_rate_of_a_sampled_ou_process() {
        // an Ornstein-Uhlenbeck process with rate 1.5 sampled every dt
        let cfg = AutocorrConfig { dt: 0.05, max_lag: 3.0, run_length: 4000.0, ..Default::default() };
        let phi = (-1.5f64 * cfg.dt).exp();
        let chains: Vec<Vec<f64>> = (0..8).map(|c| ar1(80_000, phi, c)).collect();
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        let e = analyze_series("ou", &refs, &cfg).unwrap();
        assert_eq!(e.values[0], 1.0);
        assert!((e.rate.value - 1.5).abs() < 3.0 * e.rate.stderr + 0.02, "{:?}", e.rate);
        assert!(e.monotone);
    }

    #[test]
    fn constant_series_is_an_estimation_error() {
        let cfg = AutocorrConfig { max_lag: 1.0, run_length: 10.0, ..Default::default() };
        let s = vec![2.0; 400];
        let refs: Vec<&[f64]> = vec![&s, &s];
        assert!(matches!(analyze_series("c", &refs, &cfg), Err(Error::Estimation(_))));
    }
}
