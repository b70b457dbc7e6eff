//! Statistical checks of the equilibrium structure and of the spectral gap.

pub mod autocorr;
pub mod correlations;
pub mod gnz;

use serde::Serialize;

use crate::dynamics::SampleSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::generator::carre_du_champ;
use crate::model::ModelParams;
use crate::observable::Observable;
use crate::stats::Estimate;

pub use autocorr::{analyze_series, autocorrelation, autocorrelation_battery, record_series, AutocorrConfig, AutocorrEstimate};
pub use correlations::{estimate_correlations, ruelle_check, CorrelationBins, CorrelationEstimate, RuelleReport};
pub use gnz::{gnz_defect, GnzDefect, GnzTest};

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub statistic: String,
    pub estimate: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(statistic: impl Into<String>, est: Estimate, threshold: f64, pass: bool) -> Self {
        CheckRecord { statistic: statistic.into(), estimate: est.value, stderr: est.stderr, threshold, pass }
    }

    /// Passes when `|estimate - target| <= sigmas * stderr`; the threshold
    /// recorded is the allowed deviation.
    pub fn zero_within(statistic: impl Into<String>, est: Estimate, sigmas: f64) -> Self {
        let pass = est.consistent_with(0.0, sigmas);
        Self::new(statistic, est, sigmas * est.stderr, pass)
    }
}

/// Comparison of the slowest fitted decay rate with `1 - delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub bound: f64,
    /// Observable with the smallest fitted rate.
    pub slowest: String,
    pub min_rate: Estimate,
    pub ci_half_width: f64,
    pub pass: bool,
}

/// The gap bounds every mode, so the binding check uses the smallest rate
/// over the battery: it passes when `min_rate >= 1 - delta - ci`.
pub fn gap_check(estimates: &[AutocorrEstimate], params: &ModelParams) -> Result<GapReport> {
    params.require_gap_regime()?;
    let slowest = estimates
        .iter()
        .min_by(|a, b| a.rate.value.total_cmp(&b.rate.value))
        .ok_or_else(|| Error::Parameter("no autocorrelation estimates".into()))?;
    let bound = 1.0 - params.delta();
    Ok(GapReport {
        bound,
        slowest: slowest.observable.clone(),
        min_rate: slowest.rate,
        ci_half_width: slowest.ci_half_width,
        pass: slowest.rate.value >= bound - slowest.ci_half_width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareReport {
    pub variance: Estimate,
    pub dirichlet: Estimate,
    /// `dirichlet / variance`, infinite for zero variance.
    pub ratio: f64,
    /// `dirichlet - (1 - delta) variance`.
    pub margin: Estimate,
    pub pass: bool,
}

/// Checks `E(F, F) >= (1 - delta) Var(F) - 3 sigma` using the death-side
/// form of the Dirichlet form.
pub fn poincare_check(
    f: &Observable,
    samples: &SampleSet,
    params: &ModelParams,
    exec: Execution,
) -> Result<PoincareReport> {
    params.require_gap_regime()?;
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    if f.is_constant() {
        let zero = Estimate::exact(0.0);
        return Ok(PoincareReport { variance: zero, dirichlet: zero, ratio: f64::INFINITY, margin: zero, pass: true });
    }
    let bm = samples.evaluate(exec, 3, |gamma| {
        let v = f.eval(gamma);
        Ok(vec![v, v * v, carre_du_champ(f, f, gamma)])
    })?;
    let factor = 1.0 - params.delta();
    let variance = bm.jackknife(|m| m[1] - m[0] * m[0])?;
    let dirichlet = bm.estimate(2)?;
    let margin = bm.jackknife(|m| m[2] - factor * (m[1] - m[0] * m[0]))?;
    let ratio = if variance.value > 0.0 { dirichlet.value / variance.value } else { f64::INFINITY };
    Ok(PoincareReport { variance, dirichlet, ratio, margin, pass: margin.value >= -3.0 * margin.stderr })
}
