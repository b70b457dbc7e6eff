use glauber::estimators::{autocorrelation_battery, gap_check, AutocorrConfig, AutocorrEstimate, GapReport};
use glauber::observable::battery;
use glauber::{Execution, ModelParams};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Output};

/// Offset that keeps the autocorrelation streams apart from the sampler's.
const STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn autocorr_config(cfg: &RunConfig) -> AutocorrConfig {
    let v = &cfg.verify;
    AutocorrConfig {
        chains: v.autocorr_chains,
        burn_in: cfg.run.burn_in,
        run_length: v.autocorr_run_length,
        dt: v.autocorr_dt,
        max_lag: v.autocorr_max_lag,
        confidence: v.confidence,
        seed: cfg.run.seed ^ STREAM_SALT,
        ..AutocorrConfig::default()
    }
}

/// Fitted decay rates of the observable battery; failures of individual
/// fits are returned alongside.
pub fn estimate(
    cfg: &RunConfig,
    params: &ModelParams,
    exec: Execution,
) -> Result<(Vec<AutocorrEstimate>, Vec<String>), CliError> {
    let bat = battery(params.sim_box())?;
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (f, r) in bat.iter().zip(autocorrelation_battery(&bat, params, &autocorr_config(cfg), exec)?) {
        match r {
            Ok(e) => ok.push(e),
            Err(e) => errors.push(format!("{}: {e}", f.name())),
        }
    }
    Ok((ok, errors))
}

#[derive(Serialize)]
struct GapOutput<'a> {
    delta: f64,
    report: &'a GapReport,
    estimates: &'a [AutocorrEstimate],
    errors: &'a [String],
}

pub fn rate_rows(est: &[AutocorrEstimate]) -> Vec<Vec<String>> {
    est.iter()
        .map(|e| {
            vec![
                e.observable.clone(),
                num(e.rate.value),
                num(e.rate.stderr),
                num(e.ci_half_width),
                num(e.fit_range.0),
                num(e.fit_range.1),
            ]
        })
        .collect()
}

pub const RATE_HEADER: [&str; 6] = ["observable", "rate", "stderr", "ci_half_width", "fit_from", "fit_to"];

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<bool, CliError> {
    let params = cfg.params()?;
    params.require_gap_regime()?;
    let out = Output::create(cfg)?;
    let (est, errors) = estimate(cfg, &params, exec)?;
    out.csv("gap.csv", &RATE_HEADER, rate_rows(&est))?;
    let report = gap_check(&est, &params)?;
    let text = out.report(
        "gap_report.json",
        &GapOutput { delta: params.delta(), report: &report, estimates: &est, errors: &errors },
    )?;
    println!("{text}");
    if !errors.is_empty() {
        return Err(CliError::Internal(errors.join("; ")));
    }
    Ok(report.pass)
}
