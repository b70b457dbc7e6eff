use glauber::dynamics::{sample_chains, SampleSet};
use glauber::estimators::{
    estimate_correlations, gap_check, gnz_defect, poincare_check, ruelle_check, CheckRecord, CorrelationBins, GnzTest,
};
use glauber::generator::{coercivity_terms, symmetry_defect};
use glauber::observable::battery;
use glauber::stats::Estimate;
use glauber::{Boundary, Execution, ModelParams, Observable, QuadratureSpec};
use serde::Serialize;

use crate::config::{Check, RunConfig};
use crate::error::CliError;
use crate::output::{num, Output};
use crate::{gap, oracle};

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub check: &'static str,
    #[serde(flatten)]
    pub record: CheckRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckError {
    pub check: &'static str,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub delta: f64,
    pub pass: bool,
    pub records: Vec<Record>,
    pub errors: Vec<CheckError>,
}

/// What `verify` concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    params: ModelParams,
    bat: Vec<Observable>,
    quad: QuadratureSpec,
    exec: Execution,
    sigmas: f64,
}

type Records = Result<Vec<CheckRecord>, CliError>;

fn gnz(c: &Ctx, s: &SampleSet) -> Records {
    GnzTest::battery(&c.bat)?
        .iter()
        .map(|t| {
            let d = gnz_defect(t, s, &c.params, &c.quad, c.exec)?;
            Ok(CheckRecord::zero_within(format!("gnz {}", t.name), d.defect, c.sigmas))
        })
        .collect()
}

fn symmetry(c: &Ctx, s: &SampleSet) -> Records {
    let g = &c.bat[0];
    let mut out = Vec::new();
    for f in &c.bat {
        for (a, b) in [(f, g), (g, f)] {
            let d = symmetry_defect(a, b, s, &c.params, &c.quad, c.exec)?;
            out.push(CheckRecord::zero_within(format!("symmetry ({}, {})", a.name(), b.name()), d, c.sigmas));
        }
    }
    Ok(out)
}

fn coercivity(c: &Ctx, s: &SampleSet) -> Records {
    let mut out = Vec::new();
    for f in &c.bat {
        let t = coercivity_terms(f, s, &c.params, &c.quad, c.exec)?;
        out.push(CheckRecord::zero_within(format!("coercivity {}", f.name()), t.defect, c.sigmas));
        if c.params.delta() < 1.0 {
            let m = t.gap_margin;
            out.push(CheckRecord::new(
                format!("coercivity margin {}", f.name()),
                m,
                -c.sigmas * m.stderr,
                m.value >= -c.sigmas * m.stderr,
            ));
        }
    }
    Ok(out)
}

fn poincare(c: &Ctx, s: &SampleSet) -> Records {
    c.bat
        .iter()
        .map(|f| {
            let r = poincare_check(f, s, &c.params, c.exec)?;
            Ok(CheckRecord::new(format!("poincare {}", f.name()), r.margin, -3.0 * r.margin.stderr, r.pass))
        })
        .collect()
}

fn ruelle(c: &Ctx, s: &SampleSet) -> Records {
    let b = c.params.sim_box();
    let admissible = match b.boundary() {
        Boundary::Periodic => 0.5 * b.min_side(),
        Boundary::Empty => b.min_side(),
    };
    let v = &c.cfg.verify;
    let bins = CorrelationBins::new(v.k1_per_axis, v.r_max_fraction * admissible, v.r_bins);
    let est = estimate_correlations(s, &bins, c.exec)?;
    let rep = ruelle_check(&est, &c.params)?;
    let z = c.params.z();
    let mut out = vec![
        CheckRecord::new("ruelle k1 worst sigmas", Estimate::exact(rep.k1_worst_sigmas), 3.0, rep.k1_worst_sigmas <= 3.0),
        CheckRecord::new("ruelle k2 worst sigmas", Estimate::exact(rep.k2_worst_sigmas), 3.0, rep.k2_worst_sigmas <= 3.0),
    ];
    out.extend(rep.failures.into_iter().map(|mut f| {
        f.statistic = format!("ruelle {} (z = {z})", f.statistic);
        f
    }));
    Ok(out)
}

fn gap_records(c: &Ctx) -> Result<(Vec<CheckRecord>, Vec<String>), CliError> {
    let (est, errors) = gap::estimate(c.cfg, &c.params, c.exec)?;
    let rep = gap_check(&est, &c.params)?;
    let mut out: Vec<CheckRecord> = est
        .iter()
        .map(|e| {
            let t = rep.bound - e.ci_half_width;
            CheckRecord::new(format!("decay rate {}", e.observable), e.rate, t, e.rate.value >= t)
        })
        .collect();
    out.push(CheckRecord::new(
        format!("gap min rate ({})", rep.slowest),
        rep.min_rate,
        rep.bound - rep.ci_half_width,
        rep.pass,
    ));
    Ok((out, errors))
}

fn oracle_records(c: &Ctx) -> Records {
    let (r, _) = oracle::compare(c.cfg, c.exec)?;
    let mut out = vec![CheckRecord::new(
        "oracle tv distance",
        Estimate::exact(r.tv_distance_vs_mc),
        r.tv_threshold,
        r.tv_distance_vs_mc < r.tv_threshold,
    )];
    if let Some(bound) = r.gap_bound {
        out.push(CheckRecord::new("oracle gap", Estimate::exact(r.gap), bound, r.gap >= bound - 1e-10));
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let out = Output::create(cfg)?;
    let checks: Vec<Check> = Check::ALL.into_iter().filter(|c| cfg.verify.checks.contains(c)).collect();
    let needs_samples = checks.iter().any(|c| !matches!(c, Check::Gap | Check::OracleCompare));
    let samples = if needs_samples {
        Some(sample_chains(&params, &cfg.plan(), cfg.run.chains, cfg.run.seed, exec)?)
    } else {
        None
    };
    let ctx = Ctx {
        cfg,
        bat: battery(params.sim_box())?,
        params,
        quad: QuadratureSpec::with_tol(cfg.verify.quad_tol),
        exec,
        sigmas: cfg.verify.sigmas,
    };
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for check in checks {
        let name = check.as_str();
        let result = match (check, &samples) {
            (Check::Gap, _) => gap_records(&ctx).map(|(r, errs)| {
                errors.extend(errs.into_iter().map(|message| CheckError { check: name, message }));
                r
            }),
            (Check::OracleCompare, _) => oracle_records(&ctx),
            (_, None) => unreachable!("samples are drawn for every sample-based check"),
            (Check::Gnz, Some(s)) => gnz(&ctx, s),
            (Check::Symmetry, Some(s)) => symmetry(&ctx, s),
            (Check::Coercivity, Some(s)) => coercivity(&ctx, s),
            (Check::Poincare, Some(s)) => poincare(&ctx, s),
            (Check::Ruelle, Some(s)) => ruelle(&ctx, s),
        };
        match result {
            Ok(rs) => records.extend(rs.into_iter().map(|record| Record { check: name, record })),
            Err(e) => errors.push(CheckError { check: name, message: e.to_string() }),
        }
    }
    let pass = errors.is_empty() && records.iter().all(|r| r.record.pass);
    out.csv(
        "checks.csv",
        &["check", "statistic", "estimate", "stderr", "threshold", "pass"],
        records.iter().map(|r| {
            vec![
                r.check.to_string(),
                format!("\"{}\"", r.record.statistic),
                num(r.record.estimate),
                num(r.record.stderr),
                num(r.record.threshold),
                r.record.pass.to_string(),
            ]
        }),
    )?;
    let report = VerifyReport {
        samples: samples.as_ref().map_or(0, |s| s.len()),
        delta: ctx.params.delta(),
        pass,
        records,
        errors,
    };
    println!("{}", out.report("verify_report.json", &report)?);
    Ok(if !report.errors.is_empty() {
        Outcome::Error
    } else if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
