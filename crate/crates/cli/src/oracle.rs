use glauber::dynamics::{sample_chains, SamplingPlan};
use glauber::generator::apply_generator;
use glauber::oracle::{spectral_gap_eig, stationary_distribution, DiscreteModel};
use glauber::stats::total_variation;
use glauber::{Execution, Observable, QuadratureSpec, Rect};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Output};

/// Largest number of states probed by the generator-row comparison.
const ROW_PROBES: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub state_count: usize,
    pub gap: f64,
    pub delta_discrete: f64,
    /// `1 - delta_discrete`, when below one.
    pub gap_bound: Option<f64>,
    pub tv_distance_vs_mc: f64,
    /// Probability mass of simulator samples with no lattice state.
    pub overflow: f64,
    pub tv_threshold: f64,
    pub generator_row_max_error: f64,
    /// `generator_row_max_error / cell_volume`.
    pub generator_row_constant: f64,
    pub pass: bool,
}

pub fn compare(cfg: &RunConfig, exec: Execution) -> Result<(OracleComparison, Vec<Vec<String>>), CliError> {
    let params = cfg.params()?;
    let o = &cfg.oracle;
    let d = DiscreteModel::new(&params, &o.cells_per_axis, o.cap)?;
    let q = d.build_rate_matrix()?;
    let pi = stationary_distribution(&q)?;
    let gap = spectral_gap_eig(&q, &pi)?;
    let delta_discrete = d.delta_discrete();

    let chains = cfg.run.chains;
    let per_chain = o.samples.div_ceil(chains);
    let plan = SamplingPlan { samples: per_chain, ..cfg.plan() };
    let set = sample_chains(&params, &plan, chains, cfg.run.seed, exec)?;
    let (emp, overflow) = d.empirical_law(set.iter());
    let tv = total_variation(&emp, &pi) + 0.5 * overflow;

    // count in the lower half of the box along the first axis
    let b = params.sim_box();
    let mut hi = b.sides().to_vec();
    hi[0] *= 0.5;
    let f = Observable::count("half", Rect::new(&vec![0.0; b.dim()], &hi)?);
    let quad = QuadratureSpec::with_tol(cfg.verify.quad_tol);
    let stride = d.states().len().div_ceil(ROW_PROBES);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &s in d.states().iter().step_by(stride) {
        let gamma = d.configuration(s)?;
        let h = apply_generator(&f, &gamma, &params, &quad)?.value;
        let qf = d.row_action(s, |t| f.eval(&d.configuration(t).expect("lattice state")));
        let err = (h + qf).abs();
        worst = worst.max(err);
        rows.push(vec![format!("{s:b}"), num(h), num(-qf), num(err)]);
    }
    let gap_bound = (delta_discrete < 1.0).then(|| 1.0 - delta_discrete);
    let pass = tv < o.tv_threshold && gap_bound.is_none_or(|g| gap >= g - 1e-10);
    Ok((
        OracleComparison {
            state_count: d.states().len(),
            gap,
            delta_discrete,
            gap_bound,
            tv_distance_vs_mc: tv,
            overflow,
            tv_threshold: o.tv_threshold,
            generator_row_max_error: worst,
            generator_row_constant: worst / d.cell_volume(),
            pass,
        },
        rows,
    ))
}

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<bool, CliError> {
    let out = Output::create(cfg)?;
    let (report, rows) = compare(cfg, exec)?;
    out.csv("generator_rows.csv", &["state", "continuum", "lattice", "abs_error"], rows)?;
    println!("{}", out.report("oracle_report.json", &report)?);
    Ok(report.pass)
}
