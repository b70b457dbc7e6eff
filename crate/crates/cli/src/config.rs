//! Run configuration: a TOML file with `[model]`, `[run]`, `[verify]`,
//! `[oracle]` and `[output]` sections. Unknown keys are rejected; every
//! omitted key takes the default shown by the resolved config written
//! beside the outputs.

use std::path::PathBuf;

use glauber::dynamics::{InitialCondition, SamplingPlan};
use glauber::{Boundary, ModelParams, Potential, SimBox};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub z: f64,
    pub potential: Potential,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Box side lengths; a unit cube when omitted.
    #[serde(default)]
    pub sides: Vec<f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_dimension() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Empty,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub chains: usize,
    pub burn_in: f64,
    pub spacing: f64,
    /// Samples per chain.
    pub samples: usize,
    /// Process time simulated per chain by `simulate`.
    pub horizon: f64,
    /// Snapshot interval of `simulate`.
    pub snapshot_every: f64,
    pub init: Init,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            chains: 8,
            burn_in: 20.0,
            spacing: 1.0,
            samples: 1000,
            horizon: 100.0,
            snapshot_every: 1.0,
            init: Init::Empty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Gnz,
    Coercivity,
    Symmetry,
    Gap,
    Poincare,
    Ruelle,
    OracleCompare,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Gnz,
        Check::Coercivity,
        Check::Symmetry,
        Check::Gap,
        Check::Poincare,
        Check::Ruelle,
        Check::OracleCompare,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Check::Gnz => "gnz",
            Check::Coercivity => "coercivity",
            Check::Symmetry => "symmetry",
            Check::Gap => "gap",
            Check::Poincare => "poincare",
            Check::Ruelle => "ruelle",
            Check::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub checks: Vec<Check>,
    /// Width, in standard errors, of the zero-defect acceptance band.
    pub sigmas: f64,
    pub quad_tol: f64,
    /// Autocorrelation runs for the gap check.
    pub autocorr_chains: usize,
    pub autocorr_run_length: f64,
    pub autocorr_dt: f64,
    pub autocorr_max_lag: f64,
    pub confidence: f64,
    /// Correlation-function grid for the Ruelle check.
    pub k1_per_axis: usize,
    /// Pair-distance cutoff as a fraction of the largest admissible one.
    pub r_max_fraction: f64,
    pub r_bins: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            checks: vec![Check::Gnz, Check::Coercivity, Check::Symmetry, Check::Gap, Check::Poincare, Check::Ruelle],
            sigmas: 3.0,
            quad_tol: 1e-6,
            autocorr_chains: 8,
            autocorr_run_length: 2000.0,
            autocorr_dt: 0.05,
            autocorr_max_lag: 5.0,
            confidence: 0.95,
            k1_per_axis: 4,
            r_max_fraction: 1.0,
            r_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Two cells per axis when omitted.
    pub cells_per_axis: Vec<usize>,
    pub cap: usize,
    /// Total simulator samples compared with the lattice law.
    pub samples: usize,
    pub tv_threshold: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { cells_per_axis: Vec::new(), cap: 4, samples: 10_000, tv_threshold: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("glauber-out"), formats: vec![Format::Csv, Format::Jsonl, Format::Json] }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the TOML line and column.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Input(format!("invalid config: {e}")))?;
        if cfg.model.sides.is_empty() {
            cfg.model.sides = vec![1.0; cfg.model.dimension];
        }
        if cfg.oracle.cells_per_axis.is_empty() {
            cfg.oracle.cells_per_axis = vec![2; cfg.model.dimension];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Input(msg));
        let m = &self.model;
        if !(1..=3).contains(&m.dimension) {
            return bad(format!("model.dimension must be 1, 2 or 3, got {}", m.dimension));
        }
        if m.sides.len() != m.dimension {
            return bad(format!("model.sides has {} entries for dimension {}", m.sides.len(), m.dimension));
        }
        let r = &self.run;
        if r.chains == 0 {
            return bad("run.chains must be at least 1".into());
        }
        if !(r.horizon.is_finite() && r.horizon >= 0.0) {
            return bad(format!("run.horizon must be finite and >= 0, got {}", r.horizon));
        }
        if !(r.snapshot_every.is_finite() && r.snapshot_every > 0.0) {
            return bad(format!("run.snapshot_every must be positive, got {}", r.snapshot_every));
        }
        let v = &self.verify;
        if !(v.sigmas.is_finite() && v.sigmas > 0.0) {
            return bad(format!("verify.sigmas must be positive, got {}", v.sigmas));
        }
        if !(v.r_max_fraction > 0.0 && v.r_max_fraction <= 1.0) {
            return bad(format!("verify.r_max_fraction must lie in (0, 1], got {}", v.r_max_fraction));
        }
        let o = &self.oracle;
        if o.cells_per_axis.len() != m.dimension {
            return bad(format!(
                "oracle.cells_per_axis has {} entries for dimension {}",
                o.cells_per_axis.len(),
                m.dimension
            ));
        }
        if o.cells_per_axis.contains(&0) {
            return bad("oracle.cells_per_axis entries must be positive".into());
        }
        // model-level checks (activity, potential parameters, box)
        self.params()?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let b = SimBox::new(&self.model.sides, self.model.boundary)?;
        Ok(ModelParams::new(self.model.z, self.model.potential, b)?)
    }

    pub fn plan(&self) -> SamplingPlan {
        let mut p = SamplingPlan::new(self.run.burn_in, self.run.spacing, self.run.samples);
        p.init = match self.run.init {
            Init::Empty => InitialCondition::Empty,
            Init::Poisson => InitialCondition::Poisson,
        };
        p
    }

    /// The fully resolved configuration as TOML.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the resolved TOML with the output section reset to its
    /// defaults (where results go does not change them), hex encoded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        Sha256::digest(c.resolved_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nz = 0.5\npotential = { type = \"strauss\", beta = 1.0, range = 0.5 }\n";

    #[test]
    fn defaults_are_expanded() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.model.sides, vec![1.0, 1.0]);
        assert_eq!(c.run.chains, 8);
        assert_eq!(c.model.potential, Potential::Strauss { beta: 1.0, range: 0.5 });
    }

    #[test]
    fn resolved_config_round_trips_with_the_same_hash() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        let again = RunConfig::from_toml(&c.resolved_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn missing_potential_names_the_field() {
        let e = RunConfig::from_toml("[model]\nz = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("potential"), "{e}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let e = RunConfig::from_toml(&format!("{MINIMAL}\n[run]\nseed = 1\nchanis = 4\n")).unwrap_err().to_string();
        assert!(e.contains("chanis") && e.contains("line 7"), "{e}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = format!("{MINIMAL}dimension = 3\nsides = [1.0, 1.0]\n");
        assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Input(_))));
    }
}
