//! Pair potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, unit_sphere_area, MAX_DIM};
use crate::quadrature::{integrate_interval, Integral, QuadratureSpec};

/// Values of the soft Gaussian potential below this are treated as zero.
pub const SOFT_GAUSSIAN_FLOOR: f64 = 1e-12;

/// Shipped isotropic pair potentials. All of them are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    /// `beta` on the open ball of radius `range`, zero outside.
    Strauss { beta: f64, range: f64 },
    /// Infinite on the open ball of radius `range`.
    #[serde(alias = "hardcore")]
    HardCore { range: f64 },
    /// `theta * exp(-|r|^2 / (2 sigma^2))`, truncated where it drops below
    /// [`SOFT_GAUSSIAN_FLOOR`].
    SoftGaussian { theta: f64, sigma: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Potential {
    pub fn strauss(beta: f64, range: f64) -> Result<Self> {
        let p = Potential::Strauss { beta, range };
        p.validate()?;
        Ok(p)
    }

    pub fn hard_core(range: f64) -> Result<Self> {
        let p = Potential::HardCore { range };
        p.validate()?;
        Ok(p)
    }

    pub fn soft_gaussian(theta: f64, sigma: f64) -> Result<Self> {
        let p = Potential::SoftGaussian { theta, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::Zero => Ok(()),
            Potential::Strauss { beta, range } => {
                positive("strauss beta", beta)?;
                positive("strauss range", range)
            }
            Potential::HardCore { range } => positive("hard-core range", range),
            Potential::SoftGaussian { theta, sigma } => {
                positive("soft-gaussian theta", theta)?;
                positive("soft-gaussian sigma", sigma)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Zero => "zero",
            Potential::Strauss { .. } => "strauss",
            Potential::HardCore { .. } => "hard_core",
            Potential::SoftGaussian { .. } => "soft_gaussian",
        }
    }

    /// Value at squared distance `r2`.
    #[inline]
    pub fn at_dist2(&self, r2: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Strauss { beta, range } => {
                if r2 < range * range {
                    beta
                } else {
                    0.0
                }
            }
            Potential::HardCore { range } => {
                if r2 < range * range {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Potential::SoftGaussian { theta, sigma } => {
                let c = self.cutoff();
                if r2 >= c * c {
                    0.0
                } else {
                    theta * (-r2 / (2.0 * sigma * sigma)).exp()
                }
            }
        }
    }

    /// Value at a displacement vector.
    pub fn evaluate(&self, displacement: &[f64]) -> f64 {
        self.at_dist2(displacement.iter().map(|v| v * v).sum())
    }

    /// Interaction range: the potential vanishes at distances `>=` this.
    /// Zero for the zero potential.
    pub fn cutoff(&self) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Strauss { range, .. } | Potential::HardCore { range } => range,
            Potential::SoftGaussian { theta, sigma } => {
                if theta <= SOFT_GAUSSIAN_FLOOR {
                    0.0
                } else {
                    sigma * (2.0 * (theta / SOFT_GAUSSIAN_FLOOR).ln()).sqrt()
                }
            }
        }
    }

    /// Nonnegative everywhere.
    pub fn is_positive(&self) -> bool {
        true
    }

    /// Radius of the sphere on which the potential jumps, for step potentials.
    pub fn jump_radius(&self) -> Option<f64> {
        match *self {
            Potential::Strauss { range, .. } | Potential::HardCore { range } => Some(range),
            _ => None,
        }
    }

    /// Constant between jumps (so `exp(-E)` is piecewise constant).
    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self, Potential::SoftGaussian { .. })
    }

    /// Length scale over which a smooth potential varies appreciably.
    pub fn smoothness_scale(&self) -> f64 {
        match *self {
            Potential::SoftGaussian { sigma, .. } => sigma,
            _ => f64::INFINITY,
        }
    }

    /// `z * integral over R^dim of (1 - exp(-phi(x))) dx`.
    ///
    /// Closed forms for the step potentials; radial Gauss-Legendre for the
    /// soft Gaussian.
    pub fn delta(&self, z: f64, dim: usize) -> Result<Integral> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Parameter(format!("unsupported dimension {dim}")));
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::Parameter(format!("activity must be finite and >= 0, got {z}")));
        }
        let exact = |v: f64| Ok(Integral { value: v, error: 0.0 });
        match *self {
            Potential::Zero => exact(0.0),
            Potential::Strauss { beta, range } => {
                exact(z * (-(-beta).exp_m1()) * unit_ball_volume(dim) * range.powi(dim as i32))
            }
            Potential::HardCore { range } => exact(z * unit_ball_volume(dim) * range.powi(dim as i32)),
            Potential::SoftGaussian { .. } => {
                let r = self.delta_radial(z, dim, &QuadratureSpec::with_tol(1e-10))?;
                if r.error > 1e-8 {
                    return Err(Error::Model(format!(
                        "delta integral did not converge (error {:e})",
                        r.error
                    )));
                }
                Ok(r)
            }
        }
    }

    /// Radial quadrature of the delta integral, valid for every variant.
    pub fn delta_radial(&self, z: f64, dim: usize, spec: &QuadratureSpec) -> Result<Integral> {
        let cut = self.cutoff();
        if cut == 0.0 {
            return Ok(Integral { value: 0.0, error: 0.0 });
        }
        if !cut.is_finite() {
            return Err(Error::Model("potential is not integrable: infinite range".into()));
        }
        let shell = unit_sphere_area(dim);
        let mut interior: Vec<f64> = self.jump_radius().into_iter().collect();
        let scale = self.smoothness_scale();
        if scale.is_finite() {
            interior.extend((1..).map(|k| k as f64 * scale).take_while(|&r| r < cut));
        }
        let res = integrate_interval(0.0, cut, &interior, spec, |r| {
            let phi = self.at_dist2(r * r);
            r.powi(dim as i32 - 1) * -(-phi).exp_m1()
        })?;
        let value = z * shell * res.value;
        if !value.is_finite() {
            return Err(Error::Model("delta integral diverges".into()));
        }
        Ok(Integral { value, error: z * shell * res.error })
    }
}
