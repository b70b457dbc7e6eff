//! The GNZ identity `E sum_{x in gamma} h(gamma, x) = E int z exp(-E(x, gamma)) h(gamma + x, x) dx`.

use serde::Serialize;

use crate::configuration::Configuration;
use crate::dynamics::SampleSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::generator::birth_integral;
use crate::geometry::Point;
use crate::model::ModelParams;
use crate::observable::{Observable, Window};
use crate::quadrature::{Breaks, QuadratureSpec};
use crate::stats::Estimate;

/// Test function `h(gamma, x) = w(x) * G(gamma)` with a window `w` and an
/// observable `G`. Taking `G = 1` gives `h = w(x)`; taking `G` the count
/// in the window gives `h = 1_W(x) |gamma_W|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnzTest {
    pub name: String,
    pub window: Window,
    pub observable: Observable,
}

impl GnzTest {
    pub fn new(name: impl Into<String>, window: Window, observable: Observable) -> Self {
        GnzTest { name: name.into(), window, observable }
    }

    /// `h(gamma, x)` for `x` in `gamma`.
    pub fn eval(&self, gamma: &Configuration, x: &Point) -> f64 {
        let w = self.window.value(x);
        if w == 0.0 {
            return 0.0;
        }
        w * self.observable.eval(gamma)
    }

    /// The standard tests for a battery: `1_W(x) G(gamma)` for every `G`,
    /// with `W` the support window of the first battery observable, plus
    /// `1_W(x)` itself.
    pub fn battery(observables: &[Observable]) -> Result<Vec<GnzTest>> {
        let first = observables.first().ok_or_else(|| Error::Parameter("empty battery".into()))?;
        let w = first.support().ok_or_else(|| Error::Parameter("constant observable has no window".into()))?;
        let window = Window::Indicator(w);
        let mut v = vec![GnzTest::new("indicator", window, Observable::constant(1.0))];
        v.extend(observables.iter().map(|g| GnzTest::new(format!("indicator_times_{}", g.name()), window, g.clone())));
        Ok(v)
    }
}

/// Both sides of the identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GnzDefect {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `lhs - rhs` with the jackknife error of the difference.
    pub defect: Estimate,
    /// `defect / stderr`, or 0 when both sides are exact and equal.
    pub sigmas: f64,
}

pub fn gnz_defect(
    test: &GnzTest,
    samples: &SampleSet,
    params: &ModelParams,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<GnzDefect> {
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    let region = test.window.support();
    let g = &test.observable;
    let bm = samples.evaluate(exec, 2, |gamma| {
        let lhs: f64 = gamma.iter().map(|x| test.eval(gamma, x)).sum();
        let s = g.sums(gamma);
        let mut breaks = Breaks::new();
        breaks.piecewise_constant = g.is_piecewise_constant() && matches!(test.window, Window::Indicator(_));
        g.add_breaks(&mut breaks);
        test.window.add_breaks(&mut breaks);
        let rhs = birth_integral(params, gamma, &region, breaks, quad, |x| {
            let w = test.window.value(x);
            if w == 0.0 {
                return 0.0;
            }
            w * g.shifted(&s, &g.weights(x), 1.0)
        })?;
        Ok(vec![lhs, rhs.value])
    })?;
    let defect = bm.jackknife(|m| m[0] - m[1])?;
    let sigmas = if defect.stderr > 0.0 {
        defect.value / defect.stderr
    } else if defect.value.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GnzDefect { lhs: bm.estimate(0)?, rhs: bm.estimate(1)?, defect, sigmas })
}
