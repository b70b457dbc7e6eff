//! Discrete gradients, the generator, and the Dirichlet-form identities.
//!
//! For a configuration `gamma` and a cylinder observable `F`:
//!
//! * `D-_x F(gamma) = F(gamma \ x) - F(gamma)` for `x` in `gamma`,
//! * `D+_x F(gamma) = F(gamma) - F(gamma + x)` for `x` not in `gamma`,
//! * `HF(gamma) = int z exp(-E(x, gamma)) D+_x F(gamma) dx - sum_x D-_x F(gamma)`.
//!
//! The Dirichlet form has a death-side representation (sum over points of
//! products of `D-`) and a birth-side one (integral of products of `D+`);
//! both are estimated so their agreement can be checked.

use serde::Serialize;

use crate::configuration::Configuration;
use crate::dynamics::SampleSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Boundary, Point, Rect, MAX_DIM};
use crate::model::ModelParams;
use crate::observable::{Observable, Sums};
use crate::quadrature::{integrate, Breaks, Integral, QuadratureSpec, Sphere};
use crate::stats::Estimate;

/// `F(gamma \ x) - F(gamma)`.
///
/// `F(gamma \ x)` is summed afresh rather than obtained by subtraction, so
/// `d_minus(F, gamma + x, x)` equals `d_plus(F, gamma, x)` to the last bit
/// when `x` was appended last.
pub fn d_minus(f: &Observable, gamma: &Configuration, x: &Point) -> Result<f64> {
    let idx = gamma
        .find(x)
        .ok_or_else(|| Error::Domain(format!("D- needs a point of the configuration, got {:?}", x.0)))?;
    Ok(f.from_sums(&f.sums_skipping(gamma, Some(idx))) - f.from_sums(&f.sums(gamma)))
}

/// `F(gamma) - F(gamma + x)`.
pub fn d_plus(f: &Observable, gamma: &Configuration, x: &Point) -> Result<f64> {
    if gamma.contains(x) {
        return Err(Error::Domain(format!("D+ needs a point outside the configuration, got {:?}", x.0)));
    }
    if !gamma.sim_box().contains(x) {
        return Err(Error::Domain(format!("point {:?} outside the box", x.0)));
    }
    let s = f.sums(gamma);
    Ok(f.from_sums(&s) - f.shifted(&s, &f.weights(x), 1.0))
}

/// `D-_x D-_y F(gamma)`; on the diagonal this is `-D-_x F(gamma)`.
pub fn d_minus_second(f: &Observable, gamma: &Configuration, x: &Point, y: &Point) -> Result<f64> {
    if !gamma.contains(x) || !gamma.contains(y) {
        return Err(Error::Domain("second gradient needs two points of the configuration".into()));
    }
    if x == y {
        return Ok(-d_minus(f, gamma, x)?);
    }
    let s = f.sums(gamma);
    Ok(second_from_sums(f, &s, &f.weights(x), &f.weights(y), false))
}

#[inline]
fn second_from_sums(f: &Observable, s: &Sums, wx: &Sums, wy: &Sums, diagonal: bool) -> f64 {
    let base = f.from_sums(s);
    let minus_x = f.shifted(s, wx, -1.0);
    if diagonal {
        return base - minus_x;
    }
    let minus_y = f.shifted(s, wy, -1.0);
    let mut both = *s;
    for k in 0..f.windows().len() {
        both[k] -= wx[k] + wy[k];
    }
    f.from_sums(&both) - minus_x - minus_y + base
}

/// `int over region of z exp(-E(x, gamma)) h(x) dx`, with the domain split
/// along the interaction spheres around nearby points and along `breaks`.
pub fn birth_integral(
    params: &ModelParams,
    gamma: &Configuration,
    region: &Rect,
    mut breaks: Breaks,
    quad: &QuadratureSpec,
    h: impl Fn(&Point) -> f64,
) -> Result<Integral> {
    let sim_box = params.sim_box();
    let Some(region) = region.intersect(&sim_box.as_rect()) else {
        return Ok(Integral { value: 0.0, error: 0.0 });
    };
    let pot = params.potential();
    if let Some(r) = pot.jump_radius() {
        if region.dim < 3 {
            add_spheres(params, gamma, &region, r, &mut breaks);
        }
    }
    breaks.piecewise_constant &= pot.is_piecewise_constant();
    breaks.max_piece = breaks.max_piece.min(pot.smoothness_scale());
    let z = params.z();
    let res = integrate(&region, &breaks, quad, |c| {
        let x = Point(*c);
        let hx = h(&x);
        if hx == 0.0 {
            return 0.0;
        }
        z * params.birth_weight(&x, gamma) * hx
    })?;
    if res.error > quad.tol {
        return Err(Error::Accuracy { estimate: res.error, tolerance: quad.tol });
    }
    Ok(res)
}

/// Adds the spheres of radius `r` around every point (and periodic image)
/// that reaches into `region`.
fn add_spheres(params: &ModelParams, gamma: &Configuration, region: &Rect, r: f64, breaks: &mut Breaks) {
    let sim_box = params.sim_box();
    let dim = sim_box.dim();
    let periodic = sim_box.boundary() == Boundary::Periodic;
    let offsets: &[f64] = if periodic { &[-1.0, 0.0, 1.0] } else { &[0.0] };
    for y in gamma.iter() {
        let mut idx = [0usize; MAX_DIM];
        loop {
            let mut c = y.0;
            for i in 0..dim {
                c[i] += offsets[idx[i]] * sim_box.side(i);
            }
            if region.distance_to(&c) < r {
                breaks.spheres.push(Sphere { center: c, radius: r });
            }
            // odometer over offset combinations
            let mut k = 0;
            while k < dim {
                idx[k] += 1;
                if idx[k] < offsets.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
    }
}

fn observable_breaks(fs: &[&Observable]) -> Breaks {
    let mut b = Breaks::new();
    b.piecewise_constant = true;
    for f in fs {
        f.add_breaks(&mut b);
        b.piecewise_constant &= f.is_piecewise_constant();
    }
    b
}

/// `HF(gamma)` with the quadrature error of its birth term.
pub fn apply_generator(
    f: &Observable,
    gamma: &Configuration,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Integral> {
    let Some(support) = f.support() else {
        return Ok(Integral { value: 0.0, error: 0.0 });
    };
    let s = f.sums(gamma);
    let base = f.from_sums(&s);
    let birth = birth_integral(params, gamma, &support, observable_breaks(&[f]), quad, |x| {
        let w = f.weights(x);
        if Observable::touches(&w) {
            base - f.shifted(&s, &w, 1.0)
        } else {
            0.0
        }
    })?;
    let death: f64 = gamma
        .iter()
        .map(|x| {
            let w = f.weights(x);
            if Observable::touches(&w) {
                f.shifted(&s, &w, -1.0) - base
            } else {
                0.0
            }
        })
        .sum();
    Ok(Integral { value: birth.value - death, error: birth.error })
}

/// `sum over x in gamma of D-_x F * D-_x G`.
pub fn carre_du_champ(f: &Observable, g: &Observable, gamma: &Configuration) -> f64 {
    let sf = f.sums(gamma);
    let sg = g.sums(gamma);
    let (bf, bg) = (f.from_sums(&sf), g.from_sums(&sg));
    gamma
        .iter()
        .map(|x| {
            let wf = f.weights(x);
            let wg = g.weights(x);
            if !Observable::touches(&wf) || !Observable::touches(&wg) {
                return 0.0;
            }
            (f.shifted(&sf, &wf, -1.0) - bf) * (g.shifted(&sg, &wg, -1.0) - bg)
        })
        .sum()
}

/// `int z exp(-E(x, gamma)) D+_x F * D+_x G dx`.
pub fn birth_side_density(
    f: &Observable,
    g: &Observable,
    gamma: &Configuration,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Integral> {
    let region = match (f.support(), g.support()) {
        (Some(a), Some(b)) => a.intersect(&b),
        _ => None,
    };
    let Some(region) = region else {
        return Ok(Integral { value: 0.0, error: 0.0 });
    };
    let sf = f.sums(gamma);
    let sg = g.sums(gamma);
    let (bf, bg) = (f.from_sums(&sf), g.from_sums(&sg));
    birth_integral(params, gamma, &region, observable_breaks(&[f, g]), quad, |x| {
        (bf - f.shifted(&sf, &f.weights(x), 1.0)) * (bg - g.shifted(&sg, &g.weights(x), 1.0))
    })
}

/// Both Monte Carlo estimates of the Dirichlet form and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletEstimate {
    /// Mean of `sum_x D-F D-G`.
    pub death_side: Estimate,
    /// Mean of `int z exp(-E) D+F D+G dx`.
    pub birth_side: Estimate,
    pub difference: Estimate,
}

pub fn dirichlet_form_mc(
    f: &Observable,
    g: &Observable,
    samples: &SampleSet,
    params: &ModelParams,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<DirichletEstimate> {
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    let bm = samples.evaluate(exec, 2, |gamma| {
        let a = carre_du_champ(f, g, gamma);
        let b = birth_side_density(f, g, gamma, params, quad)?.value;
        Ok(vec![a, b])
    })?;
    Ok(DirichletEstimate {
        death_side: bm.estimate(0)?,
        birth_side: bm.estimate(1)?,
        difference: bm.jackknife(|m| m[0] - m[1])?,
    })
}

/// Per-configuration terms of the coercivity identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityDensities {
    pub hf: f64,
    pub trace: f64,
    pub cross: f64,
}

/// `trace = sum over x, y of (D-_x D-_y F)^2` and
/// `cross = sum over x != y of (exp(phi(x-y)) - 1)(F(g\{x,y}) - F(g\x))(F(g\{x,y}) - F(g\y))`.
pub fn coercivity_densities(
    f: &Observable,
    gamma: &Configuration,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<CoercivityDensities> {
    let hf = apply_generator(f, gamma, params, quad)?.value;
    let s = f.sums(gamma);
    let touched: Vec<(Point, Sums)> = gamma
        .iter()
        .map(|x| (*x, f.weights(x)))
        .filter(|(_, w)| Observable::touches(w))
        .collect();
    let sim_box = params.sim_box();
    let pot = params.potential();
    let mut trace = 0.0;
    let mut cross = 0.0;
    for (i, (x, wx)) in touched.iter().enumerate() {
        let d = second_from_sums(f, &s, wx, wx, true);
        trace += d * d;
        for (j, (y, wy)) in touched.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2 = second_from_sums(f, &s, wx, wy, false);
            trace += d2 * d2;
            let mut both = s;
            for k in 0..f.windows().len() {
                both[k] -= wx[k] + wy[k];
            }
            let fxy = f.from_sums(&both);
            let prod = (fxy - f.shifted(&s, wx, -1.0)) * (fxy - f.shifted(&s, wy, -1.0));
            if prod == 0.0 {
                continue;
            }
            let phi = pot.at_dist2(sim_box.dist2(x, y));
            if phi == f64::INFINITY {
                return Err(Error::Estimation("overlapping hard-core pair in a sample".into()));
            }
            cross += phi.exp_m1() * prod;
        }
    }
    Ok(CoercivityDensities { hf, trace, cross })
}

/// Monte Carlo estimates of the coercivity identity and the gap inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityTerms {
    /// Mean of `(HF)^2`.
    pub lhs: Estimate,
    pub trace: Estimate,
    pub cross: Estimate,
    /// `lhs - trace - cross`, expected to vanish.
    pub defect: Estimate,
    /// `||HF||^2 - (1 - delta) (HF, F)`, expected to be nonnegative.
    pub gap_margin: Estimate,
}

pub fn coercivity_terms(
    f: &Observable,
    samples: &SampleSet,
    params: &ModelParams,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<CoercivityTerms> {
    if !params.potential().is_positive() {
        return Err(Error::Model("coercivity terms need a nonnegative potential".into()));
    }
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    let bm = samples.evaluate(exec, 4, |gamma| {
        let c = coercivity_densities(f, gamma, params, quad)?;
        Ok(vec![c.hf * c.hf, c.trace, c.cross, c.hf * f.eval(gamma)])
    })?;
    let factor = 1.0 - params.delta();
    Ok(CoercivityTerms {
        lhs: bm.estimate(0)?,
        trace: bm.estimate(1)?,
        cross: bm.estimate(2)?,
        defect: bm.jackknife(|m| m[0] - m[1] - m[2])?,
        gap_margin: bm.jackknife(|m| m[0] - factor * m[3])?,
    })
}

/// Estimate of `int HF * G dmu - E(F, G)` (death-side form).
pub fn symmetry_defect(
    f: &Observable,
    g: &Observable,
    samples: &SampleSet,
    params: &ModelParams,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::Parameter("empty sample list".into()));
    }
    let bm = samples.evaluate(exec, 1, |gamma| {
        let hf = apply_generator(f, gamma, params, quad)?.value;
        Ok(vec![hf * g.eval(gamma) - carre_du_champ(f, g, gamma)])
    })?;
    bm.estimate(0)
}

/// Estimate of `int HF dmu`, which vanishes at equilibrium.
pub fn generator_mean(
    f: &Observable,
    samples: &SampleSet,
    params: &ModelParams,
    quad: &QuadratureSpec,
    exec: Execution,
) -> Result<Estimate> {
    let bm = samples.evaluate(exec, 1, |gamma| Ok(vec![apply_generator(f, gamma, params, quad)?.value]))?;
    bm.estimate(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SimBox;
    use crate::observable::{Link, Window};
    use crate::potential::Potential;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(&[x, y]).unwrap()
    }

    fn unit(p: Potential, z: f64) -> ModelParams {
        ModelParams::new(z, p, SimBox::cube(2, 2.0, Boundary::Periodic).unwrap()).unwrap()
    }

    fn window() -> Rect {
        Rect::new(&[0.25, 0.25], &[1.25, 1.5]).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let m = unit(Potential::Zero, 1.0);
        let count = Observable::count("n", window());
        let g = m.configuration([pt(0.5, 0.5), pt(1.8, 1.8)]).unwrap();
        assert_eq!(d_minus(&count, &g, &pt(0.5, 0.5)).unwrap(), -1.0);
        assert_eq!(d_plus(&count, &g, &pt(1.0, 1.0)).unwrap(), -1.0);
        let c = Observable::constant(3.0);
        assert_eq!(d_minus(&c, &g, &pt(0.5, 0.5)).unwrap(), 0.0);
        assert_eq!(d_plus(&c, &g, &pt(1.0, 1.0)).unwrap(), 0.0);
        // <f, gamma>^2 with gamma = {x}, f(x) = a
        let bump = Window::bump(&[1.0, 1.0], 0.5).unwrap();
        let sq = Observable::new("sq", vec![bump], Link::Power(2)).unwrap();
        let x = pt(1.1, 0.9);
        let a = bump.value(&x);
        let g1 = m.configuration([x]).unwrap();
        assert!((d_minus(&sq, &g1, &x).unwrap() + a * a).abs() < 1e-15);
    }

    #[test]
    fn gradient_domain_errors() {
        let m = unit(Potential::Zero, 1.0);
        let count = Observable::count("n", window());
        let g = m.configuration([pt(0.5, 0.5)]).unwrap();
        assert!(matches!(d_minus(&count, &g, &pt(0.6, 0.5)), Err(Error::Domain(_))));
        assert!(matches!(d_plus(&count, &g, &pt(0.5, 0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn free_generator_is_number_operator_on_counts() {
        let m = unit(Potential::Zero, 1.7);
        let count = Observable::count("n", window());
        let g = m.configuration([pt(0.5, 0.5), pt(1.0, 1.0), pt(1.8, 1.8)]).unwrap();
        let h = apply_generator(&count, &g, &m, &QuadratureSpec::default()).unwrap();
        assert!((h.value - (2.0 - 1.7 * window().volume())).abs() < 1e-12, "{}", h.value);
        let c = apply_generator(&Observable::constant(1.0), &g, &m, &QuadratureSpec::default()).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn strauss_generator_on_counts_by_geometry() {
        // a single point well inside the window: the birth term is
        // z (|W| - (1 - e^-beta) pi R^2) times D+ = -1
        let (beta, r, z) = (1.0, 0.2, 0.9);
        let m = unit(Potential::strauss(beta, r).unwrap(), z);
        let count = Observable::count("n", window());
        let g = m.configuration([pt(0.7, 0.8)]).unwrap();
        let h = apply_generator(&count, &g, &m, &QuadratureSpec::default()).unwrap();
        let area = window().volume() - (1.0 - (-beta as f64).exp()) * std::f64::consts::PI * r * r;
        assert!((h.value - (1.0 - z * area)).abs() < 1e-9, "{}", h.value);
    }

    #[test]
    fn hard_core_across_the_periodic_seam() {
        // point near the corner: its core wraps into a window at the opposite corner
        let r = 0.3;
        let m = unit(Potential::hard_core(r).unwrap(), 1.0);
        let w = Rect::new(&[1.5, 1.5], &[2.0, 2.0]).unwrap();
        let count = Observable::count("n", w);
        let g = m.configuration([pt(0.05, 0.05)]).unwrap();
        let h = apply_generator(&count, &g, &m, &QuadratureSpec::default()).unwrap();
        // quarter... the core centred at (2.05, 2.05) covers a disk segment of the window
        let n = 2000;
        let mut area = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = 1.5 + (i as f64 + 0.5) * 0.5 / n as f64;
                let y = 1.5 + (j as f64 + 0.5) * 0.5 / n as f64;
                if (x - 2.05).powi(2) + (y - 2.05).powi(2) >= r * r {
                    area += 0.25 / (n * n) as f64;
                }
            }
        }
        assert!((h.value + area).abs() < 1e-4, "{} vs {}", h.value, -area);
    }

    fn random_config(m: &ModelParams, seed: u64, n: usize) -> Configuration {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = m.empty_configuration();
        for _ in 0..n {
            g.insert(m.sim_box().sample_uniform(&mut rng)).unwrap();
        }
        g
    }

    fn observables() -> Vec<Observable> {
        let b = SimBox::cube(2, 2.0, Boundary::Periodic).unwrap();
        crate::observable::battery(&b).unwrap()
    }

    proptest! {
        #[test]
        fn plus_gradient_is_minus_gradient_after_birth(seed in 0u64..500, n in 0usize..12, k in 0usize..5, xs in 0.0f64..2.0, ys in 0.0f64..2.0) {
            let m = unit(Potential::strauss(1.0, 0.3).unwrap(), 1.0);
            let f = &observables()[k];
            let g = random_config(&m, seed, n);
            let x = pt(xs, ys);
            prop_assume!(!g.contains(&x));
            let gx = g.with_point(x).unwrap();
            prop_assert_eq!(d_plus(f, &g, &x).unwrap(), d_minus(f, &gx, &x).unwrap());
        }

        #[test]
        fn second_gradient_is_symmetric(seed in 0u64..500, n in 2usize..12, k in 0usize..5, i in 0usize..100, j in 0usize..100) {
            let m = unit(Potential::Zero, 1.0);
            let f = &observables()[k];
            let g = random_config(&m, seed, n);
            let (x, y) = (g.points()[i % n], g.points()[j % n]);
            prop_assert_eq!(d_minus_second(f, &g, &x, &y).unwrap(), d_minus_second(f, &g, &y, &x).unwrap());
            if x == y {
                prop_assert_eq!(d_minus_second(f, &g, &x, &x).unwrap(), -d_minus(f, &g, &x).unwrap());
            }
        }

        #[test]
        fn second_gradient_matches_set_differences(seed in 0u64..500, n in 2usize..10, k in 0usize..5) {
            let m = unit(Potential::Zero, 1.0);
            let f = &observables()[k];
            let g = random_config(&m, seed, n);
            let (x, y) = (g.points()[0], g.points()[1]);
            let mut both = g.clone();
            both.remove_point(&x);
            both.remove_point(&y);
            let want = f.eval(&both) - f.eval(&g.without_index(0)) - f.eval(&g.without_index(1)) + f.eval(&g);
            let got = d_minus_second(f, &g, &x, &y).unwrap();
            prop_assert!((got - want).abs() < 1e-12);
        }
    }
}
