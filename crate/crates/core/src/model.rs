//! Model parameters and the relative energy of a point against a configuration.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::{Boundary, Point, SimBox};
use crate::potential::Potential;

/// Activity, potential and box, with the derived dimensionless `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    z: f64,
    potential: Potential,
    sim_box: SimBox,
    delta: f64,
}

impl ModelParams {
    pub fn new(z: f64, potential: Potential, sim_box: SimBox) -> Result<Self> {
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::Parameter(format!("activity must be finite and >= 0, got {z}")));
        }
        potential.validate()?;
        if sim_box.boundary() == Boundary::Periodic && 2.0 * potential.cutoff() > sim_box.min_side() {
            return Err(Error::Parameter(format!(
                "periodic box needs interaction range {} <= half the smallest side {}",
                potential.cutoff(),
                sim_box.min_side()
            )));
        }
        let delta = potential.delta(z, sim_box.dim())?.value;
        Ok(ModelParams { z, potential, sim_box, delta })
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    #[inline]
    pub fn sim_box(&self) -> &SimBox {
        &self.sim_box
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sim_box.dim()
    }

    /// `z * integral of (1 - exp(-phi))`.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Expected number of birth proposals per unit time.
    pub fn proposal_rate(&self) -> f64 {
        self.z * self.sim_box.volume()
    }

    /// Fails unless the potential is nonnegative and `delta < 1`.
    pub fn require_gap_regime(&self) -> Result<()> {
        if !self.potential.is_positive() {
            return Err(Error::Model("potential is not nonnegative".into()));
        }
        if self.delta >= 1.0 {
            return Err(Error::Model(format!("delta = {} >= 1: the gap bound is vacuous", self.delta)));
        }
        Ok(())
    }

    /// Empty configuration with a cell grid matched to the interaction range.
    pub fn empty_configuration(&self) -> Configuration {
        Configuration::new(self.sim_box, self.potential.cutoff())
    }

    pub fn configuration(&self, points: impl IntoIterator<Item = Point>) -> Result<Configuration> {
        Configuration::from_points(self.sim_box, self.potential.cutoff(), points)
    }

    /// `E(x, gamma) = sum over y in gamma of phi(x - y)`, skipping a point
    /// equal to `x`. Returns `+inf` on a hard-core overlap.
    pub fn relative_energy(&self, x: &Point, gamma: &Configuration) -> Result<f64> {
        if !self.sim_box.contains(x) {
            return Err(Error::Domain(format!("point {:?} outside the box", x.0)));
        }
        Ok(self.relative_energy_unchecked(x, gamma))
    }

    pub(crate) fn relative_energy_unchecked(&self, x: &Point, gamma: &Configuration) -> f64 {
        let cut = self.potential.cutoff();
        if cut == 0.0 {
            return 0.0;
        }
        let mut e = 0.0;
        let cut2 = cut * cut;
        let mut blocked = false;
        gamma.for_each_candidate(x, cut, |_, y| {
            if blocked || y == x {
                return;
            }
            let r2 = self.sim_box.dist2(x, y);
            if r2 < cut2 {
                let v = self.potential.at_dist2(r2);
                if v == f64::INFINITY {
                    blocked = true;
                } else {
                    e += v;
                }
            }
        });
        if blocked {
            f64::INFINITY
        } else {
            e
        }
    }

    /// `E(x, gamma)` by a plain loop over all points, in index order.
    pub fn relative_energy_brute_force(&self, x: &Point, gamma: &Configuration) -> f64 {
        let mut e = 0.0;
        for y in gamma.iter().filter(|y| *y != x) {
            let v = self.potential.at_dist2(self.sim_box.dist2(x, y));
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            e += v;
        }
        e
    }

    /// Total energy `U(gamma)` over unordered pairs.
    pub fn total_energy(&self, gamma: &Configuration) -> f64 {
        let pts = gamma.points();
        let mut u = 0.0;
        for i in 0..pts.len() {
            for j in 0..i {
                u += self.potential.at_dist2(self.sim_box.dist2(&pts[i], &pts[j]));
            }
        }
        u
    }

    /// Birth acceptance weight `exp(-E(x, gamma))`, exactly zero on overlap.
    #[inline]
    pub fn birth_weight(&self, x: &Point, gamma: &Configuration) -> f64 {
        let e = self.relative_energy_unchecked(x, gamma);
        if e == f64::INFINITY {
            0.0
        } else {
            (-e).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: Potential) -> ModelParams {
        ModelParams::new(1.0, p, SimBox::cube(2, 3.0, Boundary::Periodic).unwrap()).unwrap()
    }

    fn pt(x: f64, y: f64) -> Point {
        Point::new(&[x, y]).unwrap()
    }

    #[test]
    fn spec_examples() {
        let zero = params(Potential::Zero);
        let g = zero.configuration([pt(0.1, 0.1), pt(2.0, 1.0)]).unwrap();
        assert_eq!(zero.relative_energy(&pt(1.0, 1.0), &g).unwrap(), 0.0);

        let s = params(Potential::strauss(1.0, 0.5).unwrap());
        let g = s.configuration([pt(1.0, 1.0)]).unwrap();
        assert_eq!(s.relative_energy(&pt(1.3, 1.0), &g).unwrap(), 1.0);

        let h = params(Potential::hard_core(0.5).unwrap());
        let g = h.configuration([pt(1.0, 1.0)]).unwrap();
        assert_eq!(h.relative_energy(&pt(1.2, 1.0), &g).unwrap(), f64::INFINITY);
        assert_eq!(h.birth_weight(&pt(1.2, 1.0), &g), 0.0);
    }

    #[test]
    fn outside_point_is_a_domain_error() {
        let s = params(Potential::strauss(1.0, 0.5).unwrap());
        let g = s.empty_configuration();
        assert!(matches!(s.relative_energy(&pt(3.5, 1.0), &g), Err(Error::Domain(_))));
    }

    #[test]
    fn member_point_is_excluded() {
        let s = params(Potential::strauss(1.0, 0.5).unwrap());
        let g = s.configuration([pt(1.0, 1.0), pt(1.2, 1.0)]).unwrap();
        assert_eq!(s.relative_energy(&pt(1.0, 1.0), &g).unwrap(), 1.0);
    }

    #[test]
    fn periodic_range_is_checked() {
        let b = SimBox::cube(2, 0.8, Boundary::Periodic).unwrap();
        assert!(ModelParams::new(1.0, Potential::strauss(1.0, 0.5).unwrap(), b).is_err());
        let b = SimBox::cube(2, 0.8, Boundary::Empty).unwrap();
        assert!(ModelParams::new(1.0, Potential::strauss(1.0, 0.5).unwrap(), b).is_ok());
    }

    fn potentials() -> Vec<Potential> {
        vec![
            Potential::Zero,
            Potential::strauss(0.8, 0.4).unwrap(),
            Potential::hard_core(0.15).unwrap(),
            Potential::soft_gaussian(1.2, 0.12).unwrap(),
        ]
    }

    #[test]
    fn grid_energy_matches_brute_force_under_random_edits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for boundary in [Boundary::Empty, Boundary::Periodic] {
            for pot in potentials() {
                let m = ModelParams::new(2.0, pot, SimBox::new(&[4.0, 3.0], boundary).unwrap()).unwrap();
                let mut g = m.empty_configuration();
                for step in 0..600 {
                    if g.is_empty() || rng.random::<f64>() < 0.6 {
                        g.insert(m.sim_box().sample_uniform(&mut rng)).unwrap();
                    } else {
                        let i = rng.random_range(0..g.len());
                        g.remove(i);
                    }
                    if step % 7 == 0 {
                        let x = m.sim_box().sample_uniform(&mut rng);
                        let a = m.relative_energy(&x, &g).unwrap();
                        let b = m.relative_energy_brute_force(&x, &g);
                        assert!(a == b || (a - b).abs() <= 1e-12, "{pot:?}: {a} vs {b}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pair_energy_is_symmetric(ax in 0.0f64..3.0, ay in 0.0f64..3.0, bx in 0.0f64..3.0, by in 0.0f64..3.0, k in 0usize..4) {
            let m = params(potentials()[k]);
            let (a, b) = (pt(ax, ay), pt(bx, by));
            prop_assume!(a != b);
            let ga = m.configuration([a]).unwrap();
            let gb = m.configuration([b]).unwrap();
            prop_assert_eq!(m.relative_energy(&b, &ga).unwrap(), m.relative_energy(&a, &gb).unwrap());
        }

        #[test]
        fn adding_points_never_lowers_energy(seed in 0u64..1000, k in 0usize..4) {
            let m = params(potentials()[k]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = m.empty_configuration();
            let x = m.sim_box().sample_uniform(&mut rng);
            let mut last = m.relative_energy(&x, &g).unwrap();
            for _ in 0..30 {
                g.insert(m.sim_box().sample_uniform(&mut rng)).unwrap();
                let e = m.relative_energy(&x, &g).unwrap();
                prop_assert!(e >= last);
                last = e;
            }
        }
    }
}
