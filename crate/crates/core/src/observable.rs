//! Cylinder observables `F(gamma) = g(<f_1, gamma>, ..., <f_N, gamma>)`.
//!
//! Each `f_i` is a window function with compact support inside the box and
//! `g` is a link from a fixed family. Because `F` depends on `gamma` only
//! through the sums `<f_i, gamma>`, adding or removing a point shifts the
//! sums by the window values at that point, which makes every discrete
//! gradient an O(N) computation.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, SimBox, MAX_DIM};
use crate::quadrature::{Breaks, Sphere};

/// Most windows a single observable may combine.
pub const MAX_WINDOWS: usize = 4;

/// Window sums (or window values at a point), padded with zeros.
pub type Sums = [f64; MAX_WINDOWS];

/// A nonnegative function with compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// Indicator of a rectangle.
    Indicator(Rect),
    /// Polynomial bump `(1 - |x - c|^2 / rho^2)^4` on the ball, peak value
    /// one. It is three times continuously differentiable and a polynomial
    /// inside its support, so quadrature split at the rim is exact.
    Bump { center: [f64; MAX_DIM], radius: f64, dim: usize },
}

impl Window {
    pub fn indicator(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Ok(Window::Indicator(Rect::new(lo, hi)?))
    }

    pub fn bump(center: &[f64], radius: f64) -> Result<Self> {
        let c = Point::new(center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Window::Bump { center: c.0, radius, dim: center.len() })
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Window::Indicator(r) => {
                if r.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Window::Bump { center, radius, dim } => {
                let r2: f64 = (0..*dim).map(|i| (x.0[i] - center[i]).powi(2)).sum();
                let s = r2 / (radius * radius);
                if s < 1.0 {
                    (1.0 - s).powi(4)
                } else {
                    0.0
                }
            }
        }
    }

    /// Rectangle outside which the window vanishes.
    pub fn support(&self) -> Rect {
        match self {
            Window::Indicator(r) => *r,
            Window::Bump { center, radius, dim } => {
                let mut r = Rect { lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM], dim: *dim };
                for i in 0..*dim {
                    r.lo[i] = center[i] - radius;
                    r.hi[i] = center[i] + radius;
                }
                r
            }
        }
    }

    /// Adds the edges of the support to the quadrature breaks.
    pub fn add_breaks(&self, breaks: &mut Breaks) {
        match self {
            Window::Indicator(r) => breaks.add_rect_faces(r),
            Window::Bump { center, radius, .. } => breaks.spheres.push(Sphere { center: *center, radius: *radius }),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Window::Indicator(r) => r.dim,
            Window::Bump { dim, .. } => *dim,
        }
    }
}

/// The outer function `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// `c` (no windows).
    Constant(f64),
    /// `s`.
    Identity,
    /// `s^k`.
    Power(u32),
    /// `s_1 * s_2`.
    Product,
    /// `tanh(s / scale)`.
    Tanh { scale: f64 },
    /// `tanh(s_1 / scale) * tanh(s_2 / scale)`.
    TanhProduct { scale: f64 },
}

impl Link {
    pub fn arity(&self) -> usize {
        match self {
            Link::Constant(_) => 0,
            Link::Identity | Link::Power(_) | Link::Tanh { .. } => 1,
            Link::Product | Link::TanhProduct { .. } => 2,
        }
    }

    #[inline]
    pub fn apply(&self, s: &Sums) -> f64 {
        match *self {
            Link::Constant(c) => c,
            Link::Identity => s[0],
            Link::Power(k) => s[0].powi(k as i32),
            Link::Product => s[0] * s[1],
            Link::Tanh { scale } => (s[0] / scale).tanh(),
            Link::TanhProduct { scale } => (s[0] / scale).tanh() * (s[1] / scale).tanh(),
        }
    }

    /// Supremum of `|g|` over all configurations, if finite.
    fn sup(&self) -> f64 {
        match *self {
            Link::Constant(c) => c.abs(),
            Link::Tanh { .. } | Link::TanhProduct { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }
}

/// A cylinder observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    name: String,
    windows: Vec<Window>,
    link: Link,
}

impl Observable {
    pub fn new(name: impl Into<String>, windows: Vec<Window>, link: Link) -> Result<Self> {
        if windows.len() != link.arity() {
            return Err(Error::Parameter(format!(
                "link {link:?} takes {} windows, got {}",
                link.arity(),
                windows.len()
            )));
        }
        if let Link::Tanh { scale } | Link::TanhProduct { scale } = link {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::Parameter(format!("tanh scale must be positive, got {scale}")));
            }
        }
        if let Some(w) = windows.first() {
            if windows.iter().any(|v| v.dim() != w.dim()) {
                return Err(Error::Parameter("windows of mixed dimension".into()));
            }
        }
        Ok(Observable { name: name.into(), windows, link })
    }

    pub fn constant(c: f64) -> Self {
        Observable { name: format!("constant({c})"), windows: vec![], link: Link::Constant(c) }
    }

    /// Number of points in a rectangle.
    pub fn count(name: impl Into<String>, window: Rect) -> Self {
        Observable { name: name.into(), windows: vec![Window::Indicator(window)], link: Link::Identity }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn is_constant(&self) -> bool {
        self.windows.is_empty()
    }

    /// Declared sup-norm bound (infinite for polynomial links).
    pub fn bound(&self) -> f64 {
        self.link.sup()
    }

    /// Checks that every window lies inside the box.
    pub fn check_fits(&self, sim_box: &SimBox) -> Result<()> {
        for w in &self.windows {
            if !w.support().is_inside(sim_box) {
                return Err(Error::Parameter(format!("window of {} leaves the box", self.name)));
            }
        }
        Ok(())
    }

    /// Hull of the window supports, or `None` for constants.
    pub fn support(&self) -> Option<Rect> {
        let mut it = self.windows.iter().map(|w| w.support());
        let first = it.next()?;
        Some(it.fold(first, |a, b| a.hull(&b)))
    }

    /// Window values at `x`.
    #[inline]
    pub fn weights(&self, x: &Point) -> Sums {
        let mut w = [0.0; MAX_WINDOWS];
        for (wi, win) in w.iter_mut().zip(&self.windows) {
            *wi = win.value(x);
        }
        w
    }

    #[inline]
    pub fn touches(w: &Sums) -> bool {
        w.iter().any(|v| *v != 0.0)
    }

    pub fn sums(&self, gamma: &Configuration) -> Sums {
        self.sums_skipping(gamma, None)
    }

    /// Window sums over `gamma` without the point at index `skip`, added in
    /// the same order as [`Observable::sums`].
    pub fn sums_skipping(&self, gamma: &Configuration, skip: Option<usize>) -> Sums {
        let mut s = [0.0; MAX_WINDOWS];
        if self.windows.is_empty() {
            return s;
        }
        for (i, p) in gamma.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let w = self.weights(p);
            for k in 0..self.windows.len() {
                s[k] += w[k];
            }
        }
        s
    }

    #[inline]
    pub fn from_sums(&self, s: &Sums) -> f64 {
        self.link.apply(s)
    }

    pub fn eval(&self, gamma: &Configuration) -> f64 {
        self.from_sums(&self.sums(gamma))
    }

    /// `g(s + sign * w)`.
    #[inline]
    pub fn shifted(&self, s: &Sums, w: &Sums, sign: f64) -> f64 {
        let mut t = *s;
        for k in 0..self.windows.len() {
            t[k] += sign * w[k];
        }
        self.from_sums(&t)
    }

    /// Discontinuities of `x -> F(gamma + x)`.
    pub fn add_breaks(&self, breaks: &mut Breaks) {
        for w in &self.windows {
            w.add_breaks(breaks);
        }
    }

    /// Integrand between declared breaks is constant in `x`.
    pub fn is_piecewise_constant(&self) -> bool {
        self.windows.iter().all(|w| matches!(w, Window::Indicator(_)))
    }
}

/// The standard five observables for a box: window counts on two
/// overlapping windows, their product, a tanh-smoothed count, and a
/// smooth-bump linear statistic.
pub fn battery(sim_box: &SimBox) -> Result<Vec<Observable>> {
    let frac = |lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        (
            sim_box.sides().iter().map(|s| lo * s).collect(),
            sim_box.sides().iter().map(|s| hi * s).collect(),
        )
    };
    let (a_lo, a_hi) = frac(0.1, 0.6);
    let (b_lo, b_hi) = frac(0.35, 0.9);
    let a = Window::indicator(&a_lo, &a_hi)?;
    let b = Window::indicator(&b_lo, &b_hi)?;
    let centre: Vec<f64> = sim_box.sides().iter().map(|s| 0.5 * s).collect();
    let radius = 0.3 * sim_box.min_side();
    let bump = Window::bump(&centre, radius)?;
    Ok(vec![
        Observable::new("count_a", vec![a], Link::Identity)?,
        Observable::new("count_b", vec![b], Link::Identity)?,
        Observable::new("count_a_times_b", vec![a, b], Link::Product)?,
        Observable::new("tanh_count_a", vec![a], Link::Tanh { scale: 1.0 })?,
        Observable::new("bump_linear", vec![bump], Link::Identity)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Boundary;

    #[test]
    fn arity_and_box_checks() {
        let w = Window::indicator(&[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(Observable::new("bad", vec![w], Link::Product).is_err());
        let b = SimBox::cube(2, 0.4, Boundary::Periodic).unwrap();
        assert!(Observable::new("ok", vec![w], Link::Identity).unwrap().check_fits(&b).is_err());
    }

    #[test]
    fn battery_is_local_and_fits() {
        let b = SimBox::new(&[3.0, 2.0], Boundary::Periodic).unwrap();
        let bat = battery(&b).unwrap();
        assert_eq!(bat.len(), 5);
        for f in &bat {
            f.check_fits(&b).unwrap();
            let s = f.support().unwrap();
            // far corner lies outside every support
            let x = Point::new(&[2.99, 1.99]).unwrap();
            assert!(!s.contains(&x));
            assert!(!Observable::touches(&f.weights(&x)));
        }
    }

    #[test]
    fn bump_peaks_at_one_and_vanishes_outside() {
        let w = Window::bump(&[0.5, 0.5], 0.2).unwrap();
        assert_eq!(w.value(&Point::new(&[0.5, 0.5]).unwrap()), 1.0);
        assert_eq!(w.value(&Point::new(&[0.71, 0.5]).unwrap()), 0.0);
        assert!(w.value(&Point::new(&[0.69, 0.5]).unwrap()) < 1e-3);
    }
}
