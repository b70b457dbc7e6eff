//! Points, simulation boxes and axis-aligned regions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest spatial dimension supported.
pub const MAX_DIM: usize = 3;

/// A point in up to three dimensions.
///
/// Coordinates beyond the dimension of the owning box are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point(pub [f64; MAX_DIM]);

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Domain(format!(
                "points need 1..={MAX_DIM} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinates {coords:?}")));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point(c))
    }

    #[inline]
    pub fn coords(&self) -> &[f64; MAX_DIM] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// No interaction across the walls.
    Empty,
    /// Minimum-image convention on a torus.
    #[default]
    Periodic,
}

/// The simulation volume `[0, L_1) x ... x [0, L_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimBox {
    sides: [f64; MAX_DIM],
    dim: usize,
    boundary: Boundary,
}

impl SimBox {
    pub fn new(sides: &[f64], boundary: Boundary) -> Result<Self> {
        let dim = sides.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!(
                "box dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if sides.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Parameter(format!(
                "box side lengths must be positive and finite, got {sides:?}"
            )));
        }
        let mut s = [1.0; MAX_DIM];
        s[..dim].copy_from_slice(sides);
        Ok(SimBox { sides: s, dim, boundary })
    }

    /// Cube of side `side` in `dim` dimensions.
    pub fn cube(dim: usize, side: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&vec![side; dim], boundary)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides[..self.dim]
    }

    #[inline]
    pub fn side(&self, axis: usize) -> f64 {
        self.sides[axis]
    }

    pub fn volume(&self) -> f64 {
        self.sides().iter().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|i| p.0[i] >= 0.0 && p.0[i] < self.sides[i])
            && p.0[self.dim..].iter().all(|&c| c == 0.0)
    }

    /// Displacement `a - b` under the box's convention.
    #[inline]
    pub fn displacement(&self, a: &Point, b: &Point) -> [f64; MAX_DIM] {
        let mut d = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let mut v = a.0[i] - b.0[i];
            if self.boundary == Boundary::Periodic {
                let l = self.sides[i];
                v -= l * (v / l).round();
            }
            d[i] = v;
        }
        d
    }

    #[inline]
    pub fn dist2(&self, a: &Point, b: &Point) -> f64 {
        self.displacement(a, b).iter().map(|v| v * v).sum()
    }

    /// Uniform point in the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim) {
            // random::<f64>() lies in [0, 1), so the point stays inside the half-open box
            *ci = rng.random::<f64>() * self.sides[i];
        }
        Point(c)
    }

    /// The whole box as a region.
    pub fn as_rect(&self) -> Rect {
        let mut hi = [0.0; MAX_DIM];
        hi[..self.dim].copy_from_slice(self.sides());
        Rect { lo: [0.0; MAX_DIM], hi, dim: self.dim }
    }
}

/// Axis-aligned half-open rectangle `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; MAX_DIM],
    pub hi: [f64; MAX_DIM],
    pub dim: usize,
}

impl Rect {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM || hi.len() != dim {
            return Err(Error::Parameter(format!(
                "rectangle corners must share a dimension in 1..={MAX_DIM}"
            )));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
            return Err(Error::Parameter(format!("degenerate rectangle {lo:?}..{hi:?}")));
        }
        let mut r = Rect { lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM], dim };
        r.lo[..dim].copy_from_slice(lo);
        r.hi[..dim].copy_from_slice(hi);
        Ok(r)
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|i| p.0[i] >= self.lo[i] && p.0[i] < self.hi[i])
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        let mut r = *self;
        for i in 0..self.dim {
            r.lo[i] = r.lo[i].min(other.lo[i]);
            r.hi[i] = r.hi[i].max(other.hi[i]);
        }
        r
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let mut r = *self;
        for i in 0..self.dim {
            r.lo[i] = r.lo[i].max(other.lo[i]);
            r.hi[i] = r.hi[i].min(other.hi[i]);
            if r.lo[i] >= r.hi[i] {
                return None;
            }
        }
        Some(r)
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: &[f64; MAX_DIM]) -> f64 {
        (0..self.dim)
            .map(|i| {
                let d = (self.lo[i] - p[i]).max(p[i] - self.hi[i]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_inside(&self, sim_box: &SimBox) -> bool {
        self.dim == sim_box.dim()
            && (0..self.dim).all(|i| self.lo[i] >= 0.0 && self.hi[i] <= sim_box.side(i))
    }
}

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("dimension {dim} unsupported"),
    }
}

/// Surface measure of the unit sphere in `dim` dimensions.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}
