//! Finite point configurations with a cell-list index.

use crate::error::{Error, Result};
use crate::geometry::{Boundary, Point, Rect, SimBox, MAX_DIM};

/// Uniform cell grid over the box. Each cell stores indices into the owning
/// configuration's point list.
#[derive(Debug, Clone, PartialEq)]
struct CellGrid {
    counts: [usize; MAX_DIM],
    cell_size: [f64; MAX_DIM],
    cells: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(sim_box: &SimBox, cell_hint: f64) -> Self {
        let mut counts = [1; MAX_DIM];
        let mut cell_size = [1.0; MAX_DIM];
        for i in 0..sim_box.dim() {
            let side = sim_box.side(i);
            let n = if cell_hint.is_finite() && cell_hint > 0.0 {
                // keep the grid bounded for tiny interaction ranges
                ((side / cell_hint).floor() as usize).clamp(1, 256)
            } else {
                1
            };
            counts[i] = n;
            cell_size[i] = side / n as f64;
        }
        let total = counts.iter().product();
        CellGrid { counts, cell_size, cells: vec![Vec::new(); total] }
    }

    #[inline]
    fn cell_coords(&self, p: &Point) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for i in 0..MAX_DIM {
            let k = (p.0[i] / self.cell_size[i]).floor();
            c[i] = (k.max(0.0) as usize).min(self.counts[i] - 1);
        }
        c
    }

    #[inline]
    fn flat(&self, c: &[usize; MAX_DIM]) -> usize {
        (c[2] * self.counts[1] + c[1]) * self.counts[0] + c[0]
    }

    #[inline]
    fn cell_of(&self, p: &Point) -> usize {
        self.flat(&self.cell_coords(p))
    }

    /// Cell indices along one axis within `reach` cells of `center`, without
    /// duplicates.
    fn axis_span(&self, axis: usize, center: usize, reach: usize, periodic: bool) -> Vec<usize> {
        let n = self.counts[axis];
        if 2 * reach + 1 >= n {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(2 * reach + 1);
        let c = center as isize;
        for off in -(reach as isize)..=(reach as isize) {
            let k = c + off;
            if periodic {
                out.push(k.rem_euclid(n as isize) as usize);
            } else if k >= 0 && (k as usize) < n {
                out.push(k as usize);
            }
        }
        out
    }
}

/// A finite set of distinct points inside a simulation box.
#[derive(Debug, Clone)]
pub struct Configuration {
    sim_box: SimBox,
    points: Vec<Point>,
    /// flat cell index of each point, parallel to `points`
    cell_of: Vec<usize>,
    grid: CellGrid,
    cell_hint: f64,
}

impl PartialEq for Configuration {
    /// Same box and the same points in the same order.
    fn eq(&self, other: &Self) -> bool {
        self.sim_box == other.sim_box && self.points == other.points
    }
}

impl Configuration {
    /// Empty configuration whose cell grid uses cells of side at least
    /// `interaction_range` (a non-finite or zero range gives a single cell).
    pub fn new(sim_box: SimBox, interaction_range: f64) -> Self {
        Configuration {
            grid: CellGrid::new(&sim_box, interaction_range),
            sim_box,
            points: Vec::new(),
            cell_of: Vec::new(),
            cell_hint: interaction_range,
        }
    }

    pub fn from_points(
        sim_box: SimBox,
        interaction_range: f64,
        points: impl IntoIterator<Item = Point>,
    ) -> Result<Self> {
        let mut c = Self::new(sim_box, interaction_range);
        for p in points {
            c.insert(p)?;
        }
        Ok(c)
    }

    /// Copy with no points and the same box and grid layout.
    pub fn empty_like(&self) -> Self {
        Self::new(self.sim_box, self.cell_hint)
    }

    #[inline]
    pub fn sim_box(&self) -> &SimBox {
        &self.sim_box
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Index of a point with exactly these coordinates.
    pub fn find(&self, p: &Point) -> Option<usize> {
        if !self.sim_box.contains(p) {
            return None;
        }
        self.grid.cells[self.grid.cell_of(p)]
            .iter()
            .copied()
            .find(|&i| self.points[i] == *p)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.find(p).is_some()
    }

    /// Adds a point and returns its index.
    pub fn insert(&mut self, p: Point) -> Result<usize> {
        if !self.sim_box.contains(&p) {
            return Err(Error::Domain(format!("point {:?} outside the box", p.0)));
        }
        let cell = self.grid.cell_of(&p);
        if self.grid.cells[cell].iter().any(|&i| self.points[i] == p) {
            return Err(Error::Domain(format!("point {:?} already present", p.0)));
        }
        let idx = self.points.len();
        self.points.push(p);
        self.cell_of.push(cell);
        self.grid.cells[cell].push(idx);
        Ok(idx)
    }

    /// Removes the point at `idx`. The last point takes its index.
    pub fn remove(&mut self, idx: usize) -> Point {
        let cell = self.cell_of[idx];
        let slot = self.grid.cells[cell].iter().position(|&i| i == idx).expect("grid out of sync");
        self.grid.cells[cell].swap_remove(slot);
        let last = self.points.len() - 1;
        if idx != last {
            let moved_cell = self.cell_of[last];
            let s = self.grid.cells[moved_cell]
                .iter()
                .position(|&i| i == last)
                .expect("grid out of sync");
            self.grid.cells[moved_cell][s] = idx;
        }
        self.cell_of.swap_remove(idx);
        self.points.swap_remove(idx)
    }

    /// Removes the point with exactly these coordinates, if present.
    pub fn remove_point(&mut self, p: &Point) -> bool {
        match self.find(p) {
            Some(i) => {
                self.remove(i);
                true
            }
            None => false,
        }
    }

    /// Copy of `self` with one point added.
    pub fn with_point(&self, p: Point) -> Result<Self> {
        let mut c = self.clone();
        c.insert(p)?;
        Ok(c)
    }

    /// Copy of `self` with the point at `idx` removed.
    pub fn without_index(&self, idx: usize) -> Self {
        let mut c = self.clone();
        c.remove(idx);
        c
    }

    pub fn count_in(&self, rect: &Rect) -> usize {
        self.points.iter().filter(|p| rect.contains(p)).count()
    }

    /// Calls `f(index, point)` for every point that may lie within `radius`
    /// of `x` (a superset: callers filter by exact distance). Each point is
    /// visited at most once.
    pub fn for_each_candidate(&self, x: &Point, radius: f64, mut f: impl FnMut(usize, &Point)) {
        let g = &self.grid;
        let single = g.cells.len() == 1;
        if single || !radius.is_finite() {
            for (i, p) in self.points.iter().enumerate() {
                f(i, p);
            }
            return;
        }
        let periodic = self.sim_box.boundary() == Boundary::Periodic;
        let centre = g.cell_coords(x);
        let mut spans: [Vec<usize>; MAX_DIM] = [vec![0], vec![0], vec![0]];
        for (axis, span) in spans.iter_mut().enumerate().take(self.sim_box.dim()) {
            let reach = (radius / g.cell_size[axis]).ceil().max(1.0) as usize;
            *span = g.axis_span(axis, centre[axis], reach, periodic);
        }
        for &c2 in &spans[2] {
            for &c1 in &spans[1] {
                for &c0 in &spans[0] {
                    for &i in &g.cells[g.flat(&[c0, c1, c2])] {
                        f(i, &self.points[i]);
                    }
                }
            }
        }
    }

    /// Indices of points within distance `< radius` of `x` (excluding a point
    /// equal to `x`), in grid order.
    pub fn neighbors_within(&self, x: &Point, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate(x, radius, |i, p| {
            if p != x && self.sim_box.dist2(x, p) < r2 {
                out.push(i);
            }
        });
        out
    }

    /// True when the cell index matches a full rebuild from the point list.
    pub fn grid_is_consistent(&self) -> bool {
        let mut fresh = CellGrid::new(&self.sim_box, self.cell_hint);
        for (i, p) in self.points.iter().enumerate() {
            let c = fresh.cell_of(p);
            if c != self.cell_of[i] {
                return false;
            }
            fresh.cells[c].push(i);
        }
        fresh
            .cells
            .iter()
            .zip(&self.grid.cells)
            .all(|(a, b)| {
                let mut a = a.clone();
                let mut b = b.clone();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            })
    }

    /// Canonical copy with points sorted lexicographically; useful for
    /// order-independent comparison.
    pub fn sorted_points(&self) -> Vec<Point> {
        let mut p = self.points.clone();
        p.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite coordinates"));
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> SimBox {
        SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn insert_remove_keeps_grid_in_sync() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = SimBox::new(&[2.0, 3.0], Boundary::Empty).unwrap();
        let mut c = Configuration::new(b, 0.4);
        for _ in 0..2000 {
            if c.is_empty() || rng.random::<f64>() < 0.55 {
                c.insert(b.sample_uniform(&mut rng)).unwrap();
            } else {
                let i = rng.random_range(0..c.len());
                c.remove(i);
            }
            assert!(c.grid_is_consistent());
        }
    }

    #[test]
    fn duplicates_and_outside_points_rejected() {
        let mut c = Configuration::new(unit_square(), 0.3);
        let p = Point::new(&[0.2, 0.2]).unwrap();
        c.insert(p).unwrap();
        assert!(c.insert(p).is_err());
        assert!(c.insert(Point::new(&[1.0, 0.5]).unwrap()).is_err());
        assert!(c.remove_point(&p));
        assert!(!c.remove_point(&p));
    }

    #[test]
    fn neighbor_search_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for boundary in [Boundary::Empty, Boundary::Periodic] {
            let b = SimBox::new(&[3.0, 2.0], boundary).unwrap();
            let mut c = Configuration::new(b, 0.5);
            for _ in 0..300 {
                c.insert(b.sample_uniform(&mut rng)).unwrap();
            }
            for _ in 0..50 {
                let x = b.sample_uniform(&mut rng);
                let mut got = c.neighbors_within(&x, 0.5);
                got.sort_unstable();
                let want: Vec<usize> = (0..c.len())
                    .filter(|&i| b.dist2(&x, &c.points()[i]) < 0.25)
                    .collect();
                assert_eq!(got, want);
            }
        }
    }
}
