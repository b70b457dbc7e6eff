//! Deterministic quadrature for integrands with known discontinuities.
//!
//! Integrands of the birth-side integrals are piecewise smooth: they jump on
//! spheres around configuration points (step potentials) and on the faces
//! of indicator windows. In one and two dimensions the integration domain is
//! split along every such discontinuity so that Gauss-Legendre rules only ever
//! see smooth pieces. Three-dimensional integrals use randomized Halton
//! points with a fixed seed.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Rect, MAX_DIM};

/// Accuracy controls for birth-side integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute tolerance on the difference of successive refinements.
    pub tol: f64,
    /// Starting Gauss-Legendre order per smooth piece.
    pub initial_order: usize,
    /// Largest Gauss-Legendre order tried before giving up.
    pub max_order: usize,
    /// Initial number of Halton points per random shift (three dimensions).
    pub qmc_points: usize,
    pub qmc_max_points: usize,
    pub qmc_shifts: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            tol: 1e-6,
            initial_order: 6,
            max_order: 48,
            qmc_points: 1024,
            qmc_max_points: 1 << 16,
            qmc_shifts: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureSpec { tol, ..Self::default() }
    }
}

/// Integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// A sphere on which the integrand may jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: [f64; MAX_DIM],
    pub radius: f64,
}

/// Known discontinuity set of an integrand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Breaks {
    pub spheres: Vec<Sphere>,
    /// Axis-aligned planes `x_axis = c`.
    pub planes: [Vec<f64>; MAX_DIM],
    /// The integrand is constant on every cell of the arrangement.
    pub piecewise_constant: bool,
    /// Upper bound on the length of a smooth piece (splits long pieces of
    /// smooth but rapidly varying integrands). Infinite means no bound.
    pub max_piece: f64,
}

impl Breaks {
    pub fn new() -> Self {
        Breaks { max_piece: f64::INFINITY, ..Default::default() }
    }

    pub fn add_rect_faces(&mut self, r: &Rect) {
        for i in 0..r.dim {
            self.planes[i].push(r.lo[i]);
            self.planes[i].push(r.hi[i]);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED_ORDER: usize = 128;

/// Gauss-Legendre rule of order `n`, computed once and cached.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<OnceLock<GaussLegendre>>> = OnceLock::new();
    assert!((1..=MAX_CACHED_ORDER).contains(&n), "order {n} out of range");
    let cache = CACHE.get_or_init(|| (0..=MAX_CACHED_ORDER).map(|_| OnceLock::new()).collect());
    cache[n].get_or_init(|| compute_gauss_legendre(n))
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Plain Gauss-Legendre on `[a, b]`.
pub fn gl_interval(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * f(c + h * t)).sum::<f64>() * h
}

/// Gauss-Legendre after the substitution `x = a + (b-a) sin^2(pi s / 2)`,
/// which removes square-root behaviour at both endpoints.
fn gl_interval_endpoint_mapped(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let len = b - a;
    let half_pi = std::f64::consts::FRAC_PI_2;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| {
            let s = 0.5 * (t + 1.0);
            let sn = (half_pi * s).sin();
            let x = a + len * sn * sn;
            let jac = len * half_pi * (std::f64::consts::PI * s).sin();
            0.5 * w * jac * f(x)
        })
        .sum()
}

/// Sorted, deduplicated breakpoints inside `[lo, hi]`, including both ends,
/// with pieces longer than `max_piece` split evenly.
fn breakpoints(lo: f64, hi: f64, extra: impl IntoIterator<Item = f64>, max_piece: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = extra.into_iter().filter(|&v| v > lo && v < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let scale = (hi - lo).abs().max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * scale);
    if max_piece.is_finite() && max_piece > 0.0 {
        let mut out = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            let pieces = ((w[1] - w[0]) / max_piece).ceil().max(1.0) as usize;
            for k in 0..pieces {
                out.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
            }
        }
        out.push(*pts.last().expect("nonempty"));
        pts = out;
    }
    pts
}

/// Integrates `f` over `region` given its discontinuity set.
pub fn integrate(
    region: &Rect,
    breaks: &Breaks,
    spec: &QuadratureSpec,
    f: impl Fn(&[f64; MAX_DIM]) -> f64,
) -> Result<Integral> {
    match region.dim {
        1 => integrate_1d(region, breaks, spec, &f),
        2 => integrate_2d(region, breaks, spec, &f),
        3 => integrate_qmc(region, spec, &f),
        d => Err(Error::Parameter(format!("unsupported dimension {d}"))),
    }
}

fn refine(
    spec: &QuadratureSpec,
    exact_on_pieces: bool,
    mut at_order: impl FnMut(usize) -> f64,
) -> Result<Integral> {
    let mut n = spec.initial_order.max(1);
    let mut prev = at_order(n);
    if exact_on_pieces {
        return Ok(Integral { value: prev, error: 0.0 });
    }
    loop {
        let next_n = (2 * n).min(spec.max_order);
        let next = at_order(next_n);
        let err = (next - prev).abs();
        if err <= spec.tol {
            return Ok(Integral { value: next, error: err });
        }
        if next_n >= spec.max_order {
            return Err(Error::Accuracy { estimate: err, tolerance: spec.tol });
        }
        n = next_n;
        prev = next;
    }
}

fn integrate_1d(
    region: &Rect,
    breaks: &Breaks,
    spec: &QuadratureSpec,
    f: &impl Fn(&[f64; MAX_DIM]) -> f64,
) -> Result<Integral> {
    let (lo, hi) = (region.lo[0], region.hi[0]);
    let extra = breaks
        .planes[0]
        .iter()
        .copied()
        .chain(breaks.spheres.iter().flat_map(|s| [s.center[0] - s.radius, s.center[0] + s.radius]));
    let pts = breakpoints(lo, hi, extra, breaks.max_piece);
    let eval = |x: f64| f(&[x, 0.0, 0.0]);
    if breaks.piecewise_constant {
        let v = pts.windows(2).map(|w| (w[1] - w[0]) * eval(0.5 * (w[0] + w[1]))).sum();
        return Ok(Integral { value: v, error: 0.0 });
    }
    refine(spec, false, |n| pts.windows(2).map(|w| gl_interval(w[0], w[1], n, eval)).sum())
}

fn integrate_2d(
    region: &Rect,
    breaks: &Breaks,
    spec: &QuadratureSpec,
    f: &impl Fn(&[f64; MAX_DIM]) -> f64,
) -> Result<Integral> {
    let (x0, x1) = (region.lo[0], region.hi[0]);
    let (y0, y1) = (region.lo[1], region.hi[1]);
    let spheres = &breaks.spheres;

    // Outer breakpoints: every x at which the ordering or the set of inner
    // breakpoints changes.
    let mut xs: Vec<f64> = breaks.planes[0].clone();
    let hlines: Vec<f64> = breaks.planes[1]
        .iter()
        .copied()
        .chain([y0, y1])
        .collect();
    for s in spheres {
        let (cx, cy, r) = (s.center[0], s.center[1], s.radius);
        xs.push(cx - r);
        xs.push(cx + r);
        for &h in &hlines {
            let dy = h - cy;
            if dy.abs() < r {
                let w = (r * r - dy * dy).sqrt();
                xs.push(cx - w);
                xs.push(cx + w);
            }
        }
    }
    for (i, a) in spheres.iter().enumerate() {
        for b in &spheres[i + 1..] {
            xs.extend(circle_intersection_xs(a, b));
        }
    }
    let outer = breakpoints(x0, x1, xs, breaks.max_piece);
    let has_spheres = !spheres.is_empty();

    let inner = |x: f64, n: usize| -> f64 {
        let mut ys: Vec<f64> = breaks.planes[1].clone();
        for s in spheres {
            let dx = x - s.center[0];
            if dx.abs() < s.radius {
                let w = (s.radius * s.radius - dx * dx).sqrt();
                ys.push(s.center[1] - w);
                ys.push(s.center[1] + w);
            }
        }
        let pts = breakpoints(y0, y1, ys, breaks.max_piece);
        if breaks.piecewise_constant {
            pts.windows(2)
                .map(|w| (w[1] - w[0]) * f(&[x, 0.5 * (w[0] + w[1]), 0.0]))
                .sum()
        } else {
            pts.windows(2).map(|w| gl_interval(w[0], w[1], n, |y| f(&[x, y, 0.0]))).sum()
        }
    };

    let total = |n: usize| -> f64 {
        outer
            .windows(2)
            .map(|w| {
                if has_spheres {
                    gl_interval_endpoint_mapped(w[0], w[1], n, |x| inner(x, n))
                } else {
                    gl_interval(w[0], w[1], n, |x| inner(x, n))
                }
            })
            .sum()
    };
    // Without spheres a piecewise-constant integrand is constant in x on every
    // outer piece, so one midpoint per piece is exact.
    let exact = breaks.piecewise_constant && !has_spheres;
    refine(spec, exact, total)
}

fn circle_intersection_xs(a: &Sphere, b: &Sphere) -> Vec<f64> {
    let dx = b.center[0] - a.center[0];
    let dy = b.center[1] - a.center[1];
    let d2 = dx * dx + dy * dy;
    let d = d2.sqrt();
    if d == 0.0 || d >= a.radius + b.radius || d <= (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let l = (a.radius * a.radius - b.radius * b.radius + d2) / (2.0 * d);
    let h = (a.radius * a.radius - l * l).max(0.0).sqrt();
    let mx = a.center[0] + l * dx / d;
    vec![mx - h * dy / d, mx + h * dy / d]
}

/// Halton radical inverse in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Randomized quasi-Monte Carlo over a box (Cranley-Patterson rotations of
/// a Halton sequence). The error is the standard error across rotations.
fn integrate_qmc(
    region: &Rect,
    spec: &QuadratureSpec,
    f: &impl Fn(&[f64; MAX_DIM]) -> f64,
) -> Result<Integral> {
    const BASES: [u64; MAX_DIM] = [2, 3, 5];
    let vol = region.volume();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_9a55);
    let shifts: Vec<[f64; MAX_DIM]> = (0..spec.qmc_shifts.max(2))
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    let mut n = spec.qmc_points.max(16);
    loop {
        let estimates: Vec<f64> = shifts
            .iter()
            .map(|shift| {
                let mut acc = 0.0;
                for i in 0..n {
                    let mut x = [0.0; MAX_DIM];
                    for k in 0..region.dim {
                        let u = (radical_inverse(i as u64 + 1, BASES[k]) + shift[k]).fract();
                        x[k] = region.lo[k] + u * (region.hi[k] - region.lo[k]);
                    }
                    acc += f(&x);
                }
                vol * acc / n as f64
            })
            .collect();
        let m = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / m;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let err = (var / m).sqrt();
        if err <= spec.tol {
            return Ok(Integral { value: mean, error: err });
        }
        if n >= spec.qmc_max_points {
            return Err(Error::Accuracy { estimate: err, tolerance: spec.tol });
        }
        n *= 2;
    }
}

/// Adaptive Gauss-Legendre for a smooth function on `[a, b]` with optional
/// interior breakpoints. Used for radial integrals.
pub fn integrate_interval(
    a: f64,
    b: f64,
    interior: &[f64],
    spec: &QuadratureSpec,
    f: impl Fn(f64) -> f64,
) -> Result<Integral> {
    let pts = breakpoints(a, b, interior.iter().copied(), f64::INFINITY);
    refine(spec, false, |n| pts.windows(2).map(|w| gl_interval(w[0], w[1], n, &f)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 1..20 {
            let rule = gauss_legendre(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            // degree 2n-1 exactness
            let deg = 2 * n - 1;
            let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-12, "n={n} got {got} want {want}");
        }
    }

    #[test]
    fn disk_area_is_resolved_exactly() {
        let region = Rect::new(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let c = [1.0, 0.9, 0.0];
        let mut br = Breaks::new();
        br.spheres.push(Sphere { center: c, radius: 0.5 });
        br.piecewise_constant = true;
        let spec = QuadratureSpec::default();
        let res = integrate(&region, &br, &spec, |x| {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            if d2 < 0.25 { 1.0 } else { 0.0 }
        })
        .unwrap();
        assert!((res.value - std::f64::consts::PI * 0.25).abs() < 1e-9, "{}", res.value);
    }

    #[test]
    fn clipped_overlapping_disks() {
        // two overlapping disks clipped by the region edge and a window line;
        // compare with a fine midpoint oracle on the integrand
        let region = Rect::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let a = [0.1, 0.5, 0.0];
        let b = [0.5, 0.6, 0.0];
        let f = |x: &[f64; 3]| {
            let ina = (x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2) < 0.16;
            let inb = (x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2) < 0.16;
            let k = ina as i32 + inb as i32;
            let w = if x[1] < 0.7 { 2.0 } else { 1.0 };
            w * (-(k as f64)).exp()
        };
        let mut br = Breaks::new();
        br.spheres.push(Sphere { center: a, radius: 0.4 });
        br.spheres.push(Sphere { center: b, radius: 0.4 });
        br.planes[1].push(0.7);
        br.piecewise_constant = true;
        let res = integrate(&region, &br, &QuadratureSpec::default(), f).unwrap();
        let n = 4000;
        let h = 1.0 / n as f64;
        let mut oracle = 0.0;
        for i in 0..n {
            for j in 0..n {
                oracle += f(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.0]);
            }
        }
        oracle *= h * h;
        assert!((res.value - oracle).abs() < 5e-4, "{} vs {}", res.value, oracle);
    }

    #[test]
    fn smooth_gaussian_2d() {
        let region = Rect::new(&[-4.0, -4.0], &[4.0, 4.0]).unwrap();
        let mut br = Breaks::new();
        br.max_piece = 1.0;
        let res = integrate(&region, &br, &QuadratureSpec::default(), |x| {
            (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
        })
        .unwrap();
        let want = 2.0 * std::f64::consts::PI * libm_erf_sq(4.0 / 2f64.sqrt());
        assert!((res.value - want).abs() < 1e-8);
    }

    fn libm_erf_sq(x: f64) -> f64 {
        let e = statrs::function::erf::erf(x);
        e * e
    }

    #[test]
    fn qmc_in_three_dimensions() {
        let region = Rect::new(&[0.0; 3], &[1.0; 3]).unwrap();
        let spec = QuadratureSpec { tol: 1e-3, ..Default::default() };
        let res = integrate(&region, &Breaks::new(), &spec, |x| x[0] * x[1] + x[2]).unwrap();
        assert!((res.value - 0.75).abs() < 5e-3);
        assert!(res.error <= 1e-3);
    }

    #[test]
    fn accuracy_error_when_tolerance_unreachable() {
        let region = Rect::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        // undeclared discontinuity: refinement cannot settle to 1e-14
        let spec = QuadratureSpec { tol: 1e-14, max_order: 24, ..Default::default() };
        let res = integrate(&region, &Breaks::new(), &spec, |x| {
            if x[0] * x[0] + x[1] * x[1] < 0.5 { 1.0 } else { 0.0 }
        });
        assert!(matches!(res, Err(Error::Accuracy { .. })));
    }
}
