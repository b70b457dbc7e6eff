//! A brute-force lattice version of the dynamics: the box is cut into `m`
//! regular cells, each holding at most one particle at its centre, with at
//! most `K` particles in total. Birth into an empty cell happens at rate
//! `z a exp(-E(c_i, gamma))` (cell volume `a`), each particle dies at rate
//! one. The dense rate matrix gives the exact stationary law and spectral
//! gap of this finite chain.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::model::ModelParams;

/// Largest state space handled by the dense solvers.
pub const MAX_STATES: usize = 4096;

/// Tolerance for residuals and detailed balance.
pub const TOLERANCE: f64 = 1e-10;

/// Cell-occupancy states are bit masks over at most 64 cells.
pub type State = u64;

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    params: ModelParams,
    cells_per_axis: Vec<usize>,
    centers: Vec<Point>,
    cell_volume: f64,
    cap: usize,
    /// `phi(c_i - c_j)`, row-major.
    pair: Vec<f64>,
    states: Vec<State>,
    index: HashMap<State, usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of occupancy vectors with at most `cap` ones among `m` cells.
pub fn state_count(m: usize, cap: usize) -> u128 {
    (0..=cap.min(m)).map(|k| binomial(m, k)).sum()
}

impl DiscreteModel {
    /// Full model with its enumerated state space.
    pub fn new(params: &ModelParams, cells_per_axis: &[usize], cap: usize) -> Result<Self> {
        let mut d = Self::lattice(params, cells_per_axis, cap)?;
        let m = d.cells();
        let count = state_count(m, cap);
        if count > MAX_STATES as u128 {
            return Err(Error::Capacity { states: count, limit: MAX_STATES });
        }
        let mut states = Vec::with_capacity(count as usize);
        for k in 0..=cap.min(m) {
            enumerate_k_subsets(m, k, &mut states);
        }
        d.index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        d.states = states;
        Ok(d)
    }

    /// Cells, rates and energies only, without enumerating states; enough
    /// for [`DiscreteModel::row_action`] on lattices too large for the
    /// dense solvers (at most 64 cells).
    pub fn lattice(params: &ModelParams, cells_per_axis: &[usize], cap: usize) -> Result<Self> {
        let b = params.sim_box();
        if cells_per_axis.len() != b.dim() || cells_per_axis.contains(&0) {
            return Err(Error::Parameter(format!(
                "need a positive cell count for each of the {} axes",
                b.dim()
            )));
        }
        let m: usize = cells_per_axis.iter().product();
        if m > 64 {
            return Err(Error::Capacity { states: state_count(m, cap), limit: MAX_STATES });
        }
        let mut centers = Vec::with_capacity(m);
        for flat in 0..m {
            let mut rem = flat;
            let mut c = [0.0; 3];
            for (i, &n) in cells_per_axis.iter().enumerate() {
                c[i] = (((rem % n) as f64) + 0.5) * b.side(i) / n as f64;
                rem /= n;
            }
            centers.push(Point::new(&c[..b.dim()])?);
        }
        let cell_volume = b.volume() / m as f64;
        let pot = params.potential();
        let mut pair = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    pair[i * m + j] = pot.at_dist2(b.dist2(&centers[i], &centers[j]));
                }
            }
        }
        Ok(DiscreteModel {
            params: params.clone(),
            cells_per_axis: cells_per_axis.to_vec(),
            centers,
            cell_volume,
            cap,
            pair,
            states: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells_per_axis
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state_index(&self, s: State) -> Option<usize> {
        self.index.get(&s).copied()
    }

    /// `E(c_i, s)` over the occupied cells of `s` other than `i`.
    pub fn energy(&self, i: usize, s: State) -> f64 {
        let m = self.cells();
        let mut e = 0.0;
        for j in occupied(s) {
            if j != i {
                e += self.pair[i * m + j];
                if e == f64::INFINITY {
                    break;
                }
            }
        }
        e
    }

    /// Birth rate into the empty cell `i` from state `s`.
    pub fn birth_rate(&self, i: usize, s: State) -> f64 {
        let e = self.energy(i, s);
        if e == f64::INFINITY {
            0.0
        } else {
            self.params.z() * self.cell_volume * (-e).exp()
        }
    }

    /// Configuration of the cell centres occupied in `s`.
    pub fn configuration(&self, s: State) -> Result<Configuration> {
        self.params.configuration(occupied(s).map(|i| self.centers[i]))
    }

    /// Cell of a point of the box.
    pub fn cell_of(&self, x: &Point) -> usize {
        let b = self.params.sim_box();
        let mut flat = 0;
        let mut stride = 1;
        for (i, &n) in self.cells_per_axis.iter().enumerate() {
            let c = ((x.0[i] / b.side(i) * n as f64) as usize).min(n - 1);
            flat += c * stride;
            stride *= n;
        }
        flat
    }

    /// Occupancy state of a configuration snapped to cells, or `None` when a
    /// cell holds two points or the cap is exceeded.
    pub fn snap(&self, gamma: &Configuration) -> Option<State> {
        if gamma.len() > self.cap {
            return None;
        }
        let mut s: State = 0;
        for x in gamma.iter() {
            let bit = 1u64 << self.cell_of(x);
            if s & bit != 0 {
                return None;
            }
            s |= bit;
        }
        Some(s)
    }

    /// `(Q f)(s) = sum over transitions s -> t of rate * (f(t) - f(s))`,
    /// computed from the rates out of `s` alone.
    pub fn row_action(&self, s: State, f: impl Fn(State) -> f64) -> f64 {
        let fs = f(s);
        let full = (s.count_ones() as usize) >= self.cap;
        let mut acc = 0.0;
        for i in 0..self.cells() {
            let bit = 1u64 << i;
            if s & bit != 0 {
                acc += f(s & !bit) - fs;
            } else if !full {
                let rate = self.birth_rate(i, s);
                if rate > 0.0 {
                    acc += rate * (f(s | bit) - fs);
                }
            }
        }
        acc
    }

    /// Dense rate matrix over the enumerated states; a capacity error for
    /// models built with [`DiscreteModel::lattice`].
    pub fn build_rate_matrix(&self) -> Result<RateMatrix> {
        if self.states.is_empty() {
            return Err(Error::Capacity { states: state_count(self.cells(), self.cap), limit: MAX_STATES });
        }
        let n = self.states.len();
        let m = self.cells();
        let mut q = DMatrix::<f64>::zeros(n, n);
        for (r, &s) in self.states.iter().enumerate() {
            let full = (s.count_ones() as usize) >= self.cap;
            for i in 0..m {
                let bit = 1u64 << i;
                if s & bit != 0 {
                    q[(r, self.index[&(s & !bit)])] += 1.0;
                } else if !full {
                    let rate = self.birth_rate(i, s);
                    if rate > 0.0 {
                        q[(r, self.index[&(s | bit)])] += rate;
                    }
                }
            }
            let total: f64 = q.row(r).iter().sum();
            q[(r, r)] = -total;
        }
        Ok(RateMatrix { q })
    }

    /// Stationary weights by direct enumeration:
    /// `(z a)^{|s|} exp(-sum over pairs phi)`, normalized.
    pub fn gibbs_weights(&self) -> Vec<f64> {
        let m = self.cells();
        let za = self.params.z() * self.cell_volume;
        let mut w: Vec<f64> = self
            .states
            .iter()
            .map(|&s| {
                let occ: Vec<usize> = occupied(s).collect();
                let mut u = 0.0;
                for (k, &i) in occ.iter().enumerate() {
                    for &j in &occ[k + 1..] {
                        u += self.pair[i * m + j];
                    }
                }
                if u == f64::INFINITY {
                    0.0
                } else {
                    za.powi(occ.len() as i32) * (-u).exp()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    }

    /// `z a max_i sum_{j != i} (1 - exp(-phi(c_i - c_j)))`, the lattice
    /// version of `delta`.
    pub fn delta_discrete(&self) -> f64 {
        let m = self.cells();
        let za = self.params.z() * self.cell_volume;
        (0..m)
            .map(|i| (0..m).filter(|&j| j != i).map(|j| -(-self.pair[i * m + j]).exp_m1()).sum::<f64>())
            .fold(0.0, f64::max)
            * za
    }

    /// Empirical law over the states of snapped configurations; the second
    /// value is the fraction of configurations that did not fit.
    pub fn empirical_law<'a>(&self, samples: impl IntoIterator<Item = &'a Configuration>) -> (Vec<f64>, f64) {
        let mut counts = vec![0u64; self.states.len()];
        let mut overflow = 0u64;
        let mut n = 0u64;
        for g in samples {
            n += 1;
            match self.snap(g).and_then(|s| self.index.get(&s)) {
                Some(&i) => counts[i] += 1,
                None => overflow += 1,
            }
        }
        let n = n.max(1) as f64;
        (counts.iter().map(|&c| c as f64 / n).collect(), overflow as f64 / n)
    }

    /// Values of `f` on the centre configuration of every state.
    pub fn discretize(&self, f: impl Fn(&Configuration) -> f64) -> Result<Vec<f64>> {
        self.states.iter().map(|&s| Ok(f(&self.configuration(s)?))).collect()
    }
}

fn occupied(s: State) -> impl Iterator<Item = usize> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest == 0 {
            return None;
        }
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        Some(i)
    })
}

/// All `k`-subsets of `m` cells in increasing order (Gosper's hack).
fn enumerate_k_subsets(m: usize, k: usize, out: &mut Vec<State>) {
    if k == 0 {
        out.push(0);
        return;
    }
    let limit: u128 = 1u128 << m;
    let mut s: u128 = (1u128 << k) - 1;
    while s < limit {
        out.push(s as State);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
}

/// Dense generator matrix `Q` (rows sum to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub q: DMatrix<f64>,
}

impl RateMatrix {
    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `max |sum_j Q_ij|`.
    pub fn row_sum_defect(&self) -> f64 {
        self.q.row_iter().map(|r| r.iter().sum::<f64>().abs()).fold(0.0, f64::max)
    }

    /// States reachable from state 0 along positive rates.
    pub fn reachable_from_zero(&self) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if j != i && !seen[j] && self.q[(i, j)] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// `Q f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.q * DVector::from_column_slice(f)).iter().copied().collect()
    }

    /// `max |pi_i Q_ij - pi_j Q_ji|`.
    pub fn detailed_balance_defect(&self, pi: &[f64]) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((pi[i] * self.q[(i, j)] - pi[j] * self.q[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Solves `pi Q = 0`, `sum pi = 1` on the class reachable from the first
/// state (the empty configuration) by LU; other states get probability 0.
pub fn stationary_distribution(rm: &RateMatrix) -> Result<Vec<f64>> {
    if rm.is_empty() {
        return Err(Error::Parameter("empty rate matrix".into()));
    }
    let reach = rm.reachable_from_zero();
    let idx: Vec<usize> = (0..rm.len()).filter(|&i| reach[i]).collect();
    let k = idx.len();
    // transpose of Q restricted to the class, last equation replaced by the normalization
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[(c, r)] = rm.q[(i, j)];
        }
    }
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular system for the stationary law".into()))?;
    let mut pi = vec![0.0; rm.len()];
    for (r, &i) in idx.iter().enumerate() {
        pi[i] = sol[r];
    }
    let residual = (DVector::from_column_slice(&pi).transpose() * &rm.q)
        .iter()
        .fold(0.0f64, |w, v| w.max(v.abs()));
    if !(residual < TOLERANCE) {
        return Err(Error::Numerical(format!("stationary residual {residual:e} above {TOLERANCE:e}")));
    }
    Ok(pi)
}

/// Smallest nonzero eigenvalue magnitude of `Q` on the support of `pi`,
/// computed from the symmetrized matrix `D^{1/2} Q D^{-1/2}`, `D = diag(pi)`.
pub fn spectral_gap_eig(rm: &RateMatrix, pi: &[f64]) -> Result<f64> {
    let defect = rm.detailed_balance_defect(pi);
    if !(defect < TOLERANCE) {
        return Err(Error::Model(format!("detailed-balance defect {defect:e} above {TOLERANCE:e}")));
    }
    let idx: Vec<usize> = (0..rm.len()).filter(|&i| pi[i] > 0.0).collect();
    let k = idx.len();
    if k < 2 {
        return Err(Error::Model("a single recurrent state has no gap".into()));
    }
    let mut s = DMatrix::<f64>::zeros(k, k);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            s[(r, c)] = pi[i].sqrt() * rm.q[(i, j)] / pi[j].sqrt();
        }
    }
    // symmetrize away rounding
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut mags: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags[1])
}

/// Summary of an oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub state_count: usize,
    pub gap: f64,
    pub delta_discrete: f64,
    pub tv_distance_vs_mc: Option<f64>,
}
