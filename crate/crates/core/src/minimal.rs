//! Minimal nonnegative solutions of nonnegative linear systems.
//!
//! Every "probabilistic" linear system in this crate (hitting
//! probabilities, occupation measures, hitting-time moments) has the form
//!
//! ```text
//! d(x) u(x) = b(x) + sum_z A(x, z) u(z),      d, b, A >= 0,
//! ```
//!
//! and the quantity of interest is its minimal nonnegative solution, the
//! limit of value iteration started from zero. It may be infinite at some
//! states.
//!
//! [`SolveMethod::ValueIteration`] runs that iteration literally.
//! [`SolveMethod::Direct`] reaches the same limit without iterating to
//! convergence: states that cannot reach the support of `b` are zero,
//! the remaining states are processed one strongly connected component at
//! a time in dependency order, and each component is solved densely. On an
//! irreducible component a nonnegative solution exists exactly when the
//! iteration converges, in which case it is unique and therefore minimal;
//! otherwise the whole component is infinite.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::strongly_connected_components;

/// `d(x) u(x) = b(x) + sum_z A(x, z) u(z)` with nonnegative coefficients.
#[derive(Clone, Debug)]
pub struct MinimalSystem {
    diag: Vec<f64>,
    rhs: Vec<f64>,
    coupling: Vec<Vec<(usize, f64)>>,
}

impl MinimalSystem {
    /// `n` unknowns with `d = 1`, `b = 0` and no coupling.
    pub fn new(n: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            rhs: vec![0.0; n],
            coupling: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn set_diag(&mut self, i: usize, d: f64) {
        debug_assert!(d >= 0.0);
        self.diag[i] = d;
    }

    pub fn add_rhs(&mut self, i: usize, b: f64) {
        debug_assert!(b >= 0.0);
        self.rhs[i] += b;
    }

    pub fn add_coupling(&mut self, i: usize, j: usize, w: f64) {
        debug_assert!(w >= 0.0);
        if w > 0.0 {
            self.coupling[i].push((j, w));
        }
    }

    /// One Jacobi sweep `u -> (b + A u) / d`. Zero `d` maps a positive
    /// numerator to infinity.
    pub fn sweep(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.update(i, u)).collect()
    }

    fn numerator(&self, i: usize, u: &[f64]) -> f64 {
        self.rhs[i]
            + self.coupling[i]
                .iter()
                .map(|&(j, w)| if u[j] == 0.0 { 0.0 } else { w * u[j] })
                .sum::<f64>()
    }

    fn update(&self, i: usize, u: &[f64]) -> f64 {
        let num = self.numerator(i, u);
        if num == 0.0 {
            0.0
        } else if self.diag[i] == 0.0 {
            f64::INFINITY
        } else {
            num / self.diag[i]
        }
    }

    /// `max_x |d(x) u(x) - b(x) - (A u)(x)|` over states with finite values.
    pub fn residual(&self, u: &[f64]) -> f64 {
        (0..self.len())
            .filter(|&i| u[i].is_finite())
            .map(|i| (self.diag[i] * u[i] - self.numerator(i, u)).abs())
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Component-wise dense solves with the divergence test described in
    /// the module docs; components above `dense_limit` states fall back to
    /// value iteration.
    Direct,
    /// Gauss–Seidel value iteration from zero.
    ValueIteration,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Sup-norm change between sweeps at which value iteration stops.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Values above the cap are reported as infinite.
    pub cap: f64,
    pub dense_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            tol: 1e-12,
            max_sweeps: 1_000_000,
            cap: 1e15,
            dense_limit: 3000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimalSolution {
    /// Minimal solution; `f64::INFINITY` where it diverges.
    pub values: Vec<f64>,
    pub method: SolveMethod,
    /// Value-iteration sweeps performed (zero for purely direct solves).
    pub sweeps: usize,
    /// Equation residual over the finite entries.
    pub residual: f64,
}

impl MinimalSolution {
    pub fn diverged(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_infinite())
            .map(|(i, _)| i)
    }
}

/// Minimal nonnegative solution of `sys`.
pub fn solve_minimal(sys: &MinimalSystem, opts: &SolveOptions) -> Result<MinimalSolution> {
    let (values, sweeps) = match opts.method {
        SolveMethod::ValueIteration => {
            let all: Vec<usize> = (0..sys.len()).collect();
            let mut u = vec![0.0; sys.len()];
            let sweeps = gauss_seidel(sys, &all, &mut u, opts)?;
            (u, sweeps)
        }
        SolveMethod::Direct => direct(sys, opts)?,
    };
    let residual = sys.residual(&values);
    Ok(MinimalSolution {
        values,
        method: opts.method,
        sweeps,
        residual,
    })
}

/// Gauss–Seidel from the current `u` over `members`, other entries fixed.
fn gauss_seidel(
    sys: &MinimalSystem,
    members: &[usize],
    u: &mut [f64],
    opts: &SolveOptions,
) -> Result<usize> {
    for sweep in 1..=opts.max_sweeps {
        let mut change: f64 = 0.0;
        for &i in members {
            let old = u[i];
            if old.is_infinite() {
                continue;
            }
            let mut new = sys.update(i, u);
            if new > opts.cap {
                new = f64::INFINITY;
            }
            change = change.max(if new.is_infinite() { f64::INFINITY } else { new - old });
            u[i] = new;
        }
        if change.is_finite() && change <= opts.tol {
            return Ok(sweep);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_sweeps,
        residual: sys.residual(u),
        mass: members.iter().map(|&i| u[i]).filter(|v| v.is_finite()).sum(),
    })
}

fn direct(sys: &MinimalSystem, opts: &SolveOptions) -> Result<(Vec<f64>, usize)> {
    let n = sys.len();
    // A state is nonzero iff it can reach the support of b.
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in sys.coupling.iter().enumerate() {
        for &(j, _) in row {
            reverse[j].push(i);
        }
    }
    let mut active = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| sys.rhs[i] > 0.0).collect();
    for &i in &queue {
        active[i] = true;
    }
    while let Some(j) = queue.pop() {
        for &i in &reverse[j] {
            if !active[i] {
                active[i] = true;
                queue.push(i);
            }
        }
    }

    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if !active[i] {
                return Vec::new();
            }
            sys.coupling[i]
                .iter()
                .map(|&(j, _)| j)
                .filter(|&j| active[j])
                .collect()
        })
        .collect();

    let mut u = vec![0.0; n];
    let mut local = vec![usize::MAX; n];
    let mut sweeps = 0;
    for comp in strongly_connected_components(&adj) {
        if !active[comp[0]] {
            continue;
        }
        for (k, &i) in comp.iter().enumerate() {
            local[i] = k;
        }
        let in_comp = |j: usize| local[j] != usize::MAX;

        // Right-hand side with already solved dependencies folded in.
        let mut rhs = vec![0.0; comp.len()];
        let mut infinite = false;
        for (k, &i) in comp.iter().enumerate() {
            rhs[k] = sys.rhs[i];
            for &(j, w) in &sys.coupling[i] {
                if !in_comp(j) && u[j] != 0.0 {
                    rhs[k] += w * u[j];
                }
            }
            infinite |= rhs[k].is_infinite();
        }

        if !infinite {
            if comp.len() == 1 {
                let i = comp[0];
                let self_weight: f64 = sys.coupling[i]
                    .iter()
                    .filter(|&&(j, _)| j == i)
                    .map(|&(_, w)| w)
                    .sum();
                let d = sys.diag[i] - self_weight;
                u[i] = if rhs[0] == 0.0 {
                    0.0
                } else if d > 0.0 {
                    rhs[0] / d
                } else {
                    f64::INFINITY
                };
            } else if comp.iter().any(|&i| sys.diag[i] == 0.0) {
                infinite = true;
            } else if comp.len() <= opts.dense_limit {
                match dense_component(sys, &comp, &local, &rhs) {
                    Some(sol) => {
                        for (k, &i) in comp.iter().enumerate() {
                            u[i] = sol[k];
                        }
                    }
                    None => infinite = true,
                }
            } else {
                sweeps += gauss_seidel(sys, &comp, &mut u, opts)?;
            }
        }
        for &i in &comp {
            if infinite || u[i] > opts.cap {
                u[i] = f64::INFINITY;
            }
            local[i] = usize::MAX;
        }
        if comp.iter().any(|&i| u[i].is_infinite()) {
            for &i in &comp {
                u[i] = f64::INFINITY;
            }
        }
    }
    Ok((u, sweeps))
}

/// Solves `(D - A_CC) u = rhs` on one irreducible component. Returns `None`
/// when no nonnegative solution exists, meaning the minimal one is infinite.
fn dense_component(
    sys: &MinimalSystem,
    comp: &[usize],
    local: &[usize],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let m = comp.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (k, &i) in comp.iter().enumerate() {
        a[(k, k)] += sys.diag[i];
        for &(j, w) in &sys.coupling[i] {
            if local[j] != usize::MAX {
                a[(k, local[j])] -= w;
            }
        }
    }
    let b = DVector::from_column_slice(rhs);
    let lu = a.clone().lu();
    let mut x = lu.solve(&b)?;
    for _ in 0..2 {
        let r = &b - &a * &x;
        x += lu.solve(&r)?;
    }
    let scale = x.amax();
    if !scale.is_finite() || x.iter().any(|&v| v < -1e-9 * scale) {
        return None;
    }
    let r = (&b - &a * &x).amax();
    let size = a.iter().map(|v| v.abs()).fold(0.0, f64::max) * scale + b.amax();
    if r > 1e-6 * size {
        return None;
    }
    Some(x.iter().map(|&v| v.max(0.0)).collect())
}
