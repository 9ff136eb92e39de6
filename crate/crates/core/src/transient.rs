//! Time-varying laws: exact on finite reachable sets, finite state
//! projection with certified total-variation error otherwise.
//!
//! Truncated solutions are entrywise lower bounds on the true law. In
//! discrete time the reported error equals the probability of having left
//! the truncation by the horizon; in continuous time it also covers
//! explosion and the discarded uniformization tail.
//!
//! The continuous solvers never differentiate `p_t`; whether the usual
//! sufficient condition for the forward equations is also necessary is
//! not something they depend on.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::model::{ChainKind, ChainModel};
use crate::state::StateKey;
use crate::truncation::{LocalRows, Truncation};
use crate::uniformization::{self, CtMethod, DEFAULT_MAX_WORK};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Steps(usize),
    Time(f64),
}

/// How a truncated law was computed.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverLog {
    /// Discrete steps performed.
    pub sweeps: usize,
    /// Poisson series terms used (continuous time).
    pub series_terms: usize,
    /// Matrix squarings (stiff continuous time).
    pub squarings: u32,
    pub method: Option<CtMethod>,
    pub uniformization_rate: f64,
    /// Initial mass outside the truncation.
    pub outside_initial: f64,
    /// Mass that left the truncation during the solve.
    pub leaked: f64,
    /// Bound on the mass dropped by series truncation.
    pub series_tail: f64,
}

/// FSP output: lower-bound law, retained mass and certified error.
#[derive(Clone, Debug)]
pub struct TruncationResult {
    pub approx: SparseDistribution,
    /// `p^r(S_r)`.
    pub retained: f64,
    /// Certified total-variation error bound `ε_r ∈ [0, 1]`.
    pub epsilon: f64,
    pub truncation: Truncation,
    pub horizon: Horizon,
    pub log: SolverLog,
}

fn initial_vector(model: &ChainModel, trunc: &Truncation) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; trunc.len()];
    let mut outside = 0.0;
    for (x, w) in model.gamma().iter() {
        match trunc.index_of(x) {
            Some(i) => p[i] += w,
            None => outside += w,
        }
    }
    (p, outside)
}

fn to_distribution(trunc: &Truncation, p: &[f64]) -> SparseDistribution {
    trunc
        .iter()
        .zip(p)
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, &w)| (x.clone(), w))
        .collect()
}

/// Exact `p_n = γ P^n`, provided every state reachable within `n` steps
/// lies in `trunc`.
pub fn law_exact_dt(model: &ChainModel, n: usize, trunc: &Truncation) -> Result<SparseDistribution> {
    model.require(ChainKind::Discrete, "law_exact_dt")?;
    let mut seen: BTreeSet<StateKey> = BTreeSet::new();
    let mut frontier: Vec<StateKey> = Vec::new();
    for x in model.gamma().support() {
        if !trunc.contains(x) {
            return Err(Error::Escapes {
                state: x.clone(),
                steps: 0,
            });
        }
        seen.insert(x.clone());
        frontier.push(x.clone());
    }
    for step in 1..=n {
        let mut next = Vec::new();
        for x in &frontier {
            for (y, _) in model.row(x)?.iter() {
                if seen.contains(y) {
                    continue;
                }
                if !trunc.contains(y) {
                    return Err(Error::Escapes {
                        state: y.clone(),
                        steps: step,
                    });
                }
                seen.insert(y.clone());
                next.push(y.clone());
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let reachable = Truncation::new(seen)?;
    Ok(fsp_dt(model, n, &reachable)?.approx)
}

/// Discrete-time FSP: propagate `γ` through the rows of truncation states
/// only. `ε = P(σ_r <= n)` is accumulated from the mass leaving, so it is
/// exactly zero when nothing leaves.
pub fn fsp_dt(model: &ChainModel, n: usize, trunc: &Truncation) -> Result<TruncationResult> {
    model.require(ChainKind::Discrete, "fsp_dt")?;
    let rows = LocalRows::build(model, trunc)?;
    let (mut p, outside) = initial_vector(model, trunc);
    let mut next = vec![0.0; p.len()];
    let mut leaked = 0.0;
    for _ in 0..n {
        leaked += rows.left_multiply(&p, &mut next);
        std::mem::swap(&mut p, &mut next);
    }
    let approx = to_distribution(trunc, &p);
    let retained = approx.mass();
    Ok(TruncationResult {
        retained,
        epsilon: (outside + leaked).clamp(0.0, 1.0),
        approx,
        truncation: trunc.clone(),
        horizon: Horizon::Steps(n),
        log: SolverLog {
            sweeps: n,
            series_terms: 0,
            squarings: 0,
            method: None,
            uniformization_rate: 0.0,
            outside_initial: outside,
            leaked,
            series_tail: 0.0,
        },
    })
}

/// Options for the continuous-time solvers.
#[derive(Clone, Copy, Debug)]
pub struct CtOptions {
    /// Series truncation tolerance in `(0, 1e-6]`, added to `ε`.
    pub series_tol: f64,
    /// Cap on the estimated floating-point work of one solve.
    pub max_work: f64,
}

impl Default for CtOptions {
    fn default() -> Self {
        Self {
            series_tol: 1e-12,
            max_work: DEFAULT_MAX_WORK,
        }
    }
}

impl CtOptions {
    pub fn with_series_tol(series_tol: f64) -> Self {
        Self {
            series_tol,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.series_tol > 0.0 && self.series_tol <= 1e-6) {
            return Err(Error::Precondition(format!(
                "series_tol {} is not in (0, 1e-6]",
                self.series_tol
            )));
        }
        Ok(())
    }
}

/// Continuous-time FSP at time `t` with the given series tolerance.
pub fn fsp_ct(model: &ChainModel, t: f64, trunc: &Truncation, series_tol: f64) -> Result<TruncationResult> {
    fsp_ct_with(model, t, trunc, &CtOptions::with_series_tol(series_tol))
}

/// Continuous-time FSP: uniformization of the truncated generator, which
/// sends the mass leaving the truncation to an absorbing sink.
/// `ε = 1 - p^r_t(S_r) + series_tol`, capped at one.
pub fn fsp_ct_with(
    model: &ChainModel,
    t: f64,
    trunc: &Truncation,
    opts: &CtOptions,
) -> Result<TruncationResult> {
    model.require(ChainKind::Continuous, "fsp_ct")?;
    opts.check()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("time {t} must be finite and nonnegative")));
    }
    let rows = LocalRows::build(model, trunc)?;
    let (p0, outside) = initial_vector(model, trunc);
    let out = uniformization::propagate(&rows, &p0, t, opts.series_tol, opts.max_work)?;
    let approx = to_distribution(trunc, &out.p);
    let retained = approx.mass();
    let defect = (1.0 - retained).max(outside + out.leaked + out.tail);
    Ok(TruncationResult {
        retained,
        epsilon: (defect + opts.series_tol).clamp(0.0, 1.0),
        approx,
        truncation: trunc.clone(),
        horizon: Horizon::Time(t),
        log: SolverLog {
            sweeps: 0,
            series_terms: out.terms,
            squarings: out.squarings,
            method: Some(out.method),
            uniformization_rate: out.rate,
            outside_initial: outside,
            leaked: out.leaked,
            series_tail: out.tail,
        },
    })
}

fn solve(model: &ChainModel, horizon: Horizon, trunc: &Truncation, opts: &CtOptions) -> Result<TruncationResult> {
    match horizon {
        Horizon::Steps(n) => fsp_dt(model, n, trunc),
        Horizon::Time(t) => fsp_ct_with(model, t, trunc, opts),
    }
}

fn solve_work(model: &ChainModel, horizon: Horizon, trunc: &Truncation, opts: &CtOptions) -> Result<f64> {
    let rows = LocalRows::build(model, trunc)?;
    Ok(match horizon {
        Horizon::Steps(n) => n as f64 * (rows.vals.len() + rows.len()) as f64,
        Horizon::Time(t) => uniformization::estimate_work(&rows, t, opts.series_tol),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdaptiveTermination {
    /// `ε <= tol`.
    Converged,
    /// The next expansion would exceed `max_states`.
    StateBudget,
    /// The cumulative work budget ran out.
    WorkBudget,
    /// The truncation stopped growing while `ε > tol`.
    Exhausted,
    /// A row could not be evaluated on the next expansion.
    ModelError(String),
}

#[derive(Clone, Debug)]
pub struct AdaptiveResult {
    /// Last successful solve.
    pub result: TruncationResult,
    pub converged: bool,
    pub termination: AdaptiveTermination,
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    pub ct: CtOptions,
    /// Cap on the summed estimated work of all rounds.
    pub max_total_work: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            ct: CtOptions::default(),
            max_total_work: 4e9,
        }
    }
}

/// Iterated FSP: solve, stop if `ε <= tol`, otherwise add the one-step
/// frontier and repeat. Budget exhaustion is reported in the result, never
/// as an error; explosive chains typically end that way.
pub fn fsp_adaptive(
    model: &ChainModel,
    horizon: Horizon,
    tol: f64,
    initial: &Truncation,
    max_states: usize,
) -> Result<AdaptiveResult> {
    fsp_adaptive_with(model, horizon, tol, initial, max_states, &AdaptiveOptions::default())
}

pub fn fsp_adaptive_with(
    model: &ChainModel,
    horizon: Horizon,
    tol: f64,
    initial: &Truncation,
    max_states: usize,
    opts: &AdaptiveOptions,
) -> Result<AdaptiveResult> {
    if !(tol > 0.0 && tol <= 1.0) {
        return Err(Error::Precondition(format!("tolerance {tol} is not in (0, 1]")));
    }
    let mut trunc = initial.clone();
    let mut spent = solve_work(model, horizon, &trunc, &opts.ct)?;
    let mut result = solve(model, horizon, &trunc, &opts.ct)?;
    let mut rounds = 1;
    let termination = loop {
        if result.epsilon <= tol {
            break AdaptiveTermination::Converged;
        }
        let next = match trunc.expanded(model) {
            Ok(t) => t,
            Err(e) => break AdaptiveTermination::ModelError(e.to_string()),
        };
        if next.len() == trunc.len() {
            break AdaptiveTermination::Exhausted;
        }
        if next.len() > max_states {
            break AdaptiveTermination::StateBudget;
        }
        let work = match solve_work(model, horizon, &next, &opts.ct) {
            Ok(w) => w,
            Err(e) => break AdaptiveTermination::ModelError(e.to_string()),
        };
        if spent + work > opts.max_total_work {
            break AdaptiveTermination::WorkBudget;
        }
        match solve(model, horizon, &next, &opts.ct) {
            Ok(r) => result = r,
            Err(Error::SolverLimit(_)) => break AdaptiveTermination::WorkBudget,
            Err(e) => break AdaptiveTermination::ModelError(e.to_string()),
        }
        spent += work;
        trunc = next;
        rounds += 1;
    };
    Ok(AdaptiveResult {
        converged: termination == AdaptiveTermination::Converged,
        result,
        termination,
        rounds,
    })
}

/// Transition matrix of the `δ`-skeleton over a truncation.
#[derive(Clone, Debug)]
pub struct SkeletonMatrix {
    pub truncation: Truncation,
    pub delta: f64,
    /// `rows[i][j]` lower-bounds `p_δ(x_i, x_j)`.
    pub rows: Vec<Vec<f64>>,
    /// `1 - sum_j rows[i][j]`: mass of the implicit dead state.
    pub dead_mass: Vec<f64>,
    pub method: CtMethod,
}

impl SkeletonMatrix {
    pub fn entry(&self, x: &StateKey, y: &StateKey) -> Option<f64> {
        Some(self.rows[self.truncation.index_of(x)?][self.truncation.index_of(y)?])
    }

    /// `v S` for a row vector indexed like the truncation.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        let mut out = vec![0.0; n];
        for (vi, row) in v.iter().zip(&self.rows) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
        out
    }
}

/// Row `x` is the truncated law at time `δ` started from `1_x`; rows are
/// computed in parallel or, for stiff generators, all at once.
pub fn skeleton_matrix(model: &ChainModel, delta: f64, trunc: &Truncation, series_tol: f64) -> Result<SkeletonMatrix> {
    model.require(ChainKind::Continuous, "skeleton_matrix")?;
    let opts = CtOptions::with_series_tol(series_tol);
    opts.check()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!("skeleton step {delta} must be positive")));
    }
    let rows = LocalRows::build(model, trunc)?;
    let m = uniformization::transition_matrix(&rows, delta, series_tol, opts.max_work)?;
    let dead_mass = m
        .rows
        .iter()
        .map(|r| (1.0 - r.iter().sum::<f64>()).max(0.0))
        .collect();
    Ok(SkeletonMatrix {
        truncation: trunc.clone(),
        delta,
        rows: m.rows,
        dead_mass,
        method: m.method,
    })
}

/// Both integral recursions for `p^n_t(x, y) = P_x(X_t = y, t < T_{n+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirBir {
    /// Forward integral recursion (the returned value).
    pub fir: f64,
    /// Backward integral recursion, for cross-checking.
    pub bir: f64,
}

/// Small-instance oracle for `p^n_t(x, y)` by trapezoidal quadrature of the
/// forward and backward integral recursions over the jump decomposition
/// restricted to `trunc`. Jumps leaving `trunc` are dropped, so the values
/// are lower bounds unless `trunc` is closed.
///
/// This is a test fixture: the quadrature error is not controlled and grows
/// with stiffness.
pub fn fir_bir_oracle(
    model: &ChainModel,
    x: &StateKey,
    y: &StateKey,
    t: f64,
    n_jumps: usize,
    quad_steps: usize,
    trunc: &Truncation,
) -> Result<FirBir> {
    model.require(ChainKind::Continuous, "fir_bir_oracle")?;
    if trunc.len() > 20 || n_jumps > 8 || quad_steps < 100 {
        return Err(Error::Precondition(format!(
            "fir_bir_oracle handles at most 20 states and 8 jumps with at least 100 quadrature \
             steps (got {} states, {n_jumps} jumps, {quad_steps} steps)",
            trunc.len()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("time {t} must be finite and nonnegative")));
    }
    let xi = trunc.index_of(x).ok_or_else(|| Error::UnknownState(x.clone()))?;
    let yi = trunc.index_of(y).ok_or_else(|| Error::UnknownState(y.clone()))?;
    let jump = LocalRows::build_with(trunc, |z| {
        let (row, lambda) = model.jump_row(z)?;
        Ok((row.entries().to_vec(), lambda))
    })?;
    let n = trunc.len();
    let lambda = &jump.total;
    let h = t / quad_steps as f64;
    let decay: Vec<f64> = lambda.iter().map(|l| (-l * h).exp()).collect();
    let grid = quad_steps + 1;

    // Zero-jump term 1_a(b) e^{-λ s} with `a` fixed, on the grid.
    let base = |a: usize| -> Vec<Vec<f64>> {
        (0..grid)
            .map(|j| {
                let mut v = vec![0.0; n];
                v[a] = (-lambda[a] * (j as f64 * h)).exp();
                v
            })
            .collect()
    };
    // I_j = e^{-λh} I_{j-1} + h/2 (g_{j-1} e^{-λh} + g_j), added onto `base`.
    let integrate = |g: &[Vec<f64>], base: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let mut out = base;
        let mut acc = vec![0.0; n];
        for j in 1..grid {
            for z in 0..n {
                acc[z] = decay[z] * acc[z] + 0.5 * h * (g[j - 1][z] * decay[z] + g[j][z]);
                out[j][z] += acc[z];
            }
        }
        out
    };

    // Forward: row vector f(z) = p^m_s(x, z).
    let mut f = base(xi);
    for _ in 0..n_jumps {
        let g: Vec<Vec<f64>> = f
            .par_iter()
            .map(|fj| {
                let mut gj = vec![0.0; n];
                for z in 0..n {
                    if fj[z] != 0.0 {
                        for (w, p) in jump.row(z) {
                            gj[w] += fj[z] * lambda[z] * p;
                        }
                    }
                }
                gj
            })
            .collect();
        f = integrate(&g, base(xi));
    }

    // Backward: column vector b(z) = p^m_s(z, y).
    let mut b = base(yi);
    for _ in 0..n_jumps {
        let g: Vec<Vec<f64>> = b
            .par_iter()
            .map(|bj| {
                (0..n)
                    .map(|z| lambda[z] * jump.row(z).map(|(w, p)| p * bj[w]).sum::<f64>())
                    .collect()
            })
            .collect();
        b = integrate(&g, base(yi));
    }

    Ok(FirBir {
        fir: f[quad_steps][yi],
        bir: b[quad_steps][xi],
    })
}
