//! Transient solutions of truncated generators by uniformization.
//!
//! The truncated generator lives on `n` states plus an implicit absorbing
//! sink collecting the mass that leaves the truncation. Two routes compute
//! `p0 exp(t Q_r)`:
//!
//! * Vector uniformization: `sum_k Poisson(Λt, k) p0 P_Λ^k`, stopped once a
//!   rigorous bound on the Poisson tail drops below `series_tol`.
//! * Scaling and squaring for stiff problems (`Λt` large, few states): the
//!   truncated series over a step `h = t / 2^s` with `Λh <= 1` is squared
//!   `s` times. The matrix is carried as `I + E` with the diagonal of `E`
//!   rebuilt from nonnegative row sums after every product, which keeps slow
//!   states accurate even when `Λh` is far below machine epsilon relative
//!   to one.
//!
//! Both routes drop only nonnegative terms, so results are entrywise lower
//! bounds of the exact solution.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::truncation::LocalRows;

/// Default cap on the floating-point work of a single solve.
pub const DEFAULT_MAX_WORK: f64 = 2e10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtMethod {
    /// Nothing moves: `Λ = 0` or `t = 0`.
    Static,
    VectorSeries,
    Squaring,
}

#[derive(Clone, Debug)]
pub(crate) struct Propagated {
    pub p: Vec<f64>,
    pub leaked: f64,
    /// Upper bound on the mass discarded by series truncation.
    pub tail: f64,
    pub terms: usize,
    pub squarings: u32,
    pub method: CtMethod,
    pub rate: f64,
}

fn uniformization_rate(rows: &LocalRows) -> f64 {
    rows.total.iter().copied().fold(0.0, f64::max)
}

/// One step of the uniformized chain on `n` states and the sink (index `n`).
fn step(rows: &LocalRows, lambda: f64, v: &[f64], out: &mut [f64]) {
    let n = rows.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    out[n] = v[n];
    for i in 0..n {
        let vi = v[i];
        if vi == 0.0 {
            continue;
        }
        out[i] += vi * (1.0 - rows.total[i] / lambda);
        for (j, q) in rows.row(i) {
            out[j] += vi * (q / lambda);
        }
        out[n] += vi * (rows.leak[i] / lambda);
    }
}

/// Poisson weights `w_0..w_K` for mean `a` with the tail beyond `K` bounded
/// by `tol` (or by the returned bound once `max_terms` is reached).
fn poisson_weights(a: f64, tol: f64, max_terms: usize) -> (Vec<f64>, f64) {
    let mut weights = Vec::new();
    let mut log_w = -a;
    let mut k = 0usize;
    loop {
        weights.push(log_w.exp());
        let log_next = log_w + (a / (k + 1) as f64).ln();
        let ratio = a / (k + 2) as f64;
        if ratio < 1.0 {
            let bound = log_next.exp() / (1.0 - ratio);
            if bound <= tol || weights.len() >= max_terms {
                return (weights, bound);
            }
        } else if weights.len() >= max_terms {
            return (weights, 1.0);
        }
        log_w = log_next;
        k += 1;
    }
}

fn estimated_terms(a: f64, tol: f64) -> f64 {
    a + 8.0 * a.sqrt() + 10.0 + (-tol.log10()).max(1.0) * 2.0
}

struct Plan {
    method: CtMethod,
    squarings: u32,
    work: f64,
}

fn plan(rows: &LocalRows, t: f64, tol: f64, matrix_wanted: bool) -> Plan {
    let n = rows.len() as f64;
    let nnz = rows.vals.len() as f64 + 2.0 * n;
    let lambda = uniformization_rate(rows);
    let a = lambda * t;
    if a == 0.0 {
        return Plan {
            method: CtMethod::Static,
            squarings: 0,
            work: 0.0,
        };
    }
    let per_vector = estimated_terms(a, tol) * nnz;
    let vector = if matrix_wanted { n * per_vector } else { per_vector };
    let s = a.log2().ceil().max(0.0) as u32;
    let base_terms = estimated_terms(1.0, tol) + s as f64 / 3.0;
    let squaring = (n + 1.0) * base_terms * nnz + s as f64 * 2.0 * (n + 1.0).powi(3);
    if vector <= squaring {
        Plan {
            method: CtMethod::VectorSeries,
            squarings: 0,
            work: vector,
        }
    } else {
        Plan {
            method: CtMethod::Squaring,
            squarings: s,
            work: squaring,
        }
    }
}

fn over_budget(work: f64, max_work: f64) -> Error {
    Error::SolverLimit(format!(
        "estimated work {work:.3e} exceeds the budget {max_work:.3e}"
    ))
}

/// Estimated work of [`propagate`] without running it.
pub(crate) fn estimate_work(rows: &LocalRows, t: f64, tol: f64) -> f64 {
    plan(rows, t, tol, false).work
}

/// `p0 exp(t Q_r)` on the truncation. `p0` has one entry per truncation state.
pub(crate) fn propagate(
    rows: &LocalRows,
    p0: &[f64],
    t: f64,
    tol: f64,
    max_work: f64,
) -> Result<Propagated> {
    let n = rows.len();
    let lambda = uniformization_rate(rows);
    let pl = plan(rows, t, tol, false);
    if pl.work > max_work {
        return Err(over_budget(pl.work, max_work));
    }
    match pl.method {
        CtMethod::Static => Ok(Propagated {
            p: p0.to_vec(),
            leaked: 0.0,
            tail: 0.0,
            terms: 0,
            squarings: 0,
            method: CtMethod::Static,
            rate: lambda,
        }),
        CtMethod::VectorSeries => {
            let mut v = p0.to_vec();
            v.push(0.0);
            let (acc, terms, tail_fraction) = vector_series(rows, lambda, t, tol, v);
            let m0: f64 = p0.iter().sum();
            Ok(Propagated {
                p: acc[..n].to_vec(),
                leaked: acc[n],
                tail: m0 * tail_fraction,
                terms,
                squarings: 0,
                method: CtMethod::VectorSeries,
                rate: lambda,
            })
        }
        CtMethod::Squaring => {
            let sq = squared_matrix(rows, lambda, t, tol, pl.squarings);
            let v = DVector::from_iterator(n + 1, p0.iter().copied().chain([0.0]));
            let out = sq.full.tr_mul(&v);
            let tail: f64 = p0.iter().zip(sq.tail.iter()).map(|(a, b)| a * b).sum();
            Ok(Propagated {
                p: out.as_slice()[..n].to_vec(),
                leaked: out[n],
                tail,
                terms: sq.base_terms,
                squarings: pl.squarings,
                method: CtMethod::Squaring,
                rate: lambda,
            })
        }
    }
}

/// Series `sum_k w_k v P_Λ^k` on the extended space. Returns the
/// accumulated vector, the number of terms and the tail bound as a fraction
/// of the initial mass.
fn vector_series(
    rows: &LocalRows,
    lambda: f64,
    t: f64,
    tol: f64,
    mut v: Vec<f64>,
) -> (Vec<f64>, usize, f64) {
    let (weights, tail) = poisson_weights(lambda * t, tol, usize::MAX);
    let mut acc = vec![0.0; v.len()];
    let mut next = vec![0.0; v.len()];
    for (k, &w) in weights.iter().enumerate() {
        if k > 0 {
            step(rows, lambda, &v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        if w > 0.0 {
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
    }
    (acc, weights.len(), tail)
}

struct Squared {
    /// `(n + 1) x (n + 1)` transition matrix including the sink.
    full: DMatrix<f64>,
    /// Per-row bound on the discarded series mass.
    tail: Vec<f64>,
    base_terms: usize,
}

/// `exp(t Q_r)` on the extended space via `s` squarings of the series for
/// `h = t / 2^s`.
fn squared_matrix(rows: &LocalRows, lambda: f64, t: f64, tol: f64, s: u32) -> Squared {
    let n = rows.len();
    let m = n + 1;
    let h = t / 2f64.powi(s as i32);
    let step_tol = tol / 2f64.powi(s as i32);
    let (weights, tail0) = poisson_weights(lambda * h, step_tol, 400);

    // Off-diagonal part of the base series, one row at a time.
    let base_rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut v = vec![0.0; m];
            v[x] = 1.0;
            let mut next = vec![0.0; m];
            let mut acc = vec![0.0; m];
            for (k, &w) in weights.iter().enumerate() {
                if k > 0 {
                    step(rows, lambda, &v, &mut next);
                    std::mem::swap(&mut v, &mut next);
                }
                for (a, b) in acc.iter_mut().zip(&v) {
                    *a += w * b;
                }
            }
            acc
        })
        .collect();

    let mut off = DMatrix::<f64>::zeros(m, m);
    for (x, r) in base_rows.iter().enumerate() {
        for (y, &val) in r.iter().enumerate() {
            if y != x {
                off[(x, y)] = val;
            }
        }
    }
    let mut tail = DVector::from_element(m, tail0);
    let mut ediag = diag_defect(&off, &tail);

    for _ in 0..s {
        let full = with_diagonal(&off, &ediag);
        let prod = &full * &full;
        tail = &tail + &full * &tail;
        off = prod;
        for i in 0..m {
            off[(i, i)] = 0.0;
        }
        ediag = diag_defect(&off, &tail);
    }
    Squared {
        full: with_diagonal(&off, &ediag),
        tail: tail.iter().copied().collect(),
        base_terms: weights.len(),
    }
}

/// `E(x, x) = -(sum of off-diagonal row entries) - tail(x)`, floored at -1.
fn diag_defect(off: &DMatrix<f64>, tail: &DVector<f64>) -> Vec<f64> {
    (0..off.nrows())
        .map(|i| (-(off.row(i).sum()) - tail[i]).max(-1.0))
        .collect()
}

fn with_diagonal(off: &DMatrix<f64>, ediag: &[f64]) -> DMatrix<f64> {
    let mut full = off.clone();
    for (i, e) in ediag.iter().enumerate() {
        full[(i, i)] = 1.0 + e;
    }
    full
}

/// Dense `exp(t Q_r)` restricted to the truncation, with the mass each row
/// sends to the sink and its series tail bound.
pub(crate) struct TransitionMatrix {
    pub rows: Vec<Vec<f64>>,
    pub leaked: Vec<f64>,
    pub tail: Vec<f64>,
    pub method: CtMethod,
}

pub(crate) fn transition_matrix(
    rows: &LocalRows,
    t: f64,
    tol: f64,
    max_work: f64,
) -> Result<TransitionMatrix> {
    let n = rows.len();
    let lambda = uniformization_rate(rows);
    let pl = plan(rows, t, tol, true);
    if pl.work > max_work {
        return Err(over_budget(pl.work, max_work));
    }
    match pl.method {
        CtMethod::Static => Ok(TransitionMatrix {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            leaked: vec![0.0; n],
            tail: vec![0.0; n],
            method: CtMethod::Static,
        }),
        CtMethod::VectorSeries => {
            let out: Vec<(Vec<f64>, f64, f64)> = (0..n)
                .into_par_iter()
                .map(|x| {
                    let mut v = vec![0.0; n + 1];
                    v[x] = 1.0;
                    let (acc, _, tail) = vector_series(rows, lambda, t, tol, v);
                    (acc[..n].to_vec(), acc[n], tail)
                })
                .collect();
            let mut res = TransitionMatrix {
                rows: Vec::with_capacity(n),
                leaked: Vec::with_capacity(n),
                tail: Vec::with_capacity(n),
                method: CtMethod::VectorSeries,
            };
            for (r, l, tl) in out {
                res.rows.push(r);
                res.leaked.push(l);
                res.tail.push(tl);
            }
            Ok(res)
        }
        CtMethod::Squaring => {
            let sq = squared_matrix(rows, lambda, t, tol, pl.squarings);
            Ok(TransitionMatrix {
                rows: (0..n)
                    .map(|i| (0..n).map(|j| sq.full[(i, j)]).collect())
                    .collect(),
                leaked: (0..n).map(|i| sq.full[(i, n)]).collect(),
                tail: sq.tail[..n].to_vec(),
                method: CtMethod::Squaring,
            })
        }
    }
}
