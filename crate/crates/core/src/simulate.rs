//! Path sampling: the inverse-CDF construction for discrete chains and the
//! Kendall–Gillespie construction for continuous ones.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::distribution::SparseDistribution;
use crate::error::Result;
use crate::model::{ChainKind, ChainModel, TransitionRow};
use crate::rng::{self, StreamRng};
use crate::state::StateKey;

/// Discrete-time path `X_0, ..., X_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathDt {
    pub states: Vec<StateKey>,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The next jump would happen after `t_max`, or the chain got absorbed.
    Horizon,
    /// `max_jumps` jumps happened by `t_max`.
    JumpBudget,
}

/// Continuous-time path: jump chain `Y_0..Y_m` and jump times `T_0 = 0 <= T_1 <= ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCt {
    pub states: Vec<StateKey>,
    pub times: Vec<f64>,
    pub t_max: f64,
    pub reason: Termination,
    /// `sum_{k <= m} 1 / λ(Y_k)`: the expected explosion time of the
    /// visited states. Finite limits signal explosion.
    pub explosion_diagnostic: f64,
    pub seed: u64,
    pub stream: u64,
}

impl PathCt {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// State occupied at time `t <= t_max`, or `None` past the last jump of
    /// a budget-terminated path.
    pub fn state_at(&self, t: f64) -> Option<&StateKey> {
        if self.reason == Termination::JumpBudget && t >= *self.times.last().unwrap() {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        Some(&self.states[k.max(1) - 1])
    }
}

/// Draws a target from `row` by the inverse-CDF rule: walk the targets in
/// key order and stop at the first index with `u <= cumulative weight`.
pub fn inverse_cdf(row: &TransitionRow, u: f64) -> &StateKey {
    let entries = row.entries();
    let mut cum = 0.0;
    for (y, w) in entries {
        cum += w;
        if u <= cum {
            return y;
        }
    }
    // Rounding left the cumulative sum a hair below u.
    &entries.last().expect("rows of valid chains are nonempty").0
}

fn draw_initial(model: &ChainModel, rng: &mut StreamRng) -> StateKey {
    let g = model.gamma();
    let u = rng::uniform(rng) * g.mass();
    let mut cum = 0.0;
    let mut last = None;
    for (x, w) in g.iter() {
        cum += w;
        last = Some(x);
        if u <= cum {
            return x.clone();
        }
    }
    last.expect("initial distributions are nonempty").clone()
}

/// Samples `n_steps` steps of a discrete chain on stream 0 of `seed`.
pub fn sample_path_dt(model: &ChainModel, n_steps: usize, seed: u64) -> Result<PathDt> {
    sample_path_dt_stream(model, n_steps, seed, 0)
}

pub fn sample_path_dt_stream(
    model: &ChainModel,
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> Result<PathDt> {
    model.require(ChainKind::Discrete, "sample_path_dt")?;
    let mut rng = rng::split(seed, stream);
    let mut x = draw_initial(model, &mut rng);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x.clone());
    for _ in 0..n_steps {
        let row = model.row(&x)?;
        x = inverse_cdf(&row, rng::uniform(&mut rng)).clone();
        states.push(x.clone());
    }
    Ok(PathDt {
        states,
        seed,
        stream,
    })
}

/// Samples a continuous chain up to `t_max` or `max_jumps` jumps on
/// stream 0 of `seed`.
pub fn sample_path_ct(
    model: &ChainModel,
    t_max: f64,
    max_jumps: usize,
    seed: u64,
) -> Result<PathCt> {
    sample_path_ct_stream(model, t_max, max_jumps, seed, 0)
}

pub fn sample_path_ct_stream(
    model: &ChainModel,
    t_max: f64,
    max_jumps: usize,
    seed: u64,
    stream: u64,
) -> Result<PathCt> {
    model.require(ChainKind::Continuous, "sample_path_ct")?;
    if !(t_max > 0.0) || max_jumps == 0 {
        return Err(crate::Error::Precondition(
            "sample_path_ct needs t_max > 0 and max_jumps >= 1".into(),
        ));
    }
    let mut rng = rng::split(seed, stream);
    let mut y = draw_initial(model, &mut rng);
    let mut states = vec![y.clone()];
    let mut times = vec![0.0];
    let mut t = 0.0;
    let mut diagnostic = 0.0;
    let reason = loop {
        let row = model.row(&y)?;
        let q = row.total();
        diagnostic += if q > 0.0 { 1.0 / q } else { 1.0 };
        if q == 0.0 {
            break Termination::Horizon;
        }
        if states.len() > max_jumps {
            break Termination::JumpBudget;
        }
        let u = rng::uniform(&mut rng);
        let s = rng::unit_exponential(&mut rng) / q;
        if t + s > t_max {
            break Termination::Horizon;
        }
        t += s;
        // Jump-chain targets are the rate row scaled by 1/q, so drawing
        // against q*u avoids rebuilding the normalized row.
        y = inverse_cdf(&row, u * q).clone();
        states.push(y.clone());
        times.push(t);
    };
    Ok(PathCt {
        states,
        times,
        t_max,
        reason,
        explosion_diagnostic: diagnostic,
        seed,
        stream,
    })
}

/// `n_paths` discrete paths; path `i` uses stream `i`.
pub fn sample_ensemble_dt(
    model: &ChainModel,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PathDt>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sample_path_dt_stream(model, n_steps, seed, i))
        .collect()
}

/// `n_paths` continuous paths; path `i` uses stream `i`.
pub fn sample_ensemble_ct(
    model: &ChainModel,
    t_max: f64,
    max_jumps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PathCt>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sample_path_ct_stream(model, t_max, max_jumps, seed, i))
        .collect()
}

/// Time-averaged occupation of a single path.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    pub distribution: SparseDistribution,
    /// `N` (number of visited times) or `T` (time horizon).
    pub horizon: f64,
}

/// `ε_N(x) = (1/N) sum_{n < N} 1_x(X_n)` with `N` the number of states on
/// the path. The mass is exactly one.
pub fn empirical_distribution_dt(path: &PathDt) -> EmpiricalDistribution {
    let mut counts: BTreeMap<StateKey, u64> = BTreeMap::new();
    for x in &path.states {
        *counts.entry(x.clone()).or_default() += 1;
    }
    let n = path.states.len() as u64;
    EmpiricalDistribution {
        distribution: SparseDistribution::from_counts(counts, n),
        horizon: n as f64,
    }
}

/// `ε_T(x) = (1/T) ∫_0^{T ∧ last} 1_x(X_t) dt` with `T = t_max`. A path cut
/// by its jump budget is only integrated up to its last jump, leaving mass
/// below one.
pub fn empirical_distribution_ct(path: &PathCt) -> EmpiricalDistribution {
    let end = match path.reason {
        Termination::Horizon => path.t_max,
        Termination::JumpBudget => path.times.last().unwrap().min(path.t_max),
    };
    let mut time_in: BTreeMap<StateKey, f64> = BTreeMap::new();
    for (k, x) in path.states.iter().enumerate() {
        let start = path.times[k];
        let stop = path.times.get(k + 1).copied().unwrap_or(end).min(end);
        if stop > start {
            *time_in.entry(x.clone()).or_default() += stop - start;
        }
    }
    let mut distribution: SparseDistribution = time_in
        .into_iter()
        .map(|(x, s)| (x, s / path.t_max))
        .collect();
    if path.reason == Termination::Horizon {
        distribution = distribution.normalized().unwrap_or(distribution);
    }
    EmpiricalDistribution {
        distribution,
        horizon: path.t_max,
    }
}
