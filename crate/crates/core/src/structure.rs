//! Communicating classes, periods and hitting probabilities on a truncation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::strongly_connected_components;
use crate::minimal::{solve_minimal, MinimalSystem, SolveMethod, SolveOptions};
use crate::model::{ChainKind, ChainModel};
use crate::state::StateKey;
use crate::truncation::{LocalRows, Truncation};

/// What can be said about recurrence from a truncation alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceLabel {
    /// Finite closed class: recurrent.
    Recurrent,
    /// Undecidable at this truncation.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunicatingClass {
    /// Members in key order.
    pub states: Vec<StateKey>,
    /// Every transition of every member stays in the class, checked against
    /// the full rows (not just the truncated ones).
    pub certified_closed: bool,
    /// Period; always 1 for continuous models.
    pub period: usize,
    pub label: RecurrenceLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassDecomposition {
    /// Classes ordered by their smallest member.
    pub classes: Vec<CommunicatingClass>,
    /// States outside every certified-closed class, in key order.
    pub unclosed_states: Vec<StateKey>,
    /// Truncation states with transitions leaving the truncation.
    pub boundary: Vec<StateKey>,
}

impl ClassDecomposition {
    pub fn closed_classes(&self) -> impl Iterator<Item = &CommunicatingClass> + '_ {
        self.classes.iter().filter(|c| c.certified_closed)
    }

    pub fn class_of(&self, x: &StateKey) -> Option<&CommunicatingClass> {
        self.classes.iter().find(|c| c.states.binary_search(x).is_ok())
    }
}

/// Strongly connected components of the positive-transition graph inside
/// `trunc`, with closedness certified on the full rows and periods from
/// BFS depth differences.
pub fn classify(model: &ChainModel, trunc: &Truncation) -> Result<ClassDecomposition> {
    let n = trunc.len();
    let mut adj = vec![Vec::new(); n];
    let mut leaves = vec![false; n];
    for (i, x) in trunc.iter().enumerate() {
        for (y, _) in model.row(x)?.iter() {
            match trunc.index_of(y) {
                Some(j) => adj[i].push(j),
                None => leaves[i] = true,
            }
        }
    }

    let comps = strongly_connected_components(&adj);
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }

    let mut classes: Vec<CommunicatingClass> = comps
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let closed = members
                .iter()
                .all(|&i| !leaves[i] && adj[i].iter().all(|&j| comp_of[j] == c));
            let period = match model.kind() {
                ChainKind::Continuous => 1,
                ChainKind::Discrete => period_of(members, &adj, &comp_of, c),
            };
            let mut states: Vec<StateKey> =
                members.iter().map(|&i| trunc.state(i).clone()).collect();
            states.sort();
            CommunicatingClass {
                states,
                certified_closed: closed,
                period,
                label: if closed {
                    RecurrenceLabel::Recurrent
                } else {
                    RecurrenceLabel::Unknown
                },
            }
        })
        .collect();
    classes.sort_by(|a, b| a.states[0].cmp(&b.states[0]));

    let mut unclosed_states: Vec<StateKey> = classes
        .iter()
        .filter(|c| !c.certified_closed)
        .flat_map(|c| c.states.iter().cloned())
        .collect();
    unclosed_states.sort();
    let mut boundary: Vec<StateKey> = trunc
        .iter()
        .zip(&leaves)
        .filter(|(_, l)| **l)
        .map(|(x, _)| x.clone())
        .collect();
    boundary.sort();

    Ok(ClassDecomposition {
        classes,
        unclosed_states,
        boundary,
    })
}

/// gcd of `|depth(u) + 1 - depth(v)|` over the class's internal edges,
/// with the empty gcd taken as 1.
fn period_of(members: &[usize], adj: &[Vec<usize>], comp_of: &[usize], c: usize) -> usize {
    let mut depth: BTreeMap<usize, i64> = BTreeMap::new();
    let mut queue = VecDeque::from([members[0]]);
    depth.insert(members[0], 0);
    let mut g: u64 = 0;
    while let Some(u) = queue.pop_front() {
        let du = depth[&u];
        for &v in &adj[u] {
            if comp_of[v] != c {
                continue;
            }
            match depth.get(&v) {
                Some(&dv) => g = gcd(g, (du + 1 - dv).unsigned_abs()),
                None => {
                    depth.insert(v, du + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    if g == 0 {
        1
    } else {
        g as usize
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Hitting probabilities with their solver diagnostics.
#[derive(Clone, Debug)]
pub struct HittingReport {
    /// `P_x(reach target)` for every truncation state, lower bounds on the
    /// untruncated values.
    pub probabilities: BTreeMap<StateKey, f64>,
    pub sweeps: usize,
    pub residual: f64,
}

impl HittingReport {
    pub fn get(&self, x: &StateKey) -> f64 {
        self.probabilities.get(x).copied().unwrap_or(0.0)
    }
}

/// Minimal nonnegative solution of `h = 1` on the target and
/// `h(x) = sum_y p(x, y) h(y)` elsewhere, with states outside `trunc`
/// never hitting. Continuous models use their jump chain.
///
/// The default method is [`SolveMethod::Direct`]; pass
/// [`SolveMethod::ValueIteration`] to [`hitting_probabilities_with`] for the
/// literal monotone iteration.
pub fn hitting_probabilities(
    model: &ChainModel,
    target: &BTreeSet<StateKey>,
    trunc: &Truncation,
) -> Result<HittingReport> {
    hitting_probabilities_with(model, target, trunc, &SolveOptions::default())
}

pub fn hitting_probabilities_with(
    model: &ChainModel,
    target: &BTreeSet<StateKey>,
    trunc: &Truncation,
    opts: &SolveOptions,
) -> Result<HittingReport> {
    if let Some(a) = target.iter().find(|a| !trunc.contains(a)) {
        return Err(Error::Precondition(format!(
            "target state {a} lies outside the truncation"
        )));
    }
    let chain = model.jump_chain();
    let rows = LocalRows::build(&chain, trunc)?;
    let n = trunc.len();
    let mut sys = MinimalSystem::new(n);
    for i in 0..n {
        if target.contains(trunc.state(i)) {
            sys.add_rhs(i, 1.0);
            continue;
        }
        for (j, p) in rows.row(i) {
            if target.contains(trunc.state(j)) {
                sys.add_rhs(i, p);
            } else {
                sys.add_coupling(i, j, p);
            }
        }
    }
    let sol = solve_minimal(&sys, opts)?;
    let probabilities = trunc
        .iter()
        .zip(sol.values)
        .map(|(x, h)| (x.clone(), h.min(1.0)))
        .collect();
    Ok(HittingReport {
        probabilities,
        sweeps: sol.sweeps,
        residual: sol.residual,
    })
}

/// Value-iteration options matching the monotone construction: sup-norm
/// tolerance 1e-12 and at most 10^6 sweeps.
pub fn value_iteration_options() -> SolveOptions {
    SolveOptions {
        method: SolveMethod::ValueIteration,
        ..Default::default()
    }
}
