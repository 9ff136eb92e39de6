//! Exit times from a domain `D`: where the chain is when it first leaves
//! (`μ`), how long it spends in each state beforehand (`ν`), and their
//! joint laws with the exit time.
//!
//! All truncated quantities are lower bounds. Paths that leave the
//! truncation while still inside `D` are dropped; exits to states outside
//! the truncation are kept.
//!
//! The minimal-solution characterisation assumes the exit happens almost
//! surely. That is not verified here; [`ExitStatistics::assumed_finite_exit`]
//! records whether the caller asserted it.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::minimal::{solve_minimal, MinimalSystem, SolveOptions};
use crate::model::{ChainKind, ChainModel};
use crate::state::StateKey;
use crate::transient::CtOptions;
use crate::truncation::{LocalRows, Truncation};
use crate::uniformization;

type Predicate = Arc<dyn Fn(&StateKey) -> bool + Send + Sync>;

#[derive(Clone)]
enum Membership {
    States(BTreeSet<StateKey>),
    Predicate(Predicate),
}

/// A set of states with decidable membership.
#[derive(Clone)]
pub struct Domain {
    membership: Membership,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.membership {
            Membership::States(s) => f.debug_tuple("Domain").field(s).finish(),
            Membership::Predicate(_) => f.write_str("Domain(<predicate>)"),
        }
    }
}

impl Domain {
    pub fn from_states(states: impl IntoIterator<Item = StateKey>) -> Self {
        Self {
            membership: Membership::States(states.into_iter().collect()),
        }
    }

    pub fn from_predicate(f: impl Fn(&StateKey) -> bool + Send + Sync + 'static) -> Self {
        Self {
            membership: Membership::Predicate(Arc::new(f)),
        }
    }

    /// Scalar states `lo..=hi`.
    pub fn range(lo: i64, hi: i64) -> Self {
        Self::from_states((lo..=hi).map(StateKey::scalar))
    }

    pub fn contains(&self, x: &StateKey) -> bool {
        match &self.membership {
            Membership::States(s) => s.contains(x),
            Membership::Predicate(f) => f(x),
        }
    }

    /// The explicit state set, for domains built from one.
    pub fn states(&self) -> Option<&BTreeSet<StateKey>> {
        match &self.membership {
            Membership::States(s) => Some(s),
            Membership::Predicate(_) => None,
        }
    }

    /// `D ∩ trunc`, in truncation order.
    pub fn within(&self, trunc: &Truncation) -> Vec<StateKey> {
        trunc.iter().filter(|x| self.contains(x)).cloned().collect()
    }
}

/// JSON form of a domain: `{"states": [...]}` or `{"range": [lo, hi]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    States(Vec<StateKey>),
    Range([i64; 2]),
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Domain {
        match self {
            DomainSpec::States(s) => Domain::from_states(s.iter().cloned()),
            DomainSpec::Range([lo, hi]) => Domain::range(*lo, *hi),
        }
    }
}

/// Exit distribution, occupation measure and, where computed, their joint
/// laws with the exit time.
#[derive(Clone, Debug)]
pub struct ExitStatistics {
    /// Time points of the joint tables: steps `0..=n_f` in discrete time,
    /// bin right edges (with a leading `0`) in continuous time.
    pub times: Vec<f64>,
    /// `μ(n, ·)`; in continuous time entry `k > 0` is the exit mass in bin
    /// `(times[k-1], times[k]]` and entry `0` the atom at time zero.
    pub mu_joint: Vec<SparseDistribution>,
    /// `ν(n, ·)`; in continuous time the sub-law inside `D` at `times[k]`.
    pub nu_joint: Vec<SparseDistribution>,
    /// Exit distribution `μ_S`, supported off `D`.
    pub mu: SparseDistribution,
    /// Occupation measure `ν_S`, supported in `D`.
    pub nu: SparseDistribution,
    /// `μ_S` mass.
    pub exit_probability: f64,
    /// `ν_S` mass.
    pub mean_exit_time: f64,
    /// `1 - μ_S` mass: bounds the ℓ¹ error of `μ_S` since the true exit
    /// distribution dominates it and has mass at most one.
    pub error_bound: f64,
    /// Mass still in `D ∩ trunc` at the horizon.
    pub still_inside: f64,
    /// Mass that left the truncation before exiting `D`.
    pub leaked: f64,
    pub assumed_finite_exit: bool,
    /// `ν_S` was integrated by the trapezoid rule over the bin edges rather
    /// than summed exactly.
    pub nu_is_quadrature: bool,
}

impl ExitStatistics {
    /// Exit-time density per bin (`bin mass / bin width`), continuous time only.
    pub fn time_density(&self) -> Vec<(f64, f64, f64)> {
        self.times
            .windows(2)
            .zip(self.mu_joint.iter().skip(1))
            .map(|(w, m)| (w[0], w[1], m.mass() / (w[1] - w[0])))
            .collect()
    }

    /// `P(τ <= times[k])` along the time points.
    pub fn exit_cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.mu_joint
            .iter()
            .map(|m| {
                acc += m.mass();
                acc
            })
            .collect()
    }
}

/// Truncation plus the exit targets of its `D` states, with the rows of
/// every state off `D` emptied so it absorbs.
struct Absorbed {
    states: Truncation,
    in_domain: Vec<bool>,
    rows: LocalRows,
}

impl Absorbed {
    fn build(model: &ChainModel, domain: &Domain, trunc: &Truncation) -> Result<Self> {
        let inside = domain.within(trunc);
        if inside.is_empty() {
            return Err(Error::Precondition(
                "the truncation does not meet the domain".into(),
            ));
        }
        let mut all: Vec<StateKey> = trunc.states().to_vec();
        for x in &inside {
            for (y, _) in model.row(x)?.iter() {
                if !domain.contains(y) && !trunc.contains(y) {
                    all.push(y.clone());
                }
            }
        }
        let states = Truncation::new(all)?;
        let in_domain: Vec<bool> = states.iter().map(|x| domain.contains(x)).collect();
        let rows = LocalRows::build_with(&states, |x| {
            if domain.contains(x) {
                let row = model.row(x)?;
                Ok((row.entries().to_vec(), row.total()))
            } else {
                Ok((Vec::new(), 0.0))
            }
        })?;
        Ok(Self {
            states,
            in_domain,
            rows,
        })
    }

    fn initial(&self, gamma: &SparseDistribution) -> (Vec<f64>, f64) {
        let mut p = vec![0.0; self.states.len()];
        let mut outside = 0.0;
        for (x, w) in gamma.iter() {
            match self.states.index_of(x) {
                Some(i) => p[i] += w,
                None => outside += w,
            }
        }
        (p, outside)
    }

    fn split(&self, p: &[f64]) -> (SparseDistribution, SparseDistribution) {
        let mut mu = SparseDistribution::new();
        let mut nu = SparseDistribution::new();
        for (i, &w) in p.iter().enumerate() {
            if w > 0.0 {
                let x = self.states.state(i).clone();
                if self.in_domain[i] {
                    nu.add(x, w);
                } else {
                    mu.add(x, w);
                }
            }
        }
        (mu, nu)
    }
}

/// Joint exit law over `n_f` steps: `μ(n, x) = P(X_n = x, τ = n)` and
/// `ν(n, x) = P(X_n = x, n < τ)`, from the chain with `D^c` made
/// absorbing and restricted to the truncation.
pub fn exit_joint_dt(model: &ChainModel, domain: &Domain, n_f: usize, trunc: &Truncation) -> Result<ExitStatistics> {
    model.require(ChainKind::Discrete, "exit_joint_dt")?;
    let work = Absorbed::build(model, domain, trunc)?;
    let (mut p, _) = work.initial(model.gamma());
    // Initial mass off D exits at time zero; keep only the D part moving.
    let (mu0, nu0) = work.split(&p);
    for (i, w) in p.iter_mut().enumerate() {
        if !work.in_domain[i] {
            *w = 0.0;
        }
    }
    let mut mu_joint = vec![mu0];
    let mut nu_joint = vec![nu0];
    let mut next = vec![0.0; p.len()];
    let mut leaked = 0.0;
    for _ in 0..n_f {
        leaked += work.rows.left_multiply(&p, &mut next);
        let (mu_n, nu_n) = work.split(&next);
        mu_joint.push(mu_n);
        nu_joint.push(nu_n);
        for (i, w) in next.iter_mut().enumerate() {
            if !work.in_domain[i] {
                *w = 0.0;
            }
        }
        std::mem::swap(&mut p, &mut next);
    }
    let still_inside = nu_joint.last().map_or(0.0, |d| d.mass());
    let times = (0..=n_f).map(|n| n as f64).collect();
    Ok(finish(times, mu_joint, nu_joint, still_inside, leaked, false, false))
}

fn sum_all(ds: &[SparseDistribution]) -> SparseDistribution {
    let mut out = SparseDistribution::new();
    for d in ds {
        for (x, w) in d.iter() {
            out.add(x.clone(), w);
        }
    }
    out
}

fn finish(
    times: Vec<f64>,
    mu_joint: Vec<SparseDistribution>,
    nu_joint: Vec<SparseDistribution>,
    still_inside: f64,
    leaked: f64,
    nu_is_quadrature: bool,
    assumed_finite_exit: bool,
) -> ExitStatistics {
    let mu = sum_all(&mu_joint);
    let nu = if nu_is_quadrature {
        let mut out = SparseDistribution::new();
        for k in 1..times.len() {
            let h = times[k] - times[k - 1];
            for (x, w) in nu_joint[k - 1].iter().chain(nu_joint[k].iter()) {
                out.add(x.clone(), 0.5 * h * w);
            }
        }
        out
    } else {
        sum_all(&nu_joint)
    };
    ExitStatistics {
        exit_probability: mu.mass(),
        mean_exit_time: nu.mass(),
        error_bound: (1.0 - mu.mass()).clamp(0.0, 1.0),
        times,
        mu_joint,
        nu_joint,
        mu,
        nu,
        still_inside,
        leaked,
        assumed_finite_exit,
        nu_is_quadrature,
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExitOptions {
    pub solve: SolveOptions,
    /// Caller asserts `P(τ < ∞) = 1`; recorded in the output.
    pub assumed_finite_exit: bool,
}

/// Space marginals `μ_S`, `ν_S` as the minimal nonnegative solution of
///
/// ```text
/// discrete:    ν(x) = γ(x) + sum_{z ∈ D} ν(z) p(z, x),            x ∈ D
///              μ(x) = γ(x) + sum_{z ∈ D} ν(z) p(z, x),            x ∉ D
/// continuous:  q(x) ν(x) = γ(x) + sum_{z ∈ D, z ≠ x} ν(z) q(z, x), x ∈ D
///              μ(x) = γ(x) + sum_{z ∈ D} ν(z) q(z, x),            x ∉ D
/// ```
///
/// over `D ∩ trunc`. Infinite occupation (an infinite mean exit time)
/// is reported as [`Error::NonConvergence`] with the occupation mass.
pub fn exit_marginals_minimal(
    model: &ChainModel,
    domain: &Domain,
    gamma: &SparseDistribution,
    trunc: &Truncation,
    opts: &ExitOptions,
) -> Result<ExitStatistics> {
    let inside = Truncation::new(domain.within(trunc)).map_err(|_| {
        Error::Precondition("the truncation does not meet the domain".into())
    })?;
    let continuous = model.kind() == ChainKind::Continuous;
    let n = inside.len();
    let mut sys = MinimalSystem::new(n);
    let mut rows = Vec::with_capacity(n);
    for (i, x) in inside.iter().enumerate() {
        sys.add_rhs(i, gamma.get(x));
        let row = model.row(x)?;
        if continuous {
            sys.set_diag(i, row.total());
        }
        rows.push(row);
    }
    for (i, row) in rows.iter().enumerate() {
        for (y, w) in row.iter() {
            if let Some(j) = inside.index_of(y) {
                sys.add_coupling(j, i, w);
            }
        }
    }
    let sol = solve_minimal(&sys, &opts.solve)?;
    if sol.diverged().next().is_some() {
        return Err(Error::NonConvergence {
            iterations: sol.sweeps,
            residual: sol.residual,
            mass: f64::INFINITY,
        });
    }
    let mut mu: SparseDistribution = gamma.restrict(|x| !domain.contains(x));
    let mut nu = SparseDistribution::new();
    for ((x, row), &v) in inside.iter().zip(&rows).zip(&sol.values) {
        if v > 0.0 {
            nu.add(x.clone(), v);
            for (y, w) in row.iter() {
                if !domain.contains(y) {
                    mu.add(y.clone(), v * w);
                }
            }
        }
    }
    let mu_joint = Vec::new();
    let nu_joint = Vec::new();
    let mut out = finish(Vec::new(), mu_joint, nu_joint, 0.0, 0.0, false, opts.assumed_finite_exit);
    out.exit_probability = mu.mass();
    out.mean_exit_time = nu.mass();
    out.error_bound = (1.0 - mu.mass()).clamp(0.0, 1.0);
    out.mu = mu;
    out.nu = nu;
    Ok(out)
}

/// Continuous-time joint exit law on `bins` equal bins over `[0, t_f]`,
/// propagating the chain with `D^c` absorbing by uniformization. Bin
/// masses are increments of the absorbed mass; the atom at time zero is
/// `γ(D^c)`. Each bin uses `series_tol / bins`.
pub fn exit_density_ct(
    model: &ChainModel,
    domain: &Domain,
    t_f: f64,
    bins: usize,
    trunc: &Truncation,
    series_tol: f64,
) -> Result<ExitStatistics> {
    model.require(ChainKind::Continuous, "exit_density_ct")?;
    if !(t_f > 0.0 && t_f.is_finite()) || bins == 0 {
        return Err(Error::Precondition(format!(
            "need a positive horizon and at least one bin (got t_f = {t_f}, bins = {bins})"
        )));
    }
    let opts = CtOptions::with_series_tol(series_tol);
    if !(series_tol > 0.0 && series_tol <= 1e-6) {
        return Err(Error::Precondition(format!("series_tol {series_tol} is not in (0, 1e-6]")));
    }
    let work = Absorbed::build(model, domain, trunc)?;
    let (mut p, _) = work.initial(model.gamma());
    let (mu0, nu0) = work.split(&p);
    let mut absorbed = mu0.clone();
    let mut mu_joint = vec![mu0];
    let mut nu_joint = vec![nu0];
    let mut times = vec![0.0];
    let h = t_f / bins as f64;
    let mut leaked = 0.0;
    for k in 1..=bins {
        let out = uniformization::propagate(&work.rows, &p, h, opts.series_tol / bins as f64, opts.max_work)?;
        leaked += out.leaked;
        p = out.p;
        let (mu_now, nu_now) = work.split(&p);
        let mut inc = SparseDistribution::new();
        for (x, w) in mu_now.iter() {
            let d = w - absorbed.get(x);
            if d > 0.0 {
                inc.add(x.clone(), d);
            }
        }
        absorbed = mu_now;
        mu_joint.push(inc);
        nu_joint.push(nu_now);
        times.push(if k == bins { t_f } else { k as f64 * h });
    }
    let still_inside = nu_joint.last().map_or(0.0, |d| d.mass());
    Ok(finish(times, mu_joint, nu_joint, still_inside, leaked, true, false))
}

/// Closed-form gambler's ruin odds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GamblerOdds {
    /// Probability of reaching `K` before `0`.
    pub success: f64,
    pub ruin: f64,
}

/// Success probability `E[X_0] / K` for a fair game, otherwise
/// `(1 - E[α^{X_0}]) / (1 - α^K)` with `α = (1 - a) / a`.
pub fn gambler_oracle(a: f64, k: i64, gamma: &SparseDistribution) -> Result<GamblerOdds> {
    if !(a > 0.0 && a < 1.0) || k < 2 {
        return Err(Error::Precondition(format!(
            "need a in (0, 1) and K >= 2 (got a = {a}, K = {k})"
        )));
    }
    if let Some(x) = gamma.support().find(|x| x.dim() != 1 || !(1..k).contains(&x.first())) {
        return Err(Error::Precondition(format!(
            "initial state {x} is not in 1..{}",
            k - 1
        )));
    }
    let success = if a == 0.5 {
        gamma.iter().map(|(x, w)| w * x.first() as f64).sum::<f64>() / k as f64
    } else {
        let alpha = (1.0 - a) / a;
        let moment: f64 = gamma.iter().map(|(x, w)| w * alpha.powi(x.first() as i32)).sum();
        (1.0 - moment) / (1.0 - alpha.powi(k as i32))
    };
    Ok(GamblerOdds {
        success,
        ruin: 1.0 - success,
    })
}
