//! Ergodic distributions of finite closed classes and balance residuals.
//!
//! Stationarity is only asserted for finite certified-closed classes.
//! Every stationary distribution of the chain restricted to those classes
//! is a convex combination of the returned ergodic distributions.
//!
//! For continuous models `πQ = 0` alone does not make `π` stationary: the
//! chain must also be non-explosive when started from `π`. Residual
//! reports therefore carry a caveat flag, which a regularity certificate
//! from [`crate::lyapunov`] can discharge.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::exit::{exit_marginals_minimal, Domain, ExitOptions};
use crate::model::{ChainKind, ChainModel};
use crate::state::StateKey;
use crate::structure::ClassDecomposition;
use crate::truncation::{LocalRows, Truncation};

/// Classes above this size skip the dense solve.
pub const DENSE_LIMIT: usize = 2000;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    Direct,
    PowerIteration,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicClass {
    pub states: Vec<StateKey>,
    pub distribution: SparseDistribution,
    /// `‖πP - π‖₁` or `‖πQ‖₁` over the class.
    pub residual: f64,
    pub method: StationaryMethod,
    /// Notes on attempts that were abandoned, e.g. a failed dense solve.
    pub attempts: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub classes: Vec<ErgodicClass>,
    /// States not in any certified-closed class; nothing is claimed about them.
    pub uncertified_states: Vec<StateKey>,
    pub note: Option<String>,
}

/// Balance operator restricted to a closed class: `πP - π` (discrete) or
/// `πQ` (continuous) as a sparse row list with the diagonal folded in.
struct ClassGenerator {
    rows: LocalRows,
    /// Added to the diagonal of the rows: `-1` or `-q(x)`.
    diag: Vec<f64>,
}

impl ClassGenerator {
    fn build(model: &ChainModel, class: &Truncation) -> Result<Self> {
        let discrete = model.kind() == ChainKind::Discrete;
        let rows = LocalRows::build(model, class)?;
        let diag = (0..rows.len())
            .map(|i| if discrete { -1.0 } else { -rows.total[i] })
            .collect();
        Ok(Self { rows, diag })
    }

    /// `π G` over the class.
    fn apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pi.len()];
        self.rows.left_multiply(pi, &mut out);
        for (o, (p, d)) in out.iter_mut().zip(pi.iter().zip(&self.diag)) {
            *o += p * d;
        }
        out
    }

    fn residual(&self, pi: &[f64]) -> f64 {
        self.apply(pi).iter().map(|v| v.abs()).sum()
    }

    fn dense_solve(&self) -> Option<Vec<f64>> {
        let n = self.rows.len();
        // Columns of G^T are rows of G; replace equation 0 by normalization.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] += self.diag[i];
            for (j, w) in self.rows.row(i) {
                a[(j, i)] += w;
            }
        }
        for j in 0..n {
            a[(0, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs[0] = 1.0;
        let pi = a.lu().solve(&rhs)?;
        if pi.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return None;
        }
        let mut pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        Some(pi)
    }

    /// Iterate the lazy chain `I + G / (2Λ)`, which has the same fixed
    /// points and no periodic oscillation.
    fn power_iteration(&self) -> Result<Vec<f64>> {
        let n = self.rows.len();
        let scale = 2.0 * self.diag.iter().fold(0.0f64, |m, d| m.max(-d)).max(f64::MIN_POSITIVE);
        let mut pi = vec![1.0 / n as f64; n];
        let mut residual = f64::INFINITY;
        for iter in 1..=POWER_MAX_ITERS {
            let g = self.apply(&pi);
            for (p, gi) in pi.iter_mut().zip(&g) {
                *p = (*p + gi / scale).max(0.0);
            }
            let s: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= s);
            if iter % 16 == 0 {
                residual = self.residual(&pi);
                if residual <= POWER_TOL {
                    return Ok(pi);
                }
            }
        }
        Err(Error::NonConvergence {
            iterations: POWER_MAX_ITERS,
            residual,
            mass: 1.0,
        })
    }
}

fn to_distribution(states: &Truncation, pi: &[f64]) -> SparseDistribution {
    states
        .iter()
        .zip(pi)
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, &w)| (x.clone(), w))
        .collect()
}

/// Ergodic distribution of every certified-closed class in `decomposition`:
/// a dense solve of the balance equations with one equation replaced by
/// `Σπ = 1`, or power iteration for large classes and failed solves.
pub fn ergodic_distributions(model: &ChainModel, decomposition: &ClassDecomposition) -> Result<ErgodicReport> {
    let mut classes = Vec::new();
    for class in decomposition.closed_classes() {
        let states = Truncation::new(class.states.iter().cloned())?;
        let gen = ClassGenerator::build(model, &states)?;
        let mut attempts = Vec::new();
        let mut solved = None;
        if states.len() <= DENSE_LIMIT {
            match gen.dense_solve() {
                Some(pi) if gen.residual(&pi) <= 1e-10 => solved = Some((pi, StationaryMethod::Direct)),
                Some(pi) => attempts.push(format!(
                    "dense solve residual {:e} too large; fell back to power iteration",
                    gen.residual(&pi)
                )),
                None => attempts.push("dense solve was singular; fell back to power iteration".into()),
            }
        }
        let (pi, method) = match solved {
            Some(s) => s,
            None => (gen.power_iteration()?, StationaryMethod::PowerIteration),
        };
        classes.push(ErgodicClass {
            states: class.states.clone(),
            residual: gen.residual(&pi),
            distribution: to_distribution(&states, &pi),
            method,
            attempts,
        });
    }
    let note = (!decomposition.unclosed_states.is_empty()).then(|| {
        format!(
            "{} state(s) lie outside every certified-closed class; stationary mass there is not determined",
            decomposition.unclosed_states.len()
        )
    });
    Ok(ErgodicReport {
        classes,
        uncertified_states: decomposition.unclosed_states.clone(),
        note,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// `‖πQ‖₁` or `‖πP - π‖₁` over interior states of the truncation.
    pub residual: f64,
    /// Same, over every truncation state including the boundary.
    pub full_residual: f64,
    /// Interior states: their rows stay inside the truncation.
    pub interior_states: usize,
    pub boundary_states: Vec<StateKey>,
    /// Set for continuous models: a small residual does not make `π`
    /// stationary unless the chain started from `π` is non-explosive.
    pub requires_non_explosivity: bool,
}

/// Balance residual of `π` on a truncation. Never asserts stationarity.
///
/// Boundary states miss inflow from outside the truncation, so the headline
/// residual is taken over interior states only.
pub fn stationary_residual(model: &ChainModel, pi: &SparseDistribution, trunc: &Truncation) -> Result<ResidualReport> {
    let pi = pi.pruned(1e-12);
    if let Some(x) = pi.support().find(|x| !trunc.contains(x)) {
        return Err(Error::Precondition(format!(
            "distribution has mass at {x}, outside the truncation"
        )));
    }
    let gen = ClassGenerator::build(model, trunc)?;
    let v: Vec<f64> = trunc.iter().map(|x| pi.get(x)).collect();
    let g = gen.apply(&v);
    let mut residual = 0.0;
    let mut interior_states = 0;
    let mut boundary_states = Vec::new();
    for (i, gi) in g.iter().enumerate() {
        if gen.rows.leak[i] > 0.0 {
            boundary_states.push(trunc.state(i).clone());
        } else {
            residual += gi.abs();
            interior_states += 1;
        }
    }
    Ok(ResidualReport {
        residual,
        full_residual: g.iter().map(|v| v.abs()).sum(),
        interior_states,
        boundary_states,
        requires_non_explosivity: model.kind() == ChainKind::Continuous,
    })
}

/// Ergodic distribution of a finite closed class from the occupation
/// measure of one excursion from `anchor`:
/// `π(y) = E_x[time at y before returning to x] / E_x[return time]`.
pub fn ergodic_via_regeneration(model: &ChainModel, class: &[StateKey], anchor: &StateKey) -> Result<SparseDistribution> {
    let states = Truncation::new(class.iter().cloned())?;
    if !states.contains(anchor) {
        return Err(Error::Precondition(format!("anchor {anchor} is not in the class")));
    }
    for x in states.iter() {
        if let Some((y, _)) = model.row(x)?.iter().find(|(y, _)| !states.contains(y)) {
            return Err(Error::Precondition(format!(
                "class is not closed: {x} moves to {y}"
            )));
        }
    }
    let (jump, rate) = match model.kind() {
        ChainKind::Discrete => (model.row(anchor)?, 1.0),
        ChainKind::Continuous => model.jump_row(anchor)?,
    };
    // Time spent at the anchor before the first jump.
    let sojourn = match model.kind() {
        ChainKind::Discrete => 1.0,
        ChainKind::Continuous if rate > 0.0 => 1.0 / rate,
        ChainKind::Continuous => return Ok(SparseDistribution::point(anchor.clone())),
    };
    let mut occupation = SparseDistribution::point(anchor.clone()).scaled(sojourn);
    let rest: Vec<StateKey> = states.iter().filter(|x| *x != anchor).cloned().collect();
    if !rest.is_empty() {
        let after_jump: SparseDistribution = jump.iter().map(|(y, w)| (y.clone(), w)).collect();
        let domain = Domain::from_states(rest);
        let opts = ExitOptions {
            assumed_finite_exit: true,
            ..Default::default()
        };
        let stats = exit_marginals_minimal(model, &domain, &after_jump, &states, &opts)?;
        for (y, w) in stats.nu.iter() {
            occupation.add(y.clone(), w);
        }
    }
    occupation
        .normalized()
        .ok_or_else(|| Error::Precondition("empty occupation measure".into()))
}
