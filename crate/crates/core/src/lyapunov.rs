//! Foster–Lyapunov drift certificates checked on truncations, and
//! hitting-time functionals as minimal nonnegative solutions.
//!
//! A drift criterion quantifies over the whole state space; here it is
//! checked only at interior states (rows inside the truncation). What
//! happens beyond is the certificate's tail claim, recorded verbatim and
//! never verified.
//!
//! Only the forward directions of the criteria are used. Whether the
//! no-transient-states requirement in the converses of the geometric and
//! exponential criteria can be dropped is open; nothing here relies on it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimal::{solve_minimal, MinimalSystem, SolveOptions};
use crate::model::{ChainKind, ChainModel};
use crate::state::StateKey;
use crate::truncation::{LocalRows, Truncation};

/// Drift criterion and its constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CriterionKind {
    /// `Pv <= v` off `F`.
    DtRecurrence,
    /// `Pv <= v - 1 + b 1_F`.
    DtFoster,
    /// `Pv <= v / θ - 1 + b 1_F`, `θ > 1`.
    DtGeometric { theta: f64 },
    /// `Qv <= c v`.
    CtRegularity { c: f64 },
    /// `Qv <= -1 + b 1_F`.
    CtPositive,
    /// `Qv <= -α v - 1 + b 1_F`, `α > 0`.
    CtExponential { alpha: f64 },
}

impl CriterionKind {
    pub fn chain_kind(&self) -> ChainKind {
        match self {
            Self::DtRecurrence | Self::DtFoster | Self::DtGeometric { .. } => ChainKind::Discrete,
            _ => ChainKind::Continuous,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::DtGeometric { theta } if !(theta > 1.0 && theta.is_finite()) => {
                Err(Error::Precondition(format!("geometric criterion needs θ > 1, got {theta}")))
            }
            Self::CtExponential { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::Precondition(format!("exponential criterion needs α > 0, got {alpha}")))
            }
            Self::CtRegularity { c } if !c.is_finite() => {
                Err(Error::Precondition(format!("regularity constant {c} must be finite")))
            }
            _ => Ok(()),
        }
    }

    /// Right-hand side of the inequality at a state with test value `v`,
    /// or `None` where the criterion imposes nothing.
    fn rhs(&self, v: f64, in_f: bool, b: f64) -> Option<f64> {
        let bf = if in_f { b } else { 0.0 };
        match *self {
            Self::DtRecurrence => (!in_f).then_some(v),
            Self::DtFoster => Some(v - 1.0 + bf),
            Self::DtGeometric { theta } => Some(v / theta - 1.0 + bf),
            Self::CtRegularity { c } => Some(c * v),
            Self::CtPositive => Some(-1.0 + bf),
            Self::CtExponential { alpha } => Some(-alpha * v - 1.0 + bf),
        }
    }
}

/// A nonnegative test function on states.
#[derive(Clone)]
pub struct TestFunction {
    f: Arc<dyn Fn(&StateKey) -> f64 + Send + Sync>,
    description: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.description)
    }
}

impl TestFunction {
    pub fn new(description: impl Into<String>, f: impl Fn(&StateKey) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            description: description.into(),
        }
    }

    /// `sum_m c_m prod_i x_i^{e_{m,i}}`; missing exponents are zero.
    pub fn polynomial(terms: Vec<(f64, Vec<u32>)>) -> Self {
        let description = format!("polynomial {terms:?}");
        Self::new(description, move |x| {
            terms
                .iter()
                .map(|(c, exps)| {
                    c * exps
                        .iter()
                        .zip(x.coords())
                        .map(|(&e, &xi)| (xi as f64).powi(e as i32))
                        .product::<f64>()
                })
                .sum()
        })
    }

    /// `base^{‖x‖₁}`.
    pub fn exponential(base: f64) -> Self {
        Self::new(format!("exponential base {base}"), move |x| base.powf(x.l1_norm() as f64))
    }

    pub fn eval(&self, x: &StateKey) -> f64 {
        (self.f)(x)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub kind: CriterionKind,
    pub v: TestFunction,
    /// Finite exceptional set `F`.
    pub f_set: BTreeSet<StateKey>,
    pub b: f64,
    /// Human claim about states beyond the truncation; not checked.
    pub tail_claim: String,
}

/// JSON form of a certificate with a built-in test function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub criterion: CriterionKind,
    pub v: TestFunctionSpec,
    #[serde(rename = "F", default)]
    pub f_set: Vec<StateKey>,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub tail_claim: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TestFunctionSpec {
    /// Monomials `[coefficient, [exponent per coordinate]]`.
    Polynomial(Vec<(f64, Vec<u32>)>),
    Exponential { base: f64 },
}

impl CertificateSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Certificate {
        let v = match &self.v {
            TestFunctionSpec::Polynomial(terms) => TestFunction::polynomial(terms.clone()),
            TestFunctionSpec::Exponential { base } => TestFunction::exponential(*base),
        };
        Certificate {
            kind: self.criterion,
            v,
            f_set: self.f_set.iter().cloned().collect(),
            b: self.b,
            tail_claim: self.tail_claim.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnTruncation,
    Violated,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub verdict: Verdict,
    /// States where `rhs - lhs` is negative, with that slack.
    pub violations: Vec<(StateKey, f64)>,
    /// Smallest slack over checked states (`+∞` if none were checked).
    pub worst_slack: f64,
    pub checked_states: usize,
    /// States whose rows leave the truncation; not checked.
    pub unchecked: Vec<StateKey>,
    pub tail_claim: String,
}

fn value(v: &TestFunction, x: &StateKey) -> Result<f64> {
    let value = v.eval(x);
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidTestFunction { state: x.clone(), value })
    }
}

/// Pointwise check of the criterion at every interior state.
pub fn check_certificate(model: &ChainModel, cert: &Certificate, trunc: &Truncation) -> Result<CertificateReport> {
    cert.kind.validate()?;
    let want = cert.kind.chain_kind();
    if model.kind() != want {
        return Err(Error::Precondition(format!(
            "criterion is for {want} chains but the model is {}",
            model.kind()
        )));
    }
    if let Some(x) = cert.f_set.iter().find(|x| !trunc.contains(x)) {
        return Err(Error::Precondition(format!("F contains {x}, outside the truncation")));
    }
    let mut violations = Vec::new();
    let mut unchecked = Vec::new();
    let mut worst_slack = f64::INFINITY;
    let mut checked_states = 0;
    for x in trunc.iter() {
        let row = model.row(x)?;
        if row.iter().any(|(y, _)| !trunc.contains(y)) {
            unchecked.push(x.clone());
            continue;
        }
        let vx = value(&cert.v, x)?;
        let Some(rhs) = cert.kind.rhs(vx, cert.f_set.contains(x), cert.b) else {
            continue;
        };
        let mut pv = 0.0;
        for (y, w) in row.iter() {
            pv += w * value(&cert.v, y)?;
        }
        let lhs = match want {
            ChainKind::Discrete => pv,
            ChainKind::Continuous => pv - row.total() * vx,
        };
        let slack = rhs - lhs;
        checked_states += 1;
        worst_slack = worst_slack.min(slack);
        if slack < -1e-12 * (1.0 + lhs.abs() + rhs.abs()) {
            violations.push((x.clone(), slack));
        }
    }
    Ok(CertificateReport {
        verdict: if violations.is_empty() {
            Verdict::HoldsOnTruncation
        } else {
            Verdict::Violated
        },
        violations,
        worst_slack,
        checked_states,
        unchecked,
        tail_claim: cert.tail_claim.clone(),
    })
}

/// Value assigned to states outside the truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutsideValue {
    /// Unknown, so unbounded: every state that can leave the truncation
    /// before hitting `F` is reported unbounded.
    #[default]
    Infinite,
    /// Zero, giving lower bounds.
    Zero,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HittingOptions {
    pub solve: SolveOptions,
    pub outside: OutsideValue,
}

#[derive(Clone, Debug)]
pub struct HittingFunctional {
    /// `+∞` at unbounded states.
    pub values: BTreeMap<StateKey, f64>,
    /// States unbounded at this truncation.
    pub unbounded: Vec<StateKey>,
    pub sweeps: usize,
    pub residual: f64,
}

impl HittingFunctional {
    pub fn get(&self, x: &StateKey) -> Option<f64> {
        self.values.get(x).copied()
    }
}

/// Minimal nonnegative solution of
///
/// ```text
/// discrete:    u(x) = θ (1 + sum_{z ∉ F} p(x, z) u(z)),            x ∉ F
/// continuous:  u(x) = (1 + sum_{z ∉ F, z ≠ x} q(x, z) u(z)) / (q(x) - α)
/// ```
///
/// with `u = 0` on `F`. With `θ = 1` or `α = 0` this is the mean hitting
/// time of `F`; for `θ > 1` it is `θ/(θ-1) (E_x[θ^{φ_F}] - 1)`.
pub fn minimal_hitting_functional(
    model: &ChainModel,
    f_set: &BTreeSet<StateKey>,
    weight: f64,
    trunc: &Truncation,
    opts: &HittingOptions,
) -> Result<HittingFunctional> {
    let discrete = model.is_discrete();
    if discrete && !(weight >= 1.0 && weight.is_finite()) {
        return Err(Error::Precondition(format!("θ must be at least 1, got {weight}")));
    }
    if !discrete && !(weight >= 0.0 && weight.is_finite()) {
        return Err(Error::Precondition(format!("α must be nonnegative, got {weight}")));
    }
    let rows = LocalRows::build(model, trunc)?;
    let n = trunc.len();
    let in_f: Vec<bool> = trunc.iter().map(|x| f_set.contains(x)).collect();
    // Rows leaving the truncation to states outside F.
    let mut escapes = vec![false; n];
    for (i, x) in trunc.iter().enumerate() {
        if !in_f[i] && rows.leak[i] > 0.0 {
            escapes[i] = model.row(x)?.iter().any(|(y, _)| !trunc.contains(y) && !f_set.contains(y));
        }
    }
    let mut sys = MinimalSystem::new(n);
    for i in 0..n {
        if in_f[i] {
            continue;
        }
        if discrete {
            sys.add_rhs(i, weight);
            for (j, p) in rows.row(i) {
                if !in_f[j] {
                    sys.add_coupling(i, j, weight * p);
                }
            }
        } else {
            let q = rows.total[i];
            if weight > 0.0 && weight >= q {
                return Err(Error::Precondition(format!(
                    "α = {weight} is not below the exit rate {q} of {}",
                    trunc.state(i)
                )));
            }
            sys.set_diag(i, q - weight);
            sys.add_rhs(i, 1.0);
            for (j, r) in rows.row(i) {
                if !in_f[j] {
                    sys.add_coupling(i, j, r);
                }
            }
        }
        if escapes[i] && opts.outside == OutsideValue::Infinite {
            sys.set_diag(i, 0.0);
        }
    }
    let sol = solve_minimal(&sys, &opts.solve)?;
    let values: BTreeMap<StateKey, f64> = trunc.iter().cloned().zip(sol.values.iter().copied()).collect();
    let unbounded = sol.diverged().map(|i| trunc.state(i).clone()).collect();
    Ok(HittingFunctional {
        values,
        unbounded,
        sweeps: sol.sweeps,
        residual: sol.residual,
    })
}
