//! Chain models as lazy sparse row oracles.
//!
//! A [`ChainModel`] answers "what is row `x`?" on demand. Discrete models
//! return one-step probabilities `p(x, ·)`; continuous models return the
//! off-diagonal rates `q(x, ·)` only, so the diagonal `-q(x)` is always the
//! negated row total and conservativity cannot be violated.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::state::StateKey;

/// Tolerance used to validate probability rows and initial distributions.
pub const ROW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Discrete,
    Continuous,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainKind::Discrete => "discrete",
            ChainKind::Continuous => "continuous",
        })
    }
}

type Entries = SmallVec<[(StateKey, f64); 4]>;

/// Validated sparse row: distinct targets in ascending key order, strictly
/// positive finite weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRow {
    entries: Entries,
    total: f64,
}

impl TransitionRow {
    /// Validates raw row entries for state `x`.
    ///
    /// Zero weights are dropped. Discrete rows must sum to one within
    /// [`ROW_TOL`]; continuous rows must not mention `x` itself.
    pub fn new(
        x: &StateKey,
        kind: ChainKind,
        raw: impl IntoIterator<Item = (StateKey, f64)>,
    ) -> Result<Self> {
        let bad = |reason: String| Error::InvalidRow {
            state: x.clone(),
            reason,
        };
        let mut entries: Entries = SmallVec::new();
        for (y, w) in raw {
            if !w.is_finite() || w < 0.0 {
                return Err(bad(format!("weight {w} towards {y} is not finite and nonnegative")));
            }
            if y.dim() != x.dim() {
                return Err(bad(format!("target {y} has a different dimension")));
            }
            if kind == ChainKind::Continuous && &y == x {
                return Err(bad("rate rows must not contain a diagonal entry".into()));
            }
            if w > 0.0 {
                entries.push((y, w));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(pair) = entries.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(bad(format!("duplicate target {}", pair[0].0)));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        match kind {
            ChainKind::Discrete if (total - 1.0).abs() > ROW_TOL => {
                Err(bad(format!("row mass {total} differs from 1")))
            }
            ChainKind::Continuous if !total.is_finite() => {
                Err(bad("total rate is not finite".into()))
            }
            _ => Ok(Self { entries, total }),
        }
    }

    pub fn entries(&self) -> &[(StateKey, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> + '_ {
        self.entries.iter().map(|(k, w)| (k, *w))
    }

    /// Sum of weights: 1 for probability rows, `q(x)` for rate rows.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, y: &StateKey) -> f64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(y))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Nonnegative rate function of a one-dimensional state.
#[derive(Clone, Debug, PartialEq)]
pub enum RateFn {
    /// `table[x]`, zero beyond the end of the table.
    Table(Vec<f64>),
    /// `c[0] + c[1] x + c[2] x^2 + ...`
    Polynomial(Vec<f64>),
}

impl RateFn {
    pub fn eval(&self, x: i64) -> f64 {
        match self {
            RateFn::Table(t) => usize::try_from(x)
                .ok()
                .and_then(|i| t.get(i).copied())
                .unwrap_or(0.0),
            RateFn::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x as f64 + ci),
        }
    }
}

/// Caller-supplied raw row oracle. Its rows are validated like any other.
pub type CustomRows = Arc<dyn Fn(&StateKey) -> Result<Vec<(StateKey, f64)>> + Send + Sync>;

/// The built-in model families.
#[derive(Clone)]
pub enum Family {
    /// Explicit one-step matrix on the listed states.
    ExplicitDt(BTreeMap<StateKey, TransitionRow>),
    /// Explicit off-diagonal rates on the listed states.
    ExplicitCt(BTreeMap<StateKey, TransitionRow>),
    /// Gambler's ruin on `{0..k}`: up with probability `a`, down with `1 - a`,
    /// absorbed at `0` and `k`.
    Gambler { a: f64, k: i64 },
    /// Continuous birth-death chain on the nonnegative integers.
    BirthDeath { birth: RateFn, death: RateFn },
    /// Continuous pure-birth chain with `q(x, x+1) = base^x`.
    PureBirthGeometric { base: f64 },
    /// Continuous chain with `q(x, x-1) = 4^x / 2` for `x > 0` and
    /// `q(x, x+1) = 4^x`. Has a formal invariant measure but explodes.
    Miller,
    /// Continuous two-state chain `0 -> 1` at rate `a`, `1 -> 0` at rate `b`.
    TwoState { a: f64, b: f64 },
    /// Jump chain of a continuous model.
    JumpChain(Arc<ChainModel>),
    Custom { kind: ChainKind, rows: CustomRows },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::ExplicitDt(rows) => write!(f, "ExplicitDt({} rows)", rows.len()),
            Family::ExplicitCt(rows) => write!(f, "ExplicitCt({} rows)", rows.len()),
            Family::Gambler { a, k } => write!(f, "Gambler {{ a: {a}, k: {k} }}"),
            Family::BirthDeath { birth, death } => {
                write!(f, "BirthDeath {{ birth: {birth:?}, death: {death:?} }}")
            }
            Family::PureBirthGeometric { base } => write!(f, "PureBirthGeometric {{ base: {base} }}"),
            Family::Miller => write!(f, "Miller"),
            Family::TwoState { a, b } => write!(f, "TwoState {{ a: {a}, b: {b} }}"),
            Family::JumpChain(m) => write!(f, "JumpChain({:?})", m.family),
            Family::Custom { kind, .. } => write!(f, "Custom({kind})"),
        }
    }
}

impl Family {
    pub fn kind(&self) -> ChainKind {
        match self {
            Family::ExplicitDt(_) | Family::Gambler { .. } | Family::JumpChain(_) => {
                ChainKind::Discrete
            }
            Family::Custom { kind, .. } => *kind,
            _ => ChainKind::Continuous,
        }
    }

    fn validate_params(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidModel(m));
        match self {
            Family::Gambler { a, k } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return invalid(format!("gambler success probability {a} is not in (0, 1)"));
                }
                if *k < 2 {
                    return invalid(format!("gambler target {k} must be at least 2"));
                }
            }
            Family::BirthDeath { birth, death } => {
                for (name, f) in [("birth", birth), ("death", death)] {
                    let coeffs = match f {
                        RateFn::Table(t) | RateFn::Polynomial(t) => t,
                    };
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        return invalid(format!("{name} coefficients must be finite"));
                    }
                    if let RateFn::Table(t) = f {
                        if t.iter().any(|&c| c < 0.0) {
                            return invalid(format!("{name} rates must be nonnegative"));
                        }
                    }
                }
            }
            Family::PureBirthGeometric { base } => {
                if !(base.is_finite() && *base > 0.0) {
                    return invalid(format!("pure-birth base {base} must be positive"));
                }
            }
            Family::TwoState { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && *b >= 0.0) {
                    return invalid(format!("two-state rates ({a}, {b}) must be nonnegative"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn raw_row(&self, x: &StateKey) -> Result<Vec<(StateKey, f64)>> {
        let unknown = || Error::UnknownState(x.clone());
        let scalar = || -> Result<i64> {
            if x.dim() == 1 {
                Ok(x.first())
            } else {
                Err(unknown())
            }
        };
        let s = StateKey::scalar;
        Ok(match self {
            Family::ExplicitDt(rows) | Family::ExplicitCt(rows) => {
                let row = rows.get(x).ok_or_else(unknown)?;
                return Ok(row.entries().to_vec());
            }
            Family::Gambler { a, k } => {
                let x = scalar()?;
                if x < 0 || x > *k {
                    return Err(unknown());
                }
                if x == 0 || x == *k {
                    vec![(s(x), 1.0)]
                } else {
                    vec![(s(x - 1), 1.0 - a), (s(x + 1), *a)]
                }
            }
            Family::BirthDeath { birth, death } => {
                let x = scalar()?;
                if x < 0 {
                    return Err(unknown());
                }
                let up = birth.eval(x);
                let down = if x > 0 { death.eval(x) } else { 0.0 };
                let mut row = Vec::with_capacity(2);
                if x > 0 {
                    row.push((s(x - 1), down));
                }
                row.push((s(x + 1), up));
                row
            }
            Family::PureBirthGeometric { base } => {
                let x = scalar()?;
                if x < 0 {
                    return Err(unknown());
                }
                vec![(s(x + 1), base.powi(x as i32))]
            }
            Family::Miller => {
                let x = scalar()?;
                if x < 0 {
                    return Err(unknown());
                }
                let r = 4f64.powi(x as i32);
                let mut row = Vec::with_capacity(2);
                if x > 0 {
                    row.push((s(x - 1), r / 2.0));
                }
                row.push((s(x + 1), r));
                row
            }
            Family::TwoState { a, b } => match scalar()? {
                0 => vec![(s(1), *a)],
                1 => vec![(s(0), *b)],
                _ => return Err(unknown()),
            },
            Family::JumpChain(inner) => {
                let (row, _) = inner.jump_row(x)?;
                return Ok(row.entries().to_vec());
            }
            Family::Custom { rows, .. } => rows(x)?,
        })
    }
}

/// A countable-state chain: row oracle plus initial distribution.
///
/// Cheap to clone and safe to share across threads.
#[derive(Clone, Debug)]
pub struct ChainModel {
    family: Arc<Family>,
    gamma: SparseDistribution,
    name: Option<String>,
}

impl ChainModel {
    /// Builds a model, validating family parameters, the mass of `gamma` and
    /// the rows of every state in its support.
    pub fn new(family: Family, gamma: SparseDistribution) -> Result<Self> {
        family.validate_params()?;
        let model = Self {
            family: Arc::new(family),
            gamma: SparseDistribution::new(),
            name: None,
        };
        model.with_gamma(gamma)
    }

    /// Same transition law, new initial distribution.
    pub fn with_gamma(&self, gamma: SparseDistribution) -> Result<Self> {
        if (gamma.mass() - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidModel(format!(
                "initial distribution has mass {}, expected 1",
                gamma.mass()
            )));
        }
        for x in gamma.support() {
            self.row(x)?;
        }
        Ok(Self {
            family: self.family.clone(),
            gamma,
            name: self.name.clone(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Explicit discrete model from `(state, row)` pairs. Every target must
    /// have its own row.
    pub fn explicit_dt(
        rows: impl IntoIterator<Item = (StateKey, Vec<(StateKey, f64)>)>,
        gamma: SparseDistribution,
    ) -> Result<Self> {
        Self::new(
            Family::ExplicitDt(explicit_rows(ChainKind::Discrete, rows)?),
            gamma,
        )
    }

    /// Explicit continuous model from `(state, off-diagonal rates)` pairs.
    pub fn explicit_ct(
        rows: impl IntoIterator<Item = (StateKey, Vec<(StateKey, f64)>)>,
        gamma: SparseDistribution,
    ) -> Result<Self> {
        Self::new(
            Family::ExplicitCt(explicit_rows(ChainKind::Continuous, rows)?),
            gamma,
        )
    }

    /// Explicit discrete model on `{0..n-1}` from a dense row-stochastic matrix.
    pub fn from_dense_dt(p: &[Vec<f64>], gamma: SparseDistribution) -> Result<Self> {
        Self::explicit_dt(dense_rows(p, false), gamma)
    }

    /// Explicit continuous model on `{0..n-1}` from dense off-diagonal rates;
    /// the diagonal of `q` is ignored.
    pub fn from_dense_ct(q: &[Vec<f64>], gamma: SparseDistribution) -> Result<Self> {
        Self::explicit_ct(dense_rows(q, true), gamma)
    }

    pub fn gambler(a: f64, k: i64, start: i64) -> Result<Self> {
        Self::new(Family::Gambler { a, k }, SparseDistribution::point(start))
    }

    pub fn birth_death(birth: RateFn, death: RateFn, start: i64) -> Result<Self> {
        Self::new(
            Family::BirthDeath { birth, death },
            SparseDistribution::point(start),
        )
    }

    pub fn pure_birth_geometric(base: f64, start: i64) -> Result<Self> {
        Self::new(
            Family::PureBirthGeometric { base },
            SparseDistribution::point(start),
        )
    }

    pub fn miller(start: i64) -> Result<Self> {
        Self::new(Family::Miller, SparseDistribution::point(start))
    }

    pub fn two_state(a: f64, b: f64, start: i64) -> Result<Self> {
        Self::new(Family::TwoState { a, b }, SparseDistribution::point(start))
    }

    pub fn custom(
        kind: ChainKind,
        rows: impl Fn(&StateKey) -> Result<Vec<(StateKey, f64)>> + Send + Sync + 'static,
        gamma: SparseDistribution,
    ) -> Result<Self> {
        Self::new(
            Family::Custom {
                kind,
                rows: Arc::new(rows),
            },
            gamma,
        )
    }

    pub fn kind(&self) -> ChainKind {
        self.family.kind()
    }

    pub fn is_discrete(&self) -> bool {
        self.kind() == ChainKind::Discrete
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn gamma(&self) -> &SparseDistribution {
        &self.gamma
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// The validated row of `x`: probabilities for discrete models,
    /// off-diagonal rates for continuous ones.
    pub fn row(&self, x: &StateKey) -> Result<TransitionRow> {
        TransitionRow::new(x, self.kind(), self.family.raw_row(x)?)
    }

    /// Total jump rate `q(x)` of a continuous model; `1 - p(x, x)` for a
    /// discrete one.
    pub fn exit_rate(&self, x: &StateKey) -> Result<f64> {
        let row = self.row(x)?;
        Ok(match self.kind() {
            ChainKind::Continuous => row.total(),
            ChainKind::Discrete => 1.0 - row.weight(x),
        })
    }

    /// Jump-matrix row and jump rate `λ(x)` of a continuous model.
    pub fn jump_row(&self, x: &StateKey) -> Result<(TransitionRow, f64)> {
        self.require(ChainKind::Continuous, "jump decomposition")?;
        let row = self.row(x)?;
        let q = row.total();
        if q == 0.0 {
            let stay = TransitionRow::new(x, ChainKind::Discrete, [(x.clone(), 1.0)])?;
            return Ok((stay, 1.0));
        }
        let entries = row.iter().map(|(y, w)| (y.clone(), w / q));
        let jump = TransitionRow::new(x, ChainKind::Discrete, entries)?;
        Ok((jump, q))
    }

    /// Jump decomposition of a continuous model.
    pub fn jump_decomposition(&self) -> Result<JumpDecomposition> {
        self.require(ChainKind::Continuous, "jump decomposition")?;
        Ok(JumpDecomposition {
            model: self.clone(),
        })
    }

    /// Discrete model following the jump chain of a continuous model, with
    /// the same initial distribution. Discrete models are returned unchanged.
    pub fn jump_chain(&self) -> Self {
        match self.kind() {
            ChainKind::Discrete => self.clone(),
            ChainKind::Continuous => Self {
                family: Arc::new(Family::JumpChain(Arc::new(self.clone()))),
                gamma: self.gamma.clone(),
                name: self.name.clone(),
            },
        }
    }

    pub(crate) fn require(&self, kind: ChainKind, what: &str) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{what} needs a {kind} model, got a {} one",
                self.kind()
            )))
        }
    }
}

fn explicit_rows(
    kind: ChainKind,
    rows: impl IntoIterator<Item = (StateKey, Vec<(StateKey, f64)>)>,
) -> Result<BTreeMap<StateKey, TransitionRow>> {
    let mut out = BTreeMap::new();
    for (x, raw) in rows {
        let row = TransitionRow::new(&x, kind, raw)?;
        if out.insert(x.clone(), row).is_some() {
            return Err(Error::InvalidModel(format!("state {x} has two rows")));
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidModel("explicit model without rows".into()));
    }
    for row in out.values() {
        for (y, _) in row.iter() {
            if !out.contains_key(y) {
                return Err(Error::InvalidModel(format!("target {y} has no row")));
            }
        }
    }
    Ok(out)
}

fn dense_rows(m: &[Vec<f64>], skip_diagonal: bool) -> Vec<(StateKey, Vec<(StateKey, f64)>)> {
    m.iter()
        .enumerate()
        .map(|(i, r)| {
            let entries = r
                .iter()
                .enumerate()
                .filter(|&(j, _)| !(skip_diagonal && i == j))
                .map(|(j, &w)| (StateKey::scalar(j as i64), w))
                .collect();
            (StateKey::scalar(i as i64), entries)
        })
        .collect()
}

/// Jump matrix `P(x, ·)` and jump rates `λ(x)` of a continuous model:
/// `P(x, y) = q(x, y) / q(x)` and `λ(x) = q(x)` when `q(x) > 0`, and
/// `P(x, ·) = 1_x`, `λ(x) = 1` at absorbing states.
#[derive(Clone, Debug)]
pub struct JumpDecomposition {
    model: ChainModel,
}

impl JumpDecomposition {
    pub fn row(&self, x: &StateKey) -> Result<TransitionRow> {
        Ok(self.model.jump_row(x)?.0)
    }

    pub fn rate(&self, x: &StateKey) -> Result<f64> {
        Ok(self.model.jump_row(x)?.1)
    }

    /// Row and rate together.
    pub fn get(&self, x: &StateKey) -> Result<(TransitionRow, f64)> {
        self.model.jump_row(x)
    }

    /// The jump chain as a discrete model.
    pub fn chain(&self) -> ChainModel {
        self.model.jump_chain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(x: i64) -> StateKey {
        StateKey::scalar(x)
    }

    #[test]
    fn gambler_rows() {
        let m = ChainModel::gambler(0.5, 3, 1).unwrap();
        assert_eq!(m.row(&k(1)).unwrap().entries(), &[(k(0), 0.5), (k(2), 0.5)]);
        assert_eq!(m.row(&k(0)).unwrap().entries(), &[(k(0), 1.0)]);
        assert!(matches!(m.row(&k(4)), Err(Error::UnknownState(_))));
    }

    #[test]
    fn gambler_rejects_bad_probability() {
        assert!(ChainModel::gambler(1.0, 3, 1).is_err());
        assert!(ChainModel::gambler(0.0, 3, 1).is_err());
        assert!(ChainModel::gambler(0.5, 1, 1).is_err());
    }

    #[test]
    fn pure_birth_rows() {
        let m = ChainModel::pure_birth_geometric(2.0, 0).unwrap();
        assert_eq!(m.row(&k(5)).unwrap().entries(), &[(k(6), 32.0)]);
        assert_eq!(m.kind(), ChainKind::Continuous);
    }

    #[test]
    fn explicit_row_mass_violation() {
        let err = ChainModel::explicit_dt(
            [
                (k(0), vec![(k(0), 0.5), (k(1), 0.6)]),
                (k(1), vec![(k(1), 1.0)]),
            ],
            SparseDistribution::point(0),
        )
        .unwrap_err();
        assert!(err.to_string().contains("1.1"), "{err}");
    }

    #[test]
    fn negative_weights_rejected() {
        let err = ChainModel::explicit_ct(
            [(k(0), vec![(k(1), -1.0)]), (k(1), vec![])],
            SparseDistribution::point(0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn rate_rows_reject_diagonal() {
        let err = ChainModel::explicit_ct([(k(0), vec![(k(0), 1.0)])], SparseDistribution::point(0));
        assert!(err.is_err());
    }

    #[test]
    fn gamma_mass_checked() {
        let gamma: SparseDistribution = [(k(0), 0.5)].into_iter().collect();
        assert!(ChainModel::new(Family::TwoState { a: 1.0, b: 1.0 }, gamma).is_err());
    }

    #[test]
    fn miller_jump_decomposition() {
        let m = ChainModel::miller(1).unwrap();
        let (row, lambda) = m.jump_row(&k(1)).unwrap();
        assert_eq!(lambda, 6.0);
        assert!((row.weight(&k(0)) - 1.0 / 3.0).abs() < 1e-15);
        assert!((row.weight(&k(2)) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(row.weight(&k(1)), 0.0);
    }

    #[test]
    fn absorbing_jump_decomposition() {
        let m = ChainModel::two_state(0.0, 1.0, 0).unwrap();
        let (row, lambda) = m.jump_row(&k(0)).unwrap();
        assert_eq!(lambda, 1.0);
        assert_eq!(row.entries(), &[(k(0), 1.0)]);
    }

    #[test]
    fn two_state_jump_decomposition() {
        let m = ChainModel::two_state(1.0, 1.0, 0).unwrap();
        let j = m.jump_decomposition().unwrap();
        assert_eq!(j.rate(&k(0)).unwrap(), 1.0);
        assert_eq!(j.row(&k(0)).unwrap().entries(), &[(k(1), 1.0)]);
        assert!(ChainModel::gambler(0.5, 3, 1).unwrap().jump_decomposition().is_err());
    }

    #[test]
    fn birth_death_tables_and_polynomials() {
        let m = ChainModel::birth_death(
            RateFn::Table(vec![1.0, 1.0]),
            RateFn::Polynomial(vec![0.0, 1.0]),
            0,
        )
        .unwrap();
        assert_eq!(m.row(&k(0)).unwrap().entries(), &[(k(1), 1.0)]);
        assert_eq!(m.row(&k(3)).unwrap().entries(), &[(k(2), 3.0)]);
    }

    #[test]
    fn negative_polynomial_rates_are_row_errors() {
        let m = ChainModel::birth_death(
            RateFn::Polynomial(vec![1.0, -1.0]),
            RateFn::Polynomial(vec![0.0]),
            0,
        )
        .unwrap();
        assert!(m.row(&k(5)).is_err());
    }

    #[test]
    fn rows_are_sorted_by_key() {
        let m = ChainModel::custom(
            ChainKind::Discrete,
            |x| Ok(vec![(x.shifted(0, 1), 0.25), (x.shifted(0, -1), 0.75)]),
            SparseDistribution::point(0),
        )
        .unwrap();
        let row = m.row(&k(0)).unwrap();
        assert_eq!(row.entries()[0].0, k(-1));
    }

    proptest! {
        #[test]
        fn jump_decomposition_reconstructs_rates(
            rates in proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 4), 4)
        ) {
            let m = ChainModel::from_dense_ct(&rates, SparseDistribution::point(0)).unwrap();
            for x in 0..4 {
                let row = m.row(&k(x)).unwrap();
                let (jump, lambda) = m.jump_row(&k(x)).unwrap();
                prop_assert!((jump.total() - 1.0).abs() <= ROW_TOL);
                if row.total() > 0.0 {
                    for (y, q) in row.iter() {
                        let back = lambda * jump.weight(y);
                        prop_assert!((back - q).abs() <= 1e-12 * q.max(1.0));
                    }
                } else {
                    prop_assert_eq!(lambda, 1.0);
                }
            }
        }
    }
}
