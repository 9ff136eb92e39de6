//! JSON model descriptions.
//!
//! ```json
//! {"kind": "gambler", "params": {"a": 0.5, "K": 10}, "gamma": [[[5], 1.0]]}
//! ```
//!
//! Explicit models carry their rows:
//!
//! ```json
//! {"kind": "explicit-dt", "gamma": [[[0], 1.0]],
//!  "rows": [[[0], [[[1], 1.0]]], [[1], [[[0], 1.0]]]]}
//! ```
//!
//! Unknown fields are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::model::{ChainModel, Family, RateFn};
use crate::state::StateKey;

type RowList = Vec<(StateKey, Vec<(StateKey, f64)>)>;

/// Parsed model document. [`ModelSpec::build`] turns it into a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "is_empty_object")]
    pub params: Value,
    pub gamma: Vec<(StateKey, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<RowList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn is_empty_object(v: &Value) -> bool {
    v.is_null() || v.as_object().is_some_and(|o| o.is_empty())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GamblerParams {
    a: f64,
    #[serde(rename = "K")]
    k: i64,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RateFnSpec {
    Table(Vec<f64>),
    Polynomial(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BirthDeathParams {
    birth: RateFnSpec,
    death: RateFnSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseParams {
    base: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoStateParams {
    a: f64,
    b: f64,
}

impl From<RateFnSpec> for RateFn {
    fn from(s: RateFnSpec) -> Self {
        match s {
            RateFnSpec::Table(t) => RateFn::Table(t),
            RateFnSpec::Polynomial(c) => RateFn::Polynomial(c),
        }
    }
}

impl From<&RateFn> for RateFnSpec {
    fn from(f: &RateFn) -> Self {
        match f {
            RateFn::Table(t) => RateFnSpec::Table(t.clone()),
            RateFn::Polynomial(c) => RateFnSpec::Polynomial(c.clone()),
        }
    }
}

fn params<T: for<'de> Deserialize<'de>>(kind: &str, v: &Value) -> Result<T> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v)
        .map_err(|e| Error::InvalidModel(format!("params of {kind} model: {e}")))
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model specs always serialize")
    }

    /// Instantiates the model, validating every row it can reach eagerly
    /// (explicit models) or lazily (parametric families).
    pub fn build(&self) -> Result<ChainModel> {
        let gamma = SparseDistribution::from_pairs(self.gamma.iter().cloned())?;
        let kind = self.kind.as_str();
        if self.rows.is_some() && !kind.starts_with("explicit") {
            return Err(Error::InvalidModel(format!("{kind} models take no rows")));
        }
        let rows = || {
            self.rows
                .clone()
                .ok_or_else(|| Error::InvalidModel(format!("{kind} models need rows")))
        };
        let model = match kind {
            "explicit-dt" => {
                params::<NoParams>(kind, &self.params)?;
                ChainModel::explicit_dt(rows()?, gamma)?
            }
            "explicit-ct" => {
                params::<NoParams>(kind, &self.params)?;
                ChainModel::explicit_ct(rows()?, gamma)?
            }
            "gambler" => {
                let p: GamblerParams = params(kind, &self.params)?;
                ChainModel::new(Family::Gambler { a: p.a, k: p.k }, gamma)?
            }
            "birth-death" => {
                let p: BirthDeathParams = params(kind, &self.params)?;
                ChainModel::new(
                    Family::BirthDeath {
                        birth: p.birth.into(),
                        death: p.death.into(),
                    },
                    gamma,
                )?
            }
            "pure-birth-geometric" => {
                let p: BaseParams = params(kind, &self.params)?;
                ChainModel::new(Family::PureBirthGeometric { base: p.base }, gamma)?
            }
            "miller" => {
                params::<NoParams>(kind, &self.params)?;
                ChainModel::new(Family::Miller, gamma)?
            }
            "two-state" => {
                let p: TwoStateParams = params(kind, &self.params)?;
                ChainModel::new(Family::TwoState { a: p.a, b: p.b }, gamma)?
            }
            other => return Err(Error::InvalidModel(format!("unknown model kind {other:?}"))),
        };
        Ok(match &self.name {
            Some(n) => model.with_name(n.clone()),
            None => model,
        })
    }

    /// Describes a model built from one of the serializable families.
    /// Custom oracles and jump chains have no file form.
    pub fn describe(model: &ChainModel) -> Option<Self> {
        let explicit = |rows: &std::collections::BTreeMap<StateKey, crate::model::TransitionRow>| {
            Some(
                rows.iter()
                    .map(|(x, r)| (x.clone(), r.entries().to_vec()))
                    .collect::<RowList>(),
            )
        };
        let (kind, params, rows) = match model.family() {
            Family::ExplicitDt(r) => ("explicit-dt", Value::Null, explicit(r)),
            Family::ExplicitCt(r) => ("explicit-ct", Value::Null, explicit(r)),
            Family::Gambler { a, k } => ("gambler", serde_json::json!({"a": a, "K": k}), None),
            Family::BirthDeath { birth, death } => (
                "birth-death",
                serde_json::json!({
                    "birth": RateFnSpec::from(birth),
                    "death": RateFnSpec::from(death),
                }),
                None,
            ),
            Family::PureBirthGeometric { base } => {
                ("pure-birth-geometric", serde_json::json!({"base": base}), None)
            }
            Family::Miller => ("miller", Value::Null, None),
            Family::TwoState { a, b } => ("two-state", serde_json::json!({"a": a, "b": b}), None),
            Family::JumpChain(_) | Family::Custom { .. } => return None,
        };
        Some(Self {
            kind: kind.into(),
            params,
            gamma: model.gamma().iter().map(|(k, w)| (k.clone(), w)).collect(),
            rows,
            name: model.name().map(str::to_owned),
        })
    }
}

/// Reads and builds a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ChainModel> {
    ModelSpec::from_path(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChainKind;

    #[test]
    fn gambler_file() {
        let spec = ModelSpec::from_json(
            r#"{"kind": "gambler", "params": {"a": 0.5, "K": 10}, "gamma": [[[5], 1.0]]}"#,
        )
        .unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.kind(), ChainKind::Discrete);
        assert_eq!(m.gamma().get(&StateKey::scalar(5)), 1.0);
    }

    #[test]
    fn bare_integer_states_accepted() {
        let spec =
            ModelSpec::from_json(r#"{"kind": "two-state", "params": {"a": 1, "b": 2}, "gamma": [[0, 1.0]]}"#)
                .unwrap();
        assert!(spec.build().is_ok());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ModelSpec::from_json(
            r#"{"kind": "miller", "gamma": [[[1], 1.0]], "colour": "red"}"#
        )
        .is_err());
        let spec = ModelSpec::from_json(
            r#"{"kind": "gambler", "params": {"a": 0.5, "K": 10, "b": 1}, "gamma": [[[5], 1.0]]}"#,
        )
        .unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn unknown_kind_rejected() {
        let spec = ModelSpec::from_json(r#"{"kind": "nope", "gamma": [[[0], 1.0]]}"#).unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn explicit_rows_validated() {
        let spec = ModelSpec::from_json(
            r#"{"kind": "explicit-dt", "gamma": [[[0], 1.0]],
                "rows": [[[0], [[[0], 0.5], [[1], 0.6]]], [[1], [[[1], 1.0]]]]}"#,
        )
        .unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn round_trip() {
        let texts = [
            r#"{"kind": "gambler", "params": {"a": 0.3, "K": 7}, "gamma": [[[2], 0.5], [[3], 0.5]]}"#,
            r#"{"kind": "birth-death", "params": {"birth": {"table": [1, 2]}, "death": {"polynomial": [0, 1]}}, "gamma": [[[0], 1.0]]}"#,
            r#"{"kind": "pure-birth-geometric", "params": {"base": 2}, "gamma": [[[0], 1.0]]}"#,
            r#"{"kind": "miller", "gamma": [[[1], 1.0]], "name": "miller"}"#,
            r#"{"kind": "explicit-ct", "gamma": [[[0], 1.0]], "rows": [[[0], [[[1], 2.0]]], [[1], [[[0], 3.0]]]]}"#,
        ];
        for text in texts {
            let m = ModelSpec::from_json(text).unwrap().build().unwrap();
            let json = ModelSpec::describe(&m).unwrap().to_json();
            let again = ModelSpec::from_json(&json).unwrap().build().unwrap();
            assert_eq!(
                ModelSpec::describe(&again).unwrap(),
                ModelSpec::describe(&m).unwrap(),
                "{json}"
            );
        }
    }
}
