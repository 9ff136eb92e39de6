//! Certified numerical analysis of countable-state Markov chains.
//!
//! Models are lazy row oracles over integer-tuple states ([`model`]). On top
//! of them the crate offers path sampling ([`simulate`]), structural
//! classification on finite truncations ([`structure`]), time-varying laws
//! with certified truncation error ([`transient`]), exit distributions and
//! occupation measures ([`exit`]), stationary and ergodic distributions
//! ([`stationary`]) and Foster–Lyapunov drift certificates ([`lyapunov`]).

pub mod cli;
pub mod distribution;
pub mod error;
pub mod exit;
mod graph;
pub mod lyapunov;
pub mod minimal;
pub mod model;
pub mod model_file;
pub mod rng;
pub mod simulate;
pub mod stationary;
pub mod state;
pub mod structure;
pub mod transient;
pub mod truncation;
mod uniformization;

pub use distribution::SparseDistribution;
pub use error::{Error, Result};
pub use model::{ChainKind, ChainModel, Family, JumpDecomposition, RateFn, TransitionRow};
pub use model_file::{load_model, ModelSpec};
pub use state::{StateIndexer, StateKey};
pub use truncation::Truncation;
pub use uniformization::CtMethod;
