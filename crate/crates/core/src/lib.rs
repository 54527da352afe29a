//! Finite-domain structural causal models.
//!
//! Models are written in a small line-oriented language, validated and
//! tabulated once, then queried for sufficiency, explanations, actual
//! causation and path-specific fairness by exhaustive enumeration.

pub mod analyzer;
pub mod budget;
pub mod causation;
mod error;
pub mod fixtures;
pub mod lang;
pub mod model;
pub mod propcheck;
pub mod query;
pub mod explanations;
pub mod fairness;
pub mod sufficiency;
pub mod value;

pub use analyzer::{Analyzer, Assignment, Context, Setting};
pub use budget::{Budget, DEFAULT_BUDGET};
pub use error::Error;
pub use lang::{parse_formula, parse_model, serialize_model, CausalFormula};
pub use model::{CausalModel, VarId};
pub use value::Value;
