//! Random model generation, the naive definitional oracle and brute-force
//! checks of the structural results.

pub mod differential;
pub mod generator;
pub mod oracle;
pub mod theorems;

pub use generator::{random_model, random_source, GeneratorConfig, Mode, RNG_NAME};
pub use oracle::Oracle;
pub use theorems::{check_theorem, confirm_with_oracle, replay, Reading, SuiteConfig, TheoremId, TheoremReport};
