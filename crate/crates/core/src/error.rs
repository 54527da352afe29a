use crate::lang::Diagnostic;

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error: {}", join(.0))]
    Parse(Vec<Diagnostic>),
    #[error("invalid model: {}", join(.0))]
    Validation(Vec<Diagnostic>),
    #[error("enumeration budget of {limit} evaluations exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("{0}")]
    Domain(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            Error::Parse(d) | Error::Validation(d) => d,
            _ => &[],
        }
    }
}
