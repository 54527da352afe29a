//! The model language and the causal-formula query language.

pub mod ast;
pub mod diag;
pub mod formula;
pub mod lexer;
pub mod parser;

use std::fmt::Write as _;

use crate::model::{self, CausalModel, DomainSpec};
use crate::value::Value;
use crate::Error;

pub use ast::{BinOp, EvalError, Expr};
pub use diag::{DiagKind, Diagnostic, Severity, Span};
pub use formula::{parse_formula, BoolExpr, CausalFormula};

/// Parses and validates a model.
pub fn parse_model(src: &str) -> Result<CausalModel, Error> {
    let syntax = parser::parse_syntax(src).map_err(Error::Parse)?;
    model::build(syntax, src).map_err(Error::Validation)
}

/// Evaluates an expression; `env` must bind every referenced variable.
pub fn eval_expr(e: &Expr, env: &std::collections::BTreeMap<String, Value>) -> Result<Value, EvalError> {
    e.eval(&|n| env.get(n).copied())
}

fn domain_text(vals: &[Value]) -> String {
    let parts: Vec<String> = vals.iter().map(Value::to_string).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Canonical text that parses back to a structurally identical model.
pub fn serialize_model(m: &CausalModel) -> String {
    let mut out = format!("model {}\n", m.name());
    for v in m.vars() {
        match &v.equation {
            None => {
                let _ = writeln!(out, "exo {}: {}", v.name, domain_text(&v.domain));
            }
            Some(eq) => {
                let dom = match &eq.spec {
                    DomainSpec::Explicit => domain_text(&v.domain),
                    DomainSpec::Auto { extras } if extras.is_empty() => "auto".to_string(),
                    DomainSpec::Auto { extras } => format!("auto + {}", domain_text(extras)),
                };
                let _ = writeln!(out, "var {}: {} = {}", v.name, dom, eq.expr);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_model_serializes_canonically() {
        let m = parse_model("model T\nexo U: {0,1}\nvar X: {0,1} = U").unwrap();
        assert_eq!(serialize_model(&m), "model T\nexo U: {0, 1}\nvar X: {0, 1} = U\n");
    }

    #[test]
    fn rationals_stay_exact() {
        let m = parse_model("model T\nexo U: {0, 3}\nvar X: auto = U * (1/3)\n").unwrap();
        let text = serialize_model(&m);
        assert!(text.contains("U * (1/3)"), "{text}");
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn auto_extras_round_trip() {
        let m = parse_model("model T\nexo U: {0,1}\nvar X: auto + {45001, -1/2} = U + 1\n").unwrap();
        let again = parse_model(&serialize_model(&m)).unwrap();
        assert_eq!(again, m);
        assert_eq!(again.domain(again.id("X").unwrap()).len(), 4);
    }

    #[test]
    fn self_reference_is_rejected() {
        let e = parse_model("model T\nexo U: {0,1}\nvar X: {0,1} = X + 1\n").unwrap_err();
        match e {
            Error::Validation(d) => assert_eq!(d[0].kind, DiagKind::Cycle),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eval_expr_uses_environment() {
        let e = parser::parse_expr("3*X1/10 + X3").unwrap();
        let env = [("X1".to_string(), Value::int(75000)), ("X3".to_string(), Value::int(2500))]
            .into_iter()
            .collect();
        assert_eq!(eval_expr(&e, &env).unwrap(), Value::int(25000));
    }
}
