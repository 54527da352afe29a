//! Causal formulas: an optional intervention prefix and a boolean body over
//! `Var = value` / `Var != value` atoms.

use std::fmt;

use super::diag::{DiagKind, Diagnostic, Span};
use super::lexer::Tok;
use super::parser::{Parser, Spanned};
use crate::model::CausalModel;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Atom { var: String, value: Value, equal: bool },
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn atom(var: &str, value: Value) -> BoolExpr {
        BoolExpr::Atom { var: var.to_string(), value, equal: true }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Value) -> bool {
        match self {
            BoolExpr::Atom { var, value, equal } => (lookup(var) == *value) == *equal,
            BoolExpr::Not(e) => !e.eval(lookup),
            BoolExpr::And(a, b) => a.eval(lookup) && b.eval(lookup),
            BoolExpr::Or(a, b) => a.eval(lookup) || b.eval(lookup),
        }
    }

    fn atoms(&self, out: &mut Vec<(String, Value)>) {
        match self {
            BoolExpr::Atom { var, value, .. } => out.push((var.clone(), *value)),
            BoolExpr::Not(e) => e.atoms(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            BoolExpr::Or(..) => 1,
            BoolExpr::And(..) => 2,
            BoolExpr::Not(_) => 3,
            BoolExpr::Atom { .. } => 4,
        }
    }
}

fn paren(e: &BoolExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.level() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Atom { var, value, equal } => {
                write!(f, "{var}{}{value}", if *equal { "=" } else { "!=" })
            }
            BoolExpr::Not(e) => {
                write!(f, "!")?;
                paren(e, 4, f)
            }
            BoolExpr::And(a, b) => {
                paren(a, 2, f)?;
                write!(f, " & ")?;
                paren(b, 3, f)
            }
            BoolExpr::Or(a, b) => {
                paren(a, 1, f)?;
                write!(f, " | ")?;
                paren(b, 2, f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalFormula {
    /// Intervened variables in the order written; names are distinct.
    pub interventions: Vec<(String, Value)>,
    pub body: BoolExpr,
}

impl fmt::Display for CausalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.interventions.is_empty() {
            let parts: Vec<String> = self.interventions.iter().map(|(n, v)| format!("{n}<-{v}")).collect();
            write!(f, "[{}]", parts.join(", "))?;
            return write!(f, "({})", self.body);
        }
        write!(f, "{}", self.body)
    }
}

struct FParser<'s> {
    p: Parser<'s>,
    atoms: Vec<Spanned<(String, Value)>>,
}

impl FParser<'_> {
    fn or(&mut self) -> Result<BoolExpr, Diagnostic> {
        let mut l = self.and()?;
        while self.p.eat(&Tok::Pipe) {
            let r = self.and()?;
            l = BoolExpr::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<BoolExpr, Diagnostic> {
        let mut l = self.not()?;
        while self.p.eat(&Tok::Amp) {
            let r = self.not()?;
            l = BoolExpr::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn not(&mut self) -> Result<BoolExpr, Diagnostic> {
        if self.p.eat(&Tok::Bang) {
            return Ok(BoolExpr::Not(Box::new(self.not()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<BoolExpr, Diagnostic> {
        if self.p.eat(&Tok::LParen) {
            let e = self.or()?;
            self.p.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        let name = self.p.ident("a variable name")?;
        let equal = match self.p.peek() {
            Tok::Eq => true,
            Tok::Ne => false,
            other => {
                return Err(self.p.error(format!("expected `=` or `!=`, found {}", other.describe())))
            }
        };
        self.p.bump();
        let value = self.p.value()?;
        let span = name.span.join(value.span);
        self.atoms.push(Spanned { node: (name.node.clone(), value.node), span });
        Ok(BoolExpr::Atom { var: name.node, value: value.node, equal })
    }
}

struct Unresolved {
    formula: CausalFormula,
    iv_spans: Vec<Span>,
    atoms: Vec<Spanned<(String, Value)>>,
}

fn parse_unresolved(src: &str) -> Result<Unresolved, Vec<Diagnostic>> {
    let p = Parser::new(src, true).map_err(|d| vec![d])?;
    let mut fp = FParser { p, atoms: Vec::new() };
    let mut interventions: Vec<(String, Value)> = Vec::new();
    let mut iv_spans = Vec::new();
    let mut diags = Vec::new();
    let res = (|| -> Result<BoolExpr, Diagnostic> {
        while fp.p.eat(&Tok::Newline) {}
        if fp.p.eat(&Tok::LBracket) {
            loop {
                let name = fp.p.ident("a variable name")?;
                fp.p.expect(Tok::Arrow, "`<-`")?;
                let v = fp.p.value()?;
                if interventions.iter().any(|(n, _)| *n == name.node) {
                    diags.push(Diagnostic::error(
                        DiagKind::Duplicate,
                        format!("`{}` is intervened on more than once", name.node),
                        name.span,
                        src,
                    ));
                }
                iv_spans.push(name.span.join(v.span));
                interventions.push((name.node, v.node));
                if !fp.p.eat(&Tok::Comma) {
                    break;
                }
            }
            fp.p.expect(Tok::RBracket, "`]` or `,`")?;
        }
        let body = fp.or()?;
        while fp.p.eat(&Tok::Newline) {}
        if fp.p.peek() != &Tok::Eof {
            return Err(fp.p.error(format!("unexpected {}", fp.p.peek().describe())));
        }
        Ok(body)
    })();
    match res {
        Err(d) => {
            diags.insert(0, d);
            Err(diags)
        }
        Ok(_) if !diags.is_empty() => Err(diags),
        Ok(body) => Ok(Unresolved {
            formula: CausalFormula { interventions, body },
            iv_spans,
            atoms: fp.atoms,
        }),
    }
}

/// Parses without consulting a model.
pub fn parse_formula_syntax(src: &str) -> Result<CausalFormula, Vec<Diagnostic>> {
    parse_unresolved(src).map(|u| u.formula)
}

/// Parses and resolves against `model`: every name must be an endogenous
/// variable and every value must lie in its domain.
pub fn parse_formula(src: &str, model: &CausalModel) -> Result<CausalFormula, Vec<Diagnostic>> {
    let u = parse_unresolved(src)?;
    let mut diags = Vec::new();
    let items = u
        .formula
        .interventions
        .iter()
        .cloned()
        .zip(u.iv_spans.iter().copied())
        .chain(u.atoms.iter().map(|a| (a.node.clone(), a.span)));
    for ((name, value), span) in items {
        match model.id(&name) {
            None => diags.push(Diagnostic::error(
                DiagKind::UnknownVariable,
                format!("unknown variable `{name}`"),
                span,
                src,
            )),
            Some(v) if model.is_exogenous(v) => diags.push(Diagnostic::error(
                DiagKind::Domain,
                format!("`{name}` is exogenous; formulas mention endogenous variables only"),
                span,
                src,
            )),
            Some(v) if model.value_index(v, &value).is_none() => diags.push(Diagnostic::error(
                DiagKind::Domain,
                format!("value {value} is outside the domain of `{name}`"),
                span,
                src,
            )),
            Some(_) => {}
        }
    }
    if diags.is_empty() {
        Ok(u.formula)
    } else {
        Err(diags)
    }
}

impl CausalFormula {
    /// Every variable/value pair mentioned by an atom.
    pub fn atoms(&self) -> Vec<(String, Value)> {
        let mut out = Vec::new();
        self.body.atoms(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_intervention_prefix() {
        let f = parse_formula_syntax("[X2<-45001](Y=1)").unwrap();
        assert_eq!(f.interventions, vec![("X2".to_string(), Value::int(45001))]);
        assert_eq!(f.body, BoolExpr::atom("Y", Value::ONE));
    }

    #[test]
    fn empty_prefix() {
        let f = parse_formula_syntax("Y=1").unwrap();
        assert!(f.interventions.is_empty());
    }

    #[test]
    fn duplicate_intervention_is_diagnosed() {
        let d = parse_formula_syntax("[X1<-85000, X1<-0](Y=1)").unwrap_err();
        assert_eq!(d[0].kind, DiagKind::Duplicate);
        assert_eq!(d[0].column, 13);
    }

    #[test]
    fn display_round_trips() {
        for src in ["!(X4=1) | Y=1", "[A<-1, B<- -2](!(A=1 & B!=0) | C=1/2)", "(a=1 | b=1) & c=0"] {
            let f = parse_formula_syntax(src).unwrap();
            assert_eq!(parse_formula_syntax(&f.to_string()).unwrap(), f, "{src}");
        }
    }

    #[test]
    fn missing_operator_is_positioned() {
        let d = parse_formula_syntax("Y 1").unwrap_err();
        assert_eq!((d[0].line, d[0].column), (1, 3));
    }
}
