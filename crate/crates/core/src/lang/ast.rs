//! Expression trees for structural equations and their evaluation.

use std::fmt;

use crate::value::{ArithError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
        }
    }

    fn level(self) -> u8 {
        match self {
            BinOp::Or => OR,
            BinOp::And => AND,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => CMP,
            BinOp::Add | BinOp::Sub => ADD,
            BinOp::Mul | BinOp::Div => MUL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Variable names in first-occurrence order, without repeats.
    pub fn references(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk_refs(&mut |n| {
            if !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        });
        out
    }

    fn walk_refs(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(n) => f(n),
            Expr::Neg(e) | Expr::Not(e) => e.walk_refs(f),
            Expr::Bin(_, l, r) => {
                l.walk_refs(f);
                r.walk_refs(f);
            }
            Expr::Ite(c, t, e) => {
                c.walk_refs(f);
                t.walk_refs(f);
                e.walk_refs(f);
            }
        }
    }

    /// `ite`, `&` and `|` evaluate only the operands they need.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Lit(v) => *v,
            Expr::Var(n) => env(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
            Expr::Neg(e) => e.eval(env)?.checked_neg()?,
            Expr::Not(e) => Value::from_bool(!e.eval(env)?.truthy()),
            Expr::Ite(c, t, e) => {
                if c.eval(env)?.truthy() {
                    t.eval(env)?
                } else {
                    e.eval(env)?
                }
            }
            Expr::Bin(op, l, r) => {
                let a = l.eval(env)?;
                match op {
                    BinOp::And if !a.truthy() => return Ok(Value::ZERO),
                    BinOp::Or if a.truthy() => return Ok(Value::ONE),
                    _ => {}
                }
                let b = r.eval(env)?;
                match op {
                    BinOp::Add => a.checked_add(&b)?,
                    BinOp::Sub => a.checked_sub(&b)?,
                    BinOp::Mul => a.checked_mul(&b)?,
                    BinOp::Div => a.checked_div(&b)?,
                    BinOp::Eq => Value::from_bool(a == b),
                    BinOp::Ne => Value::from_bool(a != b),
                    BinOp::Lt => Value::from_bool(a < b),
                    BinOp::Le => Value::from_bool(a <= b),
                    BinOp::Gt => Value::from_bool(a > b),
                    BinOp::Ge => Value::from_bool(a >= b),
                    BinOp::And | BinOp::Or => Value::from_bool(b.truthy()),
                }
            }
        })
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Lit(v) if !v.is_integer() => MUL,
            Expr::Lit(v) if v.numer() < 0 => UNARY,
            Expr::Lit(_) | Expr::Var(_) | Expr::Ite(..) => ATOM,
            Expr::Neg(_) => UNARY,
            Expr::Not(_) => NOT,
            Expr::Bin(op, _, _) => op.level(),
        }
    }
}

const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const UNARY: u8 = 7;
const ATOM: u8 = 8;

struct Prec<'a>(&'a Expr, u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.level() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints the minimal parenthesization that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(e) => write!(f, "-{}", Prec(e, ATOM)),
            Expr::Not(e) => write!(f, "!{}", Prec(e, CMP)),
            Expr::Ite(c, t, e) => write!(f, "ite({c}, {t}, {e})"),
            Expr::Bin(op, l, r) => {
                let lvl = op.level();
                let (lmin, rmin) = match lvl {
                    CMP => (ADD, ADD),
                    AND => (AND, NOT),
                    OR => (OR, AND),
                    ADD => (ADD, MUL),
                    _ => (MUL, UNARY),
                };
                write!(f, "{} {} {}", Prec(l, lmin), op.symbol(), Prec(r, rmin))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env<'a>(pairs: &'a [(&'a str, i64)]) -> impl Fn(&str) -> Option<Value> + 'a {
        move |n| pairs.iter().find(|(k, _)| *k == n).map(|(_, v)| Value::from(*v))
    }

    #[test]
    fn savings_equation() {
        // (3 * X1) / 10 + X3
        let e = Expr::bin(
            BinOp::Add,
            Expr::bin(
                BinOp::Div,
                Expr::bin(BinOp::Mul, Expr::Lit(Value::int(3)), Expr::var("X1")),
                Expr::Lit(Value::int(10)),
            ),
            Expr::var("X3"),
        );
        let v = e.eval(&env(&[("X1", 75000), ("X3", 2500)])).unwrap();
        assert_eq!(v, Value::int(25000));
    }

    #[test]
    fn threshold_boundary_counts() {
        // X1 + 5 * X2 >= 225000 at the boundary
        let e = Expr::bin(
            BinOp::Ge,
            Expr::bin(
                BinOp::Add,
                Expr::var("X1"),
                Expr::bin(BinOp::Mul, Expr::Lit(Value::int(5)), Expr::var("X2")),
            ),
            Expr::Lit(Value::int(225000)),
        );
        assert_eq!(e.eval(&env(&[("X1", 85000), ("X2", 28000)])).unwrap(), Value::ONE);
    }

    #[test]
    fn ite_selects_branch() {
        let e = Expr::ite(Expr::Lit(Value::ONE), Expr::var("a"), Expr::var("b"));
        assert_eq!(e.eval(&env(&[("a", 7)])).unwrap(), Value::int(7));
    }

    #[test]
    fn logic_is_zero_one_valued() {
        let e = Expr::bin(BinOp::And, Expr::Lit(Value::int(5)), Expr::Lit(Value::int(-2)));
        assert_eq!(e.eval(&env(&[])).unwrap(), Value::ONE);
        let n = Expr::Not(Box::new(Expr::Lit(Value::int(3))));
        assert_eq!(n.eval(&env(&[])).unwrap(), Value::ZERO);
    }

    #[test]
    fn errors_surface() {
        let d = Expr::bin(BinOp::Div, Expr::var("a"), Expr::Lit(Value::ZERO));
        assert_eq!(
            d.eval(&env(&[("a", 1)])),
            Err(EvalError::Arith(ArithError::DivisionByZero))
        );
        assert_eq!(Expr::var("q").eval(&env(&[])), Err(EvalError::Unbound("q".into())));
    }

    #[test]
    fn display_parenthesizes_minimally() {
        let e = Expr::bin(
            BinOp::Mul,
            Expr::var("X"),
            Expr::bin(BinOp::Add, Expr::var("a"), Expr::Lit(Value::ratio(1, 3).unwrap())),
        );
        assert_eq!(e.to_string(), "X * (a + 1/3)");
        let r = Expr::bin(BinOp::Mul, Expr::var("X"), Expr::Lit(Value::ratio(1, 3).unwrap()));
        assert_eq!(r.to_string(), "X * (1/3)");
    }
}
