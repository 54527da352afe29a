//! Recursive-descent parser for the model language.

use super::ast::{BinOp, Expr};
use super::diag::{DiagKind, Diagnostic, Span};
use super::lexer::{lex, Tok, Token};
use crate::value::Value;

pub const KEYWORDS: &[&str] = &["model", "exo", "var", "auto", "ite"];

#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum DomainSyntax {
    Explicit(Vec<Spanned<Value>>),
    /// Closure of the equation's image, plus extra values.
    Auto(Vec<Spanned<Value>>),
}

#[derive(Debug, Clone)]
pub enum DeclBody {
    Exo(Vec<Spanned<Value>>),
    Var { domain: DomainSyntax, expr: Expr, refs: Vec<Spanned<String>> },
}

#[derive(Debug, Clone)]
pub struct Decl {
    pub name: Spanned<String>,
    pub body: DeclBody,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ModelSyntax {
    pub name: String,
    pub decls: Vec<Decl>,
}

pub(crate) struct Parser<'s> {
    pub src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    /// Variable references seen since the last `take_refs`.
    refs: Vec<Spanned<String>>,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'s> Parser<'s> {
    pub fn new(src: &'s str, arrows: bool) -> PResult<Parser<'s>> {
        Ok(Parser { src, toks: lex(src, arrows)?, pos: 0, refs: Vec::new() })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Errors at end of input point just past the last token.
    pub fn error(&self, msg: impl Into<String>) -> Diagnostic {
        let span = match self.peek() {
            Tok::Eof if self.pos > 0 => {
                let end = self.prev_span().end;
                Span::new(end, end)
            }
            _ => self.span(),
        };
        Diagnostic::error(DiagKind::Syntax, msg, span, self.src)
    }

    pub fn expect(&mut self, t: Tok, what: &str) -> PResult<Span> {
        if self.peek() == &t {
            Ok(self.bump().span)
        } else {
            Err(self.error(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    pub fn ident(&mut self, what: &str) -> PResult<Spanned<String>> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().span;
                Ok(Spanned { node: s, span })
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    pub fn take_refs(&mut self) -> Vec<Spanned<String>> {
        std::mem::take(&mut self.refs)
    }

    /// `INT | INT "/" INT | DECIMAL`, with an optional leading `-`.
    pub fn value(&mut self) -> PResult<Spanned<Value>> {
        let start = self.span();
        let neg = self.eat(&Tok::Minus);
        let first = match self.peek().clone() {
            Tok::Number(s) => {
                self.bump();
                s
            }
            other => return Err(self.error(format!("expected a number, found {}", other.describe()))),
        };
        let mut text = first.clone();
        if !first.contains('.')
            && self.peek() == &Tok::Slash
            && matches!(self.peek_at(1), Tok::Number(d) if !d.contains('.'))
        {
            self.bump();
            if let Tok::Number(d) = self.bump().tok {
                text = format!("{first}/{d}");
            }
        }
        let span = start.join(self.prev_span());
        let v: Value = text.parse().map_err(|_| {
            Diagnostic::error(DiagKind::Syntax, format!("invalid number `{text}`"), span, self.src)
        })?;
        let v = if neg {
            v.checked_neg().map_err(|_| {
                Diagnostic::error(DiagKind::Overflow, "number out of range", span, self.src)
            })?
        } else {
            v
        };
        Ok(Spanned { node: v, span })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let mut l = self.and_expr()?;
        while self.eat(&Tok::Pipe) {
            let r = self.and_expr()?;
            l = Expr::bin(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut l = self.not_expr()?;
        while self.eat(&Tok::Amp) {
            let r = self.not_expr()?;
            l = Expr::bin(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            Ok(Expr::Not(Box::new(self.cmp_expr()?)))
        } else {
            self.cmp_expr()
        }
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        Ok(Expr::bin(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut l = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.mul_expr()?;
            l = Expr::bin(op, l, r);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut l = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.unary()?;
            l = match (op, &l, &r) {
                // literal quotients are stored as the rational they denote
                (BinOp::Div, Expr::Lit(a), Expr::Lit(b)) if b.truthy() => match a.checked_div(b) {
                    Ok(q) => Expr::Lit(q),
                    Err(_) => Expr::bin(op, l, r),
                },
                _ => Expr::bin(op, l, r),
            };
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            let e = self.atom()?;
            Ok(match e {
                Expr::Lit(v) => match v.checked_neg() {
                    Ok(n) => Expr::Lit(n),
                    Err(_) => Expr::Neg(Box::new(Expr::Lit(v))),
                },
                other => Expr::Neg(Box::new(other)),
            })
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let span = self.bump().span;
                let v: Value = s.parse().map_err(|_| {
                    Diagnostic::error(DiagKind::Syntax, format!("invalid number `{s}`"), span, self.src)
                })?;
                Ok(Expr::Lit(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "ite" && self.peek_at(1) == &Tok::LParen => {
                self.bump();
                self.bump();
                let c = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let t = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::ite(c, t, e))
            }
            Tok::Ident(name) => {
                let span = self.bump().span;
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(Diagnostic::error(
                        DiagKind::Syntax,
                        format!("keyword `{name}` cannot be used as a variable"),
                        span,
                        self.src,
                    ));
                }
                self.refs.push(Spanned { node: name.clone(), span });
                Ok(Expr::Var(name))
            }
            other => Err(self.error(format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn domain(&mut self) -> PResult<Vec<Spanned<Value>>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut vals = vec![self.value()?];
        while self.eat(&Tok::Comma) {
            vals.push(self.value()?);
        }
        self.expect(Tok::RBrace, "`}` or `,`")?;
        Ok(vals)
    }

    fn skip_line(&mut self) {
        while !matches!(self.peek(), Tok::Newline | Tok::Eof) {
            self.bump();
        }
    }

    fn end_of_decl(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline | Tok::Eof => Ok(()),
            other => Err(self.error(format!("expected end of line, found {}", other.describe()))),
        }
    }

    fn decl_name(&mut self) -> PResult<Spanned<String>> {
        let name = self.ident("a variable name")?;
        if KEYWORDS.contains(&name.node.as_str()) {
            return Err(Diagnostic::error(
                DiagKind::Syntax,
                format!("keyword `{}` cannot be used as a variable", name.node),
                name.span,
                self.src,
            ));
        }
        Ok(name)
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.span();
        let kw = self.ident("`exo` or `var`")?;
        match kw.node.as_str() {
            "exo" => {
                let name = self.decl_name()?;
                self.expect(Tok::Colon, "`:`")?;
                let dom = self.domain()?;
                self.end_of_decl()?;
                Ok(Decl { name, body: DeclBody::Exo(dom), span: start.join(self.prev_span()) })
            }
            "var" => {
                let name = self.decl_name()?;
                self.expect(Tok::Colon, "`:`")?;
                let domain = if matches!(self.peek(), Tok::Ident(s) if s == "auto") {
                    self.bump();
                    if self.eat(&Tok::Plus) {
                        DomainSyntax::Auto(self.domain()?)
                    } else {
                        DomainSyntax::Auto(Vec::new())
                    }
                } else {
                    DomainSyntax::Explicit(self.domain()?)
                };
                self.expect(Tok::Eq, "`=`")?;
                self.take_refs();
                let expr = self.expr()?;
                let refs = self.take_refs();
                self.end_of_decl()?;
                Ok(Decl {
                    name,
                    body: DeclBody::Var { domain, expr, refs },
                    span: start.join(self.prev_span()),
                })
            }
            other => Err(Diagnostic::error(
                DiagKind::Syntax,
                format!("expected `exo` or `var`, found `{other}`"),
                kw.span,
                self.src,
            )),
        }
    }
}

/// Parses the surface syntax only; name resolution and validation happen in
/// [`crate::model`].
pub fn parse_syntax(src: &str) -> Result<ModelSyntax, Vec<Diagnostic>> {
    let mut p = Parser::new(src, false).map_err(|d| vec![d])?;
    while p.eat(&Tok::Newline) {}
    let header = (|| -> PResult<String> {
        match p.peek() {
            Tok::Ident(s) if s == "model" => {
                p.bump();
            }
            other => return Err(p.error(format!("expected `model`, found {}", other.describe()))),
        }
        let name = p.ident("a model name")?;
        p.end_of_decl()?;
        Ok(name.node)
    })();
    let mut diags = Vec::new();
    let name = match header {
        Ok(n) => n,
        Err(d) => {
            diags.push(d);
            p.skip_line();
            String::new()
        }
    };
    let mut decls = Vec::new();
    loop {
        while p.eat(&Tok::Newline) {}
        if p.peek() == &Tok::Eof {
            break;
        }
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(d) => {
                diags.push(d);
                p.skip_line();
            }
        }
    }
    if diags.is_empty() {
        Ok(ModelSyntax { name, decls })
    } else {
        Err(diags)
    }
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser::new(src, false)?;
    let e = p.expr()?;
    while p.eat(&Tok::Newline) {}
    if p.peek() != &Tok::Eof {
        return Err(p.error(format!("unexpected {}", p.peek().describe())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_quotients_fold() {
        assert_eq!(parse_expr("1/3").unwrap(), Expr::Lit(Value::ratio(1, 3).unwrap()));
        assert_eq!(parse_expr("-2").unwrap(), Expr::Lit(Value::int(-2)));
        let e = parse_expr("X/2/3").unwrap();
        let env = |n: &str| (n == "X").then_some(Value::int(12));
        assert_eq!(e.eval(&env).unwrap(), Value::int(2));
    }

    #[test]
    fn precedence_matches_grammar() {
        let e = parse_expr("!a = 1 & b | c").unwrap();
        assert_eq!(e.to_string(), "!a = 1 & b | c");
        let e = parse_expr("3*X1/10 + X3").unwrap();
        assert_eq!(e.to_string(), "3 * X1 / 10 + X3");
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "X * (1/3)",
            "-(X + 1)",
            "X - -1/3",
            "ite(A = 1, B, 2) >= 3",
            "!(a | b)",
            "(a = b) = c",
            "X / (2/3)",
            "0.5 * X",
        ] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_syntax("model M\nexo U: {0,1}\nvar X: {0,1} = (U\n").unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].line, 3);
        let err = parse_syntax("modl M\n").unwrap_err();
        assert_eq!((err[0].line, err[0].column), (1, 1));
    }

    #[test]
    fn recovers_after_bad_line() {
        let err = parse_syntax("model M\nexo U {0}\nvar X: {0} = \nvar Y: {0} = 0\n").unwrap_err();
        assert_eq!(err.len(), 2);
    }
}
