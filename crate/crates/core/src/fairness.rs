//! Path-based fairness and the standard counterfactual baseline.

use serde_json::{json, Value as Json};

use crate::analyzer::{Analyzer, Context};
use crate::causation::CauseStatement;
use crate::lang::diag::{DiagKind, Diagnostic, Span};
use crate::model::{CausalModel, VarId};
use crate::query::paths;
use crate::Error;

pub type Path = Vec<VarId>;

/// Paths from `a` to `y` whose vertices after `a` all lie in `network`.
pub fn network_paths(m: &CausalModel, a: VarId, y: VarId, network: &[VarId]) -> Vec<Path> {
    paths(m, a, y).into_iter().filter(|p| p[1..].iter().all(|v| network.contains(v))).collect()
}

pub fn path_text(m: &CausalModel, p: &[VarId]) -> String {
    p.iter().map(|&v| m.var_name(v)).collect::<Vec<_>>().join(" -> ")
}

/// Reads one path per line, `A -> B -> Y`. Blank lines and `#` comments are
/// skipped. Every path must run from `a` to `y` along parent edges.
pub fn parse_paths(m: &CausalModel, src: &str, a: VarId, y: VarId) -> Result<Vec<Path>, Error> {
    let mut diags = Vec::new();
    let mut out: Vec<Path> = Vec::new();
    let mut offset = 0;
    for raw in src.split_inclusive('\n') {
        let start = offset;
        offset += raw.len();
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let span = Span::new(start, start + raw.trim_end().len());
        let mut err = |kind, msg: String| diags.push(Diagnostic::error(kind, msg, span, src));
        let mut p = Vec::new();
        let mut ok = true;
        for name in line.split("->").map(str::trim) {
            match m.id(name) {
                Some(v) => p.push(v),
                None => {
                    err(DiagKind::UnknownVariable, format!("unknown variable `{name}`"));
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        if p.first() != Some(&a) || p.last() != Some(&y) {
            err(DiagKind::Syntax, format!("path must run from `{}` to `{}`", m.var_name(a), m.var_name(y)));
            continue;
        }
        if let Some(w) = p.windows(2).find(|w| !m.parents_of(w[1]).contains(&w[0])) {
            err(DiagKind::Syntax, format!("`{}` is not a parent of `{}`", m.var_name(w[0]), m.var_name(w[1])));
            continue;
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Error::Parse(diags))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfairCertificate {
    pub context: Context,
    pub a: u32,
    pub a_prime: u32,
    pub y: u32,
    pub statement: CauseStatement,
    pub network_paths: Vec<Path>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessVerdict {
    pub fair: bool,
    /// Every certificate, contexts in lexicographic order. The first one is
    /// the reported witness.
    pub certificates: Vec<UnfairCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardViolation {
    pub context: Context,
    pub a: u32,
    pub a_prime: u32,
    pub y: u32,
    pub y_prime: u32,
}

impl<'m> Analyzer<'m> {
    fn check_protected(&self, a: VarId, y: VarId) -> Result<(), Error> {
        for v in [a, y] {
            if self.model.is_exogenous(v) {
                return Err(Error::Precondition(format!("`{}` is exogenous", self.model.var_name(v))));
            }
        }
        if a == y {
            return Err(Error::Precondition("protected variable and output must differ".into()));
        }
        Ok(())
    }

    /// Searches every context, contrast value and certifying explanation for
    /// an actual cause `A=a` of the output whose network paths are all unfair.
    pub fn is_fair(&self, a: VarId, unfair: &[Path], y: VarId) -> Result<FairnessVerdict, Error> {
        self.check_protected(a, y)?;
        let mut certificates = Vec::new();
        let mut it = self.all_contexts();
        while let Some(ctx) = it.next_ctx() {
            let ctx = ctx.to_vec();
            let s = self.actual(&ctx)?;
            let target = (y, s[y]);
            for ap in 0..self.model.dom_size(a) as u32 {
                if ap == s[a] {
                    continue;
                }
                let v = self.actual_cause(&ctx, &[(a, s[a])], &[(a, ap)], target, true)?;
                for st in v.statements {
                    let pn = network_paths(self.model, a, y, &st.evidence.network);
                    if pn.iter().all(|p| unfair.contains(p)) {
                        certificates.push(UnfairCertificate {
                            context: ctx.clone(),
                            a: s[a],
                            a_prime: ap,
                            y: s[y],
                            statement: st,
                            network_paths: pn,
                        });
                    }
                }
            }
        }
        Ok(FairnessVerdict { fair: certificates.is_empty(), certificates })
    }

    /// `None` when no single intervention on `A` changes the output in any
    /// context; otherwise the first change found.
    pub fn standardly_counterfactually_fair(&self, a: VarId, y: VarId) -> Result<Option<StandardViolation>, Error> {
        self.check_protected(a, y)?;
        let mut it = self.all_contexts();
        while let Some(ctx) = it.next_ctx() {
            let s = self.actual(ctx)?;
            for ap in 0..self.model.dom_size(a) as u32 {
                if ap == s[a] {
                    continue;
                }
                let mut iv = vec![None; self.model.len()];
                iv[a] = Some(ap);
                let t = self.solve(ctx, &iv)?;
                if t[y] != s[y] {
                    return Ok(Some(StandardViolation {
                        context: ctx.to_vec(),
                        a: s[a],
                        a_prime: ap,
                        y: s[y],
                        y_prime: t[y],
                    }));
                }
            }
        }
        Ok(None)
    }

    pub fn certificate_json(&self, c: &UnfairCertificate, a: VarId, y: VarId) -> Json {
        let m = self.model;
        json!({
            "context": self.named_context(&c.context),
            "a": m.value(a, c.a),
            "a_prime": m.value(a, c.a_prime),
            "y": m.value(y, c.y),
            "witness": self.setting_json(&c.statement.witness),
            "network": self.names(&c.statement.evidence.network),
            "network_paths": c.network_paths.iter().map(|p| path_text(m, p)).collect::<Vec<_>>(),
            "evidence": self.se_json(&c.statement.evidence),
        })
    }

    pub fn fairness_json(&self, v: &FairnessVerdict, a: VarId, y: VarId) -> Json {
        json!({
            "fair": v.fair,
            "certificate": v.certificates.first().map(|c| self.certificate_json(c, a, y)),
            "certificates": v.certificates.len(),
        })
    }

    pub fn standard_json(&self, v: &Option<StandardViolation>, a: VarId, y: VarId) -> Json {
        let m = self.model;
        json!({
            "fair": v.is_none(),
            "certificate": v.as_ref().map(|c| json!({
                "context": self.named_context(&c.context),
                "a": m.value(a, c.a),
                "a_prime": m.value(a, c.a_prime),
                "y": m.value(y, c.y),
                "y_prime": m.value(y, c.y_prime),
            })),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn hiring_network_paths() {
        let m = fixtures::hiring();
        let id = |n| m.id(n).unwrap();
        let (a, b, c, y) = (id("A"), id("B"), id("C"), id("Y"));
        assert_eq!(network_paths(&m, a, y, &[b, y]), vec![vec![a, b, y]]);
        assert_eq!(network_paths(&m, a, y, &[b, c, y]).len(), 2);
        assert!(network_paths(&m, a, y, &[y]).is_empty());
    }

    #[test]
    fn path_file_rejects_bad_lines() {
        let m = fixtures::hiring();
        let (a, y) = (m.id("A").unwrap(), m.id("Y").unwrap());
        assert_eq!(parse_paths(&m, fixtures::HIRING_PATHS, a, y).unwrap().len(), 2);
        for bad in ["A -> Q -> Y", "A -> Y", "B -> Y", "A -> B"] {
            assert!(parse_paths(&m, bad, a, y).is_err(), "{bad}");
        }
    }
}
