//! Replacement and the actual, optimal and direct cause relations.

use serde_json::{json, Value as Json};

use crate::analyzer::{is_subset, merge, subsets_by_size, vars_of, Analyzer, Setting};
use crate::explanations::{componentwise_different, contrasts, SufficientExplanation};
use crate::model::VarId;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauseStatement {
    pub cause: Setting,
    /// Absent for optimal and direct causes.
    pub contrast: Option<Setting>,
    pub target: (VarId, u32),
    /// Antecedent values outside the cause.
    pub witness: Setting,
    /// The good explanation the cause is part of.
    pub evidence: SufficientExplanation,
}

/// A replacement that blocks a candidate explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocked {
    pub explanation: SufficientExplanation,
    pub contrast: Setting,
    /// Network of the dominating explanation.
    pub network: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauseVerdict {
    pub holds: bool,
    /// Certifying statements; only the first unless every one was requested.
    pub statements: Vec<CauseStatement>,
    /// For refutations: every good explanation containing the cause and the
    /// replacement that rules it out.
    pub blocked: Vec<Blocked>,
}

fn split(e: &SufficientExplanation, x: &[(VarId, u32)]) -> Setting {
    e.antecedent.iter().copied().filter(|p| !x.iter().any(|q| q.0 == p.0)).collect()
}

impl<'m> Analyzer<'m> {
    /// Searches networks `N' ⊆ N` containing the target, smallest first, for
    /// which `((X=x', W=w), N')` explains the same target. Returns `N'`.
    pub fn can_replace(
        &self,
        e: &SufficientExplanation,
        x: &[(VarId, u32)],
        xp: &[(VarId, u32)],
    ) -> Result<Option<Vec<VarId>>, Error> {
        if !is_subset(&vars_of(x), &e.antecedent_vars()) || vars_of(x) != vars_of(xp) {
            return Err(Error::Precondition(
                "replacement values must cover a part of the explanation's antecedent".into(),
            ));
        }
        let w = split(e, x);
        let alt = merge(xp, &w);
        let rest: Vec<VarId> = e.network.iter().copied().filter(|&v| v != e.target.0).collect();
        for sub in subsets_by_size(&rest) {
            let mut n = sub;
            n.push(e.target.0);
            n.sort_unstable();
            if self.strongly_sufficient(&alt, &[e.target], &n)?.is_ok() {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }

    fn check_cause_premise(&self, ctx: &[u32], x: &[(VarId, u32)], target: (VarId, u32)) -> Result<(), Error> {
        if x.is_empty() {
            return Err(Error::Precondition("the cause must mention at least one variable".into()));
        }
        if x.iter().any(|&(v, _)| v == target.0) {
            return Err(Error::Precondition("the target cannot be part of the cause".into()));
        }
        let s = self.actual(ctx)?;
        for &(v, val) in x.iter().chain(std::iter::once(&target)) {
            if self.model.is_exogenous(v) {
                return Err(Error::Precondition(format!("`{}` is exogenous", self.model.var_name(v))));
            }
            if s[v] != val {
                return Err(Error::Precondition(format!(
                    "{}={} does not hold in this context",
                    self.model.var_name(v),
                    self.model.value(v, val)
                )));
            }
        }
        Ok(())
    }

    fn containing(&self, ctx: &[u32], x: &[(VarId, u32)], target: (VarId, u32)) -> Result<Vec<SufficientExplanation>, Error> {
        let xv = vars_of(x);
        Ok(self
            .good_explanations_cached(ctx, target)?
            .into_iter()
            .filter(|e| is_subset(&xv, &e.antecedent_vars()))
            .collect())
    }

    /// `X=x` rather than `X=x'` is an actual cause of the target.
    pub fn actual_cause(
        &self,
        ctx: &[u32],
        x: &[(VarId, u32)],
        xp: &[(VarId, u32)],
        target: (VarId, u32),
        all: bool,
    ) -> Result<CauseVerdict, Error> {
        self.check_cause_premise(ctx, x, target)?;
        if !componentwise_different(x, xp) {
            return Err(Error::Precondition(
                "contrast values must differ from the actual values in every variable".into(),
            ));
        }
        let mut statements = Vec::new();
        let mut blocked = Vec::new();
        for e in self.containing(ctx, x, target)? {
            match self.can_replace(&e, x, xp)? {
                None => {
                    statements.push(CauseStatement {
                        cause: x.to_vec(),
                        contrast: Some(xp.to_vec()),
                        target,
                        witness: split(&e, x),
                        evidence: e,
                    });
                    if !all {
                        break;
                    }
                }
                Some(network) => blocked.push(Blocked { explanation: e, contrast: xp.to_vec(), network }),
            }
        }
        let holds = !statements.is_empty();
        if holds {
            blocked.clear();
        }
        Ok(CauseVerdict { holds, statements, blocked })
    }

    /// `X=x` is part of a good explanation in which no contrast replaces it.
    pub fn optimal_cause(&self, ctx: &[u32], x: &[(VarId, u32)], target: (VarId, u32), all: bool) -> Result<CauseVerdict, Error> {
        self.check_cause_premise(ctx, x, target)?;
        let mut statements = Vec::new();
        let mut blocked = Vec::new();
        'outer: for e in self.containing(ctx, x, target)? {
            for xp in contrasts(self, x) {
                if let Some(network) = self.can_replace(&e, x, &xp)? {
                    blocked.push(Blocked { explanation: e, contrast: xp, network });
                    continue 'outer;
                }
            }
            statements.push(CauseStatement { cause: x.to_vec(), contrast: None, target, witness: split(&e, x), evidence: e });
            if !all {
                break;
            }
        }
        let holds = !statements.is_empty();
        if holds {
            blocked.clear();
        }
        Ok(CauseVerdict { holds, statements, blocked })
    }

    /// `X=x` is part of a good explanation whose network is the target alone.
    pub fn direct_cause(&self, ctx: &[u32], x: &[(VarId, u32)], target: (VarId, u32), all: bool) -> Result<CauseVerdict, Error> {
        self.check_cause_premise(ctx, x, target)?;
        let mut statements: Vec<CauseStatement> = self
            .containing(ctx, x, target)?
            .into_iter()
            .filter(SufficientExplanation::direct)
            .map(|e| CauseStatement { cause: x.to_vec(), contrast: None, target, witness: split(&e, x), evidence: e })
            .collect();
        if !all {
            statements.truncate(1);
        }
        Ok(CauseVerdict { holds: !statements.is_empty(), statements, blocked: Vec::new() })
    }

    /// Every certified `(X=x, x')` pair, ordered by cause size, cause names
    /// and contrast values. Each carries its first certifying explanation.
    pub fn enumerate_actual_causes(&self, ctx: &[u32], target: (VarId, u32)) -> Result<Vec<CauseStatement>, Error> {
        let state = self.actual(ctx)?;
        if state[target.0] != target.1 {
            return Err(Error::Precondition("the target does not hold in this context".into()));
        }
        let good = self.good_explanations_cached(ctx, target)?;
        let mut out: Vec<CauseStatement> = Vec::new();
        for e in &good {
            let ante = e.antecedent_vars();
            for xs in subsets_by_size(&ante) {
                if xs.is_empty() {
                    continue;
                }
                let x = self.restrict(&state, &xs);
                for xp in contrasts(self, &x) {
                    if out.iter().any(|s| s.cause == x && s.contrast.as_ref() == Some(&xp)) {
                        continue;
                    }
                    if self.can_replace(e, &x, &xp)?.is_none() {
                        out.push(CauseStatement {
                            cause: x.clone(),
                            contrast: Some(xp),
                            target,
                            witness: split(e, &x),
                            evidence: e.clone(),
                        });
                    }
                }
            }
        }
        // evidence is the first good explanation in canonical order
        let mut fixed = Vec::with_capacity(out.len());
        for s in out {
            let verdict = self.actual_cause(ctx, &s.cause, s.contrast.as_deref().unwrap_or(&[]), target, false)?;
            fixed.extend(verdict.statements.into_iter().take(1));
        }
        fixed.sort_by_cached_key(|s| {
            let mut names = self.names(&vars_of(&s.cause));
            names.sort();
            (s.cause.len(), names, s.contrast.clone())
        });
        Ok(fixed)
    }

    pub fn cause_json(&self, s: &CauseStatement) -> Json {
        let (y, yv) = s.target;
        json!({
            "cause": self.setting_json(&s.cause),
            "contrast": s.contrast.as_ref().map(|c| self.setting_json(c)),
            "target": { self.model.var_name(y): self.model.value(y, yv) },
            "witness": self.setting_json(&s.witness),
            "network": self.names(&s.evidence.network),
            "evidence": self.se_json(&s.evidence),
        })
    }

    pub fn verdict_json(&self, v: &CauseVerdict) -> Json {
        json!({
            "holds": v.holds,
            "statements": v.statements.iter().map(|s| self.cause_json(s)).collect::<Vec<_>>(),
            "blocked": v.blocked.iter().map(|b| json!({
                "explanation": self.se_json(&b.explanation),
                "contrast": self.setting_json(&b.contrast),
                "replacing_network": self.names(&b.network),
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fire_replacement_certificate_is_minimal() {
        let m = fixtures::fire();
        let a = Analyzer::with_default_budget(&m);
        let ctx = a.parse_context("U_F=1").unwrap();
        let b = m.id("B").unwrap();
        let good = a.good_sufficient_explanations(&ctx, (b, 0)).unwrap();
        let e = good.iter().find(|e| a.setting_text(&e.antecedent) == "F=1").unwrap();
        let x = a.parse_setting("F=1").unwrap();
        let xp = a.parse_setting("F=0").unwrap();
        assert_eq!(a.can_replace(e, &x, &xp).unwrap(), Some(vec![b]));
    }

    #[test]
    fn identity_model_optimal_cause() {
        let m = crate::parse_model("model I\nexo U: {0,1}\nvar X: {0,1} = U\nvar Y: {0,1} = X\n").unwrap();
        let a = Analyzer::with_default_budget(&m);
        let x = a.parse_setting("X=1").unwrap();
        let v = a.optimal_cause(&[1], &x, (m.id("Y").unwrap(), 1), false).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn constant_output_has_no_causes() {
        let m = crate::parse_model("model C\nexo U: {0,1}\nvar X: {0,1} = U\nvar Y: {1} = 1\n").unwrap();
        let a = Analyzer::with_default_budget(&m);
        assert!(a.enumerate_actual_causes(&[1], (m.id("Y").unwrap(), 0)).unwrap().is_empty());
    }
}
