//! Weak, direct and strong sufficiency.

use serde_json::{json, Value as Json};

use crate::analyzer::{vars_of, Analyzer, Context, Setting};
use crate::model::VarId;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrongRefutation {
    /// The first evaluation already disagrees with the consequent, and every
    /// constant network value would have to match it.
    Forced { network: Setting },
    /// Two evaluations disagree on the network values.
    NotConstant { candidate: Setting, c: Setting, context: Context, observed: Setting },
}

impl<'m> Analyzer<'m> {
    fn check_disjoint(&self, a: &[(VarId, u32)], b: &[(VarId, u32)]) -> Result<(), Error> {
        for &(v, _) in a {
            if self.model.is_exogenous(v) {
                return Err(Error::Precondition(format!("`{}` is exogenous", self.model.var_name(v))));
            }
            if b.iter().any(|&(w, _)| w == v) {
                return Err(Error::Precondition(format!(
                    "`{}` appears on both sides",
                    self.model.var_name(v)
                )));
            }
        }
        for &(v, _) in b {
            if self.model.is_exogenous(v) {
                return Err(Error::Precondition(format!("`{}` is exogenous", self.model.var_name(v))));
            }
        }
        Ok(())
    }

    /// `None` when `[X<-x] Y=y` holds in every context, else the first context
    /// where it fails.
    pub fn weakly_sufficient(&self, x: &[(VarId, u32)], y: &[(VarId, u32)]) -> Result<Option<Context>, Error> {
        self.check_disjoint(x, y)?;
        let iv = self.iv_mask(&[x]);
        let cut: Vec<bool> = iv.iter().map(Option::is_some).collect();
        let (positions, _) = self.relevant(&vars_of(y), &cut);
        let mut it = self.contexts_over(&positions);
        while let Some(ctx) = it.next_ctx() {
            let s = self.solve(ctx, &iv)?;
            if y.iter().any(|&(v, val)| s[v] != val) {
                return Ok(Some(ctx.to_vec()));
            }
        }
        Ok(None)
    }

    /// `None` when `[X<-x, C<-c] N=n` holds for every `c` over the remaining
    /// endogenous variables and every context; else the first `(c, u)`.
    pub fn directly_sufficient(&self, x: &[(VarId, u32)], n: &[(VarId, u32)]) -> Result<Option<(Setting, Context)>, Error> {
        self.check_disjoint(x, n)?;
        let key = (x.to_vec(), n.to_vec());
        if let Some(v) = self.memo_get(&key) {
            return Ok(v);
        }
        let verdict = self.direct_uncached(x, n)?;
        self.memo_put(key, verdict.clone());
        Ok(verdict)
    }

    fn direct_uncached(&self, x: &[(VarId, u32)], n: &[(VarId, u32)]) -> Result<Option<(Setting, Context)>, Error> {
        let m = self.model;
        let in_x = |v: VarId| x.iter().any(|&(w, _)| w == v);
        let in_n = |v: VarId| n.iter().any(|&(w, _)| w == v);
        let c_vars: Vec<VarId> = m.endogenous().iter().copied().filter(|&v| !in_x(v) && !in_n(v)).collect();
        let mut cut = vec![false; m.len()];
        for &v in c_vars.iter().chain(x.iter().map(|(v, _)| v)) {
            cut[v] = true;
        }
        let (positions, hit) = self.relevant(&vars_of(n), &cut);
        let rel_c: Vec<VarId> = hit.into_iter().filter(|&v| !in_x(v)).collect();
        let mut iv = self.iv_mask(&[x]);
        for &v in &c_vars {
            iv[v] = Some(0);
        }
        let mut codo = crate::budget::Odometer::new(rel_c.iter().map(|&v| m.dom_size(v) as u32).collect());
        while let Some(cd) = codo.next() {
            for (i, &v) in rel_c.iter().enumerate() {
                iv[v] = Some(cd[i]);
            }
            let mut it = self.contexts_over(&positions);
            while let Some(ctx) = it.next_ctx() {
                let s = self.solve(ctx, &iv)?;
                if n.iter().any(|&(v, val)| s[v] != val) {
                    let c: Setting = c_vars.iter().map(|&v| (v, iv[v].unwrap_or(0))).collect();
                    return Ok(Some((c, ctx.to_vec())));
                }
            }
        }
        Ok(None)
    }

    /// Strong sufficiency of `X=x` for `Y=y` along `network`: returns the
    /// forced network values, or why none exist.
    pub fn strongly_sufficient(
        &self,
        x: &[(VarId, u32)],
        y: &[(VarId, u32)],
        network: &[VarId],
    ) -> Result<Result<Setting, StrongRefutation>, Error> {
        for &(v, _) in y {
            if !network.contains(&v) {
                return Err(Error::Precondition(format!(
                    "network must contain `{}`",
                    self.model.var_name(v)
                )));
            }
        }
        let mut net: Vec<VarId> = network.to_vec();
        net.sort_unstable();
        net.dedup();
        let probe: Setting = net.iter().map(|&v| (v, 0)).collect();
        self.check_disjoint(x, &probe)?;
        let candidate = self.candidate_network(x, &net)?;
        if y.iter().any(|yv| !candidate.contains(yv)) {
            return Ok(Err(StrongRefutation::Forced { network: candidate }));
        }
        match self.directly_sufficient(x, &candidate)? {
            None => Ok(Ok(candidate)),
            Some((c, context)) => {
                let iv = self.iv_mask(&[x, &c]);
                let s = self.solve(&context, &iv)?;
                let observed = net.iter().map(|&v| (v, s[v])).collect();
                Ok(Err(StrongRefutation::NotConstant { candidate, c, context, observed }))
            }
        }
    }

    /// Network values at the first `(c, u)`: every other variable outside
    /// the antecedent and the network at its first value, first context.
    fn candidate_network(&self, x: &[(VarId, u32)], net: &[VarId]) -> Result<Setting, Error> {
        let mut iv = self.iv_mask(&[x]);
        for &v in self.model.endogenous() {
            if iv[v].is_none() && !net.contains(&v) {
                iv[v] = Some(0);
            }
        }
        let s = self.solve(&vec![0; self.model.exogenous().len()], &iv)?;
        Ok(net.iter().map(|&v| (v, s[v])).collect())
    }

    /// The constant network values `X=x` forces along `network`, if any.
    pub fn forced_network(&self, x: &[(VarId, u32)], network: &[VarId]) -> Result<Option<Setting>, Error> {
        let mut net = network.to_vec();
        net.sort_unstable();
        net.dedup();
        let probe: Setting = net.iter().map(|&v| (v, 0)).collect();
        self.check_disjoint(x, &probe)?;
        let candidate = self.candidate_network(x, &net)?;
        Ok(self.directly_sufficient(x, &candidate)?.is_none().then_some(candidate))
    }

    pub fn refutation_json(&self, r: &StrongRefutation) -> Json {
        match r {
            StrongRefutation::Forced { network } => json!({
                "reason": "forced-network-mismatch",
                "network": self.setting_json(network),
            }),
            StrongRefutation::NotConstant { candidate, c, context, observed } => json!({
                "reason": "network-not-constant",
                "candidate": self.setting_json(candidate),
                "c": self.setting_json(c),
                "context": self.named_context(context),
                "observed": self.setting_json(observed),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::analyzer::Analyzer;
    use crate::fixtures;

    #[test]
    fn fire_direct_sufficiency_with_empty_c() {
        let m = fixtures::fire();
        let a = Analyzer::with_default_budget(&m);
        let x = a.parse_setting("F=1").unwrap();
        let n = a.parse_setting("S=1, B=0").unwrap();
        assert_eq!(a.directly_sufficient(&x, &n).unwrap(), None);
    }

    #[test]
    fn strong_reduces_to_direct_for_singleton_network() {
        let m = fixtures::loan();
        let a = Analyzer::with_default_budget(&m);
        let y = m.id("Y").unwrap();
        for text in ["X2=45001", "X1=50000, X3=25000", "X1=250000"] {
            let x = a.parse_setting(text).unwrap();
            for val in 0..2 {
                let strong = a.strongly_sufficient(&x, &[(y, val)], &[y]).unwrap().is_ok();
                let direct = a.directly_sufficient(&x, &[(y, val)]).unwrap().is_none();
                assert_eq!(strong, direct, "{text} Y={val}");
            }
        }
    }

    #[test]
    fn memo_is_transparent() {
        let m = fixtures::loan();
        let memo = Analyzer::with_default_budget(&m);
        let plain = Analyzer::with_default_budget(&m).without_memo();
        let y = m.id("Y").unwrap();
        for text in ["X2=45001", "X1=50000, X3=25000", "X4=1", "X1=0"] {
            let x = memo.parse_setting(text).unwrap();
            for _ in 0..2 {
                assert_eq!(
                    memo.directly_sufficient(&x, &[(y, 1)]).unwrap(),
                    plain.directly_sufficient(&x, &[(y, 1)]).unwrap()
                );
            }
        }
        assert!(memo.memo_len() > 0);
        assert_eq!(plain.memo_len(), 0);
    }
}
