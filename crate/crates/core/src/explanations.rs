//! Sufficient explanations, counterfactual dependence and counterfactual
//! explanations, with their domination orders.

use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::analyzer::{is_subset, merge, subsets_by_size, vars_of, Analyzer, Setting};
use crate::budget::Odometer;
use crate::model::VarId;
use crate::sufficiency::StrongRefutation;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SufficientExplanation {
    pub antecedent: Setting,
    /// Always contains the target variable.
    pub network: Vec<VarId>,
    /// The constant values the antecedent forces on the network.
    pub network_values: Setting,
    pub target: (VarId, u32),
    pub actual: bool,
}

impl SufficientExplanation {
    pub fn direct(&self) -> bool {
        self.network == [self.target.0]
    }

    pub fn antecedent_vars(&self) -> Vec<VarId> {
        vars_of(&self.antecedent)
    }
}

/// `e1` dominates `e2`: same target, smaller-or-equal antecedent and network sets.
pub fn dominates(e1: &SufficientExplanation, e2: &SufficientExplanation) -> bool {
    e1.target == e2.target
        && is_subset(&e1.antecedent_vars(), &e2.antecedent_vars())
        && is_subset(&e1.network, &e2.network)
}

pub fn strictly_dominates(e1: &SufficientExplanation, e2: &SufficientExplanation) -> bool {
    dominates(e1, e2) && !dominates(e2, e1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessMode {
    /// Any witness set.
    Any,
    /// Standard dependence: no witness.
    Empty,
    /// Direct dependence: every other variable is held fixed.
    AllOthers,
    /// Witnesses strictly between the two extremes.
    Intermediate,
}

impl std::str::FromStr for WitnessMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<WitnessMode, Error> {
        Ok(match s {
            "any" => WitnessMode::Any,
            "empty" | "standard" => WitnessMode::Empty,
            "all-others" | "direct" => WitnessMode::AllOthers,
            "intermediate" => WitnessMode::Intermediate,
            other => return Err(Error::Precondition(format!("unknown witness mode `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependence {
    pub holds: bool,
    /// Witness sets for the full contrast; values are the actual ones.
    pub witnesses: Vec<Setting>,
    /// A smaller contrast that already has a witness, if minimality fails.
    pub smaller: Option<(Setting, Setting, Setting)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CounterfactualExplanation {
    pub cause: Setting,
    pub contrast: Setting,
    pub witness: Setting,
    /// Always contains the target variable.
    pub network: Vec<VarId>,
    pub target: (VarId, u32),
    /// Target value forced by the contrast.
    pub alternative: u32,
}

impl CounterfactualExplanation {
    pub fn sets(&self) -> (Vec<VarId>, Vec<VarId>, Vec<VarId>) {
        (vars_of(&self.cause), vars_of(&self.witness), self.network.clone())
    }
}

/// Set-inclusion domination on cause, witness and network.
pub fn cf_dominates(e1: &CounterfactualExplanation, e2: &CounterfactualExplanation) -> bool {
    let (x1, w1, n1) = e1.sets();
    let (x2, w2, n2) = e2.sets();
    e1.target == e2.target && is_subset(&x1, &x2) && is_subset(&w1, &w2) && is_subset(&n1, &n2)
}

/// Every value vector over `vars` that differs from `x` in each position.
pub fn contrasts(a: &Analyzer, x: &[(VarId, u32)]) -> Vec<Setting> {
    let radix: Vec<u32> = x.iter().map(|&(v, _)| a.model.dom_size(v) as u32 - 1).collect();
    let mut odo = Odometer::new(radix);
    let mut out = Vec::new();
    while let Some(d) = odo.next() {
        out.push(
            x.iter()
                .zip(d)
                .map(|(&(v, actual), &k)| (v, if k >= actual { k + 1 } else { k }))
                .collect(),
        );
    }
    out
}

pub fn componentwise_different(x: &[(VarId, u32)], xp: &[(VarId, u32)]) -> bool {
    x.len() == xp.len() && x.iter().zip(xp).all(|(&(v, a), &(w, b))| v == w && a != b)
}

fn names_key(a: &Analyzer, vs: &[VarId]) -> Vec<String> {
    let mut n = a.names(vs);
    n.sort();
    n
}

impl<'m> Analyzer<'m> {
    pub fn sufficient_explanation(
        &self,
        x: &[(VarId, u32)],
        network: &[VarId],
        target: (VarId, u32),
        ctx: Option<&[u32]>,
    ) -> Result<Result<SufficientExplanation, StrongRefutation>, Error> {
        let mut net = network.to_vec();
        if !net.contains(&target.0) {
            net.push(target.0);
        }
        net.sort_unstable();
        net.dedup();
        match self.strongly_sufficient(x, &[target], &net)? {
            Err(r) => Ok(Err(r)),
            Ok(values) => {
                let actual = match ctx {
                    Some(c) => {
                        let s = self.actual(c)?;
                        x.iter().all(|&(v, val)| s[v] == val)
                    }
                    None => false,
                };
                Ok(Ok(SufficientExplanation {
                    antecedent: x.to_vec(),
                    network: net,
                    network_values: values,
                    target,
                    actual,
                }))
            }
        }
    }

    fn require_actual(&self, ctx: &[u32], s: &[(VarId, u32)], what: &str) -> Result<Vec<u32>, Error> {
        let state = self.actual(ctx)?;
        for &(v, val) in s {
            if self.model.is_exogenous(v) {
                return Err(Error::Precondition(format!("`{}` is exogenous", self.model.var_name(v))));
            }
            if state[v] != val {
                return Err(Error::Precondition(format!(
                    "{what} {}={} does not hold in this context ({}={})",
                    self.model.var_name(v),
                    self.model.value(v, val),
                    self.model.var_name(v),
                    self.model.value(v, state[v])
                )));
            }
        }
        Ok(state)
    }

    pub fn canonical_se_key(&self, e: &SufficientExplanation) -> (usize, usize, Vec<String>, Vec<String>) {
        (e.antecedent.len(), e.network.len(), names_key(self, &e.antecedent_vars()), names_key(self, &e.network))
    }

    /// Every good (non-dominated) actual sufficient explanation of `target`
    /// in `ctx`, in canonical order.
    pub fn good_sufficient_explanations(
        &self,
        ctx: &[u32],
        target: (VarId, u32),
    ) -> Result<Vec<SufficientExplanation>, Error> {
        let state = self.require_actual(ctx, &[target], "target")?;
        let others: Vec<VarId> = self.model.endogenous().iter().copied().filter(|&v| v != target.0).collect();
        let k = others.len() as u32;
        if 3u128.pow(k.min(40)) > self.budget.limit() as u128 {
            return Err(Error::BudgetExceeded { limit: self.budget.limit() });
        }
        // each variable is in X (1), in N (2) or neither (0)
        let mut pairs: Vec<(Vec<VarId>, Vec<VarId>)> = Vec::new();
        let mut odo = Odometer::new(vec![3; others.len()]);
        while let Some(d) = odo.next() {
            let xs = others.iter().zip(d).filter(|(_, &r)| r == 1).map(|(&v, _)| v).collect();
            let mut ns: Vec<VarId> = others.iter().zip(d).filter(|(_, &r)| r == 2).map(|(&v, _)| v).collect();
            ns.push(target.0);
            ns.sort_unstable();
            pairs.push((xs, ns));
        }
        pairs.sort_by_key(|(x, n)| x.len() + n.len());
        let mut found: Vec<SufficientExplanation> = Vec::new();
        for (xs, ns) in pairs {
            if found.iter().any(|f| is_subset(&f.antecedent_vars(), &xs) && is_subset(&f.network, &ns)) {
                continue;
            }
            let x = self.restrict(&state, &xs);
            if let Ok(values) = self.strongly_sufficient(&x, &[target], &ns)? {
                found.push(SufficientExplanation {
                    antecedent: x,
                    network: ns,
                    network_values: values,
                    target,
                    actual: true,
                });
            }
        }
        found.sort_by_cached_key(|e| self.canonical_se_key(e));
        Ok(found)
    }

    /// Every actual sufficient explanation of `target` in `ctx`, dominated or
    /// not, in canonical order.
    pub fn actual_sufficient_explanations(
        &self,
        ctx: &[u32],
        target: (VarId, u32),
    ) -> Result<Vec<SufficientExplanation>, Error> {
        let state = self.require_actual(ctx, &[target], "target")?;
        let others: Vec<VarId> = self.model.endogenous().iter().copied().filter(|&v| v != target.0).collect();
        if 3u128.pow((others.len() as u32).min(40)) > self.budget.limit() as u128 {
            return Err(Error::BudgetExceeded { limit: self.budget.limit() });
        }
        let mut out = Vec::new();
        let mut odo = Odometer::new(vec![3; others.len()]);
        while let Some(d) = odo.next() {
            let xs: Vec<VarId> = others.iter().zip(d).filter(|(_, &r)| r == 1).map(|(&v, _)| v).collect();
            let mut ns: Vec<VarId> = others.iter().zip(d).filter(|(_, &r)| r == 2).map(|(&v, _)| v).collect();
            ns.push(target.0);
            ns.sort_unstable();
            let x = self.restrict(&state, &xs);
            if let Ok(values) = self.strongly_sufficient(&x, &[target], &ns)? {
                out.push(SufficientExplanation { antecedent: x, network: ns, network_values: values, target, actual: true });
            }
        }
        out.sort_by_cached_key(|e| self.canonical_se_key(e));
        Ok(out)
    }

    fn witness_family(&self, x_vars: &[VarId], y: VarId, mode: WitnessMode) -> Vec<Vec<VarId>> {
        let rest: Vec<VarId> = self
            .model
            .endogenous()
            .iter()
            .copied()
            .filter(|&v| v != y && !x_vars.contains(&v))
            .collect();
        match mode {
            WitnessMode::Empty => vec![Vec::new()],
            WitnessMode::AllOthers => vec![rest],
            WitnessMode::Any => subsets_by_size(&rest),
            WitnessMode::Intermediate => subsets_by_size(&rest)
                .into_iter()
                .filter(|w| !w.is_empty() && w.len() < rest.len())
                .collect(),
        }
    }

    fn flips(&self, ctx: &[u32], state: &[u32], xp: &[(VarId, u32)], w: &[VarId], y: (VarId, u32)) -> Result<bool, Error> {
        let ws = self.restrict(state, w);
        let iv = self.iv_mask(&[xp, &ws]);
        Ok(self.solve(ctx, &iv)?[y.0] != y.1)
    }

    /// Counterfactual dependence of `target` on `x` rather than `xp`, with
    /// witnesses drawn from the family selected by `mode`. Minimality is
    /// checked against every smaller contrast, restricted from `x` and `xp`,
    /// using that contrast's own witness family.
    pub fn counterfactually_depends(
        &self,
        ctx: &[u32],
        x: &[(VarId, u32)],
        xp: &[(VarId, u32)],
        target: (VarId, u32),
        mode: WitnessMode,
    ) -> Result<Dependence, Error> {
        let state = self.require_actual(ctx, &merge(x, &[target]), "premise")?;
        if !componentwise_different(x, xp) {
            return Err(Error::Precondition(
                "contrast values must differ from the actual values in every variable".into(),
            ));
        }
        if x.iter().any(|&(v, _)| v == target.0) {
            return Err(Error::Precondition("the target cannot be part of the cause".into()));
        }
        let xv = vars_of(x);
        let mut witnesses = Vec::new();
        for w in self.witness_family(&xv, target.0, mode) {
            if self.flips(ctx, &state, xp, &w, target)? {
                witnesses.push(self.restrict(&state, &w));
            }
        }
        if witnesses.is_empty() {
            return Ok(Dependence { holds: false, witnesses, smaller: None });
        }
        let idx: Vec<usize> = (0..x.len()).collect();
        for sub in subsets_by_size(&idx) {
            if sub.is_empty() || sub.len() == x.len() {
                continue;
            }
            let sx: Setting = sub.iter().map(|&i| x[i]).collect();
            let sxp: Setting = sub.iter().map(|&i| xp[i]).collect();
            for w in self.witness_family(&vars_of(&sx), target.0, mode) {
                if self.flips(ctx, &state, &sxp, &w, target)? {
                    let ws = self.restrict(&state, &w);
                    return Ok(Dependence { holds: false, witnesses, smaller: Some((sx, sxp, ws)) });
                }
            }
        }
        Ok(Dependence { holds: true, witnesses, smaller: None })
    }

    pub fn canonical_ce_key(&self, e: &CounterfactualExplanation) -> (usize, usize, usize, Vec<String>, Vec<String>, Vec<String>, Setting) {
        let (x, w, n) = e.sets();
        (
            x.len(),
            w.len(),
            n.len(),
            names_key(self, &x),
            names_key(self, &w),
            names_key(self, &n),
            e.contrast.clone(),
        )
    }

    /// Every good counterfactual explanation of `target` in `ctx`.
    pub fn good_counterfactual_explanations(
        &self,
        ctx: &[u32],
        target: (VarId, u32),
    ) -> Result<Vec<CounterfactualExplanation>, Error> {
        let state = self.require_actual(ctx, &[target], "target")?;
        let others: Vec<VarId> = self.model.endogenous().iter().copied().filter(|&v| v != target.0).collect();
        let k = others.len() as u32;
        if 4u128.pow(k.min(40)) > self.budget.limit() as u128 {
            return Err(Error::BudgetExceeded { limit: self.budget.limit() });
        }
        // roles: 0 free, 1 cause, 2 witness, 3 network
        let mut triples: Vec<(Vec<VarId>, Vec<VarId>, Vec<VarId>)> = Vec::new();
        let mut odo = Odometer::new(vec![4; others.len()]);
        while let Some(d) = odo.next() {
            let pick = |r: u32| others.iter().zip(d).filter(|(_, &x)| x == r).map(|(&v, _)| v).collect::<Vec<_>>();
            let xs = pick(1);
            if xs.is_empty() {
                continue;
            }
            let mut ns = pick(3);
            ns.push(target.0);
            ns.sort_unstable();
            triples.push((xs, pick(2), ns));
        }
        triples.sort_by_key(|(x, w, n)| x.len() + w.len() + n.len());
        let mut bearing: Vec<(Vec<VarId>, Vec<VarId>, Vec<VarId>)> = Vec::new();
        let mut out = Vec::new();
        for (xs, ws, ns) in triples {
            if bearing.iter().any(|(bx, bw, bn)| is_subset(bx, &xs) && is_subset(bw, &ws) && is_subset(bn, &ns)) {
                continue;
            }
            let found = self.explanations_for_triple(&state, &xs, &ws, &ns, target)?;
            if !found.is_empty() {
                bearing.push((xs, ws, ns));
                out.extend(found);
            }
        }
        out.sort_by_cached_key(|e| self.canonical_ce_key(e));
        Ok(out)
    }

    /// All counterfactual explanations with the given sets, one per contrast.
    pub fn explanations_for_triple(
        &self,
        state: &[u32],
        xs: &[VarId],
        ws: &[VarId],
        ns: &[VarId],
        target: (VarId, u32),
    ) -> Result<Vec<CounterfactualExplanation>, Error> {
        let x = self.restrict(state, xs);
        let w = self.restrict(state, ws);
        let ante = merge(&x, &w);
        if self.strongly_sufficient(&ante, &[target], ns)?.is_err() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for xp in contrasts(self, &x) {
            let alt = merge(&xp, &w);
            if let Some(n) = self.forced_network(&alt, ns)? {
                let y2 = n.iter().find(|&&(v, _)| v == target.0).map(|&(_, val)| val);
                if let Some(y2) = y2.filter(|&y2| y2 != target.1) {
                    out.push(CounterfactualExplanation {
                        cause: x.clone(),
                        contrast: xp,
                        witness: w.clone(),
                        network: ns.to_vec(),
                        target,
                        alternative: y2,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Whether the given explanation is a counterfactual explanation at all.
    pub fn is_counterfactual_explanation(&self, ctx: &[u32], e: &CounterfactualExplanation) -> Result<bool, Error> {
        let state = self.actual(ctx)?;
        if e.cause.iter().chain(&e.witness).chain(&[e.target]).any(|&(v, val)| state[v] != val) {
            return Ok(false);
        }
        if !componentwise_different(&e.cause, &e.contrast) {
            return Ok(false);
        }
        let found = self.explanations_for_triple(&state, &vars_of(&e.cause), &vars_of(&e.witness), &e.network, e.target)?;
        Ok(found.iter().any(|f| f.contrast == e.contrast))
    }

    pub fn se_json(&self, e: &SufficientExplanation) -> Json {
        let (y, yv) = e.target;
        json!({
            "antecedent": self.setting_json(&e.antecedent),
            "network": self.names(&e.network),
            "network_values": self.setting_json(&e.network_values),
            "target": { self.model.var_name(y): self.model.value(y, yv) },
            "actual": e.actual,
            "direct": e.direct(),
        })
    }

    pub fn se_text(&self, e: &SufficientExplanation) -> String {
        format!("({}, {{{}}})", self.setting_text(&e.antecedent), self.names(&e.network).join(", "))
    }

    pub fn ce_json(&self, e: &CounterfactualExplanation) -> Json {
        let (y, yv) = e.target;
        json!({
            "cause": self.setting_json(&e.cause),
            "contrast": self.setting_json(&e.contrast),
            "witness": self.setting_json(&e.witness),
            "network": self.names(&e.network),
            "target": { self.model.var_name(y): self.model.value(y, yv) },
            "alternative": { self.model.var_name(y): self.model.value(y, e.alternative) },
        })
    }

    pub fn ce_text(&self, e: &CounterfactualExplanation) -> String {
        format!(
            "({} rather than {}, W: {{{}}}, N: {{{}}})",
            self.setting_text(&e.cause),
            self.setting_text(&e.contrast),
            self.setting_text(&e.witness),
            self.names(&e.network).join(", ")
        )
    }

    pub fn dependence_json(&self, d: &Dependence) -> Json {
        json!({
            "holds": d.holds,
            "witnesses": d.witnesses.iter().map(|w| self.setting_json(w)).collect::<Vec<_>>(),
            "smaller": d.smaller.as_ref().map(|(x, xp, w)| json!({
                "cause": self.setting_json(x),
                "contrast": self.setting_json(xp),
                "witness": self.setting_json(w),
            })),
        })
    }
}
