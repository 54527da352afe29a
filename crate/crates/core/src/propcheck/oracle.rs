//! Naive transcriptions of every predicate: equations are evaluated from
//! their syntax trees, every quantifier is enumerated in full, nothing is
//! cached or pruned. Used to cross-check the optimized analyses.

use std::collections::BTreeMap;

use crate::budget::Budget;
use crate::explanations::WitnessMode;
use crate::model::{CausalModel, VarId};
use crate::value::Value;
use crate::Error;

pub const ORACLE_BUDGET: u64 = 2_000_000;

/// Values by variable, the oracle's only notion of an assignment.
pub type Vals = BTreeMap<VarId, Value>;

/// A sufficient explanation as the oracle sees it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OSe {
    pub antecedent: Vals,
    pub network: Vec<VarId>,
}

/// A counterfactual explanation: cause, contrast, witness, network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OCe {
    pub cause: Vals,
    pub contrast: Vals,
    pub witness: Vals,
    pub network: Vec<VarId>,
}

pub struct Oracle<'m> {
    pub model: &'m CausalModel,
    pub budget: Budget,
}

fn subsets(items: &[VarId]) -> Vec<Vec<VarId>> {
    let mut out = vec![Vec::new()];
    for &v in items {
        let more: Vec<Vec<VarId>> = out
            .iter()
            .map(|s| {
                let mut t = s.clone();
                t.push(v);
                t
            })
            .collect();
        out.extend(more);
    }
    out
}

fn subset_of(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|v| b.contains(v))
}

fn keys(v: &Vals) -> Vec<VarId> {
    v.keys().copied().collect()
}

impl<'m> Oracle<'m> {
    pub fn new(model: &'m CausalModel) -> Oracle<'m> {
        Oracle { model, budget: Budget::new(ORACLE_BUDGET) }
    }

    fn name(&self, v: VarId) -> &str {
        self.model.var_name(v)
    }

    fn endo(&self) -> Vec<VarId> {
        (0..self.model.len()).filter(|&v| !self.model.is_exogenous(v)).collect()
    }

    /// Every assignment to `vars`, earlier variables varying slowest.
    pub fn assignments(&self, vars: &[VarId]) -> Vec<Vals> {
        let mut out = vec![Vals::new()];
        for &v in vars {
            let mut next = Vec::new();
            for a in &out {
                for &val in self.model.domain(v) {
                    let mut b = a.clone();
                    b.insert(v, val);
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    /// Every context, lexicographic in the exogenous declaration order.
    pub fn contexts(&self) -> Vec<Vals> {
        let exo: Vec<VarId> = (0..self.model.len()).filter(|&v| self.model.is_exogenous(v)).collect();
        self.assignments(&exo)
    }

    /// Solution of the submodel under `iv` by repeated sweeps until every
    /// endogenous variable has a value.
    pub fn solve(&self, ctx: &Vals, iv: &Vals) -> Result<Vals, Error> {
        self.budget.charge(1)?;
        let mut s: Vals = ctx.clone();
        for (&v, &x) in iv {
            s.insert(v, x);
        }
        loop {
            let mut progressed = false;
            for v in 0..self.model.len() {
                if s.contains_key(&v) {
                    continue;
                }
                let Some(eq) = self.model.equation(v) else { continue };
                let env = |n: &str| self.model.id(n).and_then(|id| s.get(&id).copied());
                if eq.refs.iter().all(|&r| s.contains_key(&r)) {
                    let val = eq.expr.eval(&env).map_err(|e| Error::Precondition(e.to_string()))?;
                    s.insert(v, val);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        Ok(s)
    }

    fn holds(s: &Vals, cond: &Vals) -> bool {
        cond.iter().all(|(v, x)| s.get(v) == Some(x))
    }

    pub fn weakly_sufficient(&self, x: &Vals, y: &Vals) -> Result<Option<Vals>, Error> {
        for u in self.contexts() {
            if !Self::holds(&self.solve(&u, x)?, y) {
                return Ok(Some(u));
            }
        }
        Ok(None)
    }

    pub fn directly_sufficient(&self, x: &Vals, n: &Vals) -> Result<bool, Error> {
        let c: Vec<VarId> = self.endo().into_iter().filter(|v| !x.contains_key(v) && !n.contains_key(v)).collect();
        for cv in self.assignments(&c) {
            let mut iv = x.clone();
            iv.extend(cv);
            for u in self.contexts() {
                if !Self::holds(&self.solve(&u, &iv)?, n) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn strongly_sufficient(&self, x: &Vals, y: &Vals, network: &[VarId]) -> Result<bool, Error> {
        if !y.keys().all(|v| network.contains(v)) {
            return Ok(false);
        }
        for n in self.assignments(network) {
            if Self::holds(&n, y) && self.directly_sufficient(x, &n)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn actual_state(&self, u: &Vals) -> Result<Vals, Error> {
        self.solve(u, &Vals::new())
    }

    pub fn restrict(s: &Vals, vars: &[VarId]) -> Vals {
        vars.iter().map(|&v| (v, s[&v])).collect()
    }

    /// Every actual sufficient explanation of `y` in `u`.
    pub fn actual_sufficient_explanations(&self, u: &Vals, y: (VarId, Value)) -> Result<Vec<OSe>, Error> {
        let s = self.actual_state(u)?;
        let mut out = Vec::new();
        if s[&y.0] != y.1 {
            return Ok(out);
        }
        let others: Vec<VarId> = self.endo().into_iter().filter(|&v| v != y.0).collect();
        let target: Vals = [(y.0, y.1)].into();
        for xs in subsets(&others) {
            let rest: Vec<VarId> = others.iter().copied().filter(|v| !xs.contains(v)).collect();
            for mut ns in subsets(&rest) {
                ns.push(y.0);
                ns.sort_unstable();
                let x = Self::restrict(&s, &xs);
                if self.strongly_sufficient(&x, &target, &ns)? {
                    out.push(OSe { antecedent: x, network: ns });
                }
            }
        }
        Ok(out)
    }

    pub fn good_sufficient_explanations(&self, u: &Vals, y: (VarId, Value)) -> Result<Vec<OSe>, Error> {
        let all = self.actual_sufficient_explanations(u, y)?;
        let good: Vec<OSe> = all
            .iter()
            .filter(|e| {
                !all.iter().any(|f| {
                    f != *e && subset_of(&keys(&f.antecedent), &keys(&e.antecedent)) && subset_of(&f.network, &e.network)
                })
            })
            .cloned()
            .collect();
        Ok(good)
    }

    /// Every contrast for `x` differing in each variable.
    pub fn contrasts(&self, x: &Vals) -> Vec<Vals> {
        self.assignments(&keys(x)).into_iter().filter(|a| a.iter().all(|(v, val)| x[v] != *val)).collect()
    }

    fn witness_sets(&self, xs: &[VarId], y: VarId, mode: WitnessMode) -> Vec<Vec<VarId>> {
        let rest: Vec<VarId> = self.endo().into_iter().filter(|&v| v != y && !xs.contains(&v)).collect();
        let all = subsets(&rest);
        match mode {
            WitnessMode::Any => all,
            WitnessMode::Empty => vec![Vec::new()],
            WitnessMode::AllOthers => vec![rest],
            WitnessMode::Intermediate => all.into_iter().filter(|w| !w.is_empty() && w.len() < rest.len()).collect(),
        }
    }

    fn flips_with_some_witness(&self, u: &Vals, s: &Vals, xp: &Vals, y: (VarId, Value), mode: WitnessMode) -> Result<bool, Error> {
        for w in self.witness_sets(&keys(xp), y.0, mode) {
            let mut iv = xp.clone();
            iv.extend(Self::restrict(s, &w));
            if self.solve(u, &iv)?[&y.0] != y.1 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// `y` counterfactually depends on `x` rather than `xp`: some witness from
    /// the mode's family flips the output and no smaller cause does.
    pub fn counterfactually_depends(&self, u: &Vals, x: &Vals, xp: &Vals, y: (VarId, Value), mode: WitnessMode) -> Result<bool, Error> {
        let s = self.actual_state(u)?;
        if !Self::holds(&s, x) || s[&y.0] != y.1 {
            return Ok(false);
        }
        if !self.flips_with_some_witness(u, &s, xp, y, mode)? {
            return Ok(false);
        }
        let xs = keys(x);
        for sub in subsets(&xs) {
            if sub.is_empty() || sub.len() == xs.len() {
                continue;
            }
            let sxp = Self::restrict(xp, &sub);
            if self.flips_with_some_witness(u, &s, &sxp, y, mode)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every counterfactual explanation of `y` in `u`.
    pub fn counterfactual_explanations(&self, u: &Vals, y: (VarId, Value)) -> Result<Vec<OCe>, Error> {
        let s = self.actual_state(u)?;
        let mut out = Vec::new();
        if s[&y.0] != y.1 {
            return Ok(out);
        }
        let others: Vec<VarId> = self.endo().into_iter().filter(|&v| v != y.0).collect();
        let target: Vals = [(y.0, y.1)].into();
        for xs in subsets(&others).into_iter().filter(|x| !x.is_empty()) {
            let r1: Vec<VarId> = others.iter().copied().filter(|v| !xs.contains(v)).collect();
            for ws in subsets(&r1) {
                let r2: Vec<VarId> = r1.iter().copied().filter(|v| !ws.contains(v)).collect();
                for mut ns in subsets(&r2) {
                    ns.push(y.0);
                    ns.sort_unstable();
                    let x = Self::restrict(&s, &xs);
                    let w = Self::restrict(&s, &ws);
                    let mut ante = x.clone();
                    ante.extend(w.clone());
                    if !self.strongly_sufficient(&ante, &target, &ns)? {
                        continue;
                    }
                    for xp in self.contrasts(&x) {
                        let mut alt = xp.clone();
                        alt.extend(w.clone());
                        for &y2 in self.model.domain(y.0) {
                            if y2 == y.1 {
                                continue;
                            }
                            if self.strongly_sufficient(&alt, &[(y.0, y2)].into(), &ns)? {
                                out.push(OCe { cause: x.clone(), contrast: xp.clone(), witness: w.clone(), network: ns.clone() });
                                break;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Counterfactual explanations not dominated by one over different sets.
    pub fn good_counterfactual_explanations(&self, u: &Vals, y: (VarId, Value)) -> Result<Vec<OCe>, Error> {
        let all = self.counterfactual_explanations(u, y)?;
        let sets = |e: &OCe| (keys(&e.cause), keys(&e.witness), e.network.clone());
        Ok(all
            .iter()
            .filter(|e| {
                let (x2, w2, n2) = sets(e);
                !all.iter().any(|f| {
                    let (x1, w1, n1) = sets(f);
                    (x1.clone(), w1.clone(), n1.clone()) != (x2.clone(), w2.clone(), n2.clone())
                        && subset_of(&x1, &x2)
                        && subset_of(&w1, &w2)
                        && subset_of(&n1, &n2)
                })
            })
            .cloned()
            .collect())
    }

    /// Whether some explanation with antecedent `(X=xp, W=w)` and a network
    /// inside `e`'s explains the same target.
    pub fn can_replace(&self, e: &OSe, y: (VarId, Value), xp: &Vals) -> Result<bool, Error> {
        let mut alt = e.antecedent.clone();
        for (&v, &val) in xp {
            alt.insert(v, val);
        }
        let target: Vals = [(y.0, y.1)].into();
        for sub in subsets(&e.network) {
            if sub.contains(&y.0) && self.strongly_sufficient(&alt, &target, &sub)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn part_of(x: &Vals, e: &OSe) -> bool {
        x.iter().all(|(v, val)| e.antecedent.get(v) == Some(val))
    }

    pub fn actual_cause(&self, u: &Vals, x: &Vals, xp: &Vals, y: (VarId, Value)) -> Result<bool, Error> {
        for e in self.good_sufficient_explanations(u, y)? {
            if Self::part_of(x, &e) && !self.can_replace(&e, y, xp)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn optimal_cause(&self, u: &Vals, x: &Vals, y: (VarId, Value)) -> Result<bool, Error> {
        'next: for e in self.good_sufficient_explanations(u, y)? {
            if !Self::part_of(x, &e) {
                continue;
            }
            for xp in self.contrasts(x) {
                if self.can_replace(&e, y, &xp)? {
                    continue 'next;
                }
            }
            return Ok(true);
        }
        Ok(false)
    }

    /// Part of an actual direct explanation whose antecedent set is minimal
    /// among actual direct explanations.
    pub fn direct_cause(&self, u: &Vals, x: &Vals, y: (VarId, Value)) -> Result<bool, Error> {
        let direct: Vec<OSe> = self
            .actual_sufficient_explanations(u, y)?
            .into_iter()
            .filter(|e| e.network == [y.0])
            .collect();
        Ok(direct.iter().any(|e| {
            Self::part_of(x, e)
                && !direct.iter().any(|f| f != e && subset_of(&keys(&f.antecedent), &keys(&e.antecedent)))
        }))
    }

    /// Every `(x, xp)` certified as an actual cause, sorted.
    pub fn actual_causes(&self, u: &Vals, y: (VarId, Value)) -> Result<Vec<(Vals, Vals)>, Error> {
        let s = self.actual_state(u)?;
        let others: Vec<VarId> = self.endo().into_iter().filter(|&v| v != y.0).collect();
        let mut out = Vec::new();
        for xs in subsets(&others).into_iter().filter(|x| !x.is_empty()) {
            let x = Self::restrict(&s, &xs);
            for xp in self.contrasts(&x) {
                if self.actual_cause(u, &x, &xp, y)? {
                    out.push((x.clone(), xp));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Parent relation read off the equations: `p` is a parent of `v` when
    /// changing `p` alone changes `v` for some values of the others.
    pub fn parents(&self, v: VarId) -> Result<Vec<VarId>, Error> {
        let Some(eq) = self.model.equation(v) else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for &p in &eq.refs {
            let rest: Vec<VarId> = eq.refs.iter().copied().filter(|&r| r != p).collect();
            'found: for a in self.assignments(&rest) {
                let mut seen: Option<Value> = None;
                for &pv in self.model.domain(p) {
                    let mut env = a.clone();
                    env.insert(p, pv);
                    let val = eq
                        .expr
                        .eval(&|n: &str| self.model.id(n).and_then(|id| env.get(&id).copied()))
                        .map_err(|e| Error::Precondition(e.to_string()))?;
                    match seen {
                        Some(s) if s != val => {
                            out.push(p);
                            break 'found;
                        }
                        _ => seen = Some(val),
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Every directed path from `a` to `y` along parent edges.
    pub fn paths(&self, a: VarId, y: VarId) -> Result<Vec<Vec<VarId>>, Error> {
        let mut parents = Vec::new();
        for v in 0..self.model.len() {
            parents.push(self.parents(v)?);
        }
        let mut out = Vec::new();
        let mut stack = vec![vec![a]];
        while let Some(p) = stack.pop() {
            let last = p[p.len() - 1];
            if last == y {
                out.push(p);
                continue;
            }
            for (v, ps) in parents.iter().enumerate() {
                if ps.contains(&last) && !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    stack.push(q);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Unfair when some context has an actual cause `A=a` rather than `a'`
    /// of the output, relative to a good explanation whose network paths
    /// are all in `unfair`.
    pub fn is_fair(&self, a: VarId, unfair: &[Vec<VarId>], y: VarId) -> Result<bool, Error> {
        let all_paths = self.paths(a, y)?;
        for u in self.contexts() {
            let s = self.actual_state(&u)?;
            let target = (y, s[&y]);
            let x: Vals = [(a, s[&a])].into();
            for e in self.good_sufficient_explanations(&u, target)? {
                if !Self::part_of(&x, &e) {
                    continue;
                }
                let pn: Vec<&Vec<VarId>> =
                    all_paths.iter().filter(|p| p[1..].iter().all(|v| e.network.contains(v))).collect();
                if !pn.iter().all(|p| unfair.contains(p)) {
                    continue;
                }
                for xp in self.contrasts(&x) {
                    if !self.can_replace(&e, target, &xp)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn standardly_counterfactually_fair(&self, a: VarId, y: VarId) -> Result<bool, Error> {
        for u in self.contexts() {
            let s = self.actual_state(&u)?;
            for &ap in self.model.domain(a) {
                if ap != s[&a] && self.solve(&u, &[(a, ap)].into())?[&y] != s[&y] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `A=1, B=2` text for a value map.
    pub fn describe(&self, v: &Vals) -> String {
        v.iter().map(|(&k, x)| format!("{}={}", self.name(k), x)).collect::<Vec<_>>().join(", ")
    }
}
