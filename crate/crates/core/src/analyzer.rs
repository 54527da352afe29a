//! Shared machinery for the enumeration-based analyses: budgeted solving,
//! relevance pruning and the direct-sufficiency memo.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde_json::json;

use crate::budget::{Budget, Odometer};
use crate::explanations::SufficientExplanation;
use crate::model::{CausalModel, VarId};
use crate::value::Value;
use crate::Error;

/// Variable/value-index pairs, ascending by variable.
pub type Setting = Vec<(VarId, u32)>;

/// Exogenous value indices, in the model's exogenous order.
pub type Context = Vec<u32>;

pub type Assignment = BTreeMap<String, Value>;

/// Outcome of a direct-sufficiency check: `None` when sufficient, otherwise
/// the first falsifying `(c, u)`.
pub(crate) type DirectVerdict = Option<(Setting, Context)>;

pub struct Analyzer<'m> {
    pub model: &'m CausalModel,
    pub budget: Budget,
    memoize: bool,
    direct_memo: Mutex<HashMap<(Setting, Setting), DirectVerdict>>,
    good_memo: Mutex<HashMap<(Context, (VarId, u32)), Vec<SufficientExplanation>>>,
}

impl<'m> Analyzer<'m> {
    pub fn new(model: &'m CausalModel, budget: Budget) -> Analyzer<'m> {
        Analyzer {
            model,
            budget,
            memoize: true,
            direct_memo: Mutex::new(HashMap::new()),
            good_memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_default_budget(model: &'m CausalModel) -> Analyzer<'m> {
        Analyzer::new(model, Budget::default())
    }

    /// Turns the direct-sufficiency memo off, for differential testing.
    pub fn without_memo(mut self) -> Analyzer<'m> {
        self.memoize = false;
        self
    }

    pub(crate) fn memo_get(&self, key: &(Setting, Setting)) -> Option<DirectVerdict> {
        if !self.memoize {
            return None;
        }
        self.direct_memo.lock().ok()?.get(key).cloned()
    }

    pub(crate) fn memo_put(&self, key: (Setting, Setting), v: DirectVerdict) {
        if self.memoize {
            if let Ok(mut m) = self.direct_memo.lock() {
                m.insert(key, v);
            }
        }
    }

    /// Good sufficient explanations, computed once per context and target.
    pub fn good_explanations_cached(
        &self,
        ctx: &[u32],
        target: (VarId, u32),
    ) -> Result<Vec<SufficientExplanation>, Error> {
        let key = (ctx.to_vec(), target);
        if self.memoize {
            if let Some(v) = self.good_memo.lock().ok().and_then(|m| m.get(&key).cloned()) {
                return Ok(v);
            }
        }
        let v = self.good_sufficient_explanations(ctx, target)?;
        if self.memoize {
            if let Ok(mut m) = self.good_memo.lock() {
                m.insert(key, v.clone());
            }
        }
        Ok(v)
    }

    pub fn memo_len(&self) -> usize {
        self.direct_memo.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn iv_mask(&self, settings: &[&[(VarId, u32)]]) -> Vec<Option<u32>> {
        let mut iv = vec![None; self.model.len()];
        for s in settings {
            for &(v, x) in s.iter() {
                iv[v] = Some(x);
            }
        }
        iv
    }

    /// Solves under `iv` in context `ctx`, charging one evaluation.
    pub fn solve(&self, ctx: &[u32], iv: &[Option<u32>]) -> Result<Vec<u32>, Error> {
        self.budget.charge(1)?;
        let mut state = vec![0u32; self.model.len()];
        for (k, &u) in self.model.exogenous().iter().enumerate() {
            state[u] = ctx[k];
        }
        self.model.solve_into(&mut state, iv);
        Ok(state)
    }

    pub fn actual(&self, ctx: &[u32]) -> Result<Vec<u32>, Error> {
        self.solve(ctx, &vec![None; self.model.len()])
    }

    /// Exogenous positions and cut endogenous variables reachable backwards
    /// from `targets` without passing through a cut variable.
    pub fn relevant(&self, targets: &[VarId], cut: &[bool]) -> (Vec<usize>, Vec<VarId>) {
        let m = self.model;
        let mut seen = vec![false; m.len()];
        let mut stack: Vec<VarId> = targets.to_vec();
        let mut cut_hit = Vec::new();
        for &t in targets {
            seen[t] = true;
        }
        while let Some(v) = stack.pop() {
            if cut[v] && !targets.contains(&v) {
                continue;
            }
            for &p in m.parents_of(v) {
                if !seen[p] {
                    seen[p] = true;
                    if cut[p] {
                        cut_hit.push(p);
                    } else {
                        stack.push(p);
                    }
                }
            }
        }
        let exo = m
            .exogenous()
            .iter()
            .enumerate()
            .filter(|(_, &u)| seen[u])
            .map(|(k, _)| k)
            .collect();
        cut_hit.sort_unstable();
        (exo, cut_hit)
    }

    /// Contexts varying only the given exogenous positions, in lexicographic
    /// order; other positions stay at their first value.
    pub fn contexts_over(&self, positions: &[usize]) -> ContextIter {
        let exo = self.model.exogenous();
        let radix = positions.iter().map(|&k| self.model.dom_size(exo[k]) as u32).collect();
        ContextIter { odo: Odometer::new(radix), positions: positions.to_vec(), ctx: vec![0; exo.len()] }
    }

    pub fn all_contexts(&self) -> ContextIter {
        let all: Vec<usize> = (0..self.model.exogenous().len()).collect();
        self.contexts_over(&all)
    }

    pub fn value_of(&self, v: VarId, idx: u32) -> Value {
        self.model.value(v, idx)
    }

    /// Named view of a setting.
    pub fn named(&self, s: &[(VarId, u32)]) -> Assignment {
        s.iter().map(|&(v, x)| (self.model.var_name(v).to_string(), self.model.value(v, x))).collect()
    }

    pub fn named_context(&self, ctx: &[u32]) -> Assignment {
        self.model
            .exogenous()
            .iter()
            .zip(ctx)
            .map(|(&u, &x)| (self.model.var_name(u).to_string(), self.model.value(u, x)))
            .collect()
    }

    pub fn names(&self, vs: &[VarId]) -> Vec<String> {
        vs.iter().map(|&v| self.model.var_name(v).to_string()).collect()
    }

    pub fn setting_text(&self, s: &[(VarId, u32)]) -> String {
        let parts: Vec<String> = s
            .iter()
            .map(|&(v, x)| format!("{}={}", self.model.var_name(v), self.model.value(v, x)))
            .collect();
        parts.join(", ")
    }

    pub fn setting_json(&self, s: &[(VarId, u32)]) -> serde_json::Value {
        json!(self.named(s))
    }

    /// Restricts a full state to the listed variables.
    pub fn restrict(&self, state: &[u32], vars: &[VarId]) -> Setting {
        vars.iter().map(|&v| (v, state[v])).collect()
    }

    /// Parses `"A=1, B=2"` into a setting over the named variables.
    pub fn parse_setting(&self, text: &str) -> Result<Setting, Error> {
        parse_setting(self.model, text)
    }

    /// Parses a context; every exogenous variable must be given exactly once.
    pub fn parse_context(&self, text: &str) -> Result<Context, Error> {
        parse_context(self.model, text)
    }
}

pub struct ContextIter {
    odo: Odometer,
    positions: Vec<usize>,
    ctx: Vec<u32>,
}

impl ContextIter {
    pub fn next_ctx(&mut self) -> Option<&[u32]> {
        let d = self.odo.next()?;
        for (i, &k) in self.positions.iter().enumerate() {
            self.ctx[k] = d[i];
        }
        Some(&self.ctx)
    }

    pub fn total(&self) -> u128 {
        self.odo.total()
    }
}

pub fn parse_setting(m: &CausalModel, text: &str) -> Result<Setting, Error> {
    let mut out: Setting = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Precondition(format!("expected NAME=VALUE, found `{part}`")))?;
        let name = name.trim();
        let v = m.require(name)?;
        let val: Value = val
            .trim()
            .parse()
            .map_err(|e: crate::value::ParseValueError| Error::Domain(e.to_string()))?;
        let idx = m.require_value(v, &val)?;
        if out.iter().any(|&(w, _)| w == v) {
            return Err(Error::Precondition(format!("`{name}` is assigned more than once")));
        }
        out.push((v, idx));
    }
    out.sort_unstable();
    Ok(out)
}

pub fn parse_context(m: &CausalModel, text: &str) -> Result<Context, Error> {
    let s = parse_setting(m, text)?;
    context_from_setting(m, &s)
}

pub fn context_from_setting(m: &CausalModel, s: &[(VarId, u32)]) -> Result<Context, Error> {
    let mut ctx = vec![None; m.exogenous().len()];
    for &(v, x) in s {
        let k = m
            .exogenous()
            .iter()
            .position(|&u| u == v)
            .ok_or_else(|| Error::Precondition(format!("`{}` is not exogenous", m.var_name(v))))?;
        ctx[k] = Some(x);
    }
    ctx.into_iter()
        .enumerate()
        .map(|(k, x)| {
            x.ok_or_else(|| {
                Error::Precondition(format!("context is missing `{}`", m.var_name(m.exogenous()[k])))
            })
        })
        .collect()
}

/// Subsets of `items` in order of size, then lexicographically by position.
pub fn subsets_by_size<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    let n = items.len();
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|&m| {
        let bits: Vec<usize> = (0..n).filter(|&i| m & (1 << i) != 0).collect();
        (bits.len(), bits)
    });
    masks
        .into_iter()
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).map(|i| items[i]).collect())
        .collect()
}

pub fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|x| b.contains(x))
}

pub fn vars_of(s: &[(VarId, u32)]) -> Vec<VarId> {
    s.iter().map(|&(v, _)| v).collect()
}

/// Union of two settings over disjoint variables, re-sorted.
pub fn merge(a: &[(VarId, u32)], b: &[(VarId, u32)]) -> Setting {
    let mut out: Setting = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_come_smallest_first() {
        let s = subsets_by_size(&[1, 2, 3]);
        assert_eq!(s.len(), 8);
        assert!(s[0].is_empty());
        assert_eq!(s[1], vec![1]);
        assert_eq!(s[4], vec![1, 2]);
        assert_eq!(s[7], vec![1, 2, 3]);
    }

    #[test]
    fn context_parsing_requires_every_exogenous_variable() {
        let m = crate::lang::parse_model("model T\nexo U: {0,1}\nexo V: {0,1}\nvar X: {0,1} = U\n").unwrap();
        assert_eq!(parse_context(&m, "V=1, U=0").unwrap(), vec![0, 1]);
        assert!(parse_context(&m, "U=0").is_err());
        assert!(parse_context(&m, "U=0,V=1,X=0").is_err());
        assert!(parse_context(&m, "U=2,V=1").is_err());
    }
}
