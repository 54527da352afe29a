//! Solving, formula evaluation and graph queries over a validated model.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analyzer::{Analyzer, Assignment, Context};
use crate::lang::CausalFormula;
use crate::model::{CausalModel, VarId};
use crate::value::Value;
use crate::Error;

impl<'m> Analyzer<'m> {
    /// Full solution of the model in `ctx`, named.
    pub fn solve_named(&self, ctx: &[u32]) -> Result<Assignment, Error> {
        let s = self.actual(ctx)?;
        Ok((0..self.model.len())
            .map(|v| (self.model.var_name(v).to_string(), self.model.value(v, s[v])))
            .collect())
    }

    fn formula_iv(&self, f: &CausalFormula) -> Result<Vec<Option<u32>>, Error> {
        let mut iv = vec![None; self.model.len()];
        for (name, val) in &f.interventions {
            let v = self.model.require_endogenous(name)?;
            if iv[v].is_some() {
                return Err(Error::Precondition(format!("`{name}` is intervened on more than once")));
            }
            iv[v] = Some(self.model.require_value(v, val)?);
        }
        for (name, val) in f.atoms() {
            let v = self.model.require_endogenous(&name)?;
            self.model.require_value(v, &val)?;
        }
        Ok(iv)
    }

    fn body_holds(&self, f: &CausalFormula, state: &[u32]) -> bool {
        let m = self.model;
        f.body.eval(&|name| m.id(name).map(|v| m.value(v, state[v])).unwrap_or(Value::ZERO))
    }

    /// Whether `f` holds in context `ctx`.
    pub fn evaluate(&self, ctx: &[u32], f: &CausalFormula) -> Result<bool, Error> {
        let iv = self.formula_iv(f)?;
        let s = self.solve(ctx, &iv)?;
        Ok(self.body_holds(f, &s))
    }

    /// `None` if `f` holds in every context, else the first context where it
    /// fails.
    pub fn holds_universally(&self, f: &CausalFormula) -> Result<Option<Context>, Error> {
        let iv = self.formula_iv(f)?;
        let targets: Vec<VarId> = f.atoms().iter().filter_map(|(n, _)| self.model.id(n)).collect();
        let cut: Vec<bool> = iv.iter().map(Option::is_some).collect();
        let (positions, _) = self.relevant(&targets, &cut);
        let mut it = self.contexts_over(&positions);
        while let Some(ctx) = it.next_ctx() {
            let s = self.solve(ctx, &iv)?;
            if !self.body_holds(f, &s) {
                return Ok(Some(ctx.to_vec()));
            }
        }
        Ok(None)
    }
}

/// Parent edges `(from, to)` in declaration order of `to`, then `from`.
pub fn parent_edges(m: &CausalModel) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for v in 0..m.len() {
        for &p in m.parents_of(v) {
            out.push((m.var_name(p).to_string(), m.var_name(v).to_string()));
        }
    }
    out
}

fn children(m: &CausalModel) -> Vec<Vec<VarId>> {
    let mut ch = vec![Vec::new(); m.len()];
    for v in 0..m.len() {
        for &p in m.parents_of(v) {
            ch[p].push(v);
        }
    }
    ch
}

/// Every directed path from `from` to `to` in the parent graph, found by a
/// depth-first walk that visits children in declaration order.
pub fn paths(m: &CausalModel, from: VarId, to: VarId) -> Vec<Vec<VarId>> {
    let ch = children(m);
    let mut out = Vec::new();
    let mut path = vec![from];
    fn walk(ch: &[Vec<VarId>], to: VarId, path: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        let cur = *path.last().unwrap_or(&to);
        if cur == to {
            out.push(path.clone());
            return;
        }
        for &c in &ch[cur] {
            path.push(c);
            walk(ch, to, path, out);
            path.pop();
        }
    }
    walk(&ch, to, &mut path, &mut out);
    out
}

fn closure(m: &CausalModel, start: VarId, up: bool) -> Vec<VarId> {
    let ch = children(m);
    let mut seen = vec![false; m.len()];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        let next: &[VarId] = if up { m.parents_of(v) } else { &ch[v] };
        for &w in next {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    (0..m.len()).filter(|&v| seen[v]).collect()
}

pub fn ancestors(m: &CausalModel, v: VarId) -> Vec<VarId> {
    closure(m, v, true)
}

pub fn descendants(m: &CausalModel, v: VarId) -> Vec<VarId> {
    closure(m, v, false)
}

/// Endogenous variables whose equation is a bare exogenous variable.
pub fn roots(m: &CausalModel) -> Vec<VarId> {
    m.endogenous()
        .iter()
        .copied()
        .filter(|&v| m.equation(v).and_then(|e| e.root_of(m)).is_some())
        .collect()
}

/// A total map from input values to an output value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classifier {
    pub inputs: Vec<String>,
    pub output: String,
    /// Keyed by input values in the order of `inputs`.
    pub table: BTreeMap<Vec<Value>, Value>,
}

impl Classifier {
    pub fn classify(&self, inputs: &[Value]) -> Option<Value> {
        self.table.get(inputs).copied()
    }
}

/// Why a model fails to agree with a classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Disagreement {
    /// An endogenous variable has more than one exogenous parent.
    ExogenousParents { variable: String, parents: Vec<String> },
    /// The variable set is not inputs plus output.
    Variables { detail: String },
    /// A realizable observation the classifier labels differently.
    Observation { context: Assignment, inputs: Vec<Value>, model_output: Value, classifier_output: Value },
}

/// Endogenous variables other than `output`, in declaration order.
pub fn inputs_for(m: &CausalModel, output: VarId) -> Vec<VarId> {
    m.endogenous().iter().copied().filter(|&v| v != output).collect()
}

impl<'m> Analyzer<'m> {
    /// The classifier read off the model: for each input vector, the output
    /// under an intervention fixing every input, in the first context.
    pub fn induced_classifier(&self, output: VarId) -> Result<Classifier, Error> {
        let m = self.model;
        let inputs = inputs_for(m, output);
        let mut table = BTreeMap::new();
        let ctx = vec![0; m.exogenous().len()];
        let mut odo = crate::budget::Odometer::new(inputs.iter().map(|&v| m.dom_size(v) as u32).collect());
        while let Some(d) = odo.next() {
            let mut iv = vec![None; m.len()];
            for (i, &v) in inputs.iter().enumerate() {
                iv[v] = Some(d[i]);
            }
            let s = self.solve(&ctx, &iv)?;
            let key = inputs.iter().zip(d).map(|(&v, &x)| m.value(v, x)).collect();
            table.insert(key, m.value(output, s[output]));
        }
        Ok(Classifier { inputs: self.names(&inputs), output: m.var_name(output).to_string(), table })
    }

    /// Structural check on exogenous parents, then consistency of `h` with
    /// every realizable observation.
    pub fn agrees(&self, h: &Classifier) -> Result<Option<Disagreement>, Error> {
        let m = self.model;
        let output = m.require_endogenous(&h.output)?;
        let inputs = h.inputs.iter().map(|n| m.require_endogenous(n)).collect::<Result<Vec<_>, _>>()?;
        let mut expected = inputs_for(m, output);
        let mut got = inputs.clone();
        expected.sort_unstable();
        got.sort_unstable();
        if expected != got {
            return Ok(Some(Disagreement::Variables {
                detail: format!(
                    "classifier inputs must be every endogenous variable except `{}`",
                    h.output
                ),
            }));
        }
        for &v in m.endogenous() {
            let exo: Vec<VarId> = m.parents_of(v).iter().copied().filter(|&p| m.is_exogenous(p)).collect();
            if exo.len() > 1 {
                return Ok(Some(Disagreement::ExogenousParents {
                    variable: m.var_name(v).to_string(),
                    parents: self.names(&exo),
                }));
            }
        }
        let mut it = self.all_contexts();
        while let Some(ctx) = it.next_ctx() {
            let s = self.actual(ctx)?;
            let key: Vec<Value> = inputs.iter().map(|&v| m.value(v, s[v])).collect();
            let y = m.value(output, s[output]);
            let hy = h.classify(&key).ok_or_else(|| {
                Error::Precondition("classifier table is not total over the input domains".into())
            })?;
            if hy != y {
                return Ok(Some(Disagreement::Observation {
                    context: self.named_context(ctx),
                    inputs: key,
                    model_output: y,
                    classifier_output: hy,
                }));
            }
        }
        Ok(None)
    }
}

/// No input is a parent of another input.
pub fn independent(m: &CausalModel, output: VarId) -> bool {
    let inputs = inputs_for(m, output);
    inputs
        .iter()
        .all(|&b| m.parents_of(b).iter().all(|p| !inputs.contains(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lang::{formula::parse_formula, parse_model};

    #[test]
    fn loan_solution_for_unsuccessful_applicant() {
        let m = fixtures::loan();
        let a = Analyzer::with_default_budget(&m);
        let ctx = a.parse_context("U1=75000,U3=2500").unwrap();
        let s = a.solve_named(&ctx).unwrap();
        assert_eq!(s["X2"], Value::int(25000));
        assert_eq!(s["X4"], Value::ZERO);
        assert_eq!(s["Y"], Value::ZERO);
    }

    #[test]
    fn universal_counterexample_is_first_in_order() {
        let m = fixtures::loan();
        let a = Analyzer::with_default_budget(&m);
        let f = parse_formula("[X4<-1](Y=1)", &m).unwrap();
        let ce = a.holds_universally(&f).unwrap().unwrap();
        assert_eq!(ce, vec![0, 0]);
    }

    #[test]
    fn hiring_paths() {
        let m = fixtures::hiring();
        let p = paths(&m, m.id("A").unwrap(), m.id("Y").unwrap());
        let named: Vec<Vec<&str>> = p.iter().map(|p| p.iter().map(|&v| m.var_name(v)).collect()).collect();
        assert_eq!(named, vec![vec!["A", "B", "Y"], vec!["A", "C", "Y"]]);
        let x = m.id("B").unwrap();
        assert_eq!(paths(&m, x, x), vec![vec![x]]);
    }

    #[test]
    fn roots_are_syntactic() {
        let m = fixtures::loan();
        assert_eq!(roots(&m), vec![m.id("X1").unwrap(), m.id("X3").unwrap()]);
        let m = parse_model("model T\nexo U: {0,1}\nvar X: {0,1} = 1 - U\n").unwrap();
        assert!(roots(&m).is_empty());
    }

    #[test]
    fn ancestors_and_descendants() {
        let m = fixtures::loan();
        let names = |vs: Vec<VarId>| vs.into_iter().map(|v| m.var_name(v).to_string()).collect::<Vec<_>>();
        assert_eq!(names(ancestors(&m, m.id("X4").unwrap())), ["U1", "U3", "X1", "X3", "X2"]);
        assert_eq!(names(descendants(&m, m.id("X3").unwrap())), ["X2", "X4", "Y"]);
    }

    #[test]
    fn self_agreement_and_flipped_row() {
        let m = fixtures::loan();
        let a = Analyzer::with_default_budget(&m);
        let y = m.id("Y").unwrap();
        let mut h = a.induced_classifier(y).unwrap();
        assert_eq!(a.agrees(&h).unwrap(), None);
        let ctx = a.parse_context("U1=75000,U3=2500").unwrap();
        let s = a.actual(&ctx).unwrap();
        let key: Vec<Value> = ["X1", "X3", "X2", "X4"].iter().map(|n| m.value(m.id(n).unwrap(), s[m.id(n).unwrap()])).collect();
        h.table.insert(key, Value::ONE);
        assert!(matches!(a.agrees(&h).unwrap(), Some(Disagreement::Observation { .. })));
    }
}
