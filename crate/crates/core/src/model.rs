//! Validated causal models.
//!
//! Every structural equation is tabulated over the product of the domains of
//! the variables it mentions. Solving is then a table lookup per variable in
//! topological order, working on value indices rather than values.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::lang::ast::{EvalError, Expr};
use crate::lang::diag::{DiagKind, Diagnostic, Span};
use crate::lang::parser::{DeclBody, DomainSyntax, ModelSyntax, Spanned};
use crate::value::{ArithError, Value};
use crate::Error;

pub type VarId = usize;

/// Largest equation table accepted at validation.
pub const MAX_TABLE: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainSpec {
    Explicit,
    Auto { extras: Vec<Value> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub expr: Expr,
    pub spec: DomainSpec,
    /// Referenced variables, ascending by id.
    pub refs: Vec<VarId>,
    strides: Vec<usize>,
    table: Vec<u32>,
}

impl Equation {
    #[inline]
    pub fn lookup(&self, state: &[u32]) -> u32 {
        let mut i = 0;
        for (r, s) in self.refs.iter().zip(&self.strides) {
            i += state[*r] as usize * s;
        }
        self.table[i]
    }

    /// `Some(v)` when the equation is syntactically a bare exogenous variable.
    pub fn root_of(&self, model: &CausalModel) -> Option<VarId> {
        match &self.expr {
            Expr::Var(n) => model.id(n).filter(|&u| model.is_exogenous(u)),
            _ => None,
        }
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<Value>,
    /// `None` for exogenous variables.
    pub equation: Option<Equation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalModel {
    name: String,
    vars: Vec<Variable>,
    exo: Vec<VarId>,
    endo: Vec<VarId>,
    topo: Vec<VarId>,
    parents: Vec<Vec<VarId>>,
    index: BTreeMap<String, VarId>,
}

impl CausalModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v]
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v].name
    }

    pub fn domain(&self, v: VarId) -> &[Value] {
        &self.vars[v].domain
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn exogenous(&self) -> &[VarId] {
        &self.exo
    }

    pub fn endogenous(&self) -> &[VarId] {
        &self.endo
    }

    pub fn topo_order(&self) -> &[VarId] {
        &self.topo
    }

    pub fn is_exogenous(&self, v: VarId) -> bool {
        self.vars[v].equation.is_none()
    }

    pub fn equation(&self, v: VarId) -> Option<&Equation> {
        self.vars[v].equation.as_ref()
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<VarId, Error> {
        self.id(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn require_endogenous(&self, name: &str) -> Result<VarId, Error> {
        let v = self.require(name)?;
        if self.is_exogenous(v) {
            return Err(Error::Domain(format!("`{name}` is exogenous; an endogenous variable is required")));
        }
        Ok(v)
    }

    pub fn value_index(&self, v: VarId, val: &Value) -> Option<u32> {
        self.vars[v].domain.iter().position(|d| d == val).map(|i| i as u32)
    }

    pub fn require_value(&self, v: VarId, val: &Value) -> Result<u32, Error> {
        self.value_index(v, val).ok_or_else(|| {
            Error::Domain(format!("value {val} is outside the domain of `{}`", self.vars[v].name))
        })
    }

    pub fn value(&self, v: VarId, idx: u32) -> Value {
        self.vars[v].domain[idx as usize]
    }

    pub fn dom_size(&self, v: VarId) -> usize {
        self.vars[v].domain.len()
    }

    /// Semantic parents of `v`, ascending.
    pub fn parents_of(&self, v: VarId) -> &[VarId] {
        &self.parents[v]
    }

    /// Solves the model in place. `state` must hold the context at the
    /// exogenous positions; `iv` fixes intervened variables.
    #[inline]
    pub fn solve_into(&self, state: &mut [u32], iv: &[Option<u32>]) {
        for &v in &self.topo {
            state[v] = match iv[v] {
                Some(x) => x,
                None => self.vars[v].equation.as_ref().map(|e| e.lookup(state)).unwrap_or(0),
            };
        }
    }

    /// Number of contexts, saturating.
    pub fn context_count(&self) -> u128 {
        self.exo
            .iter()
            .fold(1u128, |acc, &u| acc.saturating_mul(self.dom_size(u) as u128))
    }

    /// Copy with the equations of `iv` replaced by constants.
    pub fn intervene(&self, iv: &[(VarId, u32)]) -> Result<CausalModel, Error> {
        let mut m = self.clone();
        for &(v, x) in iv {
            if m.is_exogenous(v) {
                return Err(Error::Domain(format!(
                    "cannot intervene on exogenous variable `{}`",
                    m.vars[v].name
                )));
            }
            if x as usize >= m.dom_size(v) {
                return Err(Error::Domain(format!("value index out of range for `{}`", m.vars[v].name)));
            }
            let val = m.value(v, x);
            m.vars[v].equation = Some(Equation {
                expr: Expr::Lit(val),
                spec: DomainSpec::Explicit,
                refs: Vec::new(),
                strides: Vec::new(),
                table: vec![x],
            });
            m.parents[v].clear();
        }
        Ok(m)
    }
}

fn diag(kind: DiagKind, msg: impl Into<String>, span: Span, src: &str) -> Diagnostic {
    Diagnostic::error(kind, msg, span, src)
}

fn check_distinct(vals: &[Spanned<Value>], src: &str, diags: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for v in vals {
        if !seen.insert(v.node) {
            diags.push(diag(DiagKind::Domain, format!("duplicate domain value {}", v.node), v.span, src));
        }
    }
}

struct Pending {
    name: Spanned<String>,
    domain: Option<DomainSyntax>,
    exo_domain: Vec<Value>,
    expr: Option<Expr>,
    refs: Vec<VarId>,
    span: Span,
}

/// Resolves names, rejects cycles and tabulates every equation.
pub fn build(syntax: ModelSyntax, src: &str) -> Result<CausalModel, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut index: BTreeMap<String, VarId> = BTreeMap::new();
    let mut kept = Vec::new();
    for d in syntax.decls {
        if index.contains_key(&d.name.node) {
            diags.push(diag(
                DiagKind::Duplicate,
                format!("`{}` is already defined", d.name.node),
                d.name.span,
                src,
            ));
            continue;
        }
        index.insert(d.name.node.clone(), kept.len());
        kept.push(d);
    }

    let mut pending = Vec::new();
    let mut ref_spans: Vec<Vec<Spanned<String>>> = Vec::new();
    for d in kept {
        match d.body {
            DeclBody::Exo(vals) => {
                check_distinct(&vals, src, &mut diags);
                pending.push(Pending {
                    name: d.name,
                    domain: None,
                    exo_domain: vals.iter().map(|v| v.node).collect(),
                    expr: None,
                    refs: Vec::new(),
                    span: d.span,
                });
                ref_spans.push(Vec::new());
            }
            DeclBody::Var { domain, expr, refs } => {
                match &domain {
                    DomainSyntax::Explicit(v) | DomainSyntax::Auto(v) => check_distinct(v, src, &mut diags),
                }
                let mut ids = BTreeSet::new();
                for r in &refs {
                    match index.get(&r.node) {
                        Some(&id) if r.node == d.name.node => {
                            diags.push(diag(
                                DiagKind::Cycle,
                                format!("`{}` refers to itself", r.node),
                                r.span,
                                src,
                            ));
                            ids.insert(id);
                        }
                        Some(&id) => {
                            ids.insert(id);
                        }
                        None => diags.push(diag(
                            DiagKind::UnknownVariable,
                            format!("unknown variable `{}`", r.node),
                            r.span,
                            src,
                        )),
                    }
                }
                pending.push(Pending {
                    name: d.name,
                    domain: Some(domain),
                    exo_domain: Vec::new(),
                    expr: Some(expr),
                    refs: ids.into_iter().collect(),
                    span: d.span,
                });
                ref_spans.push(refs);
            }
        }
    }
    if !pending.iter().any(|p| p.expr.is_some()) && diags.is_empty() {
        diags.push(diag(DiagKind::Domain, "model declares no endogenous variables", Span::new(0, 0), src));
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let topo = match topo_sort(&pending) {
        Ok(t) => t,
        Err(cycle) => {
            let names: Vec<&str> = cycle.iter().map(|&v| pending[v].name.node.as_str()).collect();
            let first = cycle[0];
            return Err(vec![diag(
                DiagKind::Cycle,
                format!("cyclic dependency: {}", names.join(" -> ")),
                pending[first].name.span,
                src,
            )]);
        }
    };

    let mut vars: Vec<Variable> = pending
        .iter()
        .map(|p| Variable { name: p.name.node.clone(), domain: p.exo_domain.clone(), equation: None })
        .collect();
    for &v in &topo {
        let p = &pending[v];
        let (Some(expr), Some(dsyn)) = (&p.expr, &p.domain) else { continue };
        let (spec, explicit) = match dsyn {
            DomainSyntax::Explicit(vals) => (DomainSpec::Explicit, Some(vals.iter().map(|s| s.node).collect())),
            DomainSyntax::Auto(extra) => (
                DomainSpec::Auto { extras: extra.iter().map(|s| s.node).collect() },
                None,
            ),
        };
        match tabulate(&vars, &p.refs, expr, &spec, explicit) {
            Ok((domain, eq)) => {
                vars[v].domain = domain;
                vars[v].equation = Some(eq);
            }
            Err((kind, msg)) => diags.push(diag(kind, format!("in `{}`: {msg}", p.name.node), p.span, src)),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(assemble(syntax.name, vars, topo))
}

fn assemble(name: String, vars: Vec<Variable>, topo: Vec<VarId>) -> CausalModel {
    let exo = (0..vars.len()).filter(|&v| vars[v].equation.is_none()).collect();
    let endo = (0..vars.len()).filter(|&v| vars[v].equation.is_some()).collect();
    let index = vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    let parents = vars
        .iter()
        .map(|v| v.equation.as_ref().map(|e| semantic_parents(&vars, e)).unwrap_or_default())
        .collect();
    CausalModel { name, vars, exo, endo, topo, parents, index }
}

/// Kahn's algorithm over syntactic references; on failure returns one cycle.
fn topo_sort(pending: &[Pending]) -> Result<Vec<VarId>, Vec<VarId>> {
    let n = pending.len();
    let mut indeg: Vec<usize> = pending.iter().map(|p| p.refs.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (v, p) in pending.iter().enumerate() {
        for &r in &p.refs {
            children[r].push(v);
        }
    }
    let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order.into_iter().filter(|&v| pending[v].expr.is_some()).collect());
    }
    // walk backwards along unresolved references until a vertex repeats
    let mut path = vec![(0..n).find(|&v| indeg[v] > 0).unwrap_or(0)];
    loop {
        let cur = *path.last().unwrap_or(&0);
        let next = pending[cur].refs.iter().copied().find(|&r| indeg[r] > 0).unwrap_or(cur);
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let mut cyc: Vec<VarId> = path[pos..].to_vec();
            cyc.reverse();
            cyc.push(cyc[0]);
            return Err(cyc);
        }
        path.push(next);
    }
}

fn strides_for(vars: &[Variable], refs: &[VarId]) -> Option<(Vec<usize>, usize)> {
    let mut strides = vec![0; refs.len()];
    let mut size: usize = 1;
    for i in (0..refs.len()).rev() {
        strides[i] = size;
        size = size.checked_mul(vars[refs[i]].domain.len())?;
    }
    Some((strides, size))
}

fn describe_assignment(vars: &[Variable], refs: &[VarId], idx: &[usize]) -> String {
    if refs.is_empty() {
        return "with no inputs".to_string();
    }
    let parts: Vec<String> = refs
        .iter()
        .zip(idx)
        .map(|(&r, &i)| format!("{}={}", vars[r].name, vars[r].domain[i]))
        .collect();
    format!("at {}", parts.join(", "))
}

type TabResult = Result<(Vec<Value>, Equation), (DiagKind, String)>;

fn tabulate(vars: &[Variable], refs: &[VarId], expr: &Expr, spec: &DomainSpec, explicit: Option<Vec<Value>>) -> TabResult {
    let (strides, size) = strides_for(vars, refs)
        .filter(|(_, s)| *s <= MAX_TABLE)
        .ok_or((DiagKind::TooLarge, format!("equation table exceeds {MAX_TABLE} entries")))?;
    let mut outputs = Vec::with_capacity(size);
    let mut idx = vec![0usize; refs.len()];
    for _ in 0..size {
        let env = |n: &str| {
            refs.iter()
                .position(|&r| vars[r].name == n)
                .map(|k| vars[refs[k]].domain[idx[k]])
        };
        match expr.eval(&env) {
            Ok(v) => outputs.push(v),
            Err(EvalError::Arith(ArithError::DivisionByZero)) => {
                return Err((
                    DiagKind::DivisionByZero,
                    format!("division by zero {}", describe_assignment(vars, refs, &idx)),
                ))
            }
            Err(EvalError::Arith(ArithError::Overflow)) => {
                return Err((
                    DiagKind::Overflow,
                    format!("arithmetic overflow {}", describe_assignment(vars, refs, &idx)),
                ))
            }
            Err(EvalError::Unbound(n)) => {
                return Err((DiagKind::UnknownVariable, format!("unknown variable `{n}`")))
            }
        }
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < vars[refs[k]].domain.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let domain = match (spec, explicit) {
        (_, Some(d)) => d,
        (DomainSpec::Auto { extras }, None) => {
            let set: BTreeSet<Value> = outputs.iter().chain(extras.iter()).copied().collect();
            set.into_iter().collect()
        }
        (DomainSpec::Explicit, None) => Vec::new(),
    };
    let pos: HashMap<Value, u32> = domain.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
    let mut table = Vec::with_capacity(size);
    let mut idx = vec![0usize; refs.len()];
    for out in &outputs {
        match pos.get(out) {
            Some(&i) => table.push(i),
            None => {
                return Err((
                    DiagKind::RangeClosure,
                    format!("value {out} {} is outside the declared domain", describe_assignment(vars, refs, &idx)),
                ))
            }
        }
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < vars[refs[k]].domain.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let eq = Equation { expr: expr.clone(), spec: spec.clone(), refs: refs.to_vec(), strides, table };
    Ok((domain, eq))
}

/// A reference is a parent iff changing it alone changes the output for some
/// setting of the other references.
fn semantic_parents(vars: &[Variable], eq: &Equation) -> Vec<VarId> {
    let mut out = Vec::new();
    for (k, &r) in eq.refs.iter().enumerate() {
        let stride = eq.strides[k];
        let n = vars[r].domain.len();
        let block = stride * n;
        let depends = (0..eq.table.len()).any(|i| {
            let digit = (i / stride) % n;
            digit == 0 && {
                let base = eq.table[i];
                (1..n).any(|d| eq.table[i + d * stride] != base)
            }
        });
        let _ = block;
        if depends {
            out.push(r);
        }
    }
    out
}
