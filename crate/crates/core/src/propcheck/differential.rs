//! Side-by-side runs of the optimized analyses and the oracle.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analyzer::{subsets_by_size, vars_of, Analyzer, Context, Setting};
use crate::budget::{Budget, Odometer};
use crate::explanations::{contrasts, WitnessMode};
use crate::fairness::Path;
use crate::lang::parse_model;
use crate::model::{CausalModel, VarId};
use crate::propcheck::generator::{random_source, GeneratorConfig, Mode};
use crate::propcheck::oracle::{Oracle, Vals};
use crate::query::paths;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    WeaklySufficient,
    DirectlySufficient,
    StronglySufficient,
    GoodSufficientExplanations,
    CounterfactualDependence,
    GoodCounterfactualExplanations,
    CanReplace,
    ActualCause,
    OptimalCause,
    DirectCause,
    ActualCauses,
    Paths,
    Fairness,
    StandardFairness,
}

impl Predicate {
    pub const ALL: [Predicate; 14] = [
        Predicate::WeaklySufficient,
        Predicate::DirectlySufficient,
        Predicate::StronglySufficient,
        Predicate::GoodSufficientExplanations,
        Predicate::CounterfactualDependence,
        Predicate::GoodCounterfactualExplanations,
        Predicate::CanReplace,
        Predicate::ActualCause,
        Predicate::OptimalCause,
        Predicate::DirectCause,
        Predicate::ActualCauses,
        Predicate::Paths,
        Predicate::Fairness,
        Predicate::StandardFairness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::WeaklySufficient => "weakly-sufficient",
            Predicate::DirectlySufficient => "directly-sufficient",
            Predicate::StronglySufficient => "strongly-sufficient",
            Predicate::GoodSufficientExplanations => "good-sufficient-explanations",
            Predicate::CounterfactualDependence => "counterfactual-dependence",
            Predicate::GoodCounterfactualExplanations => "good-counterfactual-explanations",
            Predicate::CanReplace => "can-replace",
            Predicate::ActualCause => "actual-cause",
            Predicate::OptimalCause => "optimal-cause",
            Predicate::DirectCause => "direct-cause",
            Predicate::ActualCauses => "actual-causes",
            Predicate::Paths => "paths",
            Predicate::Fairness => "fairness",
            Predicate::StandardFairness => "standard-fairness",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discrepancy {
    pub predicate: Predicate,
    pub model: String,
    pub query: String,
    pub optimized: String,
    pub oracle: String,
}

/// Which quantifiers to enumerate on one model.
#[derive(Debug, Clone)]
pub struct Scope {
    /// Contexts for the context-dependent predicates; `None` means all.
    pub contexts: Option<Vec<Context>>,
    /// At most this many antecedent settings per predicate, taken at an even
    /// stride through the full enumeration.
    pub max_settings: usize,
    /// Protected variable for the fairness predicates.
    pub protected: Option<VarId>,
}

impl Scope {
    pub fn full(m: &CausalModel) -> Scope {
        Scope { contexts: None, max_settings: usize::MAX, protected: m.endogenous().first().copied() }
    }
}

pub struct Differential<'a, 'm> {
    pub a: &'a Analyzer<'m>,
    pub o: &'a Oracle<'m>,
    pub name: String,
    pub y: VarId,
    scope: Scope,
}

fn text(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

impl<'a, 'm> Differential<'a, 'm> {
    pub fn new(a: &'a Analyzer<'m>, o: &'a Oracle<'m>, name: &str, y: VarId, scope: Scope) -> Differential<'a, 'm> {
        Differential { a, o, name: name.to_string(), y, scope }
    }

    fn m(&self) -> &'m CausalModel {
        self.a.model
    }

    fn vals(&self, s: &[(VarId, u32)]) -> Vals {
        s.iter().map(|&(v, i)| (v, self.m().value(v, i))).collect()
    }

    fn ctx_vals(&self, ctx: &[u32]) -> Vals {
        self.m().exogenous().iter().zip(ctx).map(|(&v, &i)| (v, self.m().value(v, i))).collect()
    }

    fn contexts(&self) -> Vec<Context> {
        match &self.scope.contexts {
            Some(c) => c.clone(),
            None => {
                let mut out = Vec::new();
                let mut it = self.a.all_contexts();
                while let Some(c) = it.next_ctx() {
                    out.push(c.to_vec());
                }
                out
            }
        }
    }

    fn others(&self) -> Vec<VarId> {
        self.m().endogenous().iter().copied().filter(|&v| v != self.y).collect()
    }

    fn thin<T>(&self, items: Vec<T>) -> Vec<T> {
        let cap = self.scope.max_settings.max(1);
        if items.len() <= cap {
            return items;
        }
        let stride = items.len().div_ceil(cap);
        items.into_iter().step_by(stride).collect()
    }

    /// Every assignment to every subset of the non-output variables.
    fn settings(&self) -> Vec<Setting> {
        let mut out = Vec::new();
        for xs in subsets_by_size(&self.others()) {
            let radix: Vec<u32> = xs.iter().map(|&v| self.m().dom_size(v) as u32).collect();
            let mut odo = Odometer::new(radix);
            while let Some(d) = odo.next() {
                out.push(xs.iter().zip(d).map(|(&v, &k)| (v, k)).collect());
            }
        }
        self.thin(out)
    }

    fn targets(&self) -> Vec<(VarId, u32)> {
        (0..self.m().dom_size(self.y) as u32).map(|k| (self.y, k)).collect()
    }

    fn query(&self, parts: &[(&str, String)]) -> String {
        parts.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join("; ")
    }

    /// Records a disagreement and gives the next instance fresh budgets.
    fn diff(&self, p: Predicate, query: String, optimized: String, oracle: String, out: &mut Vec<Discrepancy>) {
        self.a.budget.reset();
        self.o.budget.reset();
        if optimized != oracle {
            out.push(Discrepancy { predicate: p, model: self.name.clone(), query, optimized, oracle });
        }
    }

    /// Runs one predicate; returns the number of compared instances and the
    /// disagreements.
    pub fn run(&self, p: Predicate) -> Result<(u64, Vec<Discrepancy>), Error> {
        let mut out = Vec::new();
        let mut n = 0u64;
        self.a.budget.reset();
        self.o.budget.reset();
        match p {
            Predicate::WeaklySufficient | Predicate::DirectlySufficient => {
                for x in self.settings() {
                    for t in self.targets() {
                        let (mine, theirs) = if p == Predicate::WeaklySufficient {
                            (self.a.weakly_sufficient(&x, &[t])?.is_none(), self.o.weakly_sufficient(&self.vals(&x), &self.vals(&[t]))?.is_none())
                        } else {
                            (self.a.directly_sufficient(&x, &[t])?.is_none(), self.o.directly_sufficient(&self.vals(&x), &self.vals(&[t]))?)
                        };
                        n += 1;
                        let q = self.query(&[("x", self.a.setting_text(&x)), ("target", self.a.setting_text(&[t]))]);
                        self.diff(p, q, text(mine), text(theirs), &mut out);
                    }
                }
            }
            Predicate::StronglySufficient => {
                for x in self.settings() {
                    let xv = vars_of(&x);
                    let rest: Vec<VarId> = self.others().into_iter().filter(|v| !xv.contains(v)).collect();
                    for mut net in subsets_by_size(&rest) {
                        net.push(self.y);
                        net.sort_unstable();
                        for t in self.targets() {
                            let mine = self.a.strongly_sufficient(&x, &[t], &net)?.is_ok();
                            let theirs = self.o.strongly_sufficient(&self.vals(&x), &self.vals(&[t]), &net)?;
                            n += 1;
                            let q = self.query(&[
                                ("x", self.a.setting_text(&x)),
                                ("network", self.a.names(&net).join(",")),
                                ("target", self.a.setting_text(&[t])),
                            ]);
                            self.diff(p, q, text(mine), text(theirs), &mut out);
                        }
                    }
                }
            }
            Predicate::Paths => {
                for &a in self.m().endogenous() {
                    if a == self.y {
                        continue;
                    }
                    let mut mine = paths(self.m(), a, self.y);
                    mine.sort();
                    let theirs = self.o.paths(a, self.y)?;
                    n += 1;
                    let show = |ps: &[Path]| format!("{ps:?}");
                    let q = self.query(&[("from", self.m().var_name(a).to_string())]);
                    self.diff(p, q, show(&mine), show(&theirs), &mut out);
                }
            }
            Predicate::Fairness => {
                let Some(a) = self.scope.protected.filter(|&a| a != self.y) else { return Ok((0, out)) };
                let all = paths(self.m(), a, self.y);
                for unfair in subsets_by_size(&(0..all.len()).collect::<Vec<_>>()) {
                    let unfair: Vec<Path> = unfair.iter().map(|&i| all[i].clone()).collect();
                    let mine = self.a.is_fair(a, &unfair, self.y)?.fair;
                    let theirs = self.o.is_fair(a, &unfair, self.y)?;
                    n += 1;
                    let q = self.query(&[
                        ("protected", self.m().var_name(a).to_string()),
                        ("unfair", unfair.iter().map(|p| crate::fairness::path_text(self.m(), p)).collect::<Vec<_>>().join(" | ")),
                    ]);
                    self.diff(p, q, text(mine), text(theirs), &mut out);
                }
            }
            Predicate::StandardFairness => {
                let Some(a) = self.scope.protected.filter(|&a| a != self.y) else { return Ok((0, out)) };
                let mine = self.a.standardly_counterfactually_fair(a, self.y)?.is_none();
                let theirs = self.o.standardly_counterfactually_fair(a, self.y)?;
                n += 1;
                self.diff(p, self.query(&[("protected", self.m().var_name(a).to_string())]), text(mine), text(theirs), &mut out);
            }
            _ => {
                for ctx in self.contexts() {
                    n += self.run_in_context(p, &ctx, &mut out)?;
                }
            }
        }
        Ok((n, out))
    }

    fn run_in_context(&self, p: Predicate, ctx: &[u32], out: &mut Vec<Discrepancy>) -> Result<u64, Error> {
        let a = self.a;
        let o = self.o;
        let u = self.ctx_vals(ctx);
        let state = a.actual(ctx)?;
        let t = (self.y, state[self.y]);
        let ot = (self.y, self.m().value(self.y, t.1));
        let cq = format!("{:?}", a.named_context(ctx));
        let actual_xs: Vec<Setting> =
            self.thin(subsets_by_size(&self.others()).into_iter().filter(|s| !s.is_empty()).map(|xs| a.restrict(&state, &xs)).collect());
        let mut n = 0u64;
        match p {
            Predicate::GoodSufficientExplanations => {
                let mine: BTreeSet<(Vals, Vec<VarId>)> = a
                    .good_sufficient_explanations(ctx, t)?
                    .into_iter()
                    .map(|e| (self.vals(&e.antecedent), e.network))
                    .collect();
                let theirs: BTreeSet<(Vals, Vec<VarId>)> =
                    o.good_sufficient_explanations(&u, ot)?.into_iter().map(|e| (e.antecedent, e.network)).collect();
                n += 1;
                self.diff(p, self.query(&[("context", cq)]), format!("{mine:?}"), format!("{theirs:?}"), out);
            }
            Predicate::GoodCounterfactualExplanations => {
                let mine: BTreeSet<(Vals, Vals, Vals, Vec<VarId>)> = a
                    .good_counterfactual_explanations(ctx, t)?
                    .into_iter()
                    .map(|e| (self.vals(&e.cause), self.vals(&e.contrast), self.vals(&e.witness), e.network))
                    .collect();
                let theirs: BTreeSet<(Vals, Vals, Vals, Vec<VarId>)> = o
                    .good_counterfactual_explanations(&u, ot)?
                    .into_iter()
                    .map(|e| (e.cause, e.contrast, e.witness, e.network))
                    .collect();
                n += 1;
                self.diff(p, self.query(&[("context", cq)]), format!("{mine:?}"), format!("{theirs:?}"), out);
            }
            Predicate::CounterfactualDependence => {
                for x in &actual_xs {
                    for xp in self.thin(contrasts(a, x)) {
                        for mode in [WitnessMode::Any, WitnessMode::Empty, WitnessMode::AllOthers, WitnessMode::Intermediate] {
                            let mine = a.counterfactually_depends(ctx, x, &xp, t, mode)?.holds;
                            let theirs = o.counterfactually_depends(&u, &self.vals(x), &self.vals(&xp), ot, mode)?;
                            n += 1;
                            let q = self.query(&[
                                ("context", cq.clone()),
                                ("x", a.setting_text(x)),
                                ("contrast", a.setting_text(&xp)),
                                ("mode", format!("{mode:?}")),
                            ]);
                            self.diff(p, q, text(mine), text(theirs), out);
                        }
                    }
                }
            }
            Predicate::CanReplace => {
                let oracle_good = o.good_sufficient_explanations(&u, ot)?;
                for e in a.good_sufficient_explanations(ctx, t)? {
                    let oe = oracle_good
                        .iter()
                        .find(|f| f.antecedent == self.vals(&e.antecedent) && f.network == e.network)
                        .cloned()
                        .unwrap_or(crate::propcheck::oracle::OSe { antecedent: self.vals(&e.antecedent), network: e.network.clone() });
                    for sub in subsets_by_size(&e.antecedent).into_iter().filter(|s| !s.is_empty()) {
                        for xp in contrasts(a, &sub) {
                            let mine = a.can_replace(&e, &sub, &xp)?.is_some();
                            let theirs = o.can_replace(&oe, ot, &self.vals(&xp))?;
                            n += 1;
                            let q = self.query(&[
                                ("context", cq.clone()),
                                ("explanation", a.se_text(&e)),
                                ("x", a.setting_text(&sub)),
                                ("contrast", a.setting_text(&xp)),
                            ]);
                            self.diff(p, q, text(mine), text(theirs), out);
                        }
                    }
                }
            }
            Predicate::ActualCause => {
                for x in &actual_xs {
                    for xp in self.thin(contrasts(a, x)) {
                        let mine = a.actual_cause(ctx, x, &xp, t, false)?.holds;
                        let theirs = o.actual_cause(&u, &self.vals(x), &self.vals(&xp), ot)?;
                        n += 1;
                        let q = self.query(&[("context", cq.clone()), ("x", a.setting_text(x)), ("contrast", a.setting_text(&xp))]);
                        self.diff(p, q, text(mine), text(theirs), out);
                    }
                }
            }
            Predicate::OptimalCause | Predicate::DirectCause => {
                for x in &actual_xs {
                    let (mine, theirs) = if p == Predicate::OptimalCause {
                        (a.optimal_cause(ctx, x, t, false)?.holds, o.optimal_cause(&u, &self.vals(x), ot)?)
                    } else {
                        (a.direct_cause(ctx, x, t, false)?.holds, o.direct_cause(&u, &self.vals(x), ot)?)
                    };
                    n += 1;
                    let q = self.query(&[("context", cq.clone()), ("x", a.setting_text(x))]);
                    self.diff(p, q, text(mine), text(theirs), out);
                }
            }
            Predicate::ActualCauses => {
                let mut mine: Vec<(Vals, Vals)> = a
                    .enumerate_actual_causes(ctx, t)?
                    .into_iter()
                    .map(|s| (self.vals(&s.cause), self.vals(s.contrast.as_deref().unwrap_or(&[]))))
                    .collect();
                mine.sort();
                let theirs = o.actual_causes(&u, ot)?;
                n += 1;
                self.diff(p, self.query(&[("context", cq)]), format!("{mine:?}"), format!("{theirs:?}"), out);
            }
            _ => {}
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PredicateSummary {
    pub models: usize,
    pub instances: u64,
    pub discrepancies: Vec<Discrepancy>,
}

/// Seeds of the random models, drawn from `seed`. Sizes run from 2 to 4
/// endogenous variables; a third of the models satisfy Independence.
pub fn random_sources(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(2..=4);
            let mode = if i % 3 == 2 { Mode::Independence } else { Mode::General };
            random_source(&GeneratorConfig::new(rng.random(), n, mode))
        })
        .collect()
}

/// Compares every predicate on one model and adds the results to `acc`.
pub fn compare_model(
    name: &str,
    m: &CausalModel,
    y: VarId,
    scope: Scope,
    predicates: &[Predicate],
    acc: &mut std::collections::BTreeMap<Predicate, PredicateSummary>,
) -> Result<(), Error> {
    let a = Analyzer::new(m, Budget::new(crate::budget::DEFAULT_BUDGET));
    let o = Oracle::new(m);
    let d = Differential::new(&a, &o, name, y, scope);
    for &p in predicates {
        let (n, ds) = d.run(p)?;
        let s = acc.entry(p).or_default();
        if n > 0 {
            s.models += 1;
        }
        s.instances += n;
        s.discrepancies.extend(ds);
    }
    Ok(())
}

/// Every predicate on `count` random models drawn from `seed`. The output is
/// the last variable of each model.
pub fn random_differential(seed: u64, count: usize) -> Result<std::collections::BTreeMap<Predicate, PredicateSummary>, Error> {
    let mut acc = std::collections::BTreeMap::new();
    for (i, src) in random_sources(seed, count).iter().enumerate() {
        let m = parse_model(src)?;
        let y = *m.endogenous().last().expect("generated models have endogenous variables");
        compare_model(&format!("random #{i}\n{src}"), &m, y, Scope::full(&m), &Predicate::ALL, &mut acc)?;
    }
    Ok(acc)
}

/// The bundled models. Fire, hiring and shortcut are compared in full.
/// Loan is compared at the two applicant contexts with thinned settings;
/// its fairness and cause-listing predicates quantify over every context
/// or every contrast and are left to the smaller models.
pub fn fixture_differential() -> Result<std::collections::BTreeMap<Predicate, PredicateSummary>, Error> {
    use crate::fixtures;
    let mut acc = std::collections::BTreeMap::new();
    for (name, m, y) in [("fire", fixtures::fire(), "B"), ("hiring", fixtures::hiring(), "Y"), ("shortcut", fixtures::shortcut(), "Y")] {
        let y = m.require(y)?;
        compare_model(name, &m, y, Scope::full(&m), &Predicate::ALL, &mut acc)?;
    }
    let m = fixtures::loan();
    let y = m.require("Y")?;
    let contexts = vec![
        crate::analyzer::parse_context(&m, "U1=75000,U3=2500")?,
        crate::analyzer::parse_context(&m, "U1=250000,U3=50000")?,
    ];
    let cheap = [
        Predicate::WeaklySufficient,
        Predicate::DirectlySufficient,
        Predicate::StronglySufficient,
        Predicate::GoodSufficientExplanations,
        Predicate::CounterfactualDependence,
        Predicate::GoodCounterfactualExplanations,
        Predicate::CanReplace,
        Predicate::Paths,
    ];
    let scope = Scope { contexts: Some(contexts.clone()), max_settings: 40, protected: None };
    compare_model("loan", &m, y, scope, &cheap, &mut acc)?;
    let scope = Scope { contexts: Some(contexts), max_settings: 4, protected: None };
    compare_model("loan", &m, y, scope, &[Predicate::ActualCause, Predicate::OptimalCause, Predicate::DirectCause], &mut acc)?;
    Ok(acc)
}
