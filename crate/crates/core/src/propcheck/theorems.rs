//! Brute-force checks of the structural results on random models.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::analyzer::{subsets_by_size, vars_of, Analyzer, Assignment, Context, Setting};
use crate::budget::Budget;
use crate::explanations::{contrasts, CounterfactualExplanation, WitnessMode};
use crate::lang::parse_model;
use crate::model::{CausalModel, VarId};
use crate::propcheck::oracle::{Oracle, OSe, Vals};
use crate::propcheck::generator::{random_source, GeneratorConfig, Mode, RNG_NAME};
use crate::query::roots;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// Direct sufficiency gives strong sufficiency along some network, which
    /// gives weak sufficiency.
    SufficiencyChain,
    /// Under Independence weak, strong and direct sufficiency coincide.
    IndependenceSufficiency,
    /// Counterfactual dependence holds exactly when a good counterfactual
    /// explanation with the same cause and contrast exists.
    DependenceGoodExplanation,
    /// Under Independence direct, standard and intermediate-witness
    /// counterfactual dependence coincide.
    IndependenceDependence,
    /// A dominating explanation that keeps only part of the witness already
    /// makes the contrast a replacement.
    ReplacementWitnessSubset,
    /// Every good counterfactual explanation contains an actual cause.
    ExplanationContainsCause,
    /// A direct cause is an actual cause for some contrast.
    DirectThenActual,
    /// Under Independence direct causes, actual causes for some contrast and
    /// parts of good sufficient explanations coincide.
    IndependenceCausation,
    /// Intervening on every root variable fixes the whole solution,
    /// independently of the context.
    RootsFixSolution,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::SufficiencyChain,
        TheoremId::IndependenceSufficiency,
        TheoremId::DependenceGoodExplanation,
        TheoremId::IndependenceDependence,
        TheoremId::ReplacementWitnessSubset,
        TheoremId::ExplanationContainsCause,
        TheoremId::DirectThenActual,
        TheoremId::IndependenceCausation,
        TheoremId::RootsFixSolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::SufficiencyChain => "sufficiency-chain",
            TheoremId::IndependenceSufficiency => "independence-sufficiency",
            TheoremId::DependenceGoodExplanation => "dependence-good-explanation",
            TheoremId::IndependenceDependence => "independence-dependence",
            TheoremId::ReplacementWitnessSubset => "replacement-witness-subset",
            TheoremId::ExplanationContainsCause => "explanation-contains-cause",
            TheoremId::DirectThenActual => "direct-then-actual",
            TheoremId::IndependenceCausation => "independence-causation",
            TheoremId::RootsFixSolution => "roots-fix-solution",
        }
    }

    /// Results that only hold for models satisfying Independence.
    pub fn needs_independence(self) -> bool {
        matches!(
            self,
            TheoremId::IndependenceSufficiency | TheoremId::IndependenceDependence | TheoremId::IndependenceCausation
        )
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TheoremId {
    type Err = String;
    fn from_str(s: &str) -> Result<TheoremId, String> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = TheoremId::ALL.iter().map(|t| t.as_str()).collect();
                format!("unknown theorem `{s}` (expected one of: {})", names.join(", "))
            })
    }
}

/// How the three results whose proofs use weaker conventions than their
/// statements are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reading {
    /// The definitions as stated: goodness by set domination, contrasts
    /// differing in every variable.
    Definitions,
    /// The conventions the proofs rely on: goodness of a counterfactual
    /// explanation means its cause set is minimal, and a contrast only has to
    /// differ somewhere.
    Proofs,
}

impl Reading {
    pub fn as_str(self) -> &'static str {
        match self {
            Reading::Definitions => "definitions",
            Reading::Proofs => "proofs",
        }
    }
}

impl std::str::FromStr for Reading {
    type Err = String;
    fn from_str(s: &str) -> Result<Reading, String> {
        match s {
            "definitions" => Ok(Reading::Definitions),
            "proofs" => Ok(Reading::Proofs),
            _ => Err(format!("unknown reading `{s}` (expected definitions or proofs)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Endogenous variables per model, drawn from 2 to this value.
    pub max_endogenous: usize,
    pub max_domain: u32,
    /// Mode for results that do not need Independence.
    pub mode: Mode,
    /// Run Independence-only results on general models, expecting failures.
    pub negative_control: bool,
    pub reading: Reading,
    pub budget: u64,
}

impl SuiteConfig {
    pub fn new(seed: u64, trials: usize) -> SuiteConfig {
        SuiteConfig {
            seed,
            trials,
            max_endogenous: 4,
            max_domain: 3,
            mode: Mode::General,
            negative_control: false,
            reading: Reading::Definitions,
            budget: crate::budget::DEFAULT_BUDGET,
        }
    }

    fn mode_for(&self, id: TheoremId) -> Mode {
        if id.needs_independence() {
            if self.negative_control {
                Mode::General
            } else {
                Mode::Independence
            }
        } else {
            self.mode
        }
    }
}

/// One checked instance, stored by name so it can be replayed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Assignment>,
    #[serde(default, skip_serializing_if = "Assignment::is_empty")]
    pub x: Assignment,
    #[serde(default, skip_serializing_if = "Assignment::is_empty")]
    pub contrast: Assignment,
    #[serde(default, skip_serializing_if = "Assignment::is_empty")]
    pub witness: Assignment,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub network: Vec<String>,
    pub target: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub model_dsl: String,
    pub query: Query,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub rng: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub mode: Mode,
    pub negative_control: bool,
    pub reading: Reading,
    pub instances: u64,
    pub failures: Vec<Failure>,
    /// Trials abandoned because the budget ran out.
    pub budget_exceeded: Vec<usize>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        if self.negative_control {
            !self.failures.is_empty()
        } else {
            self.failures.is_empty()
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "theorem": self.theorem,
            "rng": self.rng,
            "seed": self.seed,
            "trials": self.trials,
            "mode": self.mode,
            "negative_control": self.negative_control,
            "reading": self.reading,
            "instances": self.instances,
            "passed": self.passed(),
            "failures": self.failures.iter().map(|f| json!({
                "trial": f.trial,
                "model_dsl": f.model_dsl,
                "context": f.query.context,
                "detail": {
                    "query": f.query,
                    "expected": f.expected,
                    "actual": f.actual,
                },
            })).collect::<Vec<_>>(),
            "budget_exceeded": self.budget_exceeded,
        })
    }
}

/// `(expected, actual)` when an instance violates the result.
type Verdict = Option<(String, String)>;

struct Checker<'a, 'm> {
    a: &'a Analyzer<'m>,
    y: VarId,
    others: Vec<VarId>,
    reading: Reading,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

impl<'a, 'm> Checker<'a, 'm> {
    fn new(a: &'a Analyzer<'m>, y: VarId, reading: Reading) -> Checker<'a, 'm> {
        let others = a.model.endogenous().iter().copied().filter(|&v| v != y).collect();
        Checker { a, y, others, reading }
    }

    /// Some counterfactual explanation has cause `x` and contrast `xp`.
    fn explanation_exists(&self, state: &[u32], x: &[(VarId, u32)], xp: &[(VarId, u32)], y: (VarId, u32)) -> Result<bool, Error> {
        let xv = vars_of(x);
        let rest: Vec<VarId> = self.others.iter().copied().filter(|v| !xv.contains(v)).collect();
        for ws in subsets_by_size(&rest) {
            let free: Vec<VarId> = rest.iter().copied().filter(|v| !ws.contains(v)).collect();
            for mut ns in subsets_by_size(&free) {
                ns.push(y.0);
                ns.sort_unstable();
                let found = self.a.explanations_for_triple(state, &xv, &ws, &ns, y)?;
                if found.iter().any(|e| e.contrast == xp) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// An explanation exists for `(x, xp)` and for no smaller restriction.
    fn minimal_explanation_exists(&self, ctx: &[u32], x: &[(VarId, u32)], xp: &[(VarId, u32)], y: (VarId, u32)) -> Result<bool, Error> {
        let state = self.a.actual(ctx)?;
        if !self.explanation_exists(&state, x, xp, y)? {
            return Ok(false);
        }
        let idx: Vec<usize> = (0..x.len()).collect();
        for sub in subsets_by_size(&idx) {
            if sub.is_empty() || sub.len() == x.len() {
                continue;
            }
            let sx: Setting = sub.iter().map(|&i| x[i]).collect();
            let sxp: Setting = sub.iter().map(|&i| xp[i]).collect();
            if self.explanation_exists(&state, &sx, &sxp, y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn query(&self, ctx: Option<&[u32]>, x: &[(VarId, u32)], target: (VarId, u32)) -> Query {
        Query {
            context: ctx.map(|c| self.a.named_context(c)),
            x: self.a.named(x),
            target: self.a.named(&[target]),
            ..Query::default()
        }
    }

    /// Every setting of every subset of the non-output variables.
    fn all_settings(&self) -> Vec<Setting> {
        let mut out = Vec::new();
        for xs in subsets_by_size(&self.others) {
            let radix = xs.iter().map(|&v| self.a.model.dom_size(v) as u32).collect();
            let mut odo = crate::budget::Odometer::new(radix);
            while let Some(d) = odo.next() {
                out.push(xs.iter().zip(d).map(|(&v, &k)| (v, k)).collect());
            }
        }
        out
    }

    fn networks_without(&self, xs: &[VarId]) -> Vec<Vec<VarId>> {
        let rest: Vec<VarId> = self.others.iter().copied().filter(|v| !xs.contains(v)).collect();
        subsets_by_size(&rest)
            .into_iter()
            .map(|mut n| {
                n.push(self.y);
                n.sort_unstable();
                n
            })
            .collect()
    }

    fn sufficiency_levels(&self, x: &[(VarId, u32)], y: (VarId, u32)) -> Result<(bool, bool, bool), Error> {
        let weak = self.a.weakly_sufficient(x, &[y])?.is_none();
        let direct = self.a.directly_sufficient(x, &[y])?.is_none();
        let mut strong = false;
        for n in self.networks_without(&vars_of(x)) {
            if self.a.strongly_sufficient(x, &[y], &n)?.is_ok() {
                strong = true;
                break;
            }
        }
        Ok((weak, strong, direct))
    }

    fn sufficiency_chain(&self, x: &[(VarId, u32)], y: (VarId, u32)) -> Result<Verdict, Error> {
        let (weak, strong, direct) = self.sufficiency_levels(x, y)?;
        if direct && !strong {
            return Ok(Some(("directly sufficient implies strongly sufficient along some network".into(), "not strongly sufficient along any network".into())));
        }
        if strong && !weak {
            return Ok(Some(("strongly sufficient implies weakly sufficient".into(), "not weakly sufficient".into())));
        }
        Ok(None)
    }

    fn independence_sufficiency(&self, x: &[(VarId, u32)], y: (VarId, u32)) -> Result<Verdict, Error> {
        let (weak, strong, direct) = self.sufficiency_levels(x, y)?;
        if weak == strong && strong == direct {
            return Ok(None);
        }
        Ok(Some((
            "weak, strong and direct sufficiency agree".into(),
            format!("weak {}, strong {}, direct {}", yes_no(weak), yes_no(strong), yes_no(direct)),
        )))
    }

    fn dependence_good_explanation(
        &self,
        ctx: &[u32],
        x: &[(VarId, u32)],
        xp: &[(VarId, u32)],
        y: (VarId, u32),
        good: &[CounterfactualExplanation],
    ) -> Result<Verdict, Error> {
        let dep = self.a.counterfactually_depends(ctx, x, xp, y, WitnessMode::Any)?.holds;
        let ce = match self.reading {
            Reading::Definitions => good.iter().any(|e| e.cause == x && e.contrast == xp),
            Reading::Proofs => self.minimal_explanation_exists(ctx, x, xp, y)?,
        };
        if dep == ce {
            return Ok(None);
        }
        Ok(Some((
            "counterfactual dependence iff a good counterfactual explanation with this cause and contrast".into(),
            format!("dependence {}, good explanation {}", yes_no(dep), if ce { "exists" } else { "missing" }),
        )))
    }

    fn independence_dependence(&self, ctx: &[u32], x: &[(VarId, u32)], xp: &[(VarId, u32)], y: (VarId, u32)) -> Result<Verdict, Error> {
        let direct = self.a.counterfactually_depends(ctx, x, xp, y, WitnessMode::AllOthers)?.holds;
        let standard = self.a.counterfactually_depends(ctx, x, xp, y, WitnessMode::Empty)?.holds;
        let free = self.others.len() - x.len();
        let inter = if free >= 2 {
            Some(self.a.counterfactually_depends(ctx, x, xp, y, WitnessMode::Intermediate)?.holds)
        } else {
            None
        };
        if direct == standard && inter.is_none_or(|i| i == direct) {
            return Ok(None);
        }
        Ok(Some((
            "direct, standard and intermediate dependence agree".into(),
            format!(
                "direct {}, standard {}, intermediate {}",
                yes_no(direct),
                yes_no(standard),
                inter.map(yes_no).unwrap_or("not applicable")
            ),
        )))
    }

    /// For a sufficient explanation `((X=x, W=w), N)` and contrast `xp`: if
    /// some `((X=xp, A=w|A), B)` with `A ⊆ W`, `B ⊆ N` explains the target,
    /// replacement must succeed.
    fn replacement_witness_subset(
        &self,
        x: &[(VarId, u32)],
        w: &[(VarId, u32)],
        network: &[VarId],
        xp: &[(VarId, u32)],
        y: (VarId, u32),
    ) -> Result<Verdict, Error> {
        let mut premise = None;
        'search: for a_sub in subsets_by_size(w) {
            let alt = crate::analyzer::merge(xp, &a_sub);
            let rest: Vec<VarId> = network.iter().copied().filter(|&v| v != y.0).collect();
            for mut b in subsets_by_size(&rest) {
                b.push(y.0);
                b.sort_unstable();
                if self.a.strongly_sufficient(&alt, &[y], &b)?.is_ok() {
                    premise = Some((a_sub.clone(), b));
                    break 'search;
                }
            }
        }
        let Some((a_sub, b)) = premise else { return Ok(None) };
        let e = self.explanation(x, w, network, y)?;
        if self.a.can_replace(&e, x, xp)?.is_some() {
            return Ok(None);
        }
        Ok(Some((
            format!(
                "replacement succeeds: ({}) explains the target along {:?}",
                self.a.setting_text(&crate::analyzer::merge(xp, &a_sub)),
                self.a.names(&b)
            ),
            "replacement fails".into(),
        )))
    }

    fn explanation(
        &self,
        x: &[(VarId, u32)],
        w: &[(VarId, u32)],
        network: &[VarId],
        y: (VarId, u32),
    ) -> Result<crate::explanations::SufficientExplanation, Error> {
        let ante = crate::analyzer::merge(x, w);
        let values = self
            .a
            .strongly_sufficient(&ante, &[y], network)?
            .map_err(|_| Error::Precondition("not a sufficient explanation".into()))?;
        Ok(crate::explanations::SufficientExplanation {
            antecedent: ante,
            network: network.to_vec(),
            network_values: values,
            target: y,
            actual: false,
        })
    }

    fn explanation_contains_cause(&self, ctx: &[u32], e: &CounterfactualExplanation) -> Result<Verdict, Error> {
        let idx: Vec<usize> = (0..e.cause.len()).collect();
        for sub in subsets_by_size(&idx).into_iter().filter(|s| !s.is_empty()) {
            let x2: Setting = sub.iter().map(|&i| e.cause[i]).collect();
            let xp2: Setting = sub.iter().map(|&i| e.contrast[i]).collect();
            if self.a.actual_cause(ctx, &x2, &xp2, e.target, false)?.holds {
                return Ok(None);
            }
        }
        Ok(Some((
            "some part of the cause is an actual cause for the restricted contrast".into(),
            "no part is an actual cause".into(),
        )))
    }

    fn some_actual_cause(&self, ctx: &[u32], x: &[(VarId, u32)], y: (VarId, u32)) -> Result<bool, Error> {
        if self.reading == Reading::Proofs {
            return self.some_cause_any_contrast(ctx, x, y);
        }
        for xp in contrasts(self.a, x) {
            if self.a.actual_cause(ctx, x, &xp, y, false)?.holds {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Some good explanation containing `x` in which some `xp != x`, possibly
    /// agreeing with `x` on a few variables, cannot replace it.
    fn some_cause_any_contrast(&self, ctx: &[u32], x: &[(VarId, u32)], y: (VarId, u32)) -> Result<bool, Error> {
        let xv = vars_of(x);
        let radix: Vec<u32> = xv.iter().map(|&v| self.a.model.dom_size(v) as u32).collect();
        for e in self.a.good_explanations_cached(ctx, y)? {
            if !crate::analyzer::is_subset(&xv, &e.antecedent_vars()) {
                continue;
            }
            let mut odo = crate::budget::Odometer::new(radix.clone());
            while let Some(d) = odo.next() {
                let xp: Setting = xv.iter().zip(d).map(|(&v, &k)| (v, k)).collect();
                if xp != x && self.a.can_replace(&e, x, &xp)?.is_none() {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn direct_then_actual(&self, ctx: &[u32], x: &[(VarId, u32)], y: (VarId, u32)) -> Result<Verdict, Error> {
        if !self.a.direct_cause(ctx, x, y, false)?.holds || self.some_actual_cause(ctx, x, y)? {
            return Ok(None);
        }
        Ok(Some((
            "a direct cause is an actual cause for some contrast".into(),
            "direct cause, but no contrast is certified".into(),
        )))
    }

    fn independence_causation(&self, ctx: &[u32], x: &[(VarId, u32)], y: (VarId, u32)) -> Result<Verdict, Error> {
        let direct = self.a.direct_cause(ctx, x, y, false)?.holds;
        let actual = self.some_actual_cause(ctx, x, y)?;
        let xv = vars_of(x);
        let part = self
            .a
            .good_explanations_cached(ctx, y)?
            .iter()
            .any(|e| crate::analyzer::is_subset(&xv, &e.antecedent_vars()));
        if direct == actual && actual == part {
            return Ok(None);
        }
        Ok(Some((
            "direct cause, actual cause for some contrast and part of a good explanation agree".into(),
            format!("direct {}, actual {}, part {}", yes_no(direct), yes_no(actual), yes_no(part)),
        )))
    }

    fn roots_fix_solution(&self, r: &[(VarId, u32)]) -> Result<Verdict, Error> {
        let iv = self.a.iv_mask(&[r]);
        let endo = self.a.model.endogenous();
        let mut first: Option<Vec<u32>> = None;
        let mut it = self.a.all_contexts();
        while let Some(ctx) = it.next_ctx() {
            let s = self.a.solve(ctx, &iv)?;
            let vals: Vec<u32> = endo.iter().map(|&v| s[v]).collect();
            match &first {
                None => first = Some(vals),
                Some(f) if *f != vals => {
                    return Ok(Some((
                        "the same solution in every context".into(),
                        format!("solutions differ at context {:?}", self.a.named_context(ctx)),
                    )))
                }
                _ => {}
            }
        }
        Ok(None)
    }
}

struct TrialOutcome {
    instances: u64,
    failures: Vec<(Query, String, String)>,
    budget_exceeded: bool,
}

/// Runs every instance of `id` on one model. Failures carry their queries.
fn run_model(id: TheoremId, a: &Analyzer, y: VarId, reading: Reading) -> Result<(u64, Vec<(Query, String, String)>), Error> {
    let c = Checker::new(a, y, reading);
    let mut n = 0u64;
    let mut fails = Vec::new();
    let mut record = |q: Query, v: Verdict, n: &mut u64| {
        *n += 1;
        if let Some((e, got)) = v {
            fails.push((q, e, got));
        }
    };
    let ydom = a.model.dom_size(y) as u32;
    match id {
        TheoremId::SufficiencyChain | TheoremId::IndependenceSufficiency => {
            for x in c.all_settings() {
                for yv in 0..ydom {
                    let v = if id == TheoremId::SufficiencyChain {
                        c.sufficiency_chain(&x, (y, yv))?
                    } else {
                        c.independence_sufficiency(&x, (y, yv))?
                    };
                    record(c.query(None, &x, (y, yv)), v, &mut n);
                }
            }
        }
        TheoremId::ReplacementWitnessSubset => {
            for z in c.all_settings() {
                let zv = vars_of(&z);
                for network in c.networks_without(&zv) {
                    for yv in 0..ydom {
                        if a.strongly_sufficient(&z, &[(y, yv)], &network)?.is_err() {
                            continue;
                        }
                        let idx: Vec<usize> = (0..z.len()).collect();
                        for sub in subsets_by_size(&idx).into_iter().filter(|s| !s.is_empty()) {
                            let x: Setting = sub.iter().map(|&i| z[i]).collect();
                            let w: Setting = z.iter().copied().filter(|p| !x.contains(p)).collect();
                            for xp in contrasts(a, &x) {
                                let v = c.replacement_witness_subset(&x, &w, &network, &xp, (y, yv))?;
                                let mut q = c.query(None, &x, (y, yv));
                                q.contrast = a.named(&xp);
                                q.witness = a.named(&w);
                                q.network = a.names(&network);
                                record(q, v, &mut n);
                            }
                        }
                    }
                }
            }
        }
        TheoremId::RootsFixSolution => {
            let rs = roots(a.model);
            let radix = rs.iter().map(|&v| a.model.dom_size(v) as u32).collect();
            let mut odo = crate::budget::Odometer::new(radix);
            while let Some(d) = odo.next() {
                let r: Setting = rs.iter().zip(d).map(|(&v, &k)| (v, k)).collect();
                let v = c.roots_fix_solution(&r)?;
                let mut q = Query { x: a.named(&r), ..Query::default() };
                q.target = Assignment::new();
                record(q, v, &mut n);
            }
        }
        _ => {
            let mut it = a.all_contexts();
            while let Some(ctx) = it.next_ctx() {
                let ctx: Context = ctx.to_vec();
                let state = a.actual(&ctx)?;
                let yt = (y, state[y]);
                if id == TheoremId::ExplanationContainsCause {
                    for e in a.good_counterfactual_explanations(&ctx, yt)? {
                        let v = c.explanation_contains_cause(&ctx, &e)?;
                        let mut q = c.query(Some(&ctx), &e.cause, yt);
                        q.contrast = a.named(&e.contrast);
                        q.witness = a.named(&e.witness);
                        q.network = a.names(&e.network);
                        record(q, v, &mut n);
                    }
                    continue;
                }
                let good_ce = if id == TheoremId::DependenceGoodExplanation {
                    a.good_counterfactual_explanations(&ctx, yt)?
                } else {
                    Vec::new()
                };
                for xs in subsets_by_size(&c.others).into_iter().filter(|s| !s.is_empty()) {
                    let x = a.restrict(&state, &xs);
                    match id {
                        TheoremId::DirectThenActual | TheoremId::IndependenceCausation => {
                            let v = if id == TheoremId::DirectThenActual {
                                c.direct_then_actual(&ctx, &x, yt)?
                            } else {
                                c.independence_causation(&ctx, &x, yt)?
                            };
                            record(c.query(Some(&ctx), &x, yt), v, &mut n);
                        }
                        _ => {
                            for xp in contrasts(a, &x) {
                                let v = if id == TheoremId::DependenceGoodExplanation {
                                    c.dependence_good_explanation(&ctx, &x, &xp, yt, &good_ce)?
                                } else {
                                    c.independence_dependence(&ctx, &x, &xp, yt)?
                                };
                                let mut q = c.query(Some(&ctx), &x, yt);
                                q.contrast = a.named(&xp);
                                record(q, v, &mut n);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((n, fails))
}

fn output_of(m: &CausalModel) -> Result<VarId, Error> {
    m.endogenous()
        .last()
        .copied()
        .ok_or_else(|| Error::Precondition("model has no endogenous variables".into()))
}

fn trial(id: TheoremId, src: &str, budget: u64, reading: Reading) -> TrialOutcome {
    let m = match parse_model(src) {
        Ok(m) => m,
        Err(e) => panic!("generated model failed to validate: {e}\n{src}"),
    };
    let a = Analyzer::new(&m, Budget::new(budget));
    let y = match output_of(&m) {
        Ok(y) => y,
        Err(_) => return TrialOutcome { instances: 0, failures: Vec::new(), budget_exceeded: false },
    };
    match run_model(id, &a, y, reading) {
        Ok((instances, failures)) => TrialOutcome { instances, failures, budget_exceeded: false },
        Err(Error::BudgetExceeded { .. }) => TrialOutcome { instances: 0, failures: Vec::new(), budget_exceeded: true },
        Err(e) => panic!("theorem check failed on a generated model: {e}\n{src}"),
    }
}

/// Model sources for a suite run, one per trial, drawn from the master seed.
pub fn trial_sources(id: TheoremId, cfg: &SuiteConfig) -> Vec<String> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mode = cfg.mode_for(id);
    (0..cfg.trials)
        .map(|_| {
            let seed = master.next_u64();
            let n = master.random_range(2..=cfg.max_endogenous.max(2));
            let mut g = GeneratorConfig::new(seed, n, mode);
            g.max_domain = cfg.max_domain;
            random_source(&g)
        })
        .collect()
}

pub fn check_theorem(id: TheoremId, cfg: &SuiteConfig) -> TheoremReport {
    let sources = trial_sources(id, cfg);
    let outcomes: Vec<TrialOutcome> = sources.par_iter().map(|src| trial(id, src, cfg.budget, cfg.reading)).collect();
    let mut report = TheoremReport {
        theorem: id,
        rng: RNG_NAME,
        seed: cfg.seed,
        trials: cfg.trials,
        mode: cfg.mode_for(id),
        negative_control: cfg.negative_control && id.needs_independence(),
        reading: cfg.reading,
        instances: 0,
        failures: Vec::new(),
        budget_exceeded: Vec::new(),
    };
    for (i, (o, src)) in outcomes.into_iter().zip(&sources).enumerate() {
        report.instances += o.instances;
        if o.budget_exceeded {
            report.budget_exceeded.push(i);
        }
        for (query, expected, actual) in o.failures {
            report.failures.push(Failure { trial: i, model_dsl: src.clone(), query, expected, actual });
        }
    }
    report
}

fn setting_of(m: &CausalModel, a: &Assignment) -> Result<Setting, Error> {
    let mut s: Setting = Vec::new();
    for (name, val) in a {
        let v = m.require(name)?;
        s.push((v, m.require_value(v, val)?));
    }
    s.sort_unstable();
    Ok(s)
}

/// Re-runs the check a failure record describes. `Some` when the violation
/// reproduces.
pub fn replay(id: TheoremId, reading: Reading, f: &Failure) -> Result<Verdict, Error> {
    let m = parse_model(&f.model_dsl)?;
    let a = Analyzer::with_default_budget(&m);
    let y = output_of(&m)?;
    let c = Checker::new(&a, y, reading);
    let x = setting_of(&m, &f.query.x)?;
    let xp = setting_of(&m, &f.query.contrast)?;
    let w = setting_of(&m, &f.query.witness)?;
    let target = setting_of(&m, &f.query.target)?;
    let network: Vec<VarId> = f.query.network.iter().map(|n| m.require(n)).collect::<Result<_, _>>()?;
    let ctx = match &f.query.context {
        Some(c) => Some(crate::analyzer::context_from_setting(&m, &setting_of(&m, c)?)?),
        None => None,
    };
    let need_ctx = || ctx.clone().ok_or_else(|| Error::Precondition("failure record has no context".into()));
    let yt = || target.first().copied().ok_or_else(|| Error::Precondition("failure record has no target".into()));
    match id {
        TheoremId::SufficiencyChain => c.sufficiency_chain(&x, yt()?),
        TheoremId::IndependenceSufficiency => c.independence_sufficiency(&x, yt()?),
        TheoremId::DependenceGoodExplanation => {
            let ctx = need_ctx()?;
            let good = a.good_counterfactual_explanations(&ctx, yt()?)?;
            c.dependence_good_explanation(&ctx, &x, &xp, yt()?, &good)
        }
        TheoremId::IndependenceDependence => c.independence_dependence(&need_ctx()?, &x, &xp, yt()?),
        TheoremId::ReplacementWitnessSubset => c.replacement_witness_subset(&x, &w, &network, &xp, yt()?),
        TheoremId::ExplanationContainsCause => {
            let e = CounterfactualExplanation {
                cause: x,
                contrast: xp,
                witness: w,
                network,
                target: yt()?,
                alternative: 0,
            };
            c.explanation_contains_cause(&need_ctx()?, &e)
        }
        TheoremId::DirectThenActual => c.direct_then_actual(&need_ctx()?, &x, yt()?),
        TheoremId::IndependenceCausation => c.independence_causation(&need_ctx()?, &x, yt()?),
        TheoremId::RootsFixSolution => c.roots_fix_solution(&x),
    }
}

fn vals_of(m: &CausalModel, a: &Assignment) -> Result<Vals, Error> {
    let mut out = Vals::new();
    for (name, val) in a {
        let v = m.require(name)?;
        m.require_value(v, val)?;
        out.insert(v, *val);
    }
    Ok(out)
}

/// Re-evaluates a recorded failure with the brute-force oracle, under the
/// definitions as stated. `true` when the oracle also finds the statement
/// violated.
pub fn confirm_with_oracle(id: TheoremId, f: &Failure) -> Result<bool, Error> {
    let m = parse_model(&f.model_dsl)?;
    let o = Oracle::new(&m);
    let y = output_of(&m)?;
    let x = vals_of(&m, &f.query.x)?;
    let xp = vals_of(&m, &f.query.contrast)?;
    let w = vals_of(&m, &f.query.witness)?;
    let network: Vec<VarId> = f.query.network.iter().map(|n| m.require(n)).collect::<Result<_, _>>()?;
    let target = vals_of(&m, &f.query.target)?;
    let yt = target
        .iter()
        .next()
        .map(|(&v, &val)| (v, val))
        .ok_or_else(|| Error::Precondition("failure record has no target".into()))?;
    let ctx = || -> Result<Vals, Error> {
        let c = f.query.context.as_ref().ok_or_else(|| Error::Precondition("failure record has no context".into()))?;
        vals_of(&m, c)
    };
    let endo = m.endogenous();
    let others: Vec<VarId> = endo.iter().copied().filter(|&v| v != y).collect();
    let networks = |xs: &[VarId]| -> Vec<Vec<VarId>> {
        let rest: Vec<VarId> = others.iter().copied().filter(|v| !xs.contains(v)).collect();
        subsets_by_size(&rest)
            .into_iter()
            .map(|mut n| {
                n.push(y);
                n.sort_unstable();
                n
            })
            .collect()
    };
    let levels = || -> Result<(bool, bool, bool), Error> {
        let weak = o.weakly_sufficient(&x, &target)?.is_none();
        let direct = o.directly_sufficient(&x, &target)?;
        let mut strong = false;
        for n in networks(&x.keys().copied().collect::<Vec<_>>()) {
            if o.strongly_sufficient(&x, &target, &n)? {
                strong = true;
                break;
            }
        }
        Ok((weak, strong, direct))
    };
    let some_actual = |u: &Vals| -> Result<bool, Error> {
        for c in o.contrasts(&x) {
            if o.actual_cause(u, &x, &c, yt)? {
                return Ok(true);
            }
        }
        Ok(false)
    };
    match id {
        TheoremId::SufficiencyChain => {
            let (weak, strong, direct) = levels()?;
            Ok((direct && !strong) || (strong && !weak))
        }
        TheoremId::IndependenceSufficiency => {
            let (weak, strong, direct) = levels()?;
            Ok(!(weak == strong && strong == direct))
        }
        TheoremId::DependenceGoodExplanation => {
            let u = ctx()?;
            let dep = o.counterfactually_depends(&u, &x, &xp, yt, WitnessMode::Any)?;
            let good = o.good_counterfactual_explanations(&u, yt)?;
            let ce = good.iter().any(|e| e.cause == x && e.contrast == xp);
            Ok(dep != ce)
        }
        TheoremId::IndependenceDependence => {
            let u = ctx()?;
            let direct = o.counterfactually_depends(&u, &x, &xp, yt, WitnessMode::AllOthers)?;
            let standard = o.counterfactually_depends(&u, &x, &xp, yt, WitnessMode::Empty)?;
            let inter = if others.len() - x.len() >= 2 {
                Some(o.counterfactually_depends(&u, &x, &xp, yt, WitnessMode::Intermediate)?)
            } else {
                None
            };
            Ok(!(direct == standard && inter.is_none_or(|i| i == direct)))
        }
        TheoremId::ReplacementWitnessSubset => {
            let wv: Vec<VarId> = w.keys().copied().collect();
            let rest: Vec<VarId> = network.iter().copied().filter(|&v| v != y).collect();
            let mut premise = false;
            'search: for a_sub in subsets_by_size(&wv) {
                let mut alt = xp.clone();
                alt.extend(Oracle::restrict(&w, &a_sub));
                for mut b in subsets_by_size(&rest) {
                    b.push(y);
                    b.sort_unstable();
                    if o.strongly_sufficient(&alt, &target, &b)? {
                        premise = true;
                        break 'search;
                    }
                }
            }
            let mut ante = x.clone();
            ante.extend(w.clone());
            let e = OSe { antecedent: ante, network };
            Ok(premise && !o.can_replace(&e, yt, &xp)?)
        }
        TheoremId::ExplanationContainsCause => {
            let u = ctx()?;
            let xs: Vec<VarId> = x.keys().copied().collect();
            for sub in subsets_by_size(&xs).into_iter().filter(|s| !s.is_empty()) {
                if o.actual_cause(&u, &Oracle::restrict(&x, &sub), &Oracle::restrict(&xp, &sub), yt)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        TheoremId::DirectThenActual => {
            let u = ctx()?;
            Ok(o.direct_cause(&u, &x, yt)? && !some_actual(&u)?)
        }
        TheoremId::IndependenceCausation => {
            let u = ctx()?;
            let direct = o.direct_cause(&u, &x, yt)?;
            let actual = some_actual(&u)?;
            let part = o.good_sufficient_explanations(&u, yt)?.iter().any(|e| Oracle::part_of(&x, e));
            Ok(!(direct == actual && actual == part))
        }
        TheoremId::RootsFixSolution => {
            let mut first: Option<Vals> = None;
            for u in o.contexts() {
                let s = o.solve(&u, &x)?;
                let vals: Vals = endo.iter().map(|&v| (v, s[&v])).collect();
                match &first {
                    None => first = Some(vals),
                    Some(f) if *f != vals => return Ok(true),
                    _ => {}
                }
            }
            Ok(false)
        }
    }
}
