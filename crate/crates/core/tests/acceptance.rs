//! Acceptance suite: one PASS/FAIL line per criterion, details indented below.
//!
//! Exits non-zero when a criterion fails, except for the theorem suites,
//! whose three definitional conflicts are expected; that criterion still
//! fails the run if anything beyond those conflicts goes wrong.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use scm::analyzer::parse_context;
use scm::explanations::{contrasts, WitnessMode};
use scm::fairness::{network_paths, parse_paths, path_text};
use scm::propcheck::differential::{fixture_differential, random_differential, PredicateSummary};
use scm::propcheck::oracle::{Oracle, Vals};
use scm::propcheck::{check_theorem, confirm_with_oracle, replay, Reading, SuiteConfig, TheoremId, TheoremReport};
use scm::{fixtures, parse_formula, Analyzer, CausalModel, Error, Setting, Value};

struct Checks {
    lines: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Checks {
        Checks { lines: Vec::new(), ok: true }
    }

    fn check(&mut self, what: &str, got: bool) {
        self.ok &= got;
        self.lines.push(format!("{} {what}", if got { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(what);
    }
}

fn setting(a: &Analyzer, s: &str) -> Setting {
    a.parse_setting(s).unwrap_or_else(|e| panic!("bad setting `{s}`: {e}"))
}

fn ctx(m: &CausalModel, s: &str) -> Vec<u32> {
    parse_context(m, s).unwrap_or_else(|e| panic!("bad context `{s}`: {e}"))
}

fn vals(m: &CausalModel, s: &[(usize, u32)]) -> Vals {
    s.iter().map(|&(v, i)| (v, m.value(v, i))).collect()
}

fn ctx_vals(m: &CausalModel, c: &[u32]) -> Vals {
    m.exogenous().iter().zip(c).map(|(&v, &i)| (v, m.value(v, i))).collect()
}

fn universal(a: &Analyzer, f: &str) -> Result<bool, Error> {
    let f = parse_formula(f, a.model).map_err(Error::Parse)?;
    Ok(a.holds_universally(&f)?.is_none())
}

fn loan_claims(c: &mut Checks) -> Result<(), Error> {
    let start = Instant::now();
    let m = fixtures::loan();
    let a = Analyzer::with_default_budget(&m);
    c.check("M |= X4=1 -> Y=1", universal(&a, "!(X4=1) | Y=1")?);
    c.check("X4=1 holds in some context", !universal(&a, "X4!=1")?);
    c.check("M does not satisfy [X4<-1](Y=1)", !universal(&a, "[X4<-1](Y=1)")?);
    c.check("M |= [X2<-45001](Y=1)", universal(&a, "[X2<-45001](Y=1)")?);
    let x = setting(&a, "X1=50000,X3=25000");
    let y = setting(&a, "Y=1");
    c.check("(X1=50000, X3=25000) weakly sufficient for Y=1", a.weakly_sufficient(&x, &y)?.is_none());
    c.check("(X1=50000, X3=25000) not directly sufficient for Y=1", a.directly_sufficient(&x, &y)?.is_some());
    let elapsed = start.elapsed();
    c.check(&format!("runtime {elapsed:.2?} < 1 s"), elapsed < Duration::from_secs(1));
    let o = Oracle::new(&m);
    c.check("oracle: weakly sufficient", o.weakly_sufficient(&vals(&m, &x), &vals(&m, &y))?.is_none());
    c.check("oracle: not directly sufficient", !o.directly_sufficient(&vals(&m, &x), &vals(&m, &y))?);
    Ok(())
}

fn counterfactual_examples(c: &mut Checks) -> Result<(), Error> {
    let m = fixtures::loan();
    let a = Analyzer::with_default_budget(&m);
    let u = ctx(&m, "U1=75000,U3=2500");
    let s = a.actual(&u)?;
    let (y, x1) = (m.require("Y")?, m.require("X1")?);
    c.check("actual outcome Y=0", m.value(y, s[y]) == Value::ZERO);
    let fixed: Vec<(usize, u32)> = ["X2", "X3", "X4"].iter().map(|n| m.require(n).map(|v| (v, s[v]))).collect::<Result<_, _>>()?;
    let mut iv = a.iv_mask(&[&fixed]);
    iv[x1] = Some(setting(&a, "X1=100000")[0].1);
    c.check("X1<-100000 with X2, X3, X4 held gives Y=1", m.value(y, a.solve(&u, &iv)?[y]) == Value::ONE);
    let iv = a.iv_mask(&[&setting(&a, "X1=85000")]);
    c.check("X1<-85000 alone gives Y=1", m.value(y, a.solve(&u, &iv)?[y]) == Value::ONE);
    let want = (
        setting(&a, "X1=75000"),
        setting(&a, "X1=85000"),
        setting(&a, "X3=2500"),
        vec![m.require("X2")?, y],
    );
    let target = setting(&a, "Y=0")[0];
    let good = a.good_counterfactual_explanations(&u, target)?;
    let found = good.iter().any(|e| (e.cause.clone(), e.contrast.clone(), e.witness.clone(), e.network.clone()) == want);
    c.check("(X1 = 75000 rather than 85000, W={X3}, N={X2,Y}) among good counterfactual explanations", found);
    let o = Oracle::new(&m);
    let ogood = o.good_counterfactual_explanations(&ctx_vals(&m, &u), (y, Value::ZERO))?;
    let ofound = ogood.iter().any(|e| {
        (e.cause.clone(), e.contrast.clone(), e.witness.clone(), e.network.clone())
            == (vals(&m, &want.0), vals(&m, &want.1), vals(&m, &want.2), want.3.clone())
    });
    c.check("oracle: the same explanation is good", ofound);
    Ok(())
}

fn fortunate_applicant(c: &mut Checks) -> Result<(), Error> {
    let m = fixtures::loan();
    let a = Analyzer::with_default_budget(&m);
    let u = ctx(&m, "U1=250000,U3=50000");
    let y = m.require("Y")?;
    let target = setting(&a, "Y=1")[0];
    let x = setting(&a, "X1=250000");
    let good = a.good_sufficient_explanations(&u, target)?;
    c.check("(X1=250000, {Y}) is a good sufficient explanation", good.iter().any(|e| e.antecedent == x && e.network == [y]));
    let mut depends = false;
    for xp in contrasts(&a, &x) {
        depends |= a.counterfactually_depends(&u, &x, &xp, target, WitnessMode::Any)?.holds;
    }
    c.check("Y=1 does not counterfactually depend on X1 for any contrast or witness", !depends);
    let xp = setting(&a, "X1=200000");
    c.check("X1=250000 rather than 200000 is an actual cause", a.actual_cause(&u, &x, &xp, target, false)?.holds);
    let o = Oracle::new(&m);
    let (ou, ot) = (ctx_vals(&m, &u), (y, Value::ONE));
    let ogood = o.good_sufficient_explanations(&ou, ot)?;
    c.check("oracle: explanation is good", ogood.iter().any(|e| e.antecedent == vals(&m, &x) && e.network == [y]));
    let mut odepends = false;
    for xp in o.contrasts(&vals(&m, &x)) {
        odepends |= o.counterfactually_depends(&ou, &vals(&m, &x), &xp, ot, WitnessMode::Any)?;
    }
    c.check("oracle: no dependence", !odepends);
    c.check("oracle: actual cause", o.actual_cause(&ou, &vals(&m, &x), &vals(&m, &xp), ot)?);
    Ok(())
}

fn fire(c: &mut Checks) -> Result<(), Error> {
    let m = fixtures::fire();
    let a = Analyzer::with_default_budget(&m);
    let o = Oracle::new(&m);
    let (s, b) = (m.require("S")?, m.require("B")?);
    let on = ctx(&m, "U_F=1");
    let off = ctx(&m, "U_F=0");
    let target = setting(&a, "B=0")[0];
    let (f1, f0) = (setting(&a, "F=1"), setting(&a, "F=0"));
    let good = a.good_sufficient_explanations(&on, target)?;
    let e = good.iter().find(|e| e.antecedent == f1 && e.network == [s, b]);
    c.check("(F=1, {S,B}) is good", e.is_some());
    if let Some(e) = e {
        c.check("F=0 replaces F=1 with certificate {B}", a.can_replace(e, &f1, &f0)? == Some(vec![b]));
    }
    c.check("F=1 rather than F=0 is not an actual cause of B=0", !a.actual_cause(&on, &f1, &f0, target, false)?.holds);
    c.check("F=0 rather than F=1 is an actual cause of B=0 when U_F=0", a.actual_cause(&off, &f0, &f1, target, false)?.holds);
    let ot = (b, Value::ZERO);
    let (von, voff) = (ctx_vals(&m, &on), ctx_vals(&m, &off));
    c.check("oracle: F=1 refuted", !o.actual_cause(&von, &vals(&m, &f1), &vals(&m, &f0), ot)?);
    c.check("oracle: F=0 certified", o.actual_cause(&voff, &vals(&m, &f0), &vals(&m, &f1), ot)?);
    Ok(())
}

fn shortcut(c: &mut Checks) -> Result<(), Error> {
    let m = fixtures::shortcut();
    let a = Analyzer::with_default_budget(&m);
    let o = Oracle::new(&m);
    let u = ctx(&m, "U_X=1,U_A=1");
    let target = setting(&a, "Y=1")[0];
    let x = setting(&a, "X=1");
    c.check("X=1 is a direct cause of Y=1", a.direct_cause(&u, &x, target, false)?.holds);
    c.check("X=1 is not an optimal cause of Y=1", !a.optimal_cause(&u, &x, target, false)?.holds);
    let (ou, ot) = (ctx_vals(&m, &u), (m.require("Y")?, Value::ONE));
    c.check("oracle: direct", o.direct_cause(&ou, &vals(&m, &x), ot)?);
    c.check("oracle: not optimal", !o.optimal_cause(&ou, &vals(&m, &x), ot)?);
    Ok(())
}

fn hiring(c: &mut Checks) -> Result<(), Error> {
    let m = fixtures::hiring();
    let a = Analyzer::with_default_budget(&m);
    let o = Oracle::new(&m);
    let (av, bv, yv) = (m.require("A")?, m.require("B")?, m.require("Y")?);
    c.check("standardly counterfactually fair", a.standardly_counterfactually_fair(av, yv)?.is_none());
    let unfair = parse_paths(&m, fixtures::HIRING_PATHS, av, yv)?;
    let v = a.is_fair(av, &unfair, yv)?;
    c.check("unfair when every path is unfair", !v.fair);
    let want = vec![vec![av, bv, yv]];
    let cert = v.certificates.iter().find(|c| {
        m.value(av, c.a) == Value::ONE && m.value(av, c.a_prime) == Value::ZERO && m.value(yv, c.y) == Value::ZERO
    });
    match cert {
        Some(cert) => {
            c.check("certificate with a=1, a'=0, Y=0", true);
            let shown: Vec<String> = cert.network_paths.iter().map(|p| path_text(&m, p)).collect();
            c.check(&format!("its network paths are {{{}}}", shown.join(", ")), cert.network_paths == want);
            c.check("network paths recomputed from the evidence", network_paths(&m, av, yv, &cert.statement.evidence.network) == want);
        }
        None => c.check("certificate with a=1, a'=0, Y=0", false),
    }
    c.check("oracle: standardly fair", o.standardly_counterfactually_fair(av, yv)?);
    c.check("oracle: unfair", !o.is_fair(av, &unfair, yv)?);
    Ok(())
}

const TRIALS: usize = 200;
const SEED: u64 = 1;

/// The results whose literal checks conflict with their definitions.
const CONFLICTS: [TheoremId; 3] =
    [TheoremId::DependenceGoodExplanation, TheoremId::DirectThenActual, TheoremId::IndependenceCausation];

fn report_line(r: &TheoremReport) -> String {
    format!(
        "{}{}: {} trials, {} instances, {} failures, {} over budget ({})",
        r.theorem,
        if r.negative_control { " [negative control]" } else { "" },
        r.trials,
        r.instances,
        r.failures.len(),
        r.budget_exceeded.len(),
        serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    )
}

/// Returns (criterion met, conflicts are the only problem).
fn theorem_suites(c: &mut Checks) -> Result<bool, Error> {
    let start = Instant::now();
    let mut expected_only = true;
    for id in TheoremId::ALL {
        let r = check_theorem(id, &SuiteConfig::new(SEED, TRIALS));
        c.check(&report_line(&r), r.failures.is_empty() && r.budget_exceeded.is_empty());
        if !r.failures.is_empty() || !r.budget_exceeded.is_empty() {
            expected_only &= CONFLICTS.contains(&id) && r.budget_exceeded.is_empty();
            let confirmed = r.failures.iter().filter(|f| confirm_with_oracle(id, f).unwrap_or(false)).count();
            let replayed = r.failures.iter().filter(|f| matches!(replay(id, Reading::Definitions, f), Ok(Some(_)))).count();
            c.note(format!("     oracle confirms {confirmed}/{n}, replay reproduces {replayed}/{n}", n = r.failures.len()));
            expected_only &= confirmed == r.failures.len() && replayed == r.failures.len();
            if let Some(f) = r.failures.first() {
                c.note(format!("     first: trial {}, expected {}; got {}", f.trial, f.expected, f.actual));
            }
        }
    }
    for id in TheoremId::ALL.into_iter().filter(|t| t.needs_independence()) {
        let mut cfg = SuiteConfig::new(SEED, TRIALS);
        cfg.negative_control = true;
        let r = check_theorem(id, &cfg);
        let found = !r.failures.is_empty();
        c.check(&format!("{} (at least one violation expected)", report_line(&r)), found);
        expected_only &= found;
    }
    for id in CONFLICTS {
        let mut cfg = SuiteConfig::new(SEED, TRIALS);
        cfg.reading = Reading::Proofs;
        let r = check_theorem(id, &cfg);
        let clean = r.failures.is_empty() && r.budget_exceeded.is_empty();
        c.note(format!("     with the conventions its proof uses: {} [{}]", report_line(&r), if clean { "clean" } else { "VIOLATED" }));
        expected_only &= clean;
    }
    let elapsed = start.elapsed();
    let fast = elapsed <= Duration::from_secs(300);
    c.check(&format!("suite runtime {elapsed:.2?} <= 5 min"), fast);
    Ok(expected_only && fast)
}

fn summarize(c: &mut Checks, label: &str, acc: &BTreeMap<scm::propcheck::differential::Predicate, PredicateSummary>, min_models: usize) {
    for (p, s) in acc {
        c.check(
            &format!("{label} {p}: {} models, {} instances, {} discrepancies", s.models, s.instances, s.discrepancies.len()),
            s.discrepancies.is_empty() && s.models >= min_models,
        );
        if let Some(d) = s.discrepancies.first() {
            c.note(format!("     {}: {} -> optimized {} / oracle {}", d.model.lines().next().unwrap_or(""), d.query, d.optimized, d.oracle));
        }
    }
}

fn differential(c: &mut Checks) -> Result<(), Error> {
    let fixtures = fixture_differential()?;
    summarize(c, "fixtures", &fixtures, 1);
    let random = random_differential(SEED, 100)?;
    summarize(c, "random", &random, 50);
    Ok(())
}

fn run(n: u32, name: &str, f: impl FnOnce(&mut Checks) -> Result<(), Error>) -> bool {
    let mut c = Checks::new();
    if let Err(e) = f(&mut c) {
        c.ok = false;
        c.note(format!("error: {e}"));
    }
    print(n, name, &c);
    c.ok
}

fn print(n: u32, name: &str, c: &Checks) {
    println!("{} {n} {name}", if c.ok { "PASS" } else { "FAIL" });
    for l in &c.lines {
        println!("  {l}");
    }
}

fn main() -> ExitCode {
    let mut hard_failure = false;
    hard_failure |= !run(1, "loan-fixture-claims", loan_claims);
    hard_failure |= !run(2, "counterfactual-explanations", counterfactual_examples);
    hard_failure |= !run(3, "fortunate-applicant", fortunate_applicant);
    hard_failure |= !run(4, "fire-and-sprinkler", fire);
    hard_failure |= !run(5, "direct-not-optimal", shortcut);
    hard_failure |= !run(6, "hiring-fairness", hiring);

    let mut c = Checks::new();
    match theorem_suites(&mut c) {
        Ok(expected_only) => {
            print(7, "theorem-suites", &c);
            if !c.ok && expected_only {
                println!("  known: the failing suites violate only under the definitions as stated; see the decisions ledger");
            }
            hard_failure |= !c.ok && !expected_only;
        }
        Err(e) => {
            c.ok = false;
            c.note(format!("error: {e}"));
            print(7, "theorem-suites", &c);
            hard_failure = true;
        }
    }

    hard_failure |= !run(8, "oracle-differential", differential);
    if hard_failure {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
