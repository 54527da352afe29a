use scm::explanations::{contrasts, WitnessMode};
use scm::propcheck::{check_theorem, confirm_with_oracle, replay, Reading, SuiteConfig, TheoremId};
use scm::{parse_model, Analyzer};

const OR_MODEL: &str = "model or
exo UA: {0, 1}
exo UB: {0, 1}
var A: {0, 1} = UA
var B: {0, 1} = UB
var Y: {0, 1} = A | B
";

const XOR_MODEL: &str = "model xor
exo U1: {0, 1}
exo U2: {0, 1}
var X1: {0, 1} = U1
var X2: {0, 1} = U2
var Y: {0, 1} = X1 + X2 = 1
";

#[test]
fn good_joint_explanation_without_dependence() {
    let m = parse_model(OR_MODEL).unwrap();
    let a = Analyzer::with_default_budget(&m);
    let c = a.parse_context("UA=0,UB=0").unwrap();
    let x = a.parse_setting("A=0,B=0").unwrap();
    let xp = a.parse_setting("A=1,B=1").unwrap();
    let t = a.parse_setting("Y=0").unwrap()[0];
    let d = a.counterfactually_depends(&c, &x, &xp, t, WitnessMode::Any).unwrap();
    assert!(!d.holds);
    assert!(d.smaller.is_some());
    let good = a.good_counterfactual_explanations(&c, t).unwrap();
    assert!(good.iter().any(|e| e.cause == x && e.contrast == xp && e.witness.is_empty()));
    let single = a.parse_setting("A=0").unwrap();
    assert!(good.iter().any(|e| e.cause == single && e.witness == a.parse_setting("B=0").unwrap()));
}

#[test]
fn direct_cause_replaced_by_its_only_componentwise_contrast() {
    let m = parse_model(XOR_MODEL).unwrap();
    let a = Analyzer::with_default_budget(&m);
    let c = a.parse_context("U1=0,U2=0").unwrap();
    let x = a.parse_setting("X1=0,X2=0").unwrap();
    let t = a.parse_setting("Y=0").unwrap()[0];
    assert!(a.direct_cause(&c, &x, t, false).unwrap().holds);
    let cs = contrasts(&a, &x);
    assert_eq!(cs, vec![a.parse_setting("X1=1,X2=1").unwrap()]);
    assert!(!a.actual_cause(&c, &x, &cs[0], t, false).unwrap().holds);
    let good = a.good_sufficient_explanations(&c, t).unwrap();
    let e = good.iter().find(|e| e.antecedent == x).unwrap();
    assert_eq!(a.can_replace(e, &x, &a.parse_setting("X1=1,X2=0").unwrap()).unwrap(), None);
}

#[test]
fn reports_are_deterministic() {
    for id in [TheoremId::SufficiencyChain, TheoremId::DirectThenActual] {
        let cfg = SuiteConfig::new(11, 25);
        assert_eq!(check_theorem(id, &cfg).to_json(), check_theorem(id, &cfg).to_json());
    }
}

#[test]
fn failures_replay_and_are_oracle_confirmed() {
    let id = TheoremId::DependenceGoodExplanation;
    let r = check_theorem(id, &SuiteConfig::new(1, 40));
    assert!(!r.failures.is_empty());
    for f in r.failures.iter().take(20) {
        let text = serde_json::to_string(f).unwrap();
        let back = serde_json::from_str(&text).unwrap();
        assert_eq!(replay(id, Reading::Definitions, &back).unwrap(), Some((f.expected.clone(), f.actual.clone())));
        assert!(confirm_with_oracle(id, &back).unwrap());
        assert_eq!(replay(id, Reading::Proofs, &back).unwrap(), None);
    }
}

#[test]
fn proven_results_hold_on_a_small_run() {
    for id in [
        TheoremId::SufficiencyChain,
        TheoremId::IndependenceSufficiency,
        TheoremId::IndependenceDependence,
        TheoremId::ReplacementWitnessSubset,
        TheoremId::ExplanationContainsCause,
        TheoremId::RootsFixSolution,
    ] {
        let r = check_theorem(id, &SuiteConfig::new(3, 40));
        assert!(r.passed(), "{id}: {:?}", r.failures.first());
    }
}

#[test]
fn negative_controls_find_violations() {
    for id in TheoremId::ALL.into_iter().filter(|t| t.needs_independence()) {
        let mut cfg = SuiteConfig::new(1, 200);
        cfg.negative_control = true;
        let r = check_theorem(id, &cfg);
        assert!(r.negative_control);
        assert!(r.passed(), "{id} found no violation on general models");
    }
}
