use proptest::prelude::*;

use scm::analyzer::{is_subset, subsets_by_size};
use scm::explanations::{contrasts, strictly_dominates};
use scm::fairness::Path;
use scm::propcheck::{random_model, random_source, GeneratorConfig, Mode};
use scm::query::paths;
use scm::{parse_model, serialize_model, Analyzer, CausalModel, Context};

fn config() -> impl Strategy<Value = GeneratorConfig> {
    (any::<u64>(), 2usize..=4, prop_oneof![Just(Mode::General), Just(Mode::Independence)])
        .prop_map(|(seed, n, mode)| GeneratorConfig::new(seed, n, mode))
}

fn contexts(a: &Analyzer) -> Vec<Context> {
    let mut out = Vec::new();
    let mut it = a.all_contexts();
    while let Some(c) = it.next_ctx() {
        out.push(c.to_vec());
    }
    out
}

fn output(m: &CausalModel) -> usize {
    *m.endogenous().last().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn serialize_then_parse_is_identity(cfg in config()) {
        let m = random_model(&cfg);
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(serialize_model(&back), text);
        let (a, b) = (Analyzer::with_default_budget(&m), Analyzer::with_default_budget(&back));
        for c in contexts(&a) {
            prop_assert_eq!(a.solve_named(&c).unwrap(), b.solve_named(&c).unwrap());
        }
    }

    #[test]
    fn generator_is_deterministic(cfg in config()) {
        prop_assert_eq!(random_source(&cfg), random_source(&cfg));
    }

    #[test]
    fn memo_does_not_change_explanations(cfg in config()) {
        let m = random_model(&cfg);
        let with = Analyzer::with_default_budget(&m);
        let without = Analyzer::with_default_budget(&m).without_memo();
        let y = output(&m);
        for c in contexts(&with) {
            let t = (y, with.actual(&c).unwrap()[y]);
            prop_assert_eq!(with.good_sufficient_explanations(&c, t).unwrap(), without.good_sufficient_explanations(&c, t).unwrap());
            prop_assert_eq!(with.good_counterfactual_explanations(&c, t).unwrap(), without.good_counterfactual_explanations(&c, t).unwrap());
        }
    }

    #[test]
    fn good_explanations_are_sound(cfg in config()) {
        let m = random_model(&cfg);
        let a = Analyzer::with_default_budget(&m);
        let y = output(&m);
        for c in contexts(&a) {
            let s = a.actual(&c).unwrap();
            let t = (y, s[y]);
            let good = a.good_sufficient_explanations(&c, t).unwrap();
            for e in &good {
                prop_assert!(e.antecedent.iter().all(|&(v, x)| s[v] == x));
                prop_assert!(a.strongly_sufficient(&e.antecedent, &[t], &e.network).unwrap().is_ok());
                prop_assert!(!good.iter().any(|f| strictly_dominates(f, e)));
            }
            for e in a.good_counterfactual_explanations(&c, t).unwrap() {
                prop_assert!(a.is_counterfactual_explanation(&c, &e).unwrap());
            }
        }
    }

    #[test]
    fn cause_verdicts_carry_valid_evidence(cfg in config()) {
        let m = random_model(&cfg);
        let a = Analyzer::with_default_budget(&m);
        let y = output(&m);
        let others: Vec<usize> = m.endogenous().iter().copied().filter(|&v| v != y).collect();
        for c in contexts(&a) {
            let s = a.actual(&c).unwrap();
            let t = (y, s[y]);
            let good = a.good_sufficient_explanations(&c, t).unwrap();
            for xs in subsets_by_size(&others).into_iter().filter(|x| !x.is_empty()) {
                let x = a.restrict(&s, &xs);
                for xp in contrasts(&a, &x) {
                    let v = a.actual_cause(&c, &x, &xp, t, true).unwrap();
                    prop_assert_eq!(v.holds, !v.statements.is_empty());
                    for st in &v.statements {
                        prop_assert!(good.contains(&st.evidence));
                        prop_assert!(a.can_replace(&st.evidence, &x, &xp).unwrap().is_none());
                    }
                    for b in &v.blocked {
                        prop_assert!(b.network.contains(&y));
                        prop_assert!(is_subset(&b.network, &b.explanation.network));
                        prop_assert_eq!(a.can_replace(&b.explanation, &x, &xp).unwrap(), Some(b.network.clone()));
                    }
                }
            }
        }
    }

    #[test]
    fn more_unfair_paths_never_make_a_model_fairer(cfg in config()) {
        let m = random_model(&cfg);
        let a = Analyzer::with_default_budget(&m);
        let (p, y) = (m.endogenous()[0], output(&m));
        let all = paths(&m, p, y);
        let subsets = subsets_by_size(&(0..all.len()).collect::<Vec<_>>());
        let verdicts: Vec<(Vec<usize>, bool)> = subsets
            .into_iter()
            .map(|s| {
                let unfair: Vec<Path> = s.iter().map(|&i| all[i].clone()).collect();
                let v = a.is_fair(p, &unfair, y).unwrap();
                (s, v.fair)
            })
            .collect();
        for (small, fair_small) in &verdicts {
            for (big, fair_big) in &verdicts {
                if small.iter().all(|i| big.contains(i)) && *fair_big {
                    prop_assert!(*fair_small, "fair with {:?} but not with {:?}", big, small);
                }
            }
        }
    }

    #[test]
    fn standard_unfairness_is_a_context_counterexample(cfg in config()) {
        let m = random_model(&cfg);
        let a = Analyzer::with_default_budget(&m);
        let (p, y) = (m.endogenous()[0], output(&m));
        if let Some(v) = a.standardly_counterfactually_fair(p, y).unwrap() {
            let s = a.actual(&v.context).unwrap();
            prop_assert_eq!((s[p], s[y]), (v.a, v.y));
            let mut iv = vec![None; m.len()];
            iv[p] = Some(v.a_prime);
            prop_assert_eq!(a.solve(&v.context, &iv).unwrap()[y], v.y_prime);
            prop_assert_ne!(v.y, v.y_prime);
        }
    }
}
