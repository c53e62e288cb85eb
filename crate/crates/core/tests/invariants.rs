use proptest::prelude::*;
use serde_json::Value;

use apixplore::amos::{parse_amos, render_amos, schema_from_value, schema_to_value, Amos, ParamSchema};
use apixplore::bench::stats::{exact_p, normal_p};
use apixplore::bench::{mann_whitney_u, vargha_delaney_a};
use apixplore::executor::{execute_candidate, Adapter, InProcessAdapter};
use apixplore::explorer::{
    bind_symbols, canonical_key, explore, run_trial, ExplorationConfig, ExplorationResult, GeneratedExample, PropResult,
};
use apixplore::fixtures::{GROUPS_AMOS, PERSONS_AMOS};
use apixplore::genseq::{check_shape, generate_candidate, CandidateSequence, ModePolicy, Source};
use apixplore::metaprops::{evaluate, shape_constraints, MetaPropertyId, QueryContext, Shape};
use apixplore::refsut::{GroupsConfig, GroupsSut, PersonsSut, PersonsVariant};
use apixplore::report::{emit_test_case, parse_data, parse_test_case, render_data, TestCase};
use apixplore::rng::Rng;
use apixplore::shrinker::{candidate_measure, shrink_example, ShrinkBudget};

fn catalogue(groups: bool) -> Amos {
    parse_amos(if groups { GROUPS_AMOS } else { PERSONS_AMOS }).unwrap()
}

fn prop_id() -> impl Strategy<Value = MetaPropertyId> {
    (0..7usize).prop_map(|i| MetaPropertyId::ALL[i])
}

fn policy() -> impl Strategy<Value = ModePolicy> {
    prop_oneof![Just(ModePolicy::RandomOnly), Just(ModePolicy::ReferencesAllowed)]
}

fn generate(amos: &Amos, prop: MetaPropertyId, seed: u64, size: usize, policy: ModePolicy) -> CandidateSequence {
    generate_candidate(amos, shape_constraints(prop), &mut Rng::new(seed), size, policy).unwrap()
}

fn query_for(groups: bool) -> QueryContext {
    QueryContext::new(if groups { "get-groups" } else { "get-persons" })
}

fn schema() -> impl Strategy<Value = ParamSchema> {
    let leaf = prop_oneof![
        (proptest::option::of(0u64..5), proptest::option::of(5u64..9))
            .prop_map(|(min_len, max_len)| ParamSchema::String { min_len, max_len }),
        (proptest::option::of(-50i64..0), proptest::option::of(0i64..50))
            .prop_map(|(min, max)| ParamSchema::Int { min, max }),
        Just(ParamSchema::Bool),
        proptest::collection::vec(0i64..100, 1..4).prop_map(|v| ParamSchema::Enum {
            values: v.into_iter().map(Value::from).collect()
        }),
        "[a-z]{1,6}".prop_map(ParamSchema::named),
    ];
    leaf.prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            proptest::collection::btree_map("[a-z]{1,5}", (inner.clone(), any::<bool>()), 0..4)
                .prop_map(|m| ParamSchema::map(m.into_iter().map(|(k, (s, r))| (k, s, r)))),
            (inner, proptest::option::of(0u64..3)).prop_map(|(of, min_len)| ParamSchema::Vector {
                of: Box::new(of),
                min_len,
                max_len: None
            }),
        ]
    })
}

/// Wraps executed candidates as report examples.
fn result_from(amos: &Amos, seeds: &[u64], groups: bool) -> ExplorationResult {
    let ctx = query_for(groups);
    let props = MetaPropertyId::ALL
        .iter()
        .map(|&prop| {
            let examples = seeds
                .iter()
                .map(|&seed| {
                    let cand = generate(amos, prop, seed, 8, ModePolicy::ReferencesAllowed);
                    let mut adapter: Box<dyn Adapter> = if groups {
                        Box::new(InProcessAdapter::new(GroupsSut::new(GroupsConfig::default())))
                    } else {
                        Box::new(InProcessAdapter::new(PersonsSut::new(PersonsVariant::V1)))
                    };
                    let query = prop.is_state_based().then(|| ctx.clone());
                    let trace = execute_candidate(&cand, &mut adapter, amos, query.as_ref()).unwrap();
                    GeneratedExample {
                        prop,
                        key: canonical_key(&cand.steps, cand.setup_len),
                        symbols: bind_symbols(&cand.steps, &trace),
                        steps: cand.steps,
                        setup_len: cand.setup_len,
                        query,
                        truncated: seed % 3 == 0,
                    }
                })
                .collect();
            PropResult {
                prop,
                examples,
                trials: seeds.len(),
            }
        })
        .collect();
    ExplorationResult {
        props,
        warnings: vec!["no reset".into()],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generation_is_deterministic(seed: u64, size in 0usize..100, prop in prop_id(), policy in policy(), groups: bool) {
        let amos = catalogue(groups);
        prop_assert_eq!(generate(&amos, prop, seed, size, policy), generate(&amos, prop, seed, size, policy));
    }

    #[test]
    fn candidates_conform_to_their_shape(seed: u64, size in 0usize..100, prop in prop_id(), policy in policy(), groups: bool) {
        let amos = catalogue(groups);
        let cand = generate(&amos, prop, seed, size, policy);
        prop_assert_eq!(check_shape(&cand, &amos), Ok(()));
        let steps = &cand.steps;
        match cand.shape {
            Shape::Repeated => prop_assert!(steps.len() == 2 && steps[0] == steps[1]),
            Shape::Bracketed => prop_assert!(steps.len() >= 2 && steps[0] == steps[steps.len() - 1]),
            Shape::Free { setup } => {
                prop_assert!(steps.len() >= cand.shape.min_len());
                prop_assert_eq!(setup, cand.setup_len > 0);
                if setup {
                    prop_assert!(cand.setup_len < steps.len());
                }
            }
        }
    }

    #[test]
    fn references_point_backwards_at_bound_values(seed: u64, size in 0usize..100, prop in prop_id(), groups: bool) {
        let amos = catalogue(groups);
        let cand = generate(&amos, prop, seed, size, ModePolicy::ReferencesAllowed);
        for (i, step) in cand.steps.iter().enumerate() {
            for r in step.params.iter().flat_map(|p| p.refs()) {
                prop_assert!(r.step < i);
                if r.source == Source::Param {
                    prop_assert!(cand.steps[r.step].params.is_some());
                }
            }
        }
    }

    #[test]
    fn random_only_candidates_carry_no_references(seed: u64, size in 0usize..100, prop in prop_id(), groups: bool) {
        let amos = catalogue(groups);
        let cand = generate(&amos, prop, seed, size, ModePolicy::RandomOnly);
        prop_assert!(cand.steps.iter().all(|s| s.params.iter().all(|p| p.refs().is_empty())));
    }

    #[test]
    fn state_traces_carry_one_snapshot_more_than_steps(seed: u64, size in 0usize..40, prop in prop_id(), groups: bool) {
        let amos = catalogue(groups);
        let cand = generate(&amos, prop, seed, size, ModePolicy::ReferencesAllowed);
        let ctx = query_for(groups);
        let trace = if groups {
            execute_candidate(&cand, &mut InProcessAdapter::new(GroupsSut::new(GroupsConfig::default())), &amos, Some(&ctx))
        } else {
            execute_candidate(&cand, &mut InProcessAdapter::new(PersonsSut::new(PersonsVariant::V2)), &amos, Some(&ctx))
        }
        .unwrap();
        let snaps = trace.snapshots.as_ref().map_or(0, Vec::len);
        if trace.error.is_none() {
            prop_assert_eq!(trace.steps.len(), cand.steps.len());
            prop_assert_eq!(snaps, cand.steps.len() + 1);
        } else {
            prop_assert_eq!(snaps, trace.steps.len() + 1);
        }
    }

    #[test]
    fn schemas_round_trip(s in schema()) {
        prop_assert_eq!(schema_from_value(&schema_to_value(&s), "root"), Ok(s.clone()));
        let mut amos = catalogue(false);
        amos.schemas.insert("extra".into(), s);
        prop_assert_eq!(parse_amos(&render_amos(&amos)), Ok(amos));
    }

    #[test]
    fn symmetry_laws(xs in proptest::collection::vec(0u8..20, 1..40), ys in proptest::collection::vec(0u8..20, 1..40)) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
        prop_assert!((vargha_delaney_a(&xs, &ys) + vargha_delaney_a(&ys, &xs) - 1.0).abs() < 1e-12);
        let (p, q) = (mann_whitney_u(&xs, &ys), mann_whitney_u(&ys, &xs));
        prop_assert!((p.p - q.p).abs() < 1e-12);
        prop_assert!((p.u + q.u - (xs.len() * ys.len()) as f64).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&p.p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The normal approximation tracks the exact distribution once both
    /// samples have at least eight tie-free values.
    #[test]
    fn exact_and_normal_p_agree(m in 8usize..=20, n in 8usize..=20, seed: u64) {
        prop_assume!(m * n <= 400);
        let mut rng = Rng::new(seed);
        let mut values: Vec<f64> = (0..m + n).map(|v| v as f64).collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.below(i + 1));
        }
        let (xs, ys) = values.split_at(m);
        let mw = mann_whitney_u(xs, ys);
        prop_assert!(mw.exact);
        let singletons = vec![1; m + n];
        let approx = normal_p(mw.u, m, n, &singletons);
        prop_assert!((exact_p(mw.u, m, n) - approx).abs() < 0.02, "exact {} approx {}", mw.p, approx);
    }

    #[test]
    fn reports_round_trip(seeds in proptest::collection::vec(any::<u64>(), 0..3), groups: bool) {
        let amos = catalogue(groups);
        let result = result_from(&amos, &seeds, groups);
        prop_assert_eq!(parse_data(&render_data(&result)), Ok(result.clone()));
        for ex in result.props.iter().flat_map(|p| &p.examples) {
            prop_assert_eq!(parse_test_case(&emit_test_case(ex)), Ok(TestCase::from_example(ex)));
        }
    }

    #[test]
    fn shrinking_keeps_the_property_and_never_grows(seed: u64, prop in prop_oneof![Just(MetaPropertyId::MpR1), Just(MetaPropertyId::MpR2)]) {
        let amos = catalogue(false);
        let mut adapter = InProcessAdapter::new(PersonsSut::new(PersonsVariant::V2));
        let found = (0..200u64).find_map(|t| {
            let cand = generate(&amos, prop, seed.wrapping_add(t), 20, ModePolicy::ReferencesAllowed);
            let trace = run_trial(&cand, &mut adapter, &amos, None).unwrap();
            evaluate(prop, &trace, None).unwrap().then_some((cand, trace))
        });
        if let Some((cand, trace)) = found {
            let out = shrink_example(&cand, &trace, prop, None, &mut adapter, &amos, ShrinkBudget::default()).unwrap();
            prop_assert!(candidate_measure(&out.candidate, &amos) <= candidate_measure(&cand, &amos));
            prop_assert_eq!(check_shape(&out.candidate, &amos), Ok(()));
            let again = run_trial(&out.candidate, &mut adapter, &amos, None).unwrap();
            prop_assert!(evaluate(prop, &again, None).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reported_examples_have_at_least_two_operations(seed: u64, groups: bool, state: bool) {
        let amos = catalogue(groups);
        let props = if state {
            vec![MetaPropertyId::MpS2, MetaPropertyId::MpS3, MetaPropertyId::MpS4]
        } else {
            vec![MetaPropertyId::MpR1, MetaPropertyId::MpR2]
        };
        let config = ExplorationConfig {
            props,
            seed,
            tests_per_iteration: 25,
            iterations: 2,
            ctx: state.then(|| query_for(groups)),
            ..Default::default()
        };
        let result = if groups {
            explore(&amos, &mut InProcessAdapter::new(GroupsSut::new(GroupsConfig::default())), &config)
        } else {
            explore(&amos, &mut InProcessAdapter::new(PersonsSut::new(PersonsVariant::V1)), &config)
        }
        .unwrap();
        for ex in result.props.iter().flat_map(|p| &p.examples) {
            prop_assert!(ex.reported_len() >= 2, "{:?}", ex.steps);
            if !ex.prop.is_state_based() {
                prop_assert!(ex.steps.len() >= 2);
            }
        }
    }
}

#[test]
fn fixtures_round_trip() {
    for groups in [false, true] {
        let amos = catalogue(groups);
        assert_eq!(parse_amos(&render_amos(&amos)), Ok(amos));
    }
}
