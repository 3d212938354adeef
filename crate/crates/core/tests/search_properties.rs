use gemith::learners::{Domain, HyperSpace, ParamValue};
use gemith::search::{tpe_suggest, SearchParams, Trial};
use gemith::seeds::rng_from_seed;
use gemith::{HyperConfig, LearnerKind, LearnerSpec};
use proptest::prelude::*;

fn mixed_space() -> HyperSpace {
    HyperSpace::new([
        ("a", Domain::LogUniform { lo: 1e-4, hi: 10.0 }),
        ("b", Domain::Uniform { lo: -1.0, hi: 1.0 }),
        ("c", Domain::Integer { lo: 2, hi: 9 }),
        ("d", Domain::Categorical { values: vec![ParamValue::Int(100), ParamValue::Int(200), ParamValue::Int(500)] }),
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Every suggestion, before and after the startup phase, lies inside
    // its declared domain whatever losses were observed.
    #[test]
    fn suggestions_stay_in_domain(seed in any::<u64>(), losses in prop::collection::vec(0.0f64..100.0, 0..20)) {
        let space = mixed_space();
        let params = SearchParams { n_trials: 40, n_startup: 3, ..SearchParams::default() };
        let mut rng = rng_from_seed(seed);
        let mut history: Vec<Trial> = Vec::new();
        for loss in losses {
            let config = tpe_suggest(LearnerKind::Ridge, &space, &history, &params, &mut rng).unwrap();
            prop_assert!(space.validate(&config).is_ok(), "{config}");
            history.push(Trial { config, loss });
        }
        let last = tpe_suggest(LearnerKind::Ridge, &space, &history, &params, &mut rng).unwrap();
        prop_assert!(space.validate(&last).is_ok());
    }

    #[test]
    fn default_spaces_accept_their_own_suggestions(seed in any::<u64>()) {
        for spec in gemith::learners::default_spaces() {
            let mut rng = rng_from_seed(seed);
            let config: HyperConfig = tpe_suggest(spec.kind, &spec.space, &[], &SearchParams::default(), &mut rng).unwrap();
            prop_assert!(LearnerSpec::default_for(spec.kind).space.validate(&config).is_ok());
        }
    }
}
