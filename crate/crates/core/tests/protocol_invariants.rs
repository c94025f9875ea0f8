mod common;

use common::oracle;
use common::protocol::{check, Case};
use hme_core::learner::{HardFamily, LearnerProfile};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = LearnerProfile> {
    (0.0..=1.0f64, 0.0..=1.0f64, 1.0..50.0f64, 0.0..=1.0f64, any::<bool>()).prop_map(|(a, b, tau, eps, hard)| {
        LearnerProfile {
            name: "random".into(),
            oracle: false,
            p0: a.min(b),
            p_max: a.max(b),
            tau_learn: tau,
            eps_explore: eps,
            hard: hard.then_some(HardFamily {
                min_height: 3,
                p0: 0.0,
                p_max: 0.9,
                tau_learn: 10.0,
            }),
        }
    })
}

fn case() -> impl Strategy<Value = Case> {
    (
        3usize..=4,
        any::<u64>(),
        prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64],
        any::<bool>(),
        prop_oneof![Just(LearnerProfile::oracle()), profile()],
    )
        .prop_map(|(objects, seed, social_ratio, internalization, profile)| Case {
            objects,
            seed,
            social_ratio,
            internalization,
            profile,
            episodes: 250,
        })
}

proptest! {
    // 40 cases of 250 episodes: 10 000 checked episodes
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn protocol_invariants_hold(case in case()) {
        check(&case).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn oracle_learner_full_social_exhausts_frontier() {
    for objects in [3, 4] {
        let oracle = oracle(objects);
        let case = Case {
            objects,
            seed: 11,
            social_ratio: 1.0,
            internalization: true,
            profile: LearnerProfile::oracle(),
            episodes: oracle.node_count() as u64 + 5,
        };
        assert_eq!(check(&case).unwrap().final_frontier, 0);
    }
}
