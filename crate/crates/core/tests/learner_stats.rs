mod common;

use hme_core::learner::{
    build_learner, hardness_profile, max_stack_height, LearnerModel, LearnerProfile, LearningCurve, NoisyLearner,
};
use hme_core::{SemanticConfig, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat(p0: f64, p_max: f64, tau: f64, eps: f64) -> LearnerProfile {
    LearnerProfile {
        name: "flat".into(),
        oracle: false,
        p0,
        p_max,
        tau_learn: tau,
        eps_explore: eps,
        hard: None,
    }
}

fn noisy(objects: usize, profile: &LearnerProfile) -> NoisyLearner<f64> {
    let space = Space::shared(objects).unwrap();
    NoisyLearner::new(
        common::oracle(objects),
        hardness_profile(space, profile).unwrap(),
        profile.eps_explore,
    )
}

// binomial 4-sigma band
fn assert_rate(hits: usize, trials: usize, p: f64) {
    let rate = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((rate - p).abs() <= 4.0 * sigma + 1e-12, "rate {rate} vs {p}");
}

#[test]
fn success_rate_follows_the_curve() {
    let profile = flat(0.1, 0.9, 25.0, 0.0);
    let curve = LearningCurve::new(0.1, 0.9, 25.0).unwrap();
    let oracle = common::oracle(3);
    let edges: Vec<_> = oracle.edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // practice count n at each attempt is known, so successes are
    // Bernoulli(p(n)) and their sum has a known mean and variance
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut hits = 0usize;
    for &(a, b) in edges.iter().take(40) {
        let mut learner = noisy(3, &profile);
        for n in 0..200u32 {
            let p = curve.probability(n);
            mean += p;
            var += p * (1.0 - p);
            if learner.attempt(a, b, &mut rng).success {
                hits += 1;
            }
        }
    }
    assert!((hits as f64 - mean).abs() <= 4.0 * var.sqrt(), "{hits} vs {mean}");
}

#[test]
fn saturated_rate_is_p_max() {
    let profile = flat(0.0, 0.7, 1.0, 0.0);
    let oracle = common::oracle(3);
    let (a, b) = oracle.edges().next().unwrap();
    let mut learner = noisy(3, &profile);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        learner.attempt(a, b, &mut rng);
    }
    let hits = (0..10_000).filter(|_| learner.attempt(a, b, &mut rng).success).count();
    assert_rate(hits, 10_000, 0.7);
}

#[test]
fn competence_is_shared_across_relabelings() {
    let space = Space::shared(4).unwrap();
    let profile = flat(0.0, 1.0, 10.0, 0.0);
    let oracle = common::oracle(4);
    let (a, b) = oracle.edges().nth(77).unwrap();
    let mut learner = noisy(4, &profile);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..13 {
        learner.attempt(a, b, &mut rng);
    }
    let expect = learner.table().probability(a, b);
    for k in 0..space.permutation_count() {
        let (pa, pb) = (space.apply_indexed(a, k), space.apply_indexed(b, k));
        assert_eq!(learner.table().practice_count(pa, pb), 13);
        assert_eq!(learner.table().probability(pa, pb), expect);
    }
}

#[test]
fn attempts_land_on_oracle_nodes_and_replay() {
    let profile = flat(0.3, 0.8, 5.0, 0.5);
    let oracle = common::oracle(4);
    let nodes = oracle.nodes().to_vec();
    let run = |seed: u64| {
        let mut learner = noisy(4, &profile);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Vec::new();
        for _ in 0..5_000 {
            let a = nodes[rng.gen_range(0..nodes.len())];
            let b = match rng.gen_bool(0.7) {
                true => oracle.neighbors(a).next().unwrap(),
                false => nodes[rng.gen_range(0..nodes.len())],
            };
            let r = learner.attempt(a, b, &mut rng);
            assert!(oracle.is_reachable(r.achieved));
            assert_eq!(r.success, r.achieved == b);
            assert!(r.achieved == a || r.achieved == b || oracle.has_edge(a, r.achieved));
            for s in &r.side_discoveries {
                assert!(oracle.has_edge(r.achieved, *s));
            }
            trace.push((r.achieved, r.side_discoveries));
        }
        trace
    };
    assert_eq!(run(3), run(3));
}

#[test]
fn no_high_stacks_random_walk_stays_low() {
    let space = Space::shared(4).unwrap();
    let oracle = common::oracle(4);
    assert!(oracle.nodes().iter().any(|&c| max_stack_height(space, c) == 4));
    let mut learner = build_learner::<f64>(space, oracle, &LearnerProfile::no_high_stacks()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut at = SemanticConfig::EMPTY;
    let mut tallest = 0;
    for _ in 0..100_000 {
        at = learner.explore(at, &mut rng).achieved;
        tallest = tallest.max(max_stack_height(space, at));
    }
    assert_eq!(tallest, 3);
}

#[test]
fn evaluation_probes_do_not_change_the_learner() {
    let profile = flat(0.2, 0.9, 5.0, 0.2);
    let oracle = common::oracle(3);
    let mut learner = noisy(3, &profile);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (a, b) in oracle.edges().take(50) {
        learner.attempt(a, b, &mut rng);
    }
    let digest = learner.state_digest();
    for (a, b) in oracle.edges() {
        learner.competent(a, b);
        learner.sample_competence(a, b, &mut rng);
    }
    assert_eq!(learner.state_digest(), digest);
}
