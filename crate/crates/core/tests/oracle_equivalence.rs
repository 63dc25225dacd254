use proptest::prelude::*;
use swarmalloc::{
    allocate, brute_force, penalized_score, AllocatorConfig, Curve64, OracleConfig, TaskSet64,
};

fn curve() -> impl Strategy<Value = Curve64> {
    prop_oneof![
        (0.02f64..0.98).prop_map(|l| Curve64::linear(l).unwrap()),
        (0.505f64..0.98).prop_map(|p| Curve64::saturating(p).unwrap()),
        (0.0f64..0.3, 0.0f64..1.0, 0.2f64..2.0).prop_map(|(b, a, k)| {
            let alpha = b + a * (1.0 - b);
            Curve64::retrograde(alpha, b, k).unwrap()
        }),
    ]
}

fn instance() -> impl Strategy<Value = (usize, TaskSet64)> {
    prop::collection::vec(curve(), 1..=4).prop_flat_map(|curves| {
        let t = curves.len();
        (t..=20usize, Just(TaskSet64::new(curves).unwrap()))
    })
}

fn assert_optimal(n: usize, set: &TaskSet64, config: &AllocatorConfig<f64>) {
    let greedy = allocate(n, set, config).unwrap();
    let oracle = brute_force(n, set, config, &OracleConfig::default()).unwrap();
    let score = penalized_score(set, &greedy.counts, config.epsilon).unwrap();
    assert!(
        (score - oracle.best_score).abs() <= 1e-12 * oracle.best_score.abs(),
        "greedy {:?}+{} scores {score}, oracle {:?}+{} scores {}",
        greedy.counts,
        greedy.idle,
        oracle.best.counts,
        oracle.best.idle,
        oracle.best_score
    );
    if oracle.tie_count as usize == oracle.ties.len() {
        assert!(oracle.contains(&greedy.counts, greedy.idle) || !oracle.includes_idle && greedy.idle > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn greedy_matches_oracle((n, set) in instance()) {
        assert_optimal(n, &set, &AllocatorConfig::default());
    }

    #[test]
    fn greedy_matches_oracle_with_epsilon((n, set) in instance(), eps in 0.0f64..0.3) {
        assert_optimal(n, &set, &AllocatorConfig::new(eps).unwrap());
    }

    #[test]
    fn saturating_only_sets_match((ps, extra) in (prop::collection::vec(0.505f64..0.95, 1..=4), 0usize..16)) {
        let set = TaskSet64::new(ps.iter().map(|&p| Curve64::saturating(p).unwrap()).collect()).unwrap();
        assert_optimal(ps.len() + extra, &set, &AllocatorConfig::default());
    }
}

#[test]
fn deterministic_across_calls() {
    let set = TaskSet64::new(vec![
        Curve64::saturating(0.6).unwrap(),
        Curve64::linear(0.4).unwrap(),
        Curve64::retrograde(0.3, 0.02, 0.8).unwrap(),
    ])
    .unwrap();
    let first = allocate(40, &set, &AllocatorConfig::default()).unwrap();
    for _ in 0..5 {
        assert_eq!(allocate(40, &set, &AllocatorConfig::default()).unwrap(), first);
    }
}
