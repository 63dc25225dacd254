use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmalloc_sim::*;

/// Drives a swarm by hand so positions and samples can be inspected every step.
fn trace(n: usize, interference: bool, seed: u64, steps: usize, rule: SamplingRule) -> (Vec<Vec<[f64; 2]>>, Vec<Vec<[f64; 2]>>) {
    let env = generate_environment(Geometry::Checkerboard, 0.53, seed).unwrap();
    let params = MotionParams { sampling: rule, ..MotionParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut robots: Vec<Robot> = (0..n)
        .map(|i| Robot::new([3.0 + 5.0 * (i % 7) as f64, 3.0 + 5.0 * (i / 7) as f64], i as f64, 10_000))
        .collect();
    let mut positions: Vec<[f64; 2]> = robots.iter().map(|r| r.position).collect();
    let mut path = vec![Vec::new(); n];
    let mut samples = vec![Vec::new(); n];
    for _ in 0..steps {
        for i in 0..n {
            let ev = robots[i].step(&env, &positions, i, &params, interference, true, &mut rng);
            positions[i] = robots[i].position;
            path[i].push(positions[i]);
            if ev.sampled.is_some() {
                samples[i].push(positions[i]);
            }
        }
    }
    (path, samples)
}

#[test]
fn robots_stay_inside_the_arena() {
    for interference in [false, true] {
        let (path, _) = trace(30, interference, 5, 4000, SamplingRule::Displacement);
        for p in path.iter().flatten() {
            assert!((0.0..=ARENA as f64).contains(&p[0]) && (0.0..=ARENA as f64).contains(&p[1]), "{p:?}");
        }
    }
}

#[test]
fn samples_are_spaced_at_least_one_unit() {
    for interference in [false, true] {
        let (_, samples) = trace(10, interference, 2, 3000, SamplingRule::Displacement);
        for s in &samples {
            for w in s.windows(2) {
                let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
                assert!(d >= 1.0 - 1e-6, "{d}");
            }
        }
        if !interference {
            assert!(samples.iter().all(|s| s.len() > 50));
        }
    }
}

#[test]
fn path_length_rule_samples_every_ten_moves() {
    let (path, samples) = trace(1, false, 3, 2000, SamplingRule::PathLength);
    let moves = path[0].windows(2).filter(|w| w[0] != w[1]).count();
    assert!((samples[0].len() as isize - (moves / 10) as isize).abs() <= 1);
}

#[test]
fn interference_keeps_minimum_separation() {
    let (path, _) = trace(25, true, 9, 3000, SamplingRule::Displacement);
    for t in 0..path[0].len() {
        for i in 0..25 {
            for j in i + 1..25 {
                let (a, b) = (path[i][t], path[j][t]);
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                assert!(d >= 1.0 - 1e-9, "robots {i}, {j} at {d} su when t = {t}");
            }
        }
    }
}

#[test]
fn identical_specs_give_identical_outcomes() {
    for c in Controller::ALL {
        let mut spec = RunSpec::new(Geometry::FourRectangles, 0.53, c, 11, 77);
        spec.interference = true;
        assert_eq!(run_experiment(&spec).unwrap(), run_experiment(&spec).unwrap());
    }
    let cfg = ExperimentConfig::new(Geometry::Striped, 0.52, Controller::Iterative, vec![1, 3], 3, 5);
    assert_eq!(run_batch(&cfg).unwrap(), run_batch(&cfg).unwrap());
}

#[test]
fn single_robot_curve_equals_measured_p() {
    let cfg = ExperimentConfig::new(Geometry::Checkerboard, 0.54, Controller::Centralized, vec![1], 40, 3);
    let curve = scalability_curve(&cfg).unwrap();
    assert_eq!(curve.len(), 1);
    assert_eq!(curve[0].accuracy, curve[0].individual_accuracy);
}

#[test]
fn all_white_floor_is_perfectly_estimated() {
    let e = estimate_individual_accuracy(Geometry::Striped, 1.0, 5, 6, 1, &MotionParams::default()).unwrap();
    assert_eq!(e.p, 1.0);
    assert_eq!(e.standard_error, 0.0);
    assert_eq!(e.total, 30);
}

#[test]
fn consensus_controllers_agree_when_converged() {
    for c in [Controller::Decentralized, Controller::Iterative] {
        for seed in 0..4 {
            let out = run_experiment(&RunSpec::new(Geometry::Checkerboard, 0.55, c, 9, seed)).unwrap();
            assert!(out.converged, "{c} seed {seed}");
            assert!(out.steps >= 600 && out.steps <= DEFAULT_MAX_TIMESTEPS);
        }
    }
}

#[test]
fn bad_specs_are_rejected() {
    assert!(matches!(
        run_experiment(&RunSpec::new(Geometry::Halved, 0.5, Controller::Centralized, 3, 0)),
        Err(SimError::FillRatio(_))
    ));
    assert!(matches!(
        run_experiment(&RunSpec::new(Geometry::Halved, 0.6, Controller::Centralized, 0, 0)),
        Err(SimError::EmptySwarm)
    ));
    let mut cfg = ExperimentConfig::new(Geometry::Halved, 0.6, Controller::Centralized, vec![], 3, 0);
    assert!(matches!(run_batch(&cfg), Err(SimError::EmptySizes)));
    cfg.n_list = Some(vec![2]);
    cfg.repetitions = 0;
    assert!(matches!(run_batch(&cfg), Err(SimError::NoRepetitions)));
}
