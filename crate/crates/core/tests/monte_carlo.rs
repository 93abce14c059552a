use skorokhod::analysis::binomial_z_scores;
use skorokhod::rules::{exact_stopped_law, mc_stopped_law, Breakpoint};
use skorokhod::{
    azema_yor_boundary, calibrate_perkins, corpus_pair, DiscreteMeasure, LevelThreshold, McConfig, StepMap,
    StoppingRule, TimeSpaceBarrier, TimeSpaceKind,
};

// Smaller than the acceptance run, so the bound is looser than 3 sigma.
const PATHS: u64 = 200_000;
const Z_MAX: f64 = 4.5;

fn max_z(rule: &StoppingRule, lambda: &DiscreteMeasure, seed: u64) -> f64 {
    let exact = exact_stopped_law(rule, lambda).unwrap();
    let sampled = mc_stopped_law(rule, lambda, &McConfig::with_paths(PATHS, seed)).unwrap();
    assert!((sampled.total_mass() - 1.0).abs() < 1e-12);
    binomial_z_scores(&exact, &sampled, PATHS)
        .iter()
        .map(|a| a.1)
        .fold(0.0, f64::max)
}

#[test]
fn skeleton_sampler_matches_exact_perkins_laws() {
    for seed in [1, 5, 12] {
        let (lambda, mu) = corpus_pair(seed);
        let r = calibrate_perkins(&lambda, &mu, 1e-10).unwrap();
        let z = max_z(&r.rule, &lambda, seed);
        assert!(z < Z_MAX, "instance {seed}: z = {z}");
    }
}

#[test]
fn skeleton_sampler_matches_exact_azema_yor_laws() {
    for seed in [0, 10] {
        let (lambda, mu) = corpus_pair(seed);
        let rule = StoppingRule::AzemaYor {
            boundary: azema_yor_boundary(&mu),
        };
        let z = max_z(&rule, &lambda, seed);
        assert!(z < Z_MAX, "instance {seed}: z = {z}");
    }
}

#[test]
fn hobson_pedersen_with_random_level() {
    // level 1 or 2 with equal odds, floor at -1:
    // P[-1] = 1/2 * 1/2 + 1/2 * 2/3, P[1] = 1/4, P[2] = 1/6
    let rule = StoppingRule::HobsonPedersen {
        big_g: DiscreteMeasure::new([(1.0, 0.5), (2.0, 0.5)]).unwrap(),
        g: StepMap::new(vec![Breakpoint {
            from: -1.0,
            value: -1.0,
        }])
        .unwrap(),
    };
    let law = mc_stopped_law(&rule, &DiscreteMeasure::dirac(0.0), &McConfig::with_paths(PATHS, 3)).unwrap();
    let end = law.endpoint_law();
    for (x, p) in [(-1.0, 7.0 / 12.0), (1.0, 0.25), (2.0, 1.0 / 6.0)] {
        let se = (p * (1.0 - p) / PATHS as f64).sqrt();
        assert!((end.mass_at(x) - p).abs() < Z_MAX * se, "{x}: {}", end.mass_at(x));
    }
    let energy = 7.0 / 12.0 + 0.25 + 4.0 / 6.0;
    assert!((law.expected_duration - energy).abs() < 0.02);
}

#[test]
fn root_barrier_at_the_exit_levels_is_the_exit_time() {
    let barrier = TimeSpaceBarrier::new(
        TimeSpaceKind::Root,
        vec![
            LevelThreshold {
                level: -1.0,
                threshold: Some(0.0),
            },
            LevelThreshold {
                level: 1.0,
                threshold: Some(0.0),
            },
        ],
    )
    .unwrap();
    let rule = StoppingRule::Root { barrier };
    let law = mc_stopped_law(&rule, &DiscreteMeasure::dirac(0.0), &McConfig::with_paths(20_000, 8)).unwrap();
    let end = law.endpoint_law();
    assert!((end.mass_at(1.0) - 0.5).abs() < 0.02);
    assert!((law.expected_duration - 1.0).abs() < 0.05);
}
