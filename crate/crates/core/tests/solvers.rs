use v2v_aoi::allocator::{
    default_pa, genetic_pa, greedy_pa, oracle_pa, AllocationProblem, GeneticConfig, GreedyConfig,
};
use v2v_aoi::channel::{ChannelParams, DistanceMatrix};
use v2v_aoi::metrics::delay_mean;
use v2v_aoi::scenario::{generate_scene, ScenarioSpec};
use v2v_aoi::seed::derive_seed;

fn triangle(a: f64, b: f64, c: f64) -> AllocationProblem {
    let dist = DistanceMatrix::from_rows(vec![vec![0.0, a, b], vec![a, 0.0, c], vec![b, c, 0.0]]).unwrap();
    AllocationProblem::new(ChannelParams::default(), dist).unwrap()
}

/// With interference dominating noise, the SNRs arriving at one receiver
/// satisfy Σ SNR/(1+SNR) < 1, so the common minimum stays below 1/(n−2).
fn interference_bound(n: usize) -> f64 {
    1.0 / (n as f64 - 2.0)
}

#[test]
fn asymmetric_triangle_against_oracle() {
    let p = triangle(10.0, 30.0, 50.0);
    let oracle = oracle_pa(&p, 20).unwrap().objective_min_snr;
    let greedy = greedy_pa(&p, &GreedyConfig::default()).unwrap().objective_min_snr;
    let genetic = genetic_pa(&p, &GeneticConfig::default()).unwrap().objective_min_snr;
    assert!(greedy >= 0.95 * oracle, "greedy {greedy} vs oracle {oracle}");
    assert!(genetic >= 0.95 * greedy, "genetic {genetic} vs greedy {greedy}");
}

#[test]
fn equilateral_greedy_matches_uniform() {
    let p = triangle(20.0, 20.0, 20.0);
    let uniform = default_pa(&p).unwrap().objective_min_snr;
    let greedy = greedy_pa(&p, &GreedyConfig::default()).unwrap().objective_min_snr;
    assert!((greedy - uniform).abs() <= 0.01 * uniform);
}

#[test]
fn solvers_respect_and_approach_the_interference_bound() {
    for n in 3..=5 {
        let bound = interference_bound(n);
        for t in 0..3 {
            let scene = generate_scene(&ScenarioSpec::synthetic(n, derive_seed(31, t))).unwrap();
            let p = AllocationProblem::new(ChannelParams::default(), scene.dist).unwrap();
            let greedy = greedy_pa(&p, &GreedyConfig::default()).unwrap().objective_min_snr;
            let genetic = genetic_pa(
                &p,
                &GeneticConfig {
                    rng_seed: t,
                    ..GeneticConfig::default()
                },
            )
            .unwrap()
            .objective_min_snr;
            let default = default_pa(&p).unwrap().objective_min_snr;
            for v in [greedy, genetic, default] {
                assert!(v < bound, "n={n} t={t}: {v} ≥ {bound}");
            }
            assert!(genetic >= 0.99 * bound, "n={n} t={t}: genetic {genetic}");
            assert!(greedy >= 0.9 * bound, "n={n} t={t}: greedy {greedy}");
        }
    }
}

#[test]
fn smaller_payload_gives_the_bound_delay() {
    // At the interference bound every link carries S / (B·log2(1 + 1/(n−2))).
    let params = ChannelParams {
        payload_bits: 1.06e6,
        ..ChannelParams::default()
    };
    for (n, expected) in [(3, 0.106), (4, 0.1812), (5, 0.2554)] {
        let scene = generate_scene(&ScenarioSpec::synthetic(n, 5)).unwrap();
        let p = AllocationProblem::new(params, scene.dist).unwrap();
        let r = genetic_pa(&p, &GeneticConfig::default()).unwrap();
        let mean = delay_mean(&r.metrics.delay_s);
        assert!((mean - expected).abs() < 0.01 * expected, "n={n}: {mean}");
    }
}

#[test]
fn greedy_caps_are_prefixes_of_the_full_run() {
    let p = triangle(12.0, 40.0, 33.0);
    let full = greedy_pa(&p, &GreedyConfig::default()).unwrap();
    for cap in [50, 500] {
        let capped = greedy_pa(
            &p,
            &GreedyConfig {
                max_epochs: cap,
                ..GreedyConfig::default()
            },
        )
        .unwrap();
        assert_eq!(capped.trace[..], full.trace[..capped.trace.len()]);
        assert!(full.objective_min_snr >= capped.objective_min_snr);
    }
}
