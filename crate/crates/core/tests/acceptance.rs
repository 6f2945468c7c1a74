//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p v2v-aoi --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2v_aoi::allocator::{
    check_feasible, default_pa, genetic_pa, greedy_pa, oracle_pa, AllocationProblem, GeneticConfig, GreedyConfig,
    Strategy,
};
use v2v_aoi::aoi::probabilistic_round;
use v2v_aoi::channel::{compute_snr_matrix, link_delay, ChannelParams, DistanceMatrix, PowerMatrix};
use v2v_aoi::cli::{execute, resolve, run_compare, Cli, ExperimentConfig, REDUCED_RATE_FACTOR};
use v2v_aoi::metrics::StrategyComparison;
use v2v_aoi::proxy::{estimate_ap, DegradationCurve, DelayType};
use v2v_aoi::scenario::{generate_scene, ScenarioSpec};
use v2v_aoi::seed::derive_seed;

use clap::Parser;

fn verdict(id: &str, title: &str, ok: bool, detail: String) {
    println!("criterion {id} {title}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} {title} failed: {detail}");
}

fn config(args: &[&str]) -> ExperimentConfig {
    let cli = Cli::try_parse_from(std::iter::once("v2v-aoi").chain(args.iter().copied())).unwrap();
    resolve(cli.command.name(), cli.command.args()).unwrap().0
}

/// The default `compare` run (15 trials at n = 3, 4, 5), computed once and
/// shared by the criteria that inspect it.
fn default_compare() -> &'static (ExperimentConfig, Vec<StrategyComparison>) {
    static CELL: OnceLock<(ExperimentConfig, Vec<StrategyComparison>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = config(&["compare"]);
        let cmp = run_compare(&cfg, 1).unwrap();
        (cfg, cmp)
    })
}

#[test]
fn criterion_1_channel_closed_form() {
    let params = ChannelParams::default();
    let dist = DistanceMatrix::from_rows(vec![vec![0.0, 10.0], vec![10.0, 0.0]]).unwrap();
    let power = PowerMatrix::uniform(2, 23.0);
    let snr = compute_snr_matrix(&params, &dist, &power).unwrap();
    let expected = 23.0 / (10f64.powi(3) * 4.14e-14);
    let rel = ((snr.get(0, 1) - expected) / expected).abs().max(((snr.get(1, 0) - expected) / expected).abs());
    let delay = link_delay(&params, 1.0);
    verdict(
        "1",
        "channel closed form",
        rel <= 1e-12 && delay == 0.848,
        format!("snr rel err {rel:.2e}, delay at snr 1 = {delay}"),
    );
}

#[test]
fn criterion_2_oracle_gap() {
    let params = ChannelParams::default();
    let mut worst_greedy = f64::NEG_INFINITY;
    let mut worst_genetic = f64::NEG_INFINITY;
    for t in 0..10 {
        let scene = generate_scene(&ScenarioSpec::synthetic(3, derive_seed(2024, t))).unwrap();
        let problem = AllocationProblem::new(params, scene.dist).unwrap();
        let oracle = oracle_pa(&problem, 20).unwrap().objective_min_snr;
        let greedy = greedy_pa(&problem, &GreedyConfig::default()).unwrap().objective_min_snr;
        let genetic = genetic_pa(
            &problem,
            &GeneticConfig {
                rng_seed: derive_seed(4048, t),
                ..GeneticConfig::default()
            },
        )
        .unwrap()
        .objective_min_snr;
        worst_greedy = worst_greedy.max((oracle - greedy) / oracle);
        worst_genetic = worst_genetic.max((oracle - genetic) / oracle);
    }
    verdict(
        "2",
        "oracle optimality gap",
        worst_greedy <= 0.05 && worst_genetic <= 0.05,
        format!("worst greedy gap {worst_greedy:.4}, worst genetic gap {worst_genetic:.4}"),
    );
}

#[test]
fn criterion_3_comparison_pattern() {
    let (_, comparisons) = default_compare();
    let mut ok = true;
    let mut detail = Vec::new();
    for c in comparisons {
        let agg = |name: &str| c.aggregate(name, None).unwrap();
        let (d, g, ga) = (agg("DefaultPA"), agg("GreedyPA"), agg("GeneticPA"));
        let rmse_ratio = g.rmse_vs_reference_s / d.rmse_vs_reference_s;
        let var_ratio = d.variance_s2 / g.variance_s2;
        let mean_gap = (g.mean_s - ga.mean_s).abs() / ga.mean_s;
        ok &= c.trials.len() == 15 && rmse_ratio < 0.01 && var_ratio > 1e3 && mean_gap < 0.1;
        detail.push(format!(
            "n={}: rmse ratio {rmse_ratio:.2e}, var ratio {var_ratio:.2e}, mean gap {mean_gap:.4}",
            c.n_vehicles
        ));
    }
    verdict("3", "comparison pattern", ok, detail.join("; "));
}

#[test]
fn criterion_4_greedy_ablation() {
    let (cfg, comparisons) = default_compare();
    let mut instances = 0;
    let mut ordered = true;
    let mut monotone = true;
    for c in comparisons {
        for trial in &c.trials {
            let capped = |cap| {
                trial
                    .results
                    .iter()
                    .find(|r| r.strategy_name == "GreedyPA" && r.epoch_cap == Some(cap))
                    .unwrap()
                    .min_snr
            };
            ordered &= capped(5000) >= capped(500) && capped(500) >= capped(50);
            let dist = DistanceMatrix::new(trial.distances.clone()).unwrap();
            let problem = AllocationProblem::new(cfg.channel, dist).unwrap();
            let run = greedy_pa(&problem, &cfg.greedy).unwrap();
            monotone &= run.trace.windows(2).all(|w| w[1] >= w[0]);
            instances += 1;
        }
    }
    verdict(
        "4",
        "greedy convergence ablation",
        ordered && monotone,
        format!("{instances} instances, caps ordered {ordered}, best-so-far non-decreasing {monotone}"),
    );
}

#[test]
fn criterion_5_payload_linearity() {
    let base = run_compare(&config(&["compare", "--trials", "2", "--n", "3,4"]), 1).unwrap();
    let factor = REDUCED_RATE_FACTOR.to_string();
    let reduced = run_compare(
        &config(&["compare", "--trials", "2", "--n", "3,4", "--rate-factor", &factor]),
        1,
    )
    .unwrap();
    let mut entries = 0;
    let mut mismatches = 0;
    for (b, r) in base.iter().zip(&reduced) {
        for (tb, tr) in b.trials.iter().zip(&r.trials) {
            for (sb, sr) in tb.results.iter().zip(&tr.results) {
                for (x, y) in sb.delay_s.off_diagonal().zip(sr.delay_s.off_diagonal()) {
                    entries += 1;
                    if y != REDUCED_RATE_FACTOR * x {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    verdict(
        "5",
        "payload linearity",
        entries > 0 && mismatches == 0,
        format!("{entries} delay entries, {mismatches} not exactly {REDUCED_RATE_FACTOR} x baseline"),
    );
}

#[test]
fn criterion_6_rounding_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 100_000;
    let mut seen = BTreeSet::new();
    let mut sum = 0.0;
    for _ in 0..draws {
        let v = probabilistic_round(0.25, 0.1, &mut rng).unwrap();
        seen.insert(v.to_bits());
        sum += v;
    }
    let mean = sum / draws as f64;
    let values: Vec<f64> = seen.iter().map(|&b| f64::from_bits(b)).collect();
    verdict(
        "6",
        "probabilistic rounding statistics",
        (mean - 0.25).abs() <= 0.001 && values == [0.2, 0.3],
        format!("mean {mean:.5}, values {values:?}"),
    );
}

#[test]
fn criterion_7_proxy_knots() {
    let mut knots_exact = true;
    let mut ordered = true;
    let mut monotone = true;
    for kind in [DelayType::Backbone, DelayType::TransDelay, DelayType::LinerCoef] {
        let curve = DegradationCurve::builtin(kind);
        for p in curve.points() {
            knots_exact &= estimate_ap(&curve, p.delay).unwrap() == p.ap;
        }
        let mut prev = estimate_ap(&curve, 0.0).unwrap();
        for k in 0..=3000 {
            let ap = estimate_ap(&curve, k as f64 * 0.0005).unwrap();
            ordered &= ap.ap30 >= ap.ap50 && ap.ap50 >= ap.ap70;
            monotone &= ap.ap30 <= prev.ap30 && ap.ap50 <= prev.ap50 && ap.ap70 <= prev.ap70;
            prev = ap;
        }
    }
    verdict(
        "7",
        "proxy knot exactness",
        knots_exact && ordered && monotone,
        format!("knots exact {knots_exact}, IoU ordering {ordered}, non-increasing {monotone}"),
    );
}

#[test]
fn criterion_8_feasibility() {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let instance = (2usize..=6, any::<u64>(), 1e-7f64..1e-3, 1.0f64..50.0, 2.0f64..4.0);
    let outcome = runner.run(&instance, |(n, seed, p_min, p_max, alpha)| {
        let params = ChannelParams {
            alpha,
            p_min_w: p_min,
            p_max_w: p_max,
            ..ChannelParams::default()
        };
        let scene = generate_scene(&ScenarioSpec::synthetic(n, seed)).unwrap();
        let problem = AllocationProblem::new(params, scene.dist).unwrap();
        let genetic = GeneticConfig {
            population_size: 20,
            max_generations: 150,
            rng_seed: seed,
            ..GeneticConfig::default()
        };
        let mut results = vec![
            default_pa(&problem).unwrap(),
            greedy_pa(&problem, &GreedyConfig::default()).unwrap(),
            Strategy::Genetic.solve(&problem, &GreedyConfig::default(), &genetic).unwrap(),
        ];
        if n <= 3 {
            results.push(oracle_pa(&problem, 5).unwrap());
        }
        for r in results {
            let report = check_feasible(&r.power, &params);
            if !report.feasible() {
                return Err(TestCaseError::fail(format!("{}: {:?}", r.strategy_name, report.violations)));
            }
        }
        Ok(())
    });
    let detail = match &outcome {
        Ok(()) => "1000 instances, 0 violations".to_string(),
        Err(e) => e.to_string(),
    };
    verdict("8", "feasibility", outcome.is_ok(), detail);
}

#[test]
fn criterion_9_determinism() {
    let (cfg, _) = default_compare();
    let first = execute(cfg, 1).unwrap().records_jsonl();
    let again = execute(cfg, 1).unwrap().records_jsonl();
    let parallel = execute(cfg, 4).unwrap().records_jsonl();
    verdict(
        "9",
        "determinism",
        first == again && first == parallel,
        format!(
            "{} bytes; rerun identical {}, --jobs 4 identical {}",
            first.len(),
            first == again,
            first == parallel
        ),
    );
}
