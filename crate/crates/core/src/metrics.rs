//! Delay statistics used to compare allocation strategies, and the batch
//! driver that runs every strategy over a set of seeded scenes.
//!
//! All statistics range over the ordered off-diagonal pairs `i ≠ j` only and
//! sum in row-major order. Variance is the population variance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{AllocationProblem, AllocationResult, GeneticConfig, GreedyConfig, Strategy};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scenario::{generate_scene, ScenarioSpec};
use crate::seed::derive_seed;

pub fn delay_rmse(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.check_same_size(b, "delay_rmse")?;
    let (sum, count) = a
        .off_diagonal()
        .zip(b.off_diagonal())
        .fold((0.0, 0usize), |(s, c), (x, y)| (s + (x - y).powi(2), c + 1));
    if count == 0 {
        return Err(Error::Dimension("delay matrices need at least 2 vehicles".into()));
    }
    Ok((sum / count as f64).sqrt())
}

pub fn delay_mean(d: &Matrix) -> f64 {
    shifted_mean(d.off_diagonal())
}

pub fn delay_variance(d: &Matrix) -> f64 {
    let mean = delay_mean(d);
    let (sum, count) = d
        .off_diagonal()
        .fold((0.0, 0usize), |(s, c), x| (s + (x - mean).powi(2), c + 1));
    sum / count as f64
}

/// Mean computed as `x₀ + mean(x − x₀)`; equal inputs give back exactly `x₀`.
pub(crate) fn shifted_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut values = values.peekable();
    let Some(&origin) = values.peek() else {
        return f64::NAN;
    };
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), x| (s + (x - origin), c + 1));
    origin + sum / count as f64
}

/// Solver settings shared by every trial of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    pub params: ChannelParams,
    pub greedy: GreedyConfig,
    pub genetic: GeneticConfig,
    /// Extra GreedyPA runs capped at these epoch counts, each scored against
    /// the GeneticPA reference.
    pub greedy_epoch_ablation: Vec<usize>,
    /// Parallel trial workers; 0 uses the rayon default. Does not affect results.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            params: ChannelParams::default(),
            greedy: GreedyConfig::default(),
            genetic: GeneticConfig::default(),
            greedy_epoch_ablation: vec![5000, 500, 50],
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub scene_seed: u64,
    pub ga_seed: u64,
    pub distances: Matrix,
    pub results: Vec<StrategyTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTrial {
    pub strategy_name: String,
    /// Epoch cap for ablation rows; `None` for the main strategies.
    pub epoch_cap: Option<usize>,
    pub delay_s: Matrix,
    pub min_snr: f64,
    pub max_delay_s: f64,
    pub epochs_used: usize,
    pub rmse_vs_reference_s: f64,
    pub variance_s2: f64,
    pub mean_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub strategy_name: String,
    pub epoch_cap: Option<usize>,
    pub rmse_vs_reference_s: f64,
    pub variance_s2: f64,
    pub mean_s: f64,
    pub mean_min_snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub n_vehicles: usize,
    pub reference: String,
    pub variance_kind: String,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<StrategyAggregate>,
}

impl StrategyComparison {
    pub fn aggregate(&self, strategy: &str, epoch_cap: Option<usize>) -> Option<&StrategyAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.strategy_name == strategy && a.epoch_cap == epoch_cap)
    }
}

fn strategy_row(result: &AllocationResult, epoch_cap: Option<usize>, reference: &Matrix) -> Result<StrategyTrial> {
    let delay = &result.metrics.delay_s;
    Ok(StrategyTrial {
        strategy_name: result.strategy_name.clone(),
        epoch_cap,
        delay_s: delay.clone(),
        min_snr: result.objective_min_snr,
        max_delay_s: result.objective_max_delay_s,
        epochs_used: result.epochs_used,
        rmse_vs_reference_s: delay_rmse(delay, reference)?,
        variance_s2: delay_variance(delay),
        mean_s: delay_mean(delay),
    })
}

fn run_trial(spec: &ScenarioSpec, trial: usize, cfg: &ComparisonConfig) -> Result<TrialRecord> {
    let scene_seed = derive_seed(spec.rng_seed, trial as u64);
    let ga_seed = derive_seed(cfg.genetic.rng_seed, trial as u64);
    let scene = generate_scene(&ScenarioSpec {
        rng_seed: scene_seed,
        ..spec.clone()
    })?;
    let problem = AllocationProblem::new(cfg.params, scene.dist)?;
    let genetic_cfg = GeneticConfig {
        rng_seed: ga_seed,
        ..cfg.genetic
    };

    let genetic = Strategy::Genetic.solve(&problem, &cfg.greedy, &genetic_cfg)?;
    let reference = genetic.metrics.delay_s.clone();
    let mut results = Vec::new();
    for strategy in [Strategy::Default, Strategy::Greedy] {
        let r = strategy.solve(&problem, &cfg.greedy, &genetic_cfg)?;
        results.push(strategy_row(&r, None, &reference)?);
    }
    results.push(strategy_row(&genetic, None, &reference)?);
    for &cap in &cfg.greedy_epoch_ablation {
        let capped = GreedyConfig {
            max_epochs: cap,
            ..cfg.greedy
        };
        let r = crate::allocator::greedy_pa(&problem, &capped)?;
        results.push(strategy_row(&r, Some(cap), &reference)?);
    }
    Ok(TrialRecord {
        trial,
        scene_seed,
        ga_seed,
        distances: problem.dist.matrix().clone(),
        results,
    })
}

/// Run DefaultPA, GreedyPA and GeneticPA on `trials` scenes drawn from `spec`
/// and average each strategy's RMSE against GeneticPA, delay variance and
/// mean delay. Trial `t` uses scene seed `derive_seed(spec.rng_seed, t)` and
/// GA seed `derive_seed(genetic.rng_seed, t)`, so results do not depend on how
/// many workers run them.
pub fn run_comparison(spec: &ScenarioSpec, trials: usize, cfg: &ComparisonConfig) -> Result<StrategyComparison> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    cfg.params.validate()?;
    cfg.greedy.validate()?;
    cfg.genetic.validate()?;
    let run = || -> Vec<Result<TrialRecord>> {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t, cfg))
            .collect()
    };
    let outcomes = if cfg.jobs == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)
    };
    let mut records = Vec::with_capacity(trials);
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        records.push(outcome.map_err(|e| Error::Trial {
            trial,
            source: Box::new(e),
        })?);
    }

    let n_vehicles = records[0].distances.n();
    let aggregates = records[0]
        .results
        .iter()
        .enumerate()
        .map(|(k, first)| {
            let rows = || records.iter().map(|r| &r.results[k]);
            let avg = |f: fn(&StrategyTrial) -> f64| rows().map(f).sum::<f64>() / trials as f64;
            StrategyAggregate {
                strategy_name: first.strategy_name.clone(),
                epoch_cap: first.epoch_cap,
                rmse_vs_reference_s: avg(|r| r.rmse_vs_reference_s),
                variance_s2: avg(|r| r.variance_s2),
                mean_s: avg(|r| r.mean_s),
                mean_min_snr: avg(|r| r.min_snr),
            }
        })
        .collect();

    Ok(StrategyComparison {
        n_vehicles,
        reference: Strategy::Genetic.label().to_string(),
        variance_kind: "population variance over ordered off-diagonal pairs".to_string(),
        trials: records,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(a: f64, b: f64) -> Matrix {
        Matrix::from_rows(vec![vec![0.0, a], vec![b, 0.0]]).unwrap()
    }

    #[test]
    fn rmse_hand_values() {
        let a = two_by_two(0.3, 0.5);
        let b = two_by_two(0.1, 0.1);
        assert_eq!(delay_rmse(&a, &a).unwrap(), 0.0);
        let expected = ((0.04f64 + 0.16) / 2.0).sqrt();
        assert!((delay_rmse(&a, &b).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.3162).abs() < 1e-4);
        assert_eq!(delay_rmse(&a, &b).unwrap(), delay_rmse(&b, &a).unwrap());
    }

    #[test]
    fn rmse_dimension_mismatch() {
        let err = delay_rmse(&two_by_two(1.0, 1.0), &Matrix::off_diagonal_fill(3, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn variance_and_mean() {
        let d = two_by_two(0.1, 0.3);
        assert!((delay_variance(&d) - 0.01).abs() < 1e-15);
        assert!((delay_mean(&d) - 0.2).abs() < 1e-15);
        let flat = Matrix::off_diagonal_fill(4, 0.7);
        assert_eq!(delay_variance(&flat), 0.0);
        assert_eq!(delay_mean(&flat), 0.7);
        let shifted = d.map_off_diagonal(|x| x + 5.0);
        assert!((delay_variance(&shifted) - delay_variance(&d)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_ignored() {
        let mut a = Matrix::from_rows(vec![vec![0.0, 1.0, 2.0], vec![3.0, 0.0, 4.0], vec![5.0, 6.0, 0.0]]).unwrap();
        let b = a.map_off_diagonal(|x| x * 0.5);
        let before = (delay_rmse(&a, &b).unwrap(), delay_variance(&a), delay_mean(&a));
        for i in 0..3 {
            a.set(i, i, 1e6 * (i + 1) as f64);
        }
        assert_eq!(before, (delay_rmse(&a, &b).unwrap(), delay_variance(&a), delay_mean(&a)));
    }

    #[test]
    fn zero_trials_rejected() {
        let err = run_comparison(&ScenarioSpec::synthetic(3, 0), 0, &ComparisonConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn two_vehicles_all_strategies_agree() {
        let cfg = ComparisonConfig {
            greedy_epoch_ablation: vec![],
            ..ComparisonConfig::default()
        };
        let cmp = run_comparison(&ScenarioSpec::synthetic(2, 4), 1, &cfg).unwrap();
        for agg in &cmp.aggregates {
            assert!(agg.rmse_vs_reference_s < 1e-3 * agg.mean_s, "{agg:?}");
        }
    }

    #[test]
    fn trial_errors_carry_index() {
        let cfg = ComparisonConfig {
            params: ChannelParams {
                p_min_w: 10.0,
                p_max_w: 15.0,
                ..ChannelParams::default()
            },
            ..ComparisonConfig::default()
        };
        let err = run_comparison(&ScenarioSpec::synthetic(3, 0), 2, &cfg).unwrap_err();
        assert!(matches!(err, Error::Trial { trial: 0, .. }));
    }
}
