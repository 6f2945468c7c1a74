//! GeneticPA: real-coded GA over the off-diagonal power vector with
//! fitness = minimum link SNR.
//!
//! A chromosome holds the `n(n−1)` off-diagonal powers row by row. Each
//! generation keeps the best individual, fills the rest of the population with
//! children of size-3 tournament winners (uniform/blend crossover, mutation by
//! log-uniform resampling or multi-scale creep) and projects every child back
//! onto the feasible set before it is scored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::projection::project_genes;
use super::{AllocationProblem, AllocationResult, Strategy};
use crate::channel::{ChannelParams, LinkGains, PowerMatrix};
use crate::error::{Error, Result};

const TOURNAMENT_SIZE: usize = 3;
/// Replacement draws allowed per slot when an individual scores below the
/// fitness threshold.
const MAX_REDRAWS: usize = 100;
/// Smallest and largest log-space creep step.
const CREEP_MIN: f64 = 1e-5;
const CREEP_MAX: f64 = 1.0;
/// Extrapolation margin of the log-space blend crossover.
const BLEND_ALPHA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneticConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub max_generations: usize,
    /// Individuals whose min-SNR falls below this are replaced by fresh draws.
    pub fitness_threshold: f64,
    /// Stop after this many generations without a better individual.
    pub stall_generations: usize,
    pub rng_seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            crossover_rate: 0.8,
            mutation_rate: 0.05,
            max_generations: 100_000,
            fitness_threshold: 0.0,
            stall_generations: 500,
            rng_seed: 0,
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Parameter(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            )));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Parameter(format!("{name} must be in [0, 1], got {rate}")));
            }
        }
        if self.max_generations == 0 {
            return Err(Error::Parameter("max_generations must be at least 1".into()));
        }
        if self.stall_generations == 0 {
            return Err(Error::Parameter("stall_generations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Individual {
    genes: Vec<f64>,
    fitness: f64,
}

struct Ga<'a> {
    n: usize,
    params: &'a ChannelParams,
    gains: LinkGains,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
    log_min: f64,
    log_max: f64,
}

impl Ga<'_> {
    fn random_power(&mut self) -> f64 {
        self.rng.random_range(self.log_min..=self.log_max).exp()
    }

    fn score(&mut self, mut genes: Vec<f64>) -> Individual {
        project_genes(&mut genes, self.n, self.params);
        let fitness = self.gains.min_snr_genes(&genes, &mut self.scratch);
        Individual { genes, fitness }
    }

    fn random_individual(&mut self) -> Individual {
        let len = self.n * (self.n - 1);
        let genes = (0..len).map(|_| self.random_power()).collect();
        self.score(genes)
    }

    /// Redraw below-threshold individuals a bounded number of times.
    fn admit(&mut self, mut ind: Individual, threshold: f64) -> Individual {
        let mut redraws = 0;
        while ind.fitness < threshold && redraws < MAX_REDRAWS {
            ind = self.random_individual();
            redraws += 1;
        }
        ind
    }

    fn tournament<'p>(&mut self, population: &'p [Individual]) -> &'p Individual {
        let mut best = &population[self.rng.random_range(0..population.len())];
        for _ in 1..TOURNAMENT_SIZE {
            let challenger = &population[self.rng.random_range(0..population.len())];
            if challenger.fitness > best.fitness {
                best = challenger;
            }
        }
        best
    }

    /// With probability `rate` the pair recombines gene by gene: half the
    /// genes blend in log space (BLX-α), the rest swap with probability 0.5.
    fn crossover(&mut self, a: &[f64], b: &[f64], rate: f64) -> (Vec<f64>, Vec<f64>) {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        if self.rng.random_bool(rate) {
            for (gx, gy) in x.iter_mut().zip(y.iter_mut()) {
                if self.rng.random_bool(0.5) {
                    let w: f64 = self.rng.random_range(-BLEND_ALPHA..=1.0 + BLEND_ALPHA);
                    let (lx, ly) = (gx.ln(), gy.ln());
                    *gx = (w * lx + (1.0 - w) * ly).exp();
                    *gy = ((1.0 - w) * lx + w * ly).exp();
                } else if self.rng.random_bool(0.5) {
                    std::mem::swap(gx, gy);
                }
            }
        }
        (x, y)
    }

    /// Each gene mutates with probability `rate`: half the time it is redrawn
    /// log-uniformly over the power range, otherwise it creeps by a factor
    /// `exp(±δ)` with `δ` log-uniform in `[CREEP_MIN, CREEP_MAX]`.
    fn mutate(&mut self, genes: &mut [f64], rate: f64) {
        for g in genes.iter_mut() {
            if !self.rng.random_bool(rate) {
                continue;
            }
            if self.rng.random_bool(0.5) {
                *g = self.random_power();
            } else {
                let step = self.rng.random_range(CREEP_MIN.ln()..=CREEP_MAX.ln()).exp();
                let signed = if self.rng.random_bool(0.5) { step } else { -step };
                *g = (g.ln() + signed).exp();
            }
        }
    }
}

pub fn genetic_pa(problem: &AllocationProblem, cfg: &GeneticConfig) -> Result<AllocationResult> {
    cfg.validate()?;
    problem.ensure_feasible()?;
    let n = problem.n();
    let mut ga = Ga {
        n,
        params: &problem.params,
        gains: LinkGains::new(&problem.params, &problem.dist),
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        scratch: Vec::with_capacity(n * n),
        log_min: problem.params.p_min_w.ln(),
        log_max: problem.params.p_max_w.ln(),
    };

    let mut population = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let ind = ga.random_individual();
        population.push(ga.admit(ind, cfg.fitness_threshold));
    }
    let mut best = fittest(&population).clone();
    let mut trace = vec![best.fitness];

    let mut generations = 0;
    let mut stalled = 0;
    let mut converged = false;
    while generations < cfg.max_generations {
        generations += 1;
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(best.clone());
        while next.len() < cfg.population_size {
            let a = ga.tournament(&population).genes.clone();
            let b = ga.tournament(&population).genes.clone();
            let (mut x, mut y) = ga.crossover(&a, &b, cfg.crossover_rate);
            ga.mutate(&mut x, cfg.mutation_rate);
            ga.mutate(&mut y, cfg.mutation_rate);
            for child in [x, y] {
                if next.len() < cfg.population_size {
                    let ind = ga.score(child);
                    next.push(ga.admit(ind, cfg.fitness_threshold));
                }
            }
        }
        population = next;

        let leader = fittest(&population);
        if leader.fitness > best.fitness {
            best = leader.clone();
            stalled = 0;
        } else {
            stalled += 1;
        }
        trace.push(best.fitness);
        if stalled >= cfg.stall_generations {
            converged = true;
            break;
        }
    }

    let power = PowerMatrix::from_genes(n, &best.genes);
    AllocationResult::build(problem, Strategy::Genetic.label(), power, generations, converged, trace)
}

/// First individual with the highest fitness.
fn fittest(population: &[Individual]) -> &Individual {
    population
        .iter()
        .reduce(|best, ind| if ind.fitness > best.fitness { ind } else { best })
        .expect("non-empty population")
}
