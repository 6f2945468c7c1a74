//! Max-min SNR power allocation.
//!
//! Every strategy solves
//!
//! ```text
//! maximize   min_{i≠j} SNR_ij(P)
//! subject to p_min ≤ P_ij ≤ p_max        for all i ≠ j
//!            Σ_{j≠i} P_ij ≤ p_max        for all i
//! ```
//!
//! which is the same problem as minimizing the largest link delay, since the
//! delay is strictly decreasing in SNR.

mod genetic;
mod greedy;
mod oracle;
mod projection;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, DistanceMatrix, LinkMetrics, PowerMatrix};
use crate::error::{Error, Result};
use crate::matrix::off_diagonal_pairs;

pub use genetic::{genetic_pa, GeneticConfig};
pub use greedy::{greedy_pa, GreedyConfig};
pub use oracle::{oracle_grid, oracle_pa, oracle_pa_with_grid, ORACLE_MAX_EVALUATIONS, ORACLE_MAX_VEHICLES};
pub use projection::{project_row, project_to_feasible};

/// Absolute slack used by [`check_feasible`], in watts.
pub const FEASIBILITY_SLACK_W: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationProblem {
    pub params: ChannelParams,
    pub dist: DistanceMatrix,
}

impl AllocationProblem {
    pub fn new(params: ChannelParams, dist: DistanceMatrix) -> Result<Self> {
        params.validate()?;
        let problem = Self { params, dist };
        problem.ensure_feasible()?;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    /// `(n − 1) · p_min ≤ p_max`, otherwise no row can meet its budget.
    pub fn ensure_feasible(&self) -> Result<()> {
        let n = self.n();
        let floor = (n - 1) as f64 * self.params.p_min_w;
        if floor > self.params.p_max_w {
            return Err(Error::Infeasible(format!(
                "{} links × p_min {} W = {floor} W exceeds the per-vehicle budget {} W",
                n - 1,
                self.params.p_min_w,
                self.params.p_max_w
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, power: &PowerMatrix) -> Result<LinkMetrics> {
        LinkMetrics::evaluate(&self.params, &self.dist, power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub strategy_name: String,
    pub power: PowerMatrix,
    pub metrics: LinkMetrics,
    pub objective_min_snr: f64,
    pub objective_max_delay_s: f64,
    /// Epochs (greedy) or generations (genetic) actually run.
    pub epochs_used: usize,
    pub converged: bool,
    /// Best-so-far min-SNR, starting with the initial allocation.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<f64>,
}

impl AllocationResult {
    pub(crate) fn build(
        problem: &AllocationProblem,
        strategy_name: &str,
        power: PowerMatrix,
        epochs_used: usize,
        converged: bool,
        trace: Vec<f64>,
    ) -> Result<Self> {
        let report = check_feasible(&power, &problem.params);
        if !report.feasible() {
            return Err(Error::Infeasible(format!(
                "{strategy_name} produced an infeasible allocation: {}",
                report.violations.len()
            )));
        }
        let metrics = problem.evaluate(&power)?;
        Ok(Self {
            strategy_name: strategy_name.to_string(),
            objective_min_snr: metrics.min_snr(),
            objective_max_delay_s: metrics.max_delay_s(),
            power,
            metrics,
            epochs_used,
            converged,
            trace,
        })
    }
}

/// Uniform split of every vehicle's budget: `P_ij = p_max / (n − 1)`.
pub fn default_pa(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.ensure_feasible()?;
    let power = uniform_power(problem);
    AllocationResult::build(problem, Strategy::Default.label(), power, 0, true, Vec::new())
}

pub(crate) fn uniform_power(problem: &AllocationProblem) -> PowerMatrix {
    let n = problem.n();
    PowerMatrix::uniform(n, problem.params.p_max_w / (n - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    BelowMinimum { i: usize, j: usize, power_w: f64 },
    AboveMaximum { i: usize, j: usize, power_w: f64 },
    RowBudget { i: usize, total_w: f64 },
    NonZeroDiagonal { i: usize, power_w: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check per-link bounds and per-vehicle budgets within [`FEASIBILITY_SLACK_W`].
pub fn check_feasible(power: &PowerMatrix, params: &ChannelParams) -> FeasibilityReport {
    let n = power.n();
    let mut violations = Vec::new();
    for i in 0..n {
        let d = power.get(i, i);
        if d != 0.0 {
            violations.push(Violation::NonZeroDiagonal { i, power_w: d });
        }
    }
    for (i, j) in off_diagonal_pairs(n) {
        let p = power.get(i, j);
        if p < params.p_min_w - FEASIBILITY_SLACK_W || p.is_nan() {
            violations.push(Violation::BelowMinimum { i, j, power_w: p });
        } else if p > params.p_max_w + FEASIBILITY_SLACK_W {
            violations.push(Violation::AboveMaximum { i, j, power_w: p });
        }
    }
    for i in 0..n {
        let total = power.matrix().off_diagonal_row_sum(i);
        if total > params.p_max_w + FEASIBILITY_SLACK_W {
            violations.push(Violation::RowBudget { i, total_w: total });
        }
    }
    FeasibilityReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Default,
    Greedy,
    Genetic,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Default, Strategy::Greedy, Strategy::Genetic];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Default => "DefaultPA",
            Strategy::Greedy => "GreedyPA",
            Strategy::Genetic => "GeneticPA",
        }
    }

    pub fn solve(self, problem: &AllocationProblem, greedy: &GreedyConfig, genetic: &GeneticConfig) -> Result<AllocationResult> {
        match self {
            Strategy::Default => default_pa(problem),
            Strategy::Greedy => greedy_pa(problem, greedy),
            Strategy::Genetic => genetic_pa(problem, genetic),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" | "defaultpa" => Ok(Strategy::Default),
            "greedy" | "greedypa" => Ok(Strategy::Greedy),
            "genetic" | "geneticpa" => Ok(Strategy::Genetic),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}
