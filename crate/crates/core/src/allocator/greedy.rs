//! GreedyPA: each epoch boosts the weakest link and backs off the strongest,
//! then projects back onto the feasible set.

use serde::{Deserialize, Serialize};

use super::projection::project_to_feasible;
use super::{uniform_power, AllocationProblem, AllocationResult, Strategy};
use crate::channel::LinkGains;
use crate::error::{Error, Result};
use crate::matrix::off_diagonal_pairs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyConfig {
    /// Multiplicative step applied to the two adjusted links.
    pub learn_rate: f64,
    pub max_epochs: usize,
    /// Relative best-so-far improvement below which the run counts as stalled.
    pub convergence_tol: f64,
    /// Epochs of stalled improvement before stopping.
    pub convergence_window: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            learn_rate: 0.05,
            max_epochs: 5000,
            convergence_tol: 1e-6,
            convergence_window: 200,
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learn_rate > 0.0 && self.learn_rate < 1.0) {
            return Err(Error::Parameter(format!("learn_rate must be in (0, 1), got {}", self.learn_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Parameter("max_epochs must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Parameter(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        if self.convergence_window == 0 {
            return Err(Error::Parameter("convergence_window must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn greedy_pa(problem: &AllocationProblem, cfg: &GreedyConfig) -> Result<AllocationResult> {
    cfg.validate()?;
    problem.ensure_feasible()?;
    let n = problem.n();
    let gains = LinkGains::new(&problem.params, &problem.dist);

    let mut power = uniform_power(problem);
    let mut snr = vec![0.0; n * n];
    gains.snr_into(power.matrix().as_slice(), &mut snr);

    let mut best_power = power.clone();
    let mut best = min_entry(&snr, n);
    let mut trace = Vec::with_capacity(cfg.max_epochs.min(100_000) + 1);
    trace.push(best);

    let mut epochs_used = 0;
    let mut converged = false;
    for epoch in 1..=cfg.max_epochs {
        let (strong, weak) = extreme_links(&snr, power.matrix().as_slice(), problem.params.p_min_w, n);
        if strong == weak {
            // Equal SNR everywhere, or nothing left to back off.
            converged = true;
            break;
        }
        epochs_used = epoch;

        let m = power.matrix_mut();
        m.set(weak.0, weak.1, m.get(weak.0, weak.1) * (1.0 + cfg.learn_rate));
        m.set(strong.0, strong.1, m.get(strong.0, strong.1) * (1.0 - cfg.learn_rate));
        project_to_feasible(&mut power, &problem.params);

        gains.snr_into(power.matrix().as_slice(), &mut snr);
        let current = min_entry(&snr, n);
        if current > best {
            best = current;
            best_power.clone_from(&power);
        }
        trace.push(best);

        if epoch >= cfg.convergence_window {
            let then = trace[epoch - cfg.convergence_window];
            if best - then < cfg.convergence_tol * then.abs() {
                converged = true;
                break;
            }
        }
    }

    AllocationResult::build(problem, Strategy::Greedy.label(), best_power, epochs_used, converged, trace)
}

fn min_entry(snr: &[f64], n: usize) -> f64 {
    off_diagonal_pairs(n).fold(f64::INFINITY, |acc, (i, j)| acc.min(snr[i * n + j]))
}

/// The strongest link whose power is still above `p_min` and the weakest
/// link overall. A link already at `p_min` cannot be backed off, so it is
/// passed over. Ties go to the lowest `(row, column)` in row-major order.
/// When every link sits at `p_min` the weakest link is returned for both.
fn extreme_links(snr: &[f64], power: &[f64], p_min: f64, n: usize) -> ((usize, usize), (usize, usize)) {
    let mut max_at: Option<(usize, usize)> = None;
    let mut min_at = (0, 1);
    for (i, j) in off_diagonal_pairs(n) {
        let v = snr[i * n + j];
        if v < snr[min_at.0 * n + min_at.1] {
            min_at = (i, j);
        }
        let reducible = power[i * n + j] > p_min;
        if reducible && max_at.is_none_or(|(a, b)| v > snr[a * n + b]) {
            max_at = Some((i, j));
        }
    }
    (max_at.unwrap_or(min_at), min_at)
}
