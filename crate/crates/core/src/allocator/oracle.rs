//! Exhaustive grid search over power matrices. Only meant for tiny instances,
//! where it provides the reference optimum the heuristics are checked against.

use rayon::prelude::*;

use super::{AllocationProblem, AllocationResult, FEASIBILITY_SLACK_W};
use crate::channel::{LinkGains, PowerMatrix};
use crate::error::{Error, Result};

pub const ORACLE_MAX_VEHICLES: usize = 3;
pub const ORACLE_MAX_EVALUATIONS: f64 = 1e8;

/// `points` log-spaced powers over `[p_min, p_max]`, plus the uniform split
/// `p_max / (n − 1)` so the grid always contains the DefaultPA allocation.
pub fn oracle_grid(problem: &AllocationProblem, points: usize) -> Vec<f64> {
    let p = &problem.params;
    let mut grid: Vec<f64> = match points {
        0 => Vec::new(),
        1 => vec![p.p_max_w],
        _ => {
            let (lo, hi) = (p.p_min_w.ln(), p.p_max_w.ln());
            (0..points)
                .map(|k| (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp())
                .collect()
        }
    };
    // Pin the endpoints exactly; exp(ln(x)) can be off by an ulp.
    if points >= 2 {
        grid[0] = p.p_min_w;
        grid[points - 1] = p.p_max_w;
    }
    grid.push(p.p_max_w / (problem.n() - 1) as f64);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

pub fn oracle_pa(problem: &AllocationProblem, grid_points_per_link: usize) -> Result<AllocationResult> {
    let grid = oracle_grid(problem, grid_points_per_link);
    oracle_pa_with_grid(problem, &grid)
}

/// Best allocation by min-SNR among all feasible matrices whose off-diagonal
/// entries are drawn from `grid`.
pub fn oracle_pa_with_grid(problem: &AllocationProblem, grid: &[f64]) -> Result<AllocationResult> {
    problem.ensure_feasible()?;
    let n = problem.n();
    if n > ORACLE_MAX_VEHICLES {
        return Err(Error::Capacity(format!(
            "grid oracle supports at most {ORACLE_MAX_VEHICLES} vehicles, got {n}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::Parameter("oracle grid is empty".into()));
    }
    let links = n * (n - 1);
    let evaluations = (grid.len() as f64).powi(links as i32);
    if evaluations > ORACLE_MAX_EVALUATIONS {
        return Err(Error::Capacity(format!(
            "{} grid points over {links} links needs {evaluations:e} evaluations (limit {ORACLE_MAX_EVALUATIONS:e})",
            grid.len()
        )));
    }

    // Enumerate feasible rows once; the full search is their cartesian product.
    let params = &problem.params;
    let row_len = n - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; row_len];
    loop {
        let row: Vec<f64> = idx.iter().map(|&k| grid[k]).collect();
        let in_bounds = row
            .iter()
            .all(|&p| p >= params.p_min_w - FEASIBILITY_SLACK_W && p <= params.p_max_w + FEASIBILITY_SLACK_W);
        if in_bounds && row.iter().sum::<f64>() <= params.p_max_w + FEASIBILITY_SLACK_W {
            rows.push(row);
        }
        if advance(&mut idx, grid.len()).is_none() {
            break;
        }
    }
    if rows.is_empty() {
        return Err(Error::Infeasible("no grid row satisfies the power constraints".into()));
    }

    let gains = LinkGains::new(params, &problem.dist);
    // Split on the first vehicle's row; each slice scans the remaining rows
    // exhaustively. Ties resolve to the earliest combination in odometer
    // order, same as a sequential scan.
    let (best, best_choice, evaluated) = (0..rows.len())
        .into_par_iter()
        .map(|first| scan_with_first_row(&gains, &rows, n, first))
        .reduce_with(|a, b| {
            let evaluated = a.2 + b.2;
            if b.0 > a.0 {
                (b.0, b.1, evaluated)
            } else {
                (a.0, a.1, evaluated)
            }
        })
        .expect("at least one feasible row");
    debug_assert!(best > f64::NEG_INFINITY);

    let genes: Vec<f64> = best_choice.iter().flat_map(|&c| rows[c].iter().copied()).collect();
    let power = PowerMatrix::from_genes(n, &genes);
    AllocationResult::build(problem, "OraclePA", power, evaluated, true, Vec::new())
}

fn write_row(power: &mut [f64], n: usize, i: usize, row: &[f64]) {
    for (j, &p) in (0..n).filter(|&j| j != i).zip(row) {
        power[i * n + j] = p;
    }
}

/// Best `(min_snr, row choice, evaluations)` over all combinations whose first
/// row is `rows[first]`.
fn scan_with_first_row(gains: &LinkGains, rows: &[Vec<f64>], n: usize, first: usize) -> (f64, Vec<usize>, usize) {
    let mut power = vec![0.0; n * n];
    let mut choice = vec![0usize; n];
    choice[0] = first;
    for (i, &c) in choice.iter().enumerate() {
        write_row(&mut power, n, i, &rows[c]);
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_choice = choice.clone();
    let mut evaluated = 0usize;
    loop {
        evaluated += 1;
        if let Some(value) = gains.min_snr_above(&power, best) {
            best = value;
            best_choice.clone_from(&choice);
        }
        match advance(&mut choice[1..], rows.len()) {
            Some(changed) => {
                for i in (changed + 1)..n {
                    write_row(&mut power, n, i, &rows[choice[i]]);
                }
            }
            None => break,
        }
    }
    (best, best_choice, evaluated)
}

/// Odometer increment. Returns the position of the most significant digit
/// that changed, or `None` after the last combination.
fn advance(idx: &mut [usize], base: usize) -> Option<usize> {
    for (pos, digit) in idx.iter_mut().enumerate().rev() {
        *digit += 1;
        if *digit < base {
            return Some(pos);
        }
        *digit = 0;
    }
    None
}
