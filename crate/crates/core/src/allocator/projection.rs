//! Reconstruction step shared by the greedy and genetic solvers: map an
//! arbitrary non-negative power matrix back onto the feasible set.

use crate::channel::{ChannelParams, PowerMatrix};

/// Project one row's off-diagonal powers onto
/// `{ p : p_min ≤ p_k ≤ p_max, Σ p_k ≤ p_max }`.
///
/// Entries are clamped to the per-link bounds first. If the row still exceeds
/// the budget, the entries above `p_min` are scaled down together; any that
/// fall below `p_min` are pinned there and the remaining excess is taken from
/// the larger entries on the next pass. Rows that already satisfy every
/// constraint come back untouched.
pub fn project_row(row: &mut [f64], p_min: f64, p_max: f64) {
    for p in row.iter_mut() {
        *p = p.clamp(p_min, p_max);
    }
    if row.iter().sum::<f64>() <= p_max {
        return;
    }
    let mut pinned = vec![false; row.len()];
    loop {
        let pinned_count = pinned.iter().filter(|&&b| b).count();
        let free_sum: f64 = row
            .iter()
            .zip(&pinned)
            .filter(|(_, &pin)| !pin)
            .map(|(p, _)| p)
            .sum();
        let target = p_max - pinned_count as f64 * p_min;
        if free_sum <= target || free_sum == 0.0 {
            return;
        }
        let factor = target / free_sum;
        let mut newly_pinned = false;
        for (p, pin) in row.iter_mut().zip(pinned.iter_mut()) {
            if *pin {
                continue;
            }
            *p *= factor;
            if *p <= p_min {
                *p = p_min;
                *pin = true;
                newly_pinned = true;
            }
        }
        if !newly_pinned {
            return;
        }
    }
}

/// Apply [`project_row`] to every row of `power`.
pub fn project_to_feasible(power: &mut PowerMatrix, params: &ChannelParams) {
    let n = power.n();
    let m = power.matrix_mut();
    let mut buf = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| m.get(i, j)));
        project_row(&mut buf, params.p_min_w, params.p_max_w);
        for (j, &v) in (0..n).filter(|&j| j != i).zip(&buf) {
            m.set(i, j, v);
        }
    }
}

/// Projection over the flattened gene layout (`n − 1` genes per row).
pub(crate) fn project_genes(genes: &mut [f64], n: usize, params: &ChannelParams) {
    for row in genes.chunks_mut(n - 1) {
        project_row(row, params.p_min_w, params.p_max_w);
    }
}
