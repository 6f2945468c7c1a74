//! Age of Information per link: communication delay plus computation delay,
//! snapped onto the sensor sampling grid by expectation-preserving
//! probabilistic rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::LinkMetrics;
use crate::error::{Error, Result};

/// Ratios within this distance of an integer count as exact grid multiples,
/// so `0.3 / 0.1` snaps to 3 periods instead of rounding 2.999… randomly.
const GRID_SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoiConfig {
    /// Computation (backbone) delay applied to every vehicle.
    pub compute_delay_s: f64,
    /// Per-vehicle overrides of `compute_delay_s`, indexed by receiver.
    pub compute_delay_overrides_s: Option<Vec<f64>>,
    pub sample_period_s: f64,
    pub looptime_s: f64,
    pub rng_seed: u64,
}

impl Default for AoiConfig {
    fn default() -> Self {
        Self {
            compute_delay_s: 0.0,
            compute_delay_overrides_s: None,
            sample_period_s: 0.1,
            looptime_s: 0.1,
            rng_seed: 0,
        }
    }
}

impl AoiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period_s > 0.0 && self.sample_period_s.is_finite()) {
            return Err(Error::Parameter(format!(
                "sample_period_s must be positive, got {}",
                self.sample_period_s
            )));
        }
        let delays = std::iter::once(self.compute_delay_s)
            .chain(self.compute_delay_overrides_s.iter().flatten().copied());
        for d in delays {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Parameter(format!("compute delay must be non-negative, got {d}")));
            }
        }
        if !(self.looptime_s >= self.sample_period_s) {
            return Err(Error::Parameter(format!(
                "looptime_s ({}) must be at least sample_period_s ({})",
                self.looptime_s, self.sample_period_s
            )));
        }
        Ok(())
    }

    fn compute_delay_for(&self, vehicle: usize) -> f64 {
        self.compute_delay_overrides_s
            .as_ref()
            .and_then(|v| v.get(vehicle).copied())
            .unwrap_or(self.compute_delay_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiRecord {
    /// `(transmitter, receiver)`; equal indices mark the ego vehicle's own data.
    pub link: (usize, usize),
    pub comm_delay_s: f64,
    pub compute_delay_s: f64,
    pub total_delay_s: f64,
    pub snapped_age_s: f64,
    /// Sampling periods into the past of the selected frame.
    pub timestamp_offset: u64,
}

impl AoiRecord {
    pub fn is_ego(&self) -> bool {
        self.link.0 == self.link.1
    }
}

/// Grid multiple of `delay_s` chosen by probabilistic rounding, as a count of
/// periods: `floor(x)` with probability `1 − frac(x)`, `ceil(x)` otherwise,
/// where `x = delay_s / period_s`.
pub fn probabilistic_round_periods<R: Rng + ?Sized>(delay_s: f64, period_s: f64, rng: &mut R) -> Result<u64> {
    if !(delay_s >= 0.0) || !delay_s.is_finite() {
        return Err(Error::Domain(format!("delay must be non-negative and finite, got {delay_s}")));
    }
    if !(period_s > 0.0) {
        return Err(Error::Domain(format!("period must be positive, got {period_s}")));
    }
    let x = delay_s / period_s;
    let nearest = x.round();
    if (x - nearest).abs() <= GRID_SNAP_EPS * nearest.max(1.0) {
        return Ok(nearest as u64);
    }
    let lower = x.floor();
    let frac = x - lower;
    let up = rng.random::<f64>() < frac;
    Ok(lower as u64 + u64::from(up))
}

pub fn probabilistic_round<R: Rng + ?Sized>(delay_s: f64, period_s: f64, rng: &mut R) -> Result<f64> {
    Ok(periods_to_seconds(probabilistic_round_periods(delay_s, period_s, rng)?, period_s))
}

/// `periods · period`, computed as a division by the sampling rate so that
/// e.g. 3 periods of 0.1 s give exactly 0.3.
fn periods_to_seconds(periods: u64, period_s: f64) -> f64 {
    periods as f64 / period_s.recip()
}

fn record(link: (usize, usize), comm: f64, compute: f64, period: f64, rng: &mut ChaCha8Rng) -> Result<AoiRecord> {
    let total = comm + compute;
    let offset = probabilistic_round_periods(total, period, rng)?;
    Ok(AoiRecord {
        link,
        comm_delay_s: comm,
        compute_delay_s: compute,
        total_delay_s: total,
        snapped_age_s: periods_to_seconds(offset, period),
        timestamp_offset: offset,
    })
}

/// One record per directed link (comm + compute delay) followed by one ego
/// record per vehicle (compute delay only). Link records come in row-major
/// order and draw from a stream seeded by `cfg.rng_seed`.
pub fn build_aoi_records(metrics: &LinkMetrics, cfg: &AoiConfig) -> Result<Vec<AoiRecord>> {
    let n = metrics.n();
    let comm: Vec<((usize, usize), f64)> = crate::matrix::off_diagonal_pairs(n)
        .map(|(i, j)| ((i, j), metrics.delay_s.get(i, j)))
        .collect();
    build_records_from_delays(n, &comm, cfg)
}

/// Records for a scene where every link has zero communication delay.
pub fn zero_delay_records(n: usize, cfg: &AoiConfig) -> Result<Vec<AoiRecord>> {
    let comm: Vec<_> = crate::matrix::off_diagonal_pairs(n).map(|l| (l, 0.0)).collect();
    build_records_from_delays(n, &comm, cfg)
}

fn build_records_from_delays(n: usize, comm: &[((usize, usize), f64)], cfg: &AoiConfig) -> Result<Vec<AoiRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut records = Vec::with_capacity(comm.len() + n);
    for &((i, j), delay) in comm {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::Domain(format!("delay[{i}][{j}] = {delay} is not a valid delay")));
        }
        // Data from i is processed by receiver j.
        records.push(record((i, j), delay, cfg.compute_delay_for(j), cfg.sample_period_s, &mut rng)?);
    }
    for v in 0..n {
        records.push(record((v, v), 0.0, cfg.compute_delay_for(v), cfg.sample_period_s, &mut rng)?);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiSummary {
    pub records: usize,
    pub max_age_s: f64,
    pub min_age_s: f64,
    pub mean_age_s: f64,
    /// Population variance of the snapped ages.
    pub age_variance_s2: f64,
    /// Records whose age strictly exceeds the looptime.
    pub stale_count: usize,
    pub looptime_s: f64,
    /// Ages measured against the ground-truth timestamp `now + looptime`.
    pub effective_max_age_s: f64,
    pub effective_mean_age_s: f64,
}

pub fn aoi_summary(records: &[AoiRecord], looptime_s: f64) -> Result<AoiSummary> {
    if records.is_empty() {
        return Err(Error::Domain("cannot summarize an empty record list".into()));
    }
    let count = records.len() as f64;
    let ages = || records.iter().map(|r| r.snapped_age_s);
    let max = ages().fold(f64::NEG_INFINITY, f64::max);
    let min = ages().fold(f64::INFINITY, f64::min);
    let mean = crate::metrics::shifted_mean(ages());
    let variance = ages().map(|a| (a - mean).powi(2)).sum::<f64>() / count;
    Ok(AoiSummary {
        records: records.len(),
        max_age_s: max,
        min_age_s: min,
        mean_age_s: mean,
        age_variance_s2: variance,
        stale_count: ages().filter(|&a| a > looptime_s).count(),
        looptime_s,
        effective_max_age_s: max + looptime_s,
        effective_mean_age_s: mean + looptime_s,
    })
}
