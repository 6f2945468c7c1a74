//! Interference-limited V2V channel: per-link SNR and transmission delay.
//!
//! For a transmitter `i` and receiver `j` the SNR is
//!
//! ```text
//! SNR_ij = P_ij / (D_ij^α · (Σ_{k ∉ {i,j}} P_kj / D_kj^α + noise))
//! ```
//!
//! and the delay of one payload of `S` bits over bandwidth `B` is
//! `S / (B · log2(1 + SNR_ij))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{off_diagonal_pairs, Matrix};

/// Lower bound applied to every computed SNR before it enters the log.
pub const SNR_FLOOR: f64 = 1e-300;

/// Physical-layer constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Path-loss exponent.
    pub alpha: f64,
    pub bandwidth_hz: f64,
    /// Total in-band noise power.
    pub noise_w: f64,
    /// Per-link minimum transmit power.
    pub p_min_w: f64,
    /// Per-link maximum and per-vehicle total transmit power.
    pub p_max_w: f64,
    /// Message size in bits. 1.06 MB read as 1.06e6 bytes.
    pub payload_bits: f64,
    /// Multiplier on every link delay, as if the payload shrank by this
    /// factor. Applied after the division so scaled delays are exact
    /// multiples of the unscaled ones.
    pub payload_scale: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            bandwidth_hz: 1e7,
            noise_w: 4.14e-14,
            p_min_w: 1e-6,
            p_max_w: 23.0,
            payload_bits: 8.48e6,
            payload_scale: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_w", self.noise_w)?;
        positive("p_min_w", self.p_min_w)?;
        positive("p_max_w", self.p_max_w)?;
        positive("payload_bits", self.payload_bits)?;
        positive("payload_scale", self.payload_scale)?;
        if self.p_min_w >= self.p_max_w {
            return Err(Error::Parameter(format!(
                "p_min_w ({}) must be below p_max_w ({})",
                self.p_min_w, self.p_max_w
            )));
        }
        Ok(())
    }

    /// Same channel with the payload scaled by `factor`.
    pub fn with_payload_scale(mut self, factor: f64) -> Self {
        self.payload_scale *= factor;
        self
    }
}

/// Symmetric pairwise distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct DistanceMatrix(Matrix);

/// Absolute tolerance for the symmetry check, in meters.
pub const SYMMETRY_TOL_M: f64 = 1e-9;

impl DistanceMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let n = m.n();
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 vehicles, got {n}")));
        }
        for (i, j) in off_diagonal_pairs(n) {
            let v = m.get(i, j);
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::error::LoadError::NonPositive { i, j, value: v }.into());
            }
            if j > i {
                let w = m.get(j, i);
                if (v - w).abs() > SYMMETRY_TOL_M {
                    return Err(crate::error::LoadError::Asymmetric { i, j, a: v, b: w }.into());
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for DistanceMatrix {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DistanceMatrix> for Matrix {
    fn from(d: DistanceMatrix) -> Self {
        d.0
    }
}

/// Per-directed-link transmit powers in watts. The diagonal is always zero.
///
/// Construction only checks structure (zero diagonal, finite non-negative
/// entries); the power bounds and row budgets are checked against a
/// [`ChannelParams`] by [`crate::allocator::check_feasible`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct PowerMatrix(Matrix);

impl PowerMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        for i in 0..m.n() {
            if m.get(i, i) != 0.0 {
                return Err(Error::Domain(format!(
                    "power diagonal must be zero, p[{i}][{i}] = {}",
                    m.get(i, i)
                )));
            }
        }
        if let Some(v) = m.off_diagonal().find(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("invalid transmit power {v}")));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self(Matrix::off_diagonal_fill(n, value))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }

    /// Off-diagonal entries, row by row (`n − 1` per row).
    pub fn to_genes(&self) -> Vec<f64> {
        self.0.off_diagonal().collect()
    }

    pub fn from_genes(n: usize, genes: &[f64]) -> Self {
        debug_assert_eq!(genes.len(), n * (n - 1));
        let mut m = Matrix::zeros(n);
        for ((i, j), &g) in off_diagonal_pairs(n).zip(genes) {
            m.set(i, j, g);
        }
        Self(m)
    }
}

impl TryFrom<Matrix> for PowerMatrix {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<PowerMatrix> for Matrix {
    fn from(p: PowerMatrix) -> Self {
        p.0
    }
}

/// SNR and delay for every directed link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub snr: Matrix,
    pub delay_s: Matrix,
    /// Set when at least one SNR was raised to [`SNR_FLOOR`].
    pub snr_floor_hit: bool,
}

impl LinkMetrics {
    pub fn evaluate(params: &ChannelParams, dist: &DistanceMatrix, power: &PowerMatrix) -> Result<Self> {
        let snr = compute_snr_matrix(params, dist, power)?;
        let delay_s = compute_delay_matrix(params, &snr)?;
        let snr_floor_hit = snr.off_diagonal().any(|v| v <= SNR_FLOOR);
        Ok(Self {
            snr,
            delay_s,
            snr_floor_hit,
        })
    }

    pub fn n(&self) -> usize {
        self.snr.n()
    }

    pub fn min_snr(&self) -> f64 {
        self.snr.off_diagonal().fold(f64::INFINITY, f64::min)
    }

    pub fn max_delay_s(&self) -> f64 {
        self.delay_s.off_diagonal().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn compute_snr_matrix(params: &ChannelParams, dist: &DistanceMatrix, power: &PowerMatrix) -> Result<Matrix> {
    let n = dist.n();
    if power.n() != n {
        return Err(Error::Dimension(format!(
            "distance matrix is {n}×{n} but power matrix is {}×{}",
            power.n(),
            power.n()
        )));
    }
    // Received power at j from each transmitter k, attenuated by D_kj^α.
    let mut attenuated = Matrix::zeros(n);
    for (k, j) in off_diagonal_pairs(n) {
        let d = dist.get(k, j);
        if d <= 0.0 {
            return Err(Error::Domain(format!("distance d[{k}][{j}] = {d} must be positive")));
        }
        attenuated.set(k, j, power.get(k, j) / d.powf(params.alpha));
    }
    let mut snr = Matrix::zeros(n);
    for (i, j) in off_diagonal_pairs(n) {
        let interference: f64 = (0..n)
            .filter(|&k| k != i && k != j)
            .map(|k| attenuated.get(k, j))
            .sum();
        let value = power.get(i, j) / (dist.get(i, j).powf(params.alpha) * (interference + params.noise_w));
        snr.set(i, j, value.max(SNR_FLOOR));
    }
    Ok(snr)
}

/// Delay of one payload over a link with the given SNR.
#[inline]
pub fn link_delay(params: &ChannelParams, snr: f64) -> f64 {
    // log2(1 + x) via ln_1p stays accurate for tiny SNR.
    let delay = params.payload_bits / (params.bandwidth_hz * (snr.ln_1p() / std::f64::consts::LN_2));
    delay * params.payload_scale
}

pub fn compute_delay_matrix(params: &ChannelParams, snr: &Matrix) -> Result<Matrix> {
    let n = snr.n();
    let mut delay = Matrix::zeros(n);
    for (i, j) in off_diagonal_pairs(n) {
        let s = snr.get(i, j);
        if !(s > 0.0) {
            return Err(Error::Domain(format!("snr[{i}][{j}] = {s} must be positive")));
        }
        delay.set(i, j, link_delay(params, s));
    }
    Ok(delay)
}

/// Precomputed `D_ij^-α` for fast objective evaluation inside the solvers.
#[derive(Debug, Clone)]
pub(crate) struct LinkGains {
    n: usize,
    gain: Vec<f64>,
    noise_w: f64,
}

impl LinkGains {
    pub(crate) fn new(params: &ChannelParams, dist: &DistanceMatrix) -> Self {
        let n = dist.n();
        let mut gain = vec![0.0; n * n];
        for (i, j) in off_diagonal_pairs(n) {
            gain[i * n + j] = dist.get(i, j).powf(-params.alpha);
        }
        Self {
            n,
            gain,
            noise_w: params.noise_w,
        }
    }

    #[inline]
    fn snr_at(&self, power: &[f64], i: usize, j: usize) -> f64 {
        let n = self.n;
        let interference: f64 = (0..n)
            .filter(|&k| k != i && k != j)
            .map(|k| power[k * n + j] * self.gain[k * n + j])
            .sum();
        (power[i * n + j] * self.gain[i * n + j] / (interference + self.noise_w)).max(SNR_FLOOR)
    }

    /// Minimum off-diagonal SNR for a full `n × n` power slice.
    pub(crate) fn min_snr(&self, power: &[f64]) -> f64 {
        off_diagonal_pairs(self.n).fold(f64::INFINITY, |acc, (i, j)| acc.min(self.snr_at(power, i, j)))
    }

    /// Minimum SNR if it exceeds `floor`, otherwise `None` (stops at the first
    /// link at or below `floor`).
    pub(crate) fn min_snr_above(&self, power: &[f64], floor: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        for (i, j) in off_diagonal_pairs(self.n) {
            let v = self.snr_at(power, i, j);
            if v <= floor {
                return None;
            }
            best = best.min(v);
        }
        Some(best)
    }

    /// Same as [`Self::min_snr`] but over the off-diagonal gene layout.
    pub(crate) fn min_snr_genes(&self, genes: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let n = self.n;
        scratch.clear();
        scratch.resize(n * n, 0.0);
        for ((i, j), &g) in off_diagonal_pairs(n).zip(genes) {
            scratch[i * n + j] = g;
        }
        self.min_snr(scratch)
    }

    /// Full SNR matrix (diagonal zero) into `out`.
    pub(crate) fn snr_into(&self, power: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i * n + i] = 0.0;
        }
        for (i, j) in off_diagonal_pairs(n) {
            out[i * n + j] = self.snr_at(power, i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral(side: f64) -> DistanceMatrix {
        DistanceMatrix::from_rows(vec![
            vec![0.0, side, side],
            vec![side, 0.0, side],
            vec![side, side, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn two_vehicle_closed_form() {
        let params = ChannelParams::default();
        let dist = DistanceMatrix::from_rows(vec![vec![0.0, 10.0], vec![10.0, 0.0]]).unwrap();
        let power = PowerMatrix::uniform(2, 23.0);
        let snr = compute_snr_matrix(&params, &dist, &power).unwrap();
        let expected = 23.0 / (1000.0 * 4.14e-14);
        assert!(((snr.get(0, 1) - expected) / expected).abs() < 1e-12);
        assert!((expected - 5.556e11).abs() / 5.556e11 < 1e-3);
        assert_eq!(snr.get(0, 0), 0.0);
    }

    #[test]
    fn delay_hand_values() {
        let params = ChannelParams::default();
        let snr = Matrix::off_diagonal_fill(2, 1.0);
        let d = compute_delay_matrix(&params, &snr).unwrap();
        assert_eq!(d.get(0, 1), 0.848);

        let params = ChannelParams {
            payload_bits: 1e7,
            ..ChannelParams::default()
        };
        let d = compute_delay_matrix(&params, &Matrix::off_diagonal_fill(2, 3.0)).unwrap();
        assert_eq!(d.get(1, 0), 0.5);
    }

    #[test]
    fn equilateral_uniform_is_symmetric() {
        let params = ChannelParams::default();
        let snr = compute_snr_matrix(&params, &equilateral(20.0), &PowerMatrix::uniform(3, 11.5)).unwrap();
        let first = snr.get(0, 1);
        for v in snr.off_diagonal() {
            assert_eq!(v, first);
        }
    }

    #[test]
    fn doubling_interferers_lowers_snr() {
        let params = ChannelParams::default();
        let dist = equilateral(20.0);
        let base = PowerMatrix::uniform(3, 5.0);
        let mut louder = base.clone();
        // Receiver 2 hears link (0,2) and interferer (1,2).
        louder.matrix_mut().set(1, 2, 10.0);
        let a = compute_snr_matrix(&params, &dist, &base).unwrap();
        let b = compute_snr_matrix(&params, &dist, &louder).unwrap();
        assert!(b.get(0, 2) < a.get(0, 2));
    }

    #[test]
    fn dimension_mismatch() {
        let params = ChannelParams::default();
        let err = compute_snr_matrix(&params, &equilateral(10.0), &PowerMatrix::uniform(2, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn nonpositive_snr_rejected() {
        let params = ChannelParams::default();
        let err = compute_delay_matrix(&params, &Matrix::off_diagonal_fill(2, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn floor_keeps_delay_finite() {
        let params = ChannelParams {
            noise_w: 1e10,
            ..ChannelParams::default()
        };
        let dist = DistanceMatrix::from_rows(vec![vec![0.0, 1e100], vec![1e100, 0.0]]).unwrap();
        let m = LinkMetrics::evaluate(&params, &dist, &PowerMatrix::uniform(2, 1e-6)).unwrap();
        assert!(m.snr_floor_hit);
        assert!(m.delay_s.get(0, 1).is_finite());
    }

    #[test]
    fn fast_path_agrees_with_reference() {
        let params = ChannelParams::default();
        let dist = DistanceMatrix::from_rows(vec![
            vec![0.0, 10.0, 30.0],
            vec![10.0, 0.0, 50.0],
            vec![30.0, 50.0, 0.0],
        ])
        .unwrap();
        let power = PowerMatrix::from_rows(vec![
            vec![0.0, 3.0, 9.0],
            vec![0.5, 0.0, 2.0],
            vec![7.0, 1e-3, 0.0],
        ])
        .unwrap();
        let reference = compute_snr_matrix(&params, &dist, &power).unwrap();
        let gains = LinkGains::new(&params, &dist);
        let mut fast = vec![0.0; 9];
        gains.snr_into(power.matrix().as_slice(), &mut fast);
        for (a, b) in reference.as_slice().iter().zip(&fast) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
        let min_ref = reference.off_diagonal().fold(f64::INFINITY, f64::min);
        let min_fast = gains.min_snr(power.matrix().as_slice());
        assert!((min_ref - min_fast).abs() <= 1e-12 * min_ref);
    }
}
