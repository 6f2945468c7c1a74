//! Perception-quality proxy: AP@0.3/0.5/0.7 as a function of delay, read off
//! measured degradation curves by piecewise-linear interpolation.
//!
//! This is an estimate, not a perception model. The embedded curves are the
//! measured operating points for three delay types; anything between points is
//! interpolated linearly and anything past the last point is clamped to it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aoi::AoiRecord;
use crate::error::{Error, LoadError, Result};

/// Label attached to every proxy estimate in reports.
pub const PROXY_LABEL: &str =
    "proxy estimate: interpolated delay/AP curves, scene score = entrywise min(trans_delay@mean age, liner_coef@age spread)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayType {
    /// Computation delay on every vehicle.
    Backbone,
    /// Constant transmission delay on every collaborator.
    TransDelay,
    /// Transmission delay proportional to distance; the abscissa is the
    /// coefficient, used here as the age spread across links.
    LinerCoef,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApTriple {
    pub ap30: f64,
    pub ap50: f64,
    pub ap70: f64,
}

impl ApTriple {
    pub const fn new(ap30: f64, ap50: f64, ap70: f64) -> Self {
        Self { ap30, ap50, ap70 }
    }

    pub fn entrywise_min(self, other: Self) -> Self {
        Self::new(
            self.ap30.min(other.ap30),
            self.ap50.min(other.ap50),
            self.ap70.min(other.ap70),
        )
    }

    fn as_array(self) -> [f64; 3] {
        [self.ap30, self.ap50, self.ap70]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delay: f64,
    pub ap: ApTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationCurve {
    delay_type: DelayType,
    points: Vec<CurvePoint>,
}

const fn pt(delay: f64, ap30: f64, ap50: f64, ap70: f64) -> CurvePoint {
    CurvePoint {
        delay,
        ap: ApTriple::new(ap30, ap50, ap70),
    }
}

const BACKBONE: [CurvePoint; 7] = [
    pt(0.0, 0.864, 0.859, 0.805),
    pt(0.1, 0.855, 0.709, 0.148),
    pt(0.2, 0.618, 0.183, 0.036),
    pt(0.3, 0.258, 0.071, 0.021),
    pt(0.4, 0.124, 0.045, 0.018),
    pt(0.5, 0.081, 0.033, 0.017),
    pt(1.0, 0.039, 0.024, 0.015),
];

const TRANS_DELAY: [CurvePoint; 4] = [
    pt(0.0, 0.864, 0.859, 0.805),
    pt(0.1, 0.860, 0.810, 0.435),
    pt(0.2, 0.750, 0.481, 0.227),
    pt(0.3, 0.500, 0.332, 0.196),
];

const LINER_COEF: [CurvePoint; 4] = [
    pt(0.0, 0.864, 0.859, 0.805),
    pt(0.1, 0.863, 0.836, 0.735),
    pt(0.5, 0.643, 0.440, 0.253),
    pt(1.0, 0.395, 0.314, 0.211),
];

impl DegradationCurve {
    /// Validates ordering, AP range, IoU ordering and monotone decline.
    pub fn new(delay_type: DelayType, points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter(format!("{delay_type:?} curve has no points")));
        }
        for p in &points {
            let ap = p.ap.as_array();
            if !(p.delay >= 0.0 && p.delay.is_finite()) {
                return Err(Error::Parameter(format!("curve delay {} must be non-negative", p.delay)));
            }
            if ap.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Parameter(format!("AP values at delay {} must lie in [0, 1]", p.delay)));
            }
            if !(ap[0] >= ap[1] && ap[1] >= ap[2]) {
                return Err(Error::Parameter(format!(
                    "AP@0.3 ≥ AP@0.5 ≥ AP@0.7 violated at delay {}",
                    p.delay
                )));
            }
        }
        for w in points.windows(2) {
            if !(w[1].delay > w[0].delay) {
                return Err(Error::Parameter(format!(
                    "curve delays must increase strictly ({} then {})",
                    w[0].delay, w[1].delay
                )));
            }
            let (a, b) = (w[0].ap.as_array(), w[1].ap.as_array());
            if a.iter().zip(&b).any(|(x, y)| y > x) {
                return Err(Error::Parameter(format!(
                    "AP must not increase with delay ({} → {})",
                    w[0].delay, w[1].delay
                )));
            }
        }
        Ok(Self { delay_type, points })
    }

    pub fn builtin(delay_type: DelayType) -> Self {
        let points = match delay_type {
            DelayType::Backbone => BACKBONE.to_vec(),
            DelayType::TransDelay => TRANS_DELAY.to_vec(),
            DelayType::LinerCoef => LINER_COEF.to_vec(),
        };
        Self { delay_type, points }
    }

    pub fn delay_type(&self) -> DelayType {
        self.delay_type
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }
}

pub fn estimate_ap(curve: &DegradationCurve, delay: f64) -> Result<ApTriple> {
    if !(delay >= 0.0) {
        return Err(Error::Domain(format!("delay must be non-negative, got {delay}")));
    }
    let pts = &curve.points;
    let first = pts[0];
    if delay <= first.delay {
        return Ok(first.ap);
    }
    // Index of the first point at or beyond `delay`.
    let upper = pts.partition_point(|p| p.delay < delay);
    let Some(&hi) = pts.get(upper) else {
        return Ok(pts[pts.len() - 1].ap);
    };
    if hi.delay == delay {
        return Ok(hi.ap);
    }
    let lo = pts[upper - 1];
    let t = (delay - lo.delay) / (hi.delay - lo.delay);
    let lerp = |a: f64, b: f64| a + t * (b - a);
    Ok(ApTriple::new(
        lerp(lo.ap.ap30, hi.ap.ap30),
        lerp(lo.ap.ap50, hi.ap.ap50),
        lerp(lo.ap.ap70, hi.ap.ap70),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub backbone: DegradationCurve,
    pub trans_delay: DegradationCurve,
    pub liner_coef: DegradationCurve,
}

impl Default for CurveSet {
    fn default() -> Self {
        Self {
            backbone: DegradationCurve::builtin(DelayType::Backbone),
            trans_delay: DegradationCurve::builtin(DelayType::TransDelay),
            liner_coef: DegradationCurve::builtin(DelayType::LinerCoef),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    curves: Vec<CurveEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveEntry {
    delay_type: DelayType,
    /// `[delay, ap30, ap50, ap70]` rows.
    points: Vec<[f64; 4]>,
}

impl CurveSet {
    /// Parse a TOML curve file:
    ///
    /// ```toml
    /// [[curves]]
    /// delay_type = "trans_delay"
    /// points = [[0.0, 0.9, 0.8, 0.7], [0.5, 0.4, 0.3, 0.2]]
    /// ```
    ///
    /// Delay types missing from the file keep their built-in curve.
    pub fn parse(text: &str) -> Result<Self> {
        let file: CurveFile = toml::from_str(text).map_err(|e| LoadError::Parse {
            line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let mut set = Self::default();
        for entry in file.curves {
            let points = entry
                .points
                .iter()
                .map(|&[d, a, b, c]| pt(d, a, b, c))
                .collect();
            let curve = DegradationCurve::new(entry.delay_type, points)?;
            match entry.delay_type {
                DelayType::Backbone => set.backbone = curve,
                DelayType::TransDelay => set.trans_delay = curve,
                DelayType::LinerCoef => set.liner_coef = curve,
            }
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneApEstimate {
    pub label: &'static str,
    pub mean_age_s: f64,
    pub age_spread_s: f64,
    pub from_mean_age: ApTriple,
    pub from_spread: ApTriple,
    pub combined: ApTriple,
}

/// Score the mean snapped age on the constant-transmission curve and the
/// age spread (max − min) on the asynchrony curve; the scene estimate is
/// their entrywise minimum.
pub fn estimate_scene_ap(records: &[AoiRecord], curves: &CurveSet) -> Result<SceneApEstimate> {
    if records.is_empty() {
        return Err(Error::Domain("cannot estimate AP from an empty record list".into()));
    }
    let ages = || records.iter().map(|r| r.snapped_age_s);
    let mean = crate::metrics::shifted_mean(ages());
    let max = ages().fold(f64::NEG_INFINITY, f64::max);
    let min = ages().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    let from_mean_age = estimate_ap(&curves.trans_delay, mean)?;
    let from_spread = estimate_ap(&curves.liner_coef, spread)?;
    Ok(SceneApEstimate {
        label: PROXY_LABEL,
        mean_age_s: mean,
        age_spread_s: spread,
        from_mean_age,
        from_spread,
        combined: from_mean_age.entrywise_min(from_spread),
    })
}
