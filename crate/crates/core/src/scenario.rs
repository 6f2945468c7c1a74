//! Scene construction: distance matrices from files or from sampled vehicle
//! positions.
//!
//! # Distance file format
//!
//! Plain text, one matrix row per line, entries separated by whitespace and/or
//! commas. Blank lines and lines starting with `#` are ignored. An optional
//! first line holding a single integer gives `n` and is checked against the
//! row count:
//!
//! ```text
//! # three vehicles
//! 3
//! 0 10 30
//! 10 0 50
//! 30 50 0
//! ```
//!
//! Files containing `=` are read as key-value (TOML) documents carrying either
//! `distances = [[...], ...]` or `coordinates = [[x, y], ...]` in meters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::DistanceMatrix;
use crate::error::{Error, LoadError, Result};
use crate::matrix::Matrix;

pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
pub const DEFAULT_BOX_SIDE_M: f64 = 100.0;
pub const DEFAULT_MIN_SEPARATION_M: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    File { path: PathBuf },
    UniformBox { side_m: f64 },
    Coordinates { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_vehicles: usize,
    pub placement: Placement,
    pub min_separation_m: f64,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn synthetic(n_vehicles: usize, rng_seed: u64) -> Self {
        Self {
            n_vehicles,
            placement: Placement::UniformBox {
                side_m: DEFAULT_BOX_SIDE_M,
            },
            min_separation_m: DEFAULT_MIN_SEPARATION_M,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_separation_m > 0.0) {
            return Err(Error::Parameter(format!(
                "min_separation_m must be positive, got {}",
                self.min_separation_m
            )));
        }
        match &self.placement {
            Placement::File { .. } => {}
            Placement::UniformBox { side_m } => {
                if self.n_vehicles < 2 {
                    return Err(Error::Parameter(format!("need at least 2 vehicles, got {}", self.n_vehicles)));
                }
                if !(*side_m > 2.0 * self.min_separation_m) {
                    return Err(Error::Parameter(format!(
                        "box side {side_m} m must exceed twice the minimum separation {} m",
                        self.min_separation_m
                    )));
                }
            }
            Placement::Coordinates { points } => {
                if points.len() < 2 {
                    return Err(Error::Parameter(format!("need at least 2 vehicles, got {}", points.len())));
                }
            }
        }
        Ok(())
    }
}

/// A scene: distances plus the coordinates they came from, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub dist: DistanceMatrix,
    pub coordinates: Option<Vec<[f64; 2]>>,
}

pub fn generate_scene(spec: &ScenarioSpec) -> Result<Scene> {
    spec.validate()?;
    match &spec.placement {
        Placement::File { path } => Ok(load_scene(path)?),
        Placement::Coordinates { points } => scene_from_coordinates(points.clone()),
        Placement::UniformBox { side_m } => {
            let points = sample_positions(spec.n_vehicles, *side_m, spec.min_separation_m, spec.rng_seed)?;
            scene_from_coordinates(points)
        }
    }
}

fn sample_positions(n: usize, side_m: f64, min_sep: f64, seed: u64) -> Result<Vec<[f64; 2]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        if attempts == MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::Packing {
                n,
                min_separation_m: min_sep,
                attempts,
            });
        }
        attempts += 1;
        let candidate = [rng.random_range(0.0..side_m), rng.random_range(0.0..side_m)];
        if points.iter().all(|p| euclidean(p, &candidate) >= min_sep) {
            points.push(candidate);
        }
    }
    Ok(points)
}

fn euclidean(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn scene_from_coordinates(points: Vec<[f64; 2]>) -> Result<Scene> {
    let n = points.len();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&points[i], &points[j]);
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    Ok(Scene {
        dist: DistanceMatrix::new(m)?,
        coordinates: Some(points),
    })
}

pub fn load_distance_matrix(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    Ok(load_scene(path)?.dist)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scene(&text)
}

pub fn parse_scene(text: &str) -> Result<Scene> {
    if text.contains('=') {
        parse_key_value(text)
    } else {
        Ok(Scene {
            dist: parse_distance_matrix(text)?,
            coordinates: None,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyValueScene {
    distances: Option<Vec<Vec<f64>>>,
    coordinates: Option<Vec<[f64; 2]>>,
}

fn parse_key_value(text: &str) -> Result<Scene> {
    let doc: KeyValueScene = toml::from_str(text).map_err(|e| LoadError::Parse {
        line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    match (doc.distances, doc.coordinates) {
        (Some(rows), None) => Ok(Scene {
            dist: DistanceMatrix::new(Matrix::from_rows(rows)?)?,
            coordinates: None,
        }),
        (None, Some(points)) => scene_from_coordinates(points),
        _ => Err(LoadError::Parse {
            line: 0,
            message: "expected exactly one of `distances` or `coordinates`".into(),
        }
        .into()),
    }
}

pub fn parse_distance_matrix(text: &str) -> Result<DistanceMatrix> {
    let mut declared_n: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if rows.is_empty() && declared_n.is_none() && fields.len() == 1 {
            if let Ok(n) = fields[0].parse::<usize>() {
                declared_n = Some((n, line_no));
                continue;
            }
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| LoadError::Parse {
                    line: line_no,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>, LoadError>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(LoadError::Parse {
                    line: line_no,
                    message: format!("row has {} entries, expected {}", row.len(), first.len()),
                }
                .into());
            }
        }
        rows.push(row);
    }
    if let Some((n, line)) = declared_n {
        if n != rows.len() {
            return Err(LoadError::Parse {
                line,
                message: format!("header declares {n} vehicles but {} rows follow", rows.len()),
            }
            .into());
        }
    }
    if rows.is_empty() {
        return Err(LoadError::Parse {
            line: 0,
            message: "no matrix rows".into(),
        }
        .into());
    }
    if rows[0].len() != rows.len() {
        return Err(LoadError::Parse {
            line: 0,
            message: format!("matrix is {}×{}, expected square", rows.len(), rows[0].len()),
        }
        .into());
    }
    DistanceMatrix::new(Matrix::from_rows(rows)?)
}

/// Plain-text form read by [`parse_distance_matrix`]. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_distance_matrix(dist: &DistanceMatrix) -> String {
    let n = dist.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", dist.get(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn save_distance_matrix(dist: &DistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_distance_matrix(dist))?;
    Ok(())
}
