//! Run configuration: everything needed to reproduce one simulation.

use crate::geometry::Point;
use crate::kriging::KrigingMethod;
use crate::region::{Polygon, Rect};
use crate::variogram::SphericalModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    /// Work directly on folded angles with the sample mean/std Gaussian.
    #[default]
    Raw,
    /// Normal-score transform of the folded angles.
    Nscore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedMode {
    /// N ~ Poisson(intensity * area) uniform points in the unknown region.
    Poisson { intensity: f64 },
    /// Exactly `count` uniform points.
    FixedCount { count: usize },
    /// User-specified (x, y, azimuth) triples.
    UserPoints { points: Vec<(f64, f64, f64)> },
    /// Midpoints of the hidden known traces (hidden-region protocol).
    HiddenMidpoints,
}

/// Variogram specification: explicit parameters or "fit" from the known data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariogramSpec {
    Fit(String),
    Model { nugget: f64, sill: f64, range: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Domain rectangle [xmin, ymin, xmax, ymax].
    pub domain: [f64; 4],
    /// Path to the known-traces file, if any.
    #[serde(default)]
    pub known_traces: Option<String>,
    /// Polygon of the unexplored region (seeding area; known traces with
    /// midpoint inside it are hidden). Defaults to the whole domain.
    #[serde(default)]
    pub unknown_region: Option<Vec<[f64; 2]>>,
    pub seeds: SeedMode,
    /// Constant simulated segment length; defaults to the mean segment length
    /// of the known traces.
    #[serde(default)]
    pub segment_length: Option<f64>,
    /// Folded-azimuth mean; defaults to the circular mean of known data.
    #[serde(default)]
    pub angle_mean: Option<f64>,
    /// Folded-azimuth standard deviation (also the sector half-angle);
    /// defaults to the circular std of known data.
    #[serde(default)]
    pub angle_std: Option<f64>,
    /// Neighbor search radius; defaults to the fitted variogram range.
    #[serde(default)]
    pub sector_radius: Option<f64>,
    /// Optional length-based termination; off by default.
    #[serde(default)]
    pub max_trace_length: Option<f64>,
    pub max_iterations: u64,
    #[serde(default = "default_max_neighbors")]
    pub max_neighbors: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub transform: TransformMode,
    #[serde(default)]
    pub kriging: KrigingMethod,
    pub variogram: VariogramSpec,
    /// Re-emit known traces verbatim from their midpoints.
    #[serde(default)]
    pub replay_known: bool,
    /// Traces at or above this length quantile are kept as conditioning data
    /// even when they cross the unknown region, as long as their midpoint is
    /// outside it.
    #[serde(default = "default_long_quantile")]
    pub long_fracture_quantile: f64,
}

fn default_max_neighbors() -> usize {
    16
}

fn default_long_quantile() -> f64 {
    0.9
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn domain_rect(&self) -> Rect {
        Rect::new(self.domain[0], self.domain[1], self.domain[2], self.domain[3])
    }

    pub fn unknown_polygon(&self) -> Polygon {
        match &self.unknown_region {
            Some(verts) => Polygon::new(
                verts
                    .iter()
                    .map(|v| Point { x: v[0], y: v[1] })
                    .collect(),
            ),
            None => self.domain_rect().to_polygon(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        let [xmin, ymin, xmax, ymax] = self.domain;
        if !(xmax > xmin && ymax > ymin) || self.domain.iter().any(|v| !v.is_finite()) {
            return fail(format!("domain must be a nonempty finite rectangle, got {:?}", self.domain));
        }
        let rect = self.domain_rect();
        if let Some(verts) = &self.unknown_region {
            if verts.len() < 3 {
                return fail("unknown_region needs at least 3 vertices".into());
            }
            for v in verts {
                if !rect.contains(&Point { x: v[0], y: v[1] }) {
                    return fail(format!("unknown_region vertex ({}, {}) outside domain", v[0], v[1]));
                }
            }
        }
        match &self.seeds {
            SeedMode::Poisson { intensity } => {
                if *intensity < 0.0 || !intensity.is_finite() {
                    return fail(format!("seeds.intensity must be >= 0, got {intensity}"));
                }
            }
            SeedMode::FixedCount { .. } | SeedMode::HiddenMidpoints => {}
            SeedMode::UserPoints { points } => {
                for (x, y, az) in points {
                    if !x.is_finite() || !y.is_finite() || !az.is_finite() {
                        return fail("seeds.points must be finite".into());
                    }
                }
            }
        }
        if let Some(l) = self.segment_length {
            if l <= 0.0 || !l.is_finite() {
                return fail(format!("segment_length must be > 0, got {l}"));
            }
        }
        if let Some(m) = self.angle_mean {
            if !m.is_finite() {
                return fail(format!("angle_mean must be finite, got {m}"));
            }
        }
        if let Some(s) = self.angle_std {
            if !(s > 0.0 && s < 90.0) {
                return fail(format!("angle_std must lie in (0, 90), got {s}"));
            }
        }
        if let Some(r) = self.sector_radius {
            if r <= 0.0 || !r.is_finite() {
                return fail(format!("sector_radius must be > 0, got {r}"));
            }
        }
        if let Some(l) = self.max_trace_length {
            if l <= 0.0 || l.is_nan() {
                return fail(format!("max_trace_length must be > 0, got {l}"));
            }
        }
        if self.max_neighbors == 0 || self.max_neighbors > 64 {
            return fail(format!("max_neighbors must lie in 1..=64, got {}", self.max_neighbors));
        }
        if !(0.0..=1.0).contains(&self.long_fracture_quantile) {
            return fail(format!(
                "long_fracture_quantile must lie in [0, 1], got {}",
                self.long_fracture_quantile
            ));
        }
        match &self.variogram {
            VariogramSpec::Fit(tag) => {
                if tag != "fit" {
                    return fail(format!("variogram must be \"fit\" or a model table, got \"{tag}\""));
                }
            }
            VariogramSpec::Model { nugget, sill, range } => {
                if !(*nugget >= 0.0 && *sill >= 0.0 && *range > 0.0 && nugget + sill > 0.0) {
                    return fail(format!(
                        "variogram model requires nugget >= 0, sill >= 0, range > 0, nugget+sill > 0; got ({nugget}, {sill}, {range})"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn explicit_variogram(&self) -> Option<SphericalModel> {
        match &self.variogram {
            VariogramSpec::Model { nugget, sill, range } => {
                Some(SphericalModel { nugget: *nugget, sill: *sill, range: *range })
            }
            VariogramSpec::Fit(_) => None,
        }
    }
}
