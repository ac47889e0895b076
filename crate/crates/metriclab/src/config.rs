//! Experiment configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use metriclab_core::{DomainSpec, Point, Variant, C64};
use serde::{Deserialize, Serialize};

use crate::registry::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    UnknownExperiment(#[from] crate::registry::UnknownExperiment),
    #[error("config does not name an experiment")]
    MissingExperiment,
    #[error("config is for {config} but {requested} was requested")]
    ExperimentMismatch { config: Experiment, requested: Experiment },
    #[error("{field}: {reason}")]
    Range { field: String, reason: String },
}

fn range(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Range { field: field.to_string(), reason: reason.into() }
}

/// How Carathéodory values are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Optimize,
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub count: usize,
    pub seed: u64,
    pub min_modulus: Option<f64>,
    pub max_modulus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanConfig {
    pub count: usize,
    pub seed: u64,
    /// When set, directions are drawn from the tangential cone with this
    /// normal-to-tangential ratio instead of the mixed fan.
    pub tangential: Option<f64>,
}

/// A fully resolved configuration; every field has a value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub spec: DomainSpec,
    pub degree_cap: u32,
    pub grid: GridConfig,
    pub fan: FanConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub boundary_strip: f64,
    pub output_dir: PathBuf,
    pub candidate_degree: usize,
    pub boundary_samples: usize,
    pub method: Method,
    pub base: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    spec: Option<String>,
    degree_cap: Option<u32>,
    grid: Option<RawGrid>,
    fan: Option<RawFan>,
    tolerances: Option<BTreeMap<String, f64>>,
    boundary_strip: Option<f64>,
    output_dir: Option<PathBuf>,
    candidate_degree: Option<usize>,
    boundary_samples: Option<usize>,
    method: Option<Method>,
    base: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    count: Option<usize>,
    seed: Option<u64>,
    min_modulus: Option<f64>,
    max_modulus: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFan {
    count: Option<usize>,
    seed: Option<u64>,
    tangential: Option<f64>,
}

struct Defaults {
    spec: &'static str,
    degree_cap: u32,
    grid: (usize, u64, Option<f64>, Option<f64>),
    fan: (usize, u64),
    tolerances: &'static [(&'static str, f64)],
    method: Method,
}

fn defaults(exp: Experiment) -> Defaults {
    use Experiment::*;
    match exp {
        BallCurvature => Defaults {
            spec: "ball:2",
            degree_cap: 14,
            grid: (25, 1, None, Some(0.6)),
            fan: (16, 2),
            tolerances: &[("hsc", 1e-3)],
            method: Method::Exact,
        },
        RepIsometry => Defaults {
            spec: "ball:2",
            degree_cap: 14,
            grid: (20, 3, None, Some(0.5)),
            fan: (16, 4),
            tolerances: &[
                ("displacement", 1e-6),
                ("potential", 1e-5),
                ("pullback", 1e-3),
                ("curvature_constant", 1e-3),
                ("negative_control", 1e-2),
            ],
            method: Method::Exact,
        },
        LuScan => Defaults {
            spec: "ball:2",
            degree_cap: 60,
            grid: (6, 5, None, Some(0.6)),
            fan: (12, 6),
            tolerances: &[("lu_bound", 1e-9), ("reference", 1e-9), ("optimize_floor", 1e-2)],
            method: Method::Auto,
        },
        ChainAnnulus => Defaults {
            spec: "annulus:0.3",
            degree_cap: 320,
            grid: (40, 7, Some(0.35), Some(0.95)),
            fan: (1, 8),
            tolerances: &[("margin", 1e-6), ("strict", 1e-4), ("hsc", 1e-3), ("equality", 1e-6)],
            method: Method::Optimize,
        },
        HermitianFit => Defaults {
            spec: "ball:2",
            degree_cap: 14,
            grid: (1, 9, None, None),
            fan: (0, 10),
            tolerances: &[("hermitian", 1e-6), ("negative_control", 5e-2), ("kahler", 1e-3)],
            method: Method::Auto,
        },
        CoincidenceScan => Defaults {
            spec: "ball:2",
            degree_cap: 14,
            grid: (1, 11, None, None),
            fan: (12, 12),
            tolerances: &[("coincidence", 5e-2), ("cone", 0.1), ("fraction", 1e-9)],
            method: Method::Auto,
        },
        RigidityGap => Defaults {
            spec: "annulus:0.3",
            degree_cap: 320,
            grid: (10, 13, None, None),
            fan: (1, 14),
            tolerances: &[("equality", 1e-5), ("strict", 1e-4)],
            method: Method::Optimize,
        },
        InvarianceSuite => Defaults {
            spec: "ball:2",
            degree_cap: 14,
            grid: (5, 15, None, Some(0.5)),
            fan: (8, 16),
            tolerances: &[("dilation", 1e-8), ("unitary", 1e-8), ("homogeneity", 1e-10)],
            method: Method::Auto,
        },
        CurvatureThreshold => Defaults {
            spec: "ball:2",
            degree_cap: 120,
            grid: (12, 17, None, None),
            fan: (8, 18),
            tolerances: &[("threshold", 1e-3)],
            method: Method::Auto,
        },
    }
}

/// Default moduli window for the planar experiments when the config does not
/// give one: stay clear of the inner circle of an annulus.
fn planar_window(exp: Experiment, spec: &DomainSpec) -> (Option<f64>, Option<f64>) {
    let s = spec.scale();
    match (exp, spec.variant()) {
        (Experiment::RigidityGap, Variant::Annulus { r }) => (Some((r + 0.05) * s), Some(0.95 * s)),
        (Experiment::RigidityGap, Variant::Disc) => (None, Some(0.8 * s)),
        _ => (None, None),
    }
}

impl ExperimentConfig {
    /// Parses a config document; `requested` is the experiment named on the
    /// command line, if any.
    pub fn from_json(text: &str, requested: Option<Experiment>) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let spec: Option<DomainSpec> = match &raw.spec {
            Some(s) => Some(s.parse().map_err(|e: metriclab_core::Error| range("spec", e.to_string()))?),
            None => None,
        };
        let named = raw.experiment.as_deref().map(str::parse::<Experiment>).transpose()?;
        let experiment = match (named, requested) {
            (Some(c), Some(r)) if c != r => return Err(ConfigError::ExperimentMismatch { config: c, requested: r }),
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(ConfigError::MissingExperiment),
        };
        let d = defaults(experiment);
        let spec = match spec {
            Some(s) => s,
            None => d.spec.parse().expect("default spec parses"),
        };
        let n = spec.dim();
        let grid = raw.grid.unwrap_or_default();
        let (win_min, win_max) = planar_window(experiment, &spec);
        let grid = GridConfig {
            count: grid.count.unwrap_or(d.grid.0),
            seed: grid.seed.unwrap_or(d.grid.1),
            min_modulus: grid.min_modulus.or(d.grid.2).or(win_min),
            max_modulus: grid.max_modulus.or(d.grid.3).or(win_max),
        };
        let fan = raw.fan.unwrap_or_default();
        let fan_default = if experiment == Experiment::HermitianFit { 8 * n * n } else { d.fan.0 };
        let fan = FanConfig {
            count: fan.count.unwrap_or(fan_default),
            seed: fan.seed.unwrap_or(d.fan.1),
            tangential: fan.tangential,
        };
        let mut tolerances: BTreeMap<String, f64> =
            d.tolerances.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in raw.tolerances.unwrap_or_default() {
            if !tolerances.contains_key(&k) {
                let known: Vec<&str> = d.tolerances.iter().map(|t| t.0).collect();
                return Err(range("tolerances", format!("unknown tolerance {k:?} (expected one of {})", known.join(", "))));
            }
            tolerances.insert(k, v);
        }
        let config = ExperimentConfig {
            experiment,
            spec,
            degree_cap: raw.degree_cap.unwrap_or(d.degree_cap),
            grid,
            fan,
            tolerances,
            boundary_strip: raw.boundary_strip.unwrap_or(0.15 * spec.inradius()),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("reports").join(experiment.name())),
            candidate_degree: raw.candidate_degree.unwrap_or(if n == 1 { 12 } else { 5 }),
            boundary_samples: raw.boundary_samples.unwrap_or(160),
            method: raw.method.unwrap_or(d.method),
            base: raw.base,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the ranges of every field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (k, &v) in &self.tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(range(&format!("tolerances.{k}"), format!("must be positive, got {v}")));
            }
        }
        if !(self.boundary_strip > 0.0 && self.boundary_strip.is_finite()) {
            return Err(range("boundary_strip", format!("must be positive, got {}", self.boundary_strip)));
        }
        if self.degree_cap == 0 {
            return Err(range("degree_cap", "must be at least 1"));
        }
        if self.grid.count == 0 {
            return Err(range("grid.count", "must be at least 1"));
        }
        if self.fan.count == 0 {
            return Err(range("fan.count", "must be at least 1"));
        }
        if let Some(t) = self.fan.tangential {
            if !(t > 0.0 && t.is_finite()) {
                return Err(range("fan.tangential", format!("must be positive, got {t}")));
            }
        }
        let lo = self.grid.min_modulus.unwrap_or(0.0);
        if !(lo >= 0.0) {
            return Err(range("grid.min_modulus", format!("must be non-negative, got {lo}")));
        }
        if let Some(hi) = self.grid.max_modulus {
            if !(hi > lo) {
                return Err(range("grid.max_modulus", format!("must exceed the minimum modulus {lo}, got {hi}")));
            }
        }
        if self.candidate_degree == 0 {
            return Err(range("candidate_degree", "must be at least 1"));
        }
        if self.boundary_samples < 8 * self.candidate_degree {
            return Err(range(
                "boundary_samples",
                format!("need at least {} samples for degree {}", 8 * self.candidate_degree, self.candidate_degree),
            ));
        }
        if matches!(self.experiment, Experiment::ChainAnnulus | Experiment::RigidityGap) && self.spec.dim() != 1 {
            return Err(range("spec", format!("{} needs a planar domain, got {}", self.experiment, self.spec)));
        }
        if let Some(base) = &self.base {
            let p = self.base_point().expect("base present");
            if base.len() != self.spec.dim() {
                return Err(range("base", format!("expected {} coordinates, got {}", self.spec.dim(), base.len())));
            }
            if !self.spec.contains(&p).unwrap_or(false) {
                return Err(range("base", format!("point lies outside {}", self.spec)));
            }
        }
        Ok(())
    }

    pub fn base_point(&self) -> Option<Point> {
        self.base
            .as_ref()
            .map(|b| Point::new(b.iter().map(|&[re, im]| C64::new(re, im)).collect()))
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

/// Reads and resolves a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    parse_config_for(path, None)
}

pub fn parse_config_for(path: &Path, requested: Option<Experiment>) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ExperimentConfig::from_json(&text, requested)
}
