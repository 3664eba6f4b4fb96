//! Scenario and sweep files (TOML).
//!
//! A scenario file describes one road, obstacle and error model:
//!
//! ```toml
//! name = "straight"
//! road = "straight"        # or "arc-left" / "arc-right" with `radius`
//! speed = 5.556
//! seed = 7
//! ule = 24.5               # omit to calibrate from a nominal drive
//!
//! [obstacle]
//! offset = 45.0
//!
//! [error_model]
//! d_vis = 12.0
//! ```
//!
//! A sweep file lists scenario files (relative to itself) or inline
//! `[[scenario]]` tables, the policies to run, and optional overrides applied
//! to every scenario.

use std::path::{Path, PathBuf};

use erbo_core::detector::CalibrationMethod;
use erbo_core::episode::{Policy, Trigger};
use erbo_core::sim::{ErrorModelParams, Obstacle, Road, ScenarioSpec, VehicleParams};
use serde::Deserialize;

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoadKind {
    Straight,
    ArcLeft,
    ArcRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub offset: f64,
    #[serde(default)]
    pub lateral: f64,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_half_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModelConfig {
    pub e_base: f64,
    pub amplitude: f64,
    pub d_vis: f64,
    pub fov_deg: f64,
    pub p_exp: f64,
    pub noise_sd: f64,
}

impl Default for ErrorModelConfig {
    fn default() -> Self {
        let d = ErrorModelParams::default();
        ErrorModelConfig {
            e_base: d.e_base,
            amplitude: d.amplitude,
            d_vis: d.d_vis,
            fov_deg: d.fov.to_degrees(),
            p_exp: d.p_exp,
            noise_sd: d.noise_sd,
        }
    }
}

impl From<ErrorModelConfig> for ErrorModelParams {
    fn from(c: ErrorModelConfig) -> Self {
        ErrorModelParams {
            e_base: c.e_base,
            amplitude: c.amplitude,
            d_vis: c.d_vis,
            fov: c.fov_deg.to_radians(),
            p_exp: c.p_exp,
            noise_sd: c.noise_sd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Empirical,
    Burr,
}

impl From<MethodName> for CalibrationMethod {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Empirical => CalibrationMethod::Empirical,
            MethodName::Burr => CalibrationMethod::BurrFit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub steps: usize,
    pub rho: f64,
    pub method: MethodName,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { steps: 2000, rho: 0.995, method: MethodName::Empirical }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub road: RoadKind,
    pub radius: Option<f64>,
    pub speed: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit upper error limit; calibrated when absent.
    pub ule: Option<f64>,
    /// Fire at this obstacle distance instead of using the detector.
    pub manual_trigger_distance: Option<f64>,
    pub obstacle: ObstacleConfig,
    #[serde(default)]
    pub error_model: ErrorModelConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config { path: origin.into(), msg: e.to_string() })?;
        cfg.spec().map_err(|e| HarnessError::Config { path: origin.into(), msg: e.to_string() })?;
        Ok(cfg)
    }

    pub fn road(&self) -> std::result::Result<Road, String> {
        let radius = || self.radius.ok_or_else(|| format!("road `{:?}` needs a radius", self.road));
        Ok(match self.road {
            RoadKind::Straight => Road::Straight,
            RoadKind::ArcLeft => Road::ArcLeft { radius: radius()? },
            RoadKind::ArcRight => Road::ArcRight { radius: radius()? },
        })
    }

    pub fn spec(&self) -> std::result::Result<ScenarioSpec, String> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(format!("scenario name `{}` must be non-empty [A-Za-z0-9_-]", self.name));
        }
        let spec = ScenarioSpec {
            road: self.road()?,
            obstacle: Some(Obstacle {
                offset: self.obstacle.offset,
                lateral: self.obstacle.lateral,
                half_width: self.obstacle.half_width,
            }),
            approach_speed: self.speed,
            error_model: self.error_model.into(),
            vehicle: VehicleParams::default(),
            seed: self.seed,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// Fields a sweep may override on every scenario.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub speed: Option<f64>,
    pub seed: Option<u64>,
    pub ule: Option<f64>,
    pub manual_trigger_distance: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut ScenarioConfig) {
        if let Some(v) = self.speed {
            s.speed = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.ule {
            s.ule = Some(v);
        }
        if let Some(v) = self.manual_trigger_distance {
            s.manual_trigger_distance = Some(v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    reps: Option<u64>,
    #[serde(default)]
    policies: Vec<String>,
    #[serde(default)]
    scenario_files: Vec<PathBuf>,
    #[serde(default)]
    scenario: Vec<ScenarioConfig>,
    #[serde(default)]
    overrides: Overrides,
    coast_steps: Option<usize>,
    #[serde(default)]
    retrigger: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub reps: u64,
    pub policies: Vec<Policy>,
    pub scenarios: Vec<ScenarioConfig>,
    pub coast_steps: usize,
    pub retrigger: bool,
}

pub const DEFAULT_REPS: u64 = 20;

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let bad = |msg: String| HarnessError::Config { path: path.into(), msg };
        let file: SweepFile = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut scenarios = Vec::new();
        for f in &file.scenario_files {
            scenarios.push(ScenarioConfig::load(&base.join(f))?);
        }
        scenarios.extend(file.scenario);
        for s in &mut scenarios {
            file.overrides.apply(s);
            s.spec().map_err(|m| bad(format!("scenario `{}`: {m}", s.name)))?;
        }
        if scenarios.is_empty() {
            return Err(bad("sweep lists no scenarios".into()));
        }
        let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("scenario names must be unique".into()));
        }
        let policies = if file.policies.is_empty() {
            Policy::ALL.to_vec()
        } else {
            file.policies
                .iter()
                .map(|p| Policy::from_name(p).ok_or_else(|| bad(format!("unknown policy `{p}`"))))
                .collect::<Result<_>>()?
        };
        let reps = file.reps.unwrap_or(DEFAULT_REPS);
        if reps == 0 {
            return Err(bad("reps must be at least 1".into()));
        }
        Ok(SweepConfig { reps, policies, scenarios, coast_steps: file.coast_steps.unwrap_or(60), retrigger: file.retrigger })
    }
}

/// How an episode on this scenario is triggered, given a resolved limit.
pub fn trigger_for(s: &ScenarioConfig, ule: f64) -> Trigger {
    match s.manual_trigger_distance {
        Some(distance) => Trigger::Manual { distance },
        None => Trigger::Auto { threshold: ule },
    }
}
