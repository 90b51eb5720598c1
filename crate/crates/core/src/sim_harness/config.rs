//! The TOML configuration tree: robot / gait / spline / cost / optimizer /
//! scenario sections, with shipped defaults and strong-type builders.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cost::CostConfig;
use crate::gait::GaitParams;
use crate::sbs_optim::OptimizerConfig;
use crate::sim_harness::Scenario;
use crate::srbd_model::RobotModel;
use crate::{Error, Result};

/// Full harness configuration, one section per subsystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub robot: RobotConfig,
    pub gait: GaitConfig,
    pub spline: SplineConfig,
    pub cost: CostConfig,
    pub optimizer: OptimizerConfig,
    pub scenario: Scenario,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            robot: RobotConfig::default(),
            gait: GaitConfig::default(),
            spline: SplineConfig::default(),
            cost: CostConfig::default(),
            optimizer: OptimizerConfig::default(),
            scenario: Scenario::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotConfig {
    pub mass: f64,
    /// Diagonal of the body-frame inertia tensor, kg·m².
    pub inertia_diag: [f64; 3],
    pub gravity: [f64; 3],
    pub friction_mu: f64,
    pub fz_min: f64,
    pub fz_max: f64,
    /// Hip positions relative to the CoM (FL, FR, RL, RR), body frame.
    pub hip_offsets: [[f64; 3]; 4],
    pub nominal_height: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            mass: 21.0,
            inertia_diag: [0.35, 1.1, 1.2],
            gravity: [0.0, 0.0, -9.81],
            friction_mu: 0.5,
            fz_min: 5.0,
            fz_max: 180.0,
            hip_offsets: [
                [0.24, 0.11, 0.0],
                [0.24, -0.11, 0.0],
                [-0.24, 0.11, 0.0],
                [-0.24, -0.11, 0.0],
            ],
            nominal_height: 0.35,
        }
    }
}

impl RobotConfig {
    pub fn build(&self) -> Result<RobotModel> {
        RobotModel::new(
            self.mass,
            Matrix3::from_diagonal(&Vector3::from(self.inertia_diag)),
            Vector3::from(self.gravity),
            self.friction_mu,
            self.fz_min,
            self.fz_max,
            self.hip_offsets.map(Vector3::from),
            self.nominal_height,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitConfig {
    /// "trot" or "pace"; sets the default phase offsets.
    pub gait_type: String,
    pub duty_factor: f64,
    /// Explicit per-leg offsets override the gait-type defaults.
    pub phase_offsets: Option<[f64; 4]>,
    pub nominal_freq: f64,
    pub freq_options: Vec<f64>,
    /// Swing apex clearance, meters.
    pub step_height: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            gait_type: "trot".to_string(),
            duty_factor: 0.7,
            phase_offsets: None,
            nominal_freq: 1.3,
            freq_options: vec![1.3, 2.0, 2.4],
            step_height: 0.08,
        }
    }
}

impl GaitConfig {
    pub fn build(&self) -> Result<GaitParams> {
        let offsets = match (&self.phase_offsets, self.gait_type.as_str()) {
            (Some(o), _) => *o,
            (None, "trot") => [0.0, 0.5, 0.5, 0.0],
            (None, "pace") => [0.0, 0.5, 0.0, 0.5],
            (None, other) => {
                return Err(Error::config(format!(
                    "unknown gait type '{other}' (expected trot or pace, or give phase_offsets)"
                )))
            }
        };
        if !(self.step_height > 0.0) {
            return Err(Error::config("step height must be positive"));
        }
        GaitParams::new(
            self.duty_factor,
            offsets,
            self.nominal_freq,
            self.freq_options.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplineConfig {
    /// Knot count P per leg and axis; knots are spaced uniformly over the
    /// horizon.
    pub knots: usize,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self { knots: 4 }
    }
}

impl Config {
    /// Parses a TOML file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Cross-section consistency checks beyond per-type validation.
    pub fn validate(&self) -> Result<()> {
        self.robot.build()?;
        self.gait.build()?;
        self.cost.validate()?;
        self.optimizer.validate()?;
        self.scenario.validate()?;
        if self.spline.knots < 2 {
            return Err(Error::config("spline needs at least two knots"));
        }
        let horizon_s = self.optimizer.horizon as f64 * self.optimizer.dt;
        if self.scenario.duration < self.optimizer.dt {
            return Err(Error::config(format!(
                "scenario duration {} s is shorter than one control period {} s",
                self.scenario.duration, self.optimizer.dt
            )));
        }
        for push in &self.scenario.pushes {
            if push.start + push.duration > self.scenario.duration + 1e-9 {
                return Err(Error::config(format!(
                    "disturbance window [{}, {}] exceeds the episode duration {}",
                    push.start,
                    push.start + push.duration,
                    self.scenario.duration
                )));
            }
        }
        // The spline must span the whole rollout horizon.
        if horizon_s <= 0.0 {
            return Err(Error::config("horizon must cover positive time"));
        }
        Ok(())
    }

    /// Disables in-loop gait adaptation: the frequency option set collapses
    /// to the nominal frequency.
    pub fn with_gait_adaptation(mut self, enabled: bool) -> Self {
        if !enabled {
            self.gait.freq_options = vec![self.gait.nominal_freq];
        }
        self
    }
}
