//! Sampling-based stochastic predictive control for quadruped locomotion.
//!
//! The crate treats the robot trunk as a single rigid body driven by ground
//! reaction forces at four massless feet. At every control step the optimizer
//! draws `K` candidate parameter sets `theta = [theta1, theta2]` from a
//! Gaussian search distribution, where `theta1` selects a discretized gait
//! step frequency and `theta2` holds cubic-spline knots for the ground
//! reaction forces over the horizon. Each candidate is scored by a full
//! forward rollout of the trunk dynamics and the distribution mean is updated
//! either from the single best sample (naive optimizer) or from an
//! exponentially cost-weighted average of the whole batch (MPPI).
//!
//! Modules map onto the controller pipeline:
//!
//! - [`srbd_model`]: single-rigid-body dynamics and the RK4 stepper used both
//!   for rollouts and as the closed-loop plant
//! - [`gait`]: periodic contact schedules and the gait phase clock
//! - [`grf_spline`]: knot-parametrized force trajectories plus the friction
//!   cone projection
//! - [`cost`]: quadratic tracking cost, step-frequency regularization, and
//!   reference trajectory generation
//! - [`sbs_optim`]: sampling, parallel rollouts, and the naive/MPPI updates
//! - [`leg_reference`]: foothold targets, swing-foot trajectories, and the
//!   stance torque map
//! - [`sim_harness`]: closed-loop episodes with disturbance injection,
//!   batched statistics, and result persistence

use std::path::PathBuf;

pub mod cost;
pub mod gait;
pub mod grf_spline;
pub mod leg_reference;
pub mod sbs_optim;
pub mod sim_harness;
pub mod srbd_model;

pub use cost::{Command, CostConfig, ReferenceTrajectory};
pub use gait::{ContactSchedule, GaitParams, GaitPhase};
pub use grf_spline::SplineParams;
pub use sbs_optim::{
    Controller, OptimizerConfig, OptimizerVariant, RolloutResult, Sample, SamplerState,
};
pub use sim_harness::config::Config;
pub use sim_harness::{run_batch, run_episode, EpisodeMetrics, Scenario};
pub use srbd_model::{ControlInput, FootState, RobotModel, State};

/// Errors surfaced by the controller and the simulation harness.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Euler-rate map evaluated too close to the pitch singularity.
    #[error("singular orientation: pitch {pitch} rad is within 1e-3 of ±π/2")]
    SingularOrientation { pitch: f64 },
    /// Spline or swing trajectory queried outside its time window.
    #[error("time {t} s outside valid range [{lo}, {hi}] s")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    /// MPPI weight normalization underflowed to zero.
    #[error("degenerate MPPI weights: normalization sum is zero")]
    DegenerateWeights,
    /// Invalid or inconsistent configuration values.
    #[error("config error: {0}")]
    Config(String),
    /// I/O failure with the offending path attached.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Wraps an I/O error with the path it occurred at.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
