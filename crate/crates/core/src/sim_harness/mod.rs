//! Closed-loop experiment runner.
//!
//! The plant is the same single-rigid-body model the rollouts use, stepped
//! at the control rate (one controller invocation per plant step) with
//! disturbance wrenches injected at the CoM. Feet are massless markers: a
//! stance foot stays pinned at its world position, a swing foot travels a
//! retargeted arc toward its predicted touchdown and lands there when the
//! gait clock returns to stance. Episodes terminate early when the trunk
//! exceeds the fall thresholds.

pub mod config;
mod metrics;

pub use metrics::{emit_results, BatchSummary, EpisodeMetrics, StepRecord, VariantSummary};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{stage_cost, Command, CostConfig};
use crate::gait::{advance_phase, leg_in_stance_now, GaitParams, GaitPhase};
use crate::leg_reference::{foothold_reference, hip_position_world, swing_trajectory, SwingTrajectory};
use crate::sbs_optim::{Controller, OptimizerConfig};
use crate::srbd_model::{step_with_accel, FootState, RobotModel, State};
use crate::{Error, Result};

/// External wrench applied at the CoM: world-frame force, body-frame torque.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.force == Vector3::zeros() && self.torque == Vector3::zeros()
    }
}

/// One piece of the piecewise-constant command profile, active from `start`
/// until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandSegment {
    pub start: f64,
    pub velocity: [f64; 3],
    pub yaw_rate: f64,
}

impl Default for CommandSegment {
    fn default() -> Self {
        Self {
            start: 0.0,
            velocity: [0.0; 3],
            yaw_rate: 0.0,
        }
    }
}

/// A scripted constant wrench over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PushConfig {
    pub start: f64,
    pub duration: f64,
    pub force: [f64; 3],
    pub torque: [f64; 3],
}

impl Default for PushConfig {
    fn default() -> Self {
        Self {
            start: 0.0,
            duration: 0.0,
            force: [0.0; 3],
            torque: [0.0; 3],
        }
    }
}

/// Randomized-wrench generator: every `period` seconds a fresh wrench with
/// per-axis components uniform in the amplitude bounds, held for the first
/// `active` seconds of the window. `offset` shifts the window phase, e.g.
/// `offset = -2` with a 4 s period starts the episode in the quiet half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomWrenchConfig {
    /// Per-axis force amplitude bound, N.
    pub force_bound: f64,
    /// Per-axis torque amplitude bound, N·m.
    pub torque_bound: f64,
    /// Window length, seconds.
    pub period: f64,
    /// Active fraction of each window, seconds.
    pub active: f64,
    /// Window phase shift, seconds.
    pub offset: f64,
}

impl Default for RandomWrenchConfig {
    fn default() -> Self {
        Self {
            force_bound: 20.0,
            torque_bound: 20.0,
            period: 4.0,
            active: 2.0,
            offset: 0.0,
        }
    }
}

/// Episode script: duration, command profile, disturbances, batch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Episode length, seconds.
    pub duration: f64,
    pub episodes: usize,
    /// Base seed; episode `i` runs with `seed + i`.
    pub seed: u64,
    pub commands: Vec<CommandSegment>,
    pub pushes: Vec<PushConfig>,
    pub random_wrench: Option<RandomWrenchConfig>,
    /// Optional plant-vs-model mismatch: scales plant mass and inertia by
    /// `1 + model_perturbation`.
    pub model_perturbation: f64,
    /// Fall thresholds, frozen here so results are comparable across runs.
    pub fall_angle_rad: f64,
    pub fall_height: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration: 10.0,
            episodes: 1,
            seed: 0,
            commands: vec![CommandSegment::default()],
            pushes: Vec::new(),
            random_wrench: None,
            model_perturbation: 0.0,
            fall_angle_rad: 0.8,
            fall_height: 0.12,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::config("scenario duration must be positive"));
        }
        if self.episodes < 1 {
            return Err(Error::config("episode count must be at least 1"));
        }
        for push in &self.pushes {
            if push.start < 0.0 || push.duration < 0.0 {
                return Err(Error::config("push windows must be non-negative"));
            }
        }
        if let Some(rw) = &self.random_wrench {
            if !(rw.period > 0.0) || rw.active < 0.0 || rw.active > rw.period {
                return Err(Error::config(
                    "random wrench needs 0 <= active <= period and period > 0",
                ));
            }
            if rw.force_bound < 0.0 || rw.torque_bound < 0.0 {
                return Err(Error::config("wrench bounds must be non-negative"));
            }
        }
        if self.model_perturbation <= -1.0 {
            return Err(Error::config("model perturbation must exceed -1"));
        }
        if !(self.fall_angle_rad > 0.0) || !(self.fall_height > 0.0) {
            return Err(Error::config("fall thresholds must be positive"));
        }
        Ok(())
    }

    /// Command active at time `t`.
    pub fn command_at(&self, t: f64) -> Command {
        let mut active = CommandSegment::default();
        for seg in &self.commands {
            if seg.start <= t && seg.start >= active.start {
                active = *seg;
            }
        }
        Command {
            velocity: Vector3::from(active.velocity),
            yaw_rate: active.yaw_rate,
        }
    }

    /// Total wrench at time `t` for the episode stream `seed`.
    /// Deterministic and stateless in `t`, so paired variants sharing a seed
    /// see the identical realization.
    pub fn disturbance_at(&self, t: f64, seed: u64) -> Wrench {
        let mut w = Wrench::zero();
        for push in &self.pushes {
            if t >= push.start && t < push.start + push.duration {
                w.force += Vector3::from(push.force);
                w.torque += Vector3::from(push.torque);
            }
        }
        if let Some(rw) = &self.random_wrench {
            let shifted = t + rw.offset;
            let window = (shifted / rw.period).floor();
            if shifted - window * rw.period < rw.active {
                let mut rng = wrench_stream(seed, window as i64 as u64);
                let draw = |rng: &mut ChaCha8Rng, bound: f64| {
                    if bound > 0.0 {
                        Vector3::new(
                            rng.random_range(-bound..=bound),
                            rng.random_range(-bound..=bound),
                            rng.random_range(-bound..=bound),
                        )
                    } else {
                        Vector3::zeros()
                    }
                };
                w.force += draw(&mut rng, rw.force_bound);
                w.torque += draw(&mut rng, rw.torque_bound);
            }
        }
        w
    }
}

fn wrench_stream(seed: u64, window: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&window.to_le_bytes());
    key[24..32].copy_from_slice(b"sbs-wnch");
    ChaCha8Rng::from_seed(key)
}

/// Everything that defines one controller variant in a batch.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub gait: GaitParams,
    pub cost: CostConfig,
    pub optimizer: OptimizerConfig,
    pub knot_count: usize,
    /// Swing apex clearance, meters.
    pub step_height: f64,
}

impl ControllerConfig {
    pub fn from_config(cfg: &config::Config) -> Result<Self> {
        Ok(Self {
            gait: cfg.gait.build()?,
            cost: cfg.cost.clone(),
            optimizer: cfg.optimizer.clone(),
            knot_count: cfg.spline.knots,
            step_height: cfg.gait.step_height,
        })
    }
}

/// Massless foot markers plus their swing bookkeeping.
struct LegTracker {
    positions: [Vector3<f64>; 4],
    in_stance: [bool; 4],
    swings: [Option<SwingTrajectory>; 4],
    targets: [Vector3<f64>; 4],
}

impl LegTracker {
    fn standing(model: &RobotModel, x: &State) -> Self {
        let feet = FootState::standing(model, x.p_c, x.yaw());
        Self {
            positions: feet.positions,
            in_stance: [true; 4],
            swings: [None; 4],
            targets: feet.positions,
        }
    }

    /// Foot state the plant integrates against.
    fn plant_feet(&self) -> FootState {
        FootState {
            positions: self.positions,
            in_stance: self.in_stance,
        }
    }

    /// Foot state the rollouts assume: swing legs already sit at their
    /// predicted touchdown targets so sampled schedules that bring them into
    /// contact within the horizon use the planned foothold.
    fn planning_feet(&self) -> FootState {
        let mut positions = self.positions;
        for leg in 0..4 {
            if !self.in_stance[leg] {
                positions[leg] = self.targets[leg];
            }
        }
        FootState {
            positions,
            in_stance: self.in_stance,
        }
    }

    /// Reconciles the markers with the gait clock at time `t`.
    fn update(
        &mut self,
        t: f64,
        phase: &GaitPhase,
        gait: &GaitParams,
        model: &RobotModel,
        x: &State,
        cmd: &Command,
        step_height: f64,
    ) {
        let f_s = gait.freq_hz(phase.frequency_index);
        let stance_time = gait.duty_factor / f_s;
        let swing_time = (1.0 - gait.duty_factor) / f_s;
        for leg in 0..4 {
            let now_stance = leg_in_stance_now(phase, gait, leg);
            match (self.in_stance[leg], now_stance) {
                (true, false) => {
                    // Liftoff: plan an arc toward the current target.
                    let hip = hip_position_world(model, x, leg);
                    self.targets[leg] = foothold_reference(
                        hip,
                        x.v_c,
                        cmd.velocity,
                        x.p_c.z.max(1e-3),
                        stance_time,
                        model.gravity.norm(),
                    );
                    self.swings[leg] = SwingTrajectory::new(
                        self.positions[leg],
                        t,
                        self.targets[leg],
                        t + swing_time.max(1e-3),
                        step_height,
                    )
                    .ok();
                    self.in_stance[leg] = false;
                }
                (false, true) => {
                    // Touchdown at the latest target.
                    self.positions[leg] = self.targets[leg];
                    self.positions[leg].z = 0.0;
                    self.in_stance[leg] = true;
                    self.swings[leg] = None;
                }
                (false, false) => {
                    // Retarget mid-swing so footholds keep absorbing
                    // disturbances, then move the marker along the arc.
                    let hip = hip_position_world(model, x, leg);
                    self.targets[leg] = foothold_reference(
                        hip,
                        x.v_c,
                        cmd.velocity,
                        x.p_c.z.max(1e-3),
                        stance_time,
                        model.gravity.norm(),
                    );
                    if let Some(swing) = &mut self.swings[leg] {
                        swing.retarget(self.targets[leg]);
                        let t_eval = t.clamp(swing.liftoff_time, swing.touchdown_time);
                        if let Ok((pos, _)) = swing_trajectory(swing, t_eval) {
                            self.positions[leg] = pos;
                        }
                    }
                }
                (true, true) => {}
            }
        }
    }
}

fn perturbed_model(model: &RobotModel, perturbation: f64) -> Result<RobotModel> {
    if perturbation == 0.0 {
        return Ok(model.clone());
    }
    let scale = 1.0 + perturbation;
    RobotModel::new(
        model.mass * scale,
        model.inertia * scale,
        model.gravity,
        model.friction_mu,
        model.fz_min,
        model.fz_max,
        model.hip_offsets,
        model.nominal_height,
    )
}

fn controller_seed(base: u64, episode_seed: u64) -> u64 {
    // splitmix64 finalizer over the combined seed.
    let mut z = base ^ episode_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one closed-loop episode. Fully deterministic given `seed`.
pub fn run_episode(
    scenario: &Scenario,
    ctrl_cfg: &ControllerConfig,
    model: &RobotModel,
    seed: u64,
) -> Result<EpisodeMetrics> {
    scenario.validate()?;
    let plant_model = perturbed_model(model, scenario.model_perturbation)?;

    let mut opt = ctrl_cfg.optimizer.clone();
    opt.seed = controller_seed(opt.seed, seed);
    let mut controller = Controller::new(
        model.clone(),
        ctrl_cfg.gait.clone(),
        ctrl_cfg.cost.clone(),
        opt,
        ctrl_cfg.knot_count,
    )?;

    let dt = ctrl_cfg.optimizer.dt;
    let steps = (scenario.duration / dt).round() as usize;
    let mut x = State {
        p_c: Vector3::new(0.0, 0.0, model.nominal_height),
        ..State::zero()
    };
    let mut phase = GaitPhase::start();
    let mut legs = LegTracker::standing(&plant_model, &x);
    let scheduled_hash = metrics::hash_wrench_trace(
        (0..steps).map(|k| scenario.disturbance_at(k as f64 * dt, seed)),
    );
    let mut metrics = EpisodeMetrics::new(seed, scheduled_hash);
    let mg = model.weight();

    for k in 0..steps {
        let t = k as f64 * dt;
        let cmd = scenario.command_at(t);
        let wrench = scenario.disturbance_at(t, seed);

        let out = controller.control_step(&x, &phase, &legs.planning_feet(), &cmd)?;

        // Realized stage cost against the instantaneous reference.
        let stance = out.input.contact.iter().filter(|&&c| c).count();
        let mut u_ref = [Vector3::zeros(); 4];
        for (leg, f) in u_ref.iter_mut().enumerate() {
            if out.input.contact[leg] {
                *f = Vector3::new(0.0, 0.0, mg / stance.max(1) as f64);
            }
        }
        let x_ref = State {
            p_c: Vector3::new(x.p_c.x, x.p_c.y, model.nominal_height),
            v_c: cmd.velocity,
            phi: Vector3::new(0.0, 0.0, x.yaw()),
            omega: Vector3::new(0.0, 0.0, cmd.yaw_rate),
        };
        let realized_cost = stage_cost(&x, &out.input, &x_ref, &u_ref, &ctrl_cfg.cost);

        metrics.push(StepRecord {
            t,
            state: x,
            command: cmd,
            freq_hz: out.freq_hz,
            stage_cost: realized_cost,
            solve_ms: out.diagnostics.solve_time.as_secs_f64() * 1e3,
            wrench,
        });

        // Plant step with the disturbance injected at the CoM.
        let dv = wrench.force / plant_model.mass;
        let domega = plant_model.inertia_inv * wrench.torque;
        x = match step_with_accel(&x, &out.input, &legs.plant_feet(), &plant_model, dt, &dv, &domega)
        {
            Ok(next) => next,
            Err(Error::SingularOrientation { .. }) => {
                metrics.mark_fall(t + dt);
                break;
            }
            Err(e) => return Err(e),
        };

        // Advance the gait clock at the frequency the controller picked.
        phase.frequency_index = out.freq_index;
        phase = advance_phase(&phase, &ctrl_cfg.gait, dt);
        legs.update(
            t + dt,
            &phase,
            &ctrl_cfg.gait,
            &plant_model,
            &x,
            &cmd,
            ctrl_cfg.step_height,
        );

        if x.roll().abs() > scenario.fall_angle_rad
            || x.pitch().abs() > scenario.fall_angle_rad
            || x.p_c.z < scenario.fall_height
        {
            metrics.mark_fall(t + dt);
            break;
        }
        if !x.is_finite() {
            metrics.mark_fall(t + dt);
            break;
        }
    }
    Ok(metrics)
}

/// Runs `scenario.episodes` seeded episodes for every variant, sharing
/// episode seeds across variants so each index sees the identical
/// disturbance realization.
pub fn run_batch(
    scenario: &Scenario,
    variants: &[(String, ControllerConfig)],
    model: &RobotModel,
) -> Result<BatchSummary> {
    scenario.validate()?;
    let jobs: Vec<(usize, u64)> = (0..scenario.episodes)
        .map(|i| (i, scenario.seed.wrapping_add(i as u64)))
        .collect();

    let mut rows = Vec::new();
    for (name, ctrl_cfg) in variants {
        let episodes: Result<Vec<EpisodeMetrics>> = jobs
            .par_iter()
            .map(|&(_, seed)| run_episode(scenario, ctrl_cfg, model, seed))
            .collect();
        let episodes = episodes?;
        rows.push(VariantSummary::aggregate(name.clone(), episodes));
    }
    Ok(BatchSummary { rows })
}

/// Times full control steps (sample, rollout, sort, update) at a standing
/// state with `rollouts` samples. Returns per-step solve times in
/// milliseconds, after a short untimed warmup.
pub fn bench_control_steps(
    cfg: &config::Config,
    rollouts: usize,
    steps: usize,
) -> Result<Vec<f64>> {
    let model = cfg.robot.build()?;
    let mut opt = cfg.optimizer.clone();
    opt.samples = rollouts;
    opt.elite_count = opt.elite_count.min(rollouts);
    let mut controller = Controller::new(
        model.clone(),
        cfg.gait.build()?,
        cfg.cost.clone(),
        opt,
        cfg.spline.knots,
    )?;
    let x0 = State {
        p_c: Vector3::new(0.0, 0.0, model.nominal_height),
        ..State::zero()
    };
    let feet = FootState::standing(&model, x0.p_c, 0.0);
    let mut phase = GaitPhase::start();
    let cmd = Command::zero();

    let mut times = Vec::with_capacity(steps);
    for k in 0..steps + 3 {
        let out = controller.control_step(&x0, &phase, &feet, &cmd)?;
        phase.frequency_index = out.freq_index;
        phase = advance_phase(&phase, &controller.gait, controller.opt.dt);
        if k >= 3 {
            times.push(out.diagnostics.solve_time.as_secs_f64() * 1e3);
        }
    }
    Ok(times)
}
