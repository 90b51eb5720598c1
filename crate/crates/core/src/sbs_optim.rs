//! The sampling engine: Gaussian draws of `theta = [theta1, theta2]`,
//! parallel rollouts, and the naive / MPPI distribution updates.
//!
//! One controller invocation performs a single iteration of
//!
//! ```text
//! sample -> rollout -> sort -> update
//! ```
//!
//! warm-started from the previous solution by time-shifting the mean knots
//! one control period into the future. `theta1` (the step-frequency index)
//! is drawn uniformly over the allowed options; `theta2` (the force knots)
//! is drawn from a diagonal Gaussian around the running mean. The covariance
//! is never adapted.
//!
//! Rollouts are pure functions evaluated on a work-stealing pool. Every
//! sample owns a counter-derived RNG stream keyed on
//! `(seed, control step, sample index)`, and the sort plus both updates are
//! fixed-order sequential reductions, so results are bit-identical for any
//! worker count.

use std::time::{Duration, Instant};

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{build_reference, gait_regularization, stage_cost, Command, CostConfig, ReferenceTrajectory};
use crate::gait::{compute_contact_sequence, ContactSchedule, GaitParams, GaitPhase};
use crate::grf_spline::{SplineBasis, SplineParams};
use crate::srbd_model::{step, ControlInput, FootState, RobotModel, State};
use crate::{Error, Result};

/// State-component magnitude beyond which a rollout counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Which distribution update closes the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerVariant {
    /// New mean = the single best sample.
    Naive,
    /// New mean = exponentially cost-weighted average of all samples.
    Mppi,
}

impl std::fmt::Display for OptimizerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptimizerVariant::Naive => write!(f, "naive"),
            OptimizerVariant::Mppi => write!(f, "mppi"),
        }
    }
}

/// Optimizer settings shared by both variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub variant: OptimizerVariant,
    /// Sample count K per control step.
    pub samples: usize,
    /// Elite count; the naive update uses 1, MPPI weighs the whole batch.
    pub elite_count: usize,
    /// MPPI temperature.
    pub lambda: f64,
    /// Horizon length N, steps.
    pub horizon: usize,
    /// Step length, seconds; also the control period.
    pub dt: f64,
    /// Base seed of the counter-derived sample streams.
    pub seed: u64,
    /// Knot-noise standard deviation on the tangential force axes, N.
    pub sigma_xy: f64,
    /// Knot-noise standard deviation on the normal force axis, N.
    pub sigma_z: f64,
    /// Noise scale on the first knot relative to the later ones. The first
    /// knot shapes the force that is emitted *this* control period, so it
    /// explores gently; later knots are re-optimized before ever being
    /// applied.
    pub first_knot_sigma_scale: f64,
    /// Keep sample 0 as the unperturbed mean.
    pub elite_preserve: bool,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::config("sample count must be at least 1"));
        }
        if !(1..=self.samples).contains(&self.elite_count) {
            return Err(Error::config(format!(
                "elite count must lie in [1, {}], got {}",
                self.samples, self.elite_count
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config("lambda must be positive"));
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon must be at least 1 step"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.sigma_xy > 0.0) || !(self.sigma_z > 0.0) {
            return Err(Error::config("knot noise deviations must be positive"));
        }
        if !(self.first_knot_sigma_scale > 0.0) {
            return Err(Error::config("first-knot noise scale must be positive"));
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            variant: OptimizerVariant::Mppi,
            samples: 10_000,
            elite_count: 1,
            lambda: 1.0,
            horizon: 12,
            dt: 0.02,
            seed: 0,
            sigma_xy: 8.0,
            sigma_z: 15.0,
            first_knot_sigma_scale: 0.2,
            elite_preserve: true,
        }
    }
}

/// One decision-variable draw: a frequency index plus force knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Index into the gait frequency options.
    pub theta1: usize,
    /// Flat knot values, `P * 12`, same layout as [`SplineParams::values`].
    pub theta2: Vec<f64>,
}

/// Search distribution carried across control steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    /// Knot-space mean, `P * 12`.
    pub mean: Vec<f64>,
    /// Per-coordinate variances of the (diagonal, never adapted) covariance.
    pub variances: Vec<f64>,
    pub rng_seed: u64,
    /// Frequency option the controller currently emits.
    pub freq_index: usize,
    /// Control-step counter keying the per-sample RNG streams.
    pub step_counter: u64,
}

impl SamplerState {
    pub fn new(mean: Vec<f64>, variances: Vec<f64>, rng_seed: u64) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::config("mean and variance lengths differ"));
        }
        if variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("variances must be strictly positive"));
        }
        Ok(Self {
            mean,
            variances,
            rng_seed,
            freq_index: 0,
            step_counter: 0,
        })
    }
}

/// Scored rollout of one sample.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    /// Accumulated cost; `+inf` flags a diverged rollout.
    pub cost: f64,
    pub sample: Sample,
    /// The materialized input at the first horizon step.
    pub first_input: ControlInput,
}

/// Everything a rollout reads: the shared snapshot of one control step.
#[derive(Debug)]
pub struct RolloutCtx<'a> {
    pub x0: State,
    pub feet: FootState,
    pub reference: &'a ReferenceTrajectory,
    pub model: &'a RobotModel,
    pub gait: &'a GaitParams,
    pub cost: &'a CostConfig,
    pub horizon: usize,
    pub dt: f64,
    /// One precomputed contact schedule per frequency option.
    pub schedules: Vec<ContactSchedule>,
    basis: SplineBasis,
}

impl<'a> RolloutCtx<'a> {
    pub fn new(
        x0: State,
        phase: &GaitPhase,
        feet: FootState,
        reference: &'a ReferenceTrajectory,
        model: &'a RobotModel,
        gait: &'a GaitParams,
        cost: &'a CostConfig,
        knot_times: &[f64],
        horizon: usize,
        dt: f64,
    ) -> Result<Self> {
        let schedules = (0..gait.freq_options.len())
            .map(|idx| compute_contact_sequence(idx, phase, gait, horizon, dt))
            .collect();
        Ok(Self {
            x0,
            feet,
            reference,
            model,
            gait,
            cost,
            horizon,
            dt,
            schedules,
            basis: SplineBasis::for_steps(knot_times, horizon, dt)?,
        })
    }
}

fn sample_stream(seed: u64, step: u64, k: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&step.to_le_bytes());
    key[16..24].copy_from_slice(&k.to_le_bytes());
    key[24..32].copy_from_slice(b"sbs-knot");
    ChaCha8Rng::from_seed(key)
}

/// Materializes sample `k` of the current batch into `out` from its own
/// counter-derived stream, returning its frequency index. Sample 0 is the
/// unperturbed mean at the currently emitted frequency when elite
/// preservation is on.
fn draw_into(
    state: &SamplerState,
    cfg: &OptimizerConfig,
    stds: &[f64],
    freq_count: usize,
    k: usize,
    out: &mut [f64],
) -> usize {
    if k == 0 && cfg.elite_preserve {
        out.copy_from_slice(&state.mean);
        return state.freq_index;
    }
    let mut rng = sample_stream(state.rng_seed, state.step_counter, k as u64);
    let theta1 = rng.random_range(0..freq_count);
    for ((o, m), s) in out.iter_mut().zip(state.mean.iter()).zip(stds.iter()) {
        let z: f64 = StandardNormal.sample(&mut rng);
        *o = m + s * z;
    }
    theta1
}

fn draw_one(state: &SamplerState, cfg: &OptimizerConfig, stds: &[f64], freq_count: usize, k: usize) -> Sample {
    let mut theta2 = vec![0.0; state.mean.len()];
    let theta1 = draw_into(state, cfg, stds, freq_count, k, &mut theta2);
    Sample { theta1, theta2 }
}

/// Draws the batch for one control step.
///
/// With elite preservation on, sample 0 is the unperturbed mean at the
/// currently emitted frequency. All other samples draw `theta1` uniformly
/// over the `freq_count` options and perturb every knot coordinate
/// independently. Deterministic for a fixed `(seed, step_counter)`.
pub fn draw_samples(
    state: &SamplerState,
    cfg: &OptimizerConfig,
    freq_count: usize,
) -> Vec<Sample> {
    let stds: Vec<f64> = state.variances.iter().map(|v| v.sqrt()).collect();
    (0..cfg.samples)
        .into_par_iter()
        .map(|k| draw_one(state, cfg, &stds, freq_count, k))
        .collect()
}

/// Rollout core over a raw knot slice; returns the accumulated cost and the
/// materialized input at the first horizon step.
fn rollout_parts(theta1: usize, theta2: &[f64], ctx: &RolloutCtx) -> (f64, ControlInput) {
    let schedule = &ctx.schedules[theta1];
    let mut cost = gait_regularization(ctx.gait.freq_hz(theta1), ctx.cost);
    let mut first_input = ControlInput::zero();
    let mut x = ctx.x0;
    for j in 0..ctx.horizon {
        let u = ctx
            .basis
            .control_at(j, theta2, &schedule.flags[j], ctx.model);
        if j == 0 {
            first_input = u;
        }
        cost += stage_cost(
            &x,
            &u,
            &ctx.reference.states[j],
            &ctx.reference.inputs[j],
            ctx.cost,
        );
        match step(&x, &u, &ctx.feet, ctx.model, ctx.dt) {
            Ok(next) => x = next,
            Err(_) => {
                cost = f64::INFINITY;
                break;
            }
        }
        if x.max_abs() > DIVERGENCE_LIMIT {
            cost = f64::INFINITY;
            break;
        }
    }
    if !cost.is_finite() {
        cost = f64::INFINITY;
    }
    (cost, first_input)
}

/// Simulates one sample over the horizon and accumulates its cost.
///
/// Divergence (any state component beyond [`DIVERGENCE_LIMIT`], or a
/// singular orientation) marks the sample with `+inf` cost instead of
/// failing the batch.
pub fn rollout(sample: Sample, ctx: &RolloutCtx) -> RolloutResult {
    let (cost, first_input) = rollout_parts(sample.theta1, &sample.theta2, ctx);
    RolloutResult {
        cost,
        sample,
        first_input,
    }
}

/// Normalized MPPI weights for an ascending-sorted cost vector:
/// `w_i ∝ exp(-(J_i - J_1) / lambda)`.
pub fn mppi_weights(sorted_costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let beta = *sorted_costs.first().ok_or(Error::DegenerateWeights)?;
    if !beta.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let unnormalized: Vec<f64> = sorted_costs
        .iter()
        .map(|j| (-(j - beta) / lambda).exp())
        .collect();
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 {
        // Unreachable when beta is the batch minimum: the best weight is 1.
        return Err(Error::DegenerateWeights);
    }
    Ok(unnormalized.into_iter().map(|w| w / total).collect())
}

/// Naive update: the best sample becomes the new mean; covariance unchanged.
pub fn update_naive(results: &[RolloutResult], state: &SamplerState) -> SamplerState {
    debug_assert!(results.windows(2).all(|w| w[0].cost <= w[1].cost));
    let best = &results[0];
    SamplerState {
        mean: best.sample.theta2.clone(),
        variances: state.variances.clone(),
        rng_seed: state.rng_seed,
        freq_index: best.sample.theta1,
        step_counter: state.step_counter,
    }
}

/// MPPI update: the new mean is the weight-averaged knot vector; the emitted
/// frequency is the `theta1` of the highest-weight sample. Covariance
/// unchanged.
pub fn update_mppi(
    results: &[RolloutResult],
    state: &SamplerState,
    cfg: &OptimizerConfig,
) -> Result<SamplerState> {
    debug_assert!(results.windows(2).all(|w| w[0].cost <= w[1].cost));
    let costs: Vec<f64> = results.iter().map(|r| r.cost).collect();
    let weights = mppi_weights(&costs, cfg.lambda)?;
    let dim = state.mean.len();
    let mut mean = vec![0.0; dim];
    for (w, r) in weights.iter().zip(results.iter()) {
        for (m, v) in mean.iter_mut().zip(r.sample.theta2.iter()) {
            *m += w * v;
        }
    }
    // Sorted ascending and weights monotone in cost: index 0 is an argmax.
    let freq_index = results[0].sample.theta1;
    Ok(SamplerState {
        mean,
        variances: state.variances.clone(),
        rng_seed: state.rng_seed,
        freq_index,
        step_counter: state.step_counter,
    })
}

/// Per-step solve diagnostics.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    /// Cost of the best sample.
    pub best_cost: f64,
    /// Mean cost over the finite-cost samples.
    pub mean_cost: f64,
    /// Wall-clock duration of the full sample/rollout/sort/update cycle.
    pub solve_time: Duration,
    /// Number of diverged (infinite-cost) samples.
    pub diverged: usize,
    /// Every sample diverged; the previous mean's input was emitted.
    pub all_diverged: bool,
}

/// Controller output for one plant step.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    /// Input to apply now: the horizon-start slice of the chosen solution.
    pub input: ControlInput,
    /// Chosen frequency option.
    pub freq_index: usize,
    pub freq_hz: f64,
    pub diagnostics: StepDiagnostics,
}

/// Receding-horizon sampling controller: owns the search distribution and
/// runs one sample/rollout/sort/update iteration per call.
#[derive(Debug, Clone)]
pub struct Controller {
    pub model: RobotModel,
    pub gait: GaitParams,
    pub cost: CostConfig,
    pub opt: OptimizerConfig,
    pub sampler: SamplerState,
    knot_times: Vec<f64>,
    /// Basis at `t_k + dt`, for the warm-start knot shift.
    shift_basis: SplineBasis,
}

impl Controller {
    /// Builds a controller with the mean initialized to a constant
    /// weight-supporting force on every leg (`mg / (4 D_f)` vertically).
    pub fn new(
        model: RobotModel,
        gait: GaitParams,
        cost: CostConfig,
        opt: OptimizerConfig,
        knot_count: usize,
    ) -> Result<Self> {
        opt.validate()?;
        cost.validate()?;
        let horizon_s = opt.horizon as f64 * opt.dt;
        let init_fz = model.weight() / (4.0 * gait.duty_factor);
        let init = SplineParams::uniform(knot_count, horizon_s, nalgebra::Vector3::new(0.0, 0.0, init_fz))?;
        let knot_times = init.knot_times.clone();

        let mut variances = vec![0.0; knot_count * 12];
        for k in 0..knot_count {
            let scale = if k == 0 { opt.first_knot_sigma_scale } else { 1.0 };
            let sxy = scale * opt.sigma_xy;
            let sz = scale * opt.sigma_z;
            for leg in 0..4 {
                variances[crate::grf_spline::idx(k, leg, 0)] = sxy * sxy;
                variances[crate::grf_spline::idx(k, leg, 1)] = sxy * sxy;
                variances[crate::grf_spline::idx(k, leg, 2)] = sz * sz;
            }
        }
        let sampler = SamplerState::new(init.values, variances, opt.seed)?;

        let shift_times: Vec<f64> = knot_times
            .iter()
            .map(|&t| (t + opt.dt).min(horizon_s))
            .collect();
        let shift_basis = SplineBasis::for_times(&knot_times, &shift_times)?;

        Ok(Self {
            model,
            gait,
            cost,
            opt,
            sampler,
            knot_times,
            shift_basis,
        })
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.knot_times
    }

    /// Seeds the mean's vertical knots from the upcoming contact schedule:
    /// stance legs take their weight share `mg / #stance` at each knot time,
    /// swing legs keep a neutral quarter-weight placeholder so their next
    /// touchdown starts from a workable force level.
    fn seed_mean_from_schedule(&mut self, phase: &GaitPhase) {
        let f_s = self.gait.freq_hz(self.sampler.freq_index);
        let d_f = self.gait.duty_factor;
        let mg = self.model.weight();
        for (k, &t_k) in self.knot_times.iter().enumerate() {
            let mut stance = [false; 4];
            for (leg, s) in stance.iter_mut().enumerate() {
                let pos = (phase.phase + f_s * t_k + self.gait.phase_offsets[leg]).rem_euclid(1.0);
                *s = pos < d_f;
            }
            let count = stance.iter().filter(|&&s| s).count().max(1);
            for leg in 0..4 {
                let fz = if stance[leg] {
                    mg / count as f64
                } else {
                    mg / 4.0
                };
                self.sampler.mean[crate::grf_spline::idx(k, leg, 0)] = 0.0;
                self.sampler.mean[crate::grf_spline::idx(k, leg, 1)] = 0.0;
                self.sampler.mean[crate::grf_spline::idx(k, leg, 2)] = fz;
            }
        }
    }

    /// Time-shifts the mean one control period forward: the spline is
    /// resampled at `t_k + dt`, holding the final knot. Constant knot
    /// vectors are invariant under the shift.
    fn warm_start_shift(&mut self) {
        let p = self.knot_times.len();
        let mut shifted = vec![0.0; self.sampler.mean.len()];
        for k in 0..p {
            for leg in 0..4 {
                for axis in 0..3 {
                    shifted[crate::grf_spline::idx(k, leg, axis)] =
                        self.shift_basis
                            .eval_axis(k, &self.sampler.mean, leg, axis);
                }
            }
        }
        self.sampler.mean = shifted;
    }

    /// One full control iteration.
    ///
    /// `phase` is the gait clock at the current instant; the caller advances
    /// it afterwards at the returned frequency. `feet` carries the positions
    /// rollouts assume over the horizon (stance legs at their pinned
    /// positions, swing legs at their predicted touchdown targets).
    pub fn control_step(
        &mut self,
        x0: &State,
        phase: &GaitPhase,
        feet: &FootState,
        cmd: &Command,
    ) -> Result<ControlOutput> {
        let start = Instant::now();

        let phase = GaitPhase {
            phase: phase.phase,
            frequency_index: self.sampler.freq_index,
        };
        if self.sampler.step_counter == 0 {
            self.seed_mean_from_schedule(&phase);
        }
        self.warm_start_shift();

        let reference_schedule = compute_contact_sequence(
            self.sampler.freq_index,
            &phase,
            &self.gait,
            self.opt.horizon,
            self.opt.dt,
        );
        let reference = build_reference(
            x0,
            cmd,
            &self.model,
            &reference_schedule,
            self.opt.horizon,
            self.opt.dt,
        );
        let ctx = RolloutCtx::new(
            *x0,
            &phase,
            *feet,
            &reference,
            &self.model,
            &self.gait,
            &self.cost,
            &self.knot_times,
            self.opt.horizon,
            self.opt.dt,
        )?;

        // Draw and evaluate in one parallel pass. Samples are regenerable
        // from their counter-derived streams, so each worker draws into a
        // private scratch buffer, scores it, and discards it; the batch
        // never materializes in memory.
        let dim = self.sampler.mean.len();
        let k_total = self.opt.samples;
        let stds: Vec<f64> = self.sampler.variances.iter().map(|v| v.sqrt()).collect();
        let freq_count = self.gait.freq_options.len();
        let sampler = &self.sampler;
        let opt = &self.opt;
        let evals: Vec<(f64, u32)> = (0..k_total)
            .into_par_iter()
            .map_init(
                || vec![0.0f64; dim],
                |scratch, k| {
                    let theta1 = draw_into(sampler, opt, &stds, freq_count, k, scratch);
                    let (cost, _) = rollout_parts(theta1, scratch, &ctx);
                    (cost, theta1 as u32)
                },
            )
            .collect();

        // Sort (cost, index) keys instead of moving the samples; the unique
        // index makes the order total, so ties stay in sample order exactly
        // as a stable sort of the full results would.
        let mut order: Vec<(f64, u32)> = evals
            .iter()
            .enumerate()
            .map(|(i, &(cost, _))| (cost, i as u32))
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let diverged = order.iter().rev().take_while(|(c, _)| !c.is_finite()).count();
        if diverged == evals.len() {
            // Nothing usable: fall back to the previous mean's first input.
            let input = ctx.basis.control_at(
                0,
                &self.sampler.mean,
                &ctx.schedules[self.sampler.freq_index].flags[0],
                &self.model,
            );
            let freq_index = self.sampler.freq_index;
            self.sampler.step_counter += 1;
            return Ok(ControlOutput {
                input,
                freq_index,
                freq_hz: self.gait.freq_hz(freq_index),
                diagnostics: StepDiagnostics {
                    best_cost: f64::INFINITY,
                    mean_cost: f64::INFINITY,
                    solve_time: start.elapsed(),
                    diverged,
                    all_diverged: true,
                },
            });
        }

        // Update phase: samples are regenerated from their streams in
        // sorted order, which reproduces update_naive / update_mppi on the
        // physically sorted batch bit-for-bit (see the equivalence test).
        let best_idx = order[0].1 as usize;
        let best_theta1 = evals[best_idx].1 as usize;
        let mut scratch = vec![0.0f64; dim];
        let (input, updated) = match self.opt.variant {
            OptimizerVariant::Naive => {
                draw_into(&self.sampler, &self.opt, &stds, freq_count, best_idx, &mut scratch);
                let updated = SamplerState {
                    mean: scratch.clone(),
                    variances: self.sampler.variances.clone(),
                    rng_seed: self.sampler.rng_seed,
                    freq_index: best_theta1,
                    step_counter: self.sampler.step_counter,
                };
                let input = ctx.basis.control_at(
                    0,
                    &scratch,
                    &ctx.schedules[best_theta1].flags[0],
                    &self.model,
                );
                (input, updated)
            }
            OptimizerVariant::Mppi => {
                let sorted_costs: Vec<f64> = order.iter().map(|&(c, _)| c).collect();
                let weights = mppi_weights(&sorted_costs, self.opt.lambda)?;
                let mut mean = vec![0.0; dim];
                for (w, &(_, idx)) in weights.iter().zip(order.iter()) {
                    draw_into(&self.sampler, &self.opt, &stds, freq_count, idx as usize, &mut scratch);
                    for (m, v) in mean.iter_mut().zip(scratch.iter()) {
                        *m += w * v;
                    }
                }
                let updated = SamplerState {
                    mean,
                    variances: self.sampler.variances.clone(),
                    rng_seed: self.sampler.rng_seed,
                    freq_index: best_theta1,
                    step_counter: self.sampler.step_counter,
                };
                let input = ctx.basis.control_at(
                    0,
                    &updated.mean,
                    &ctx.schedules[updated.freq_index].flags[0],
                    &self.model,
                );
                (input, updated)
            }
        };

        let finite = evals.len() - diverged;
        let mean_cost = evals
            .iter()
            .map(|&(c, _)| c)
            .filter(|c| c.is_finite())
            .sum::<f64>()
            / finite as f64;
        let best_cost = order[0].0;
        self.sampler = updated;
        self.sampler.step_counter += 1;

        Ok(ControlOutput {
            input,
            freq_index: self.sampler.freq_index,
            freq_hz: self.gait.freq_hz(self.sampler.freq_index),
            diagnostics: StepDiagnostics {
                best_cost,
                mean_cost,
                solve_time: start.elapsed(),
                diverged,
                all_diverged: false,
            },
        })
    }
}
