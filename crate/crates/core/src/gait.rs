//! Periodic contact scheduling and the gait phase clock.
//!
//! A gait is defined by a duty factor `D_f`, per-leg phase offsets, and a
//! step frequency `f_s` picked from a small ordered option set. Leg `i` is in
//! stance at time `t` iff
//!
//! ```text
//! frac(phase + f_s * t + offset_i) < D_f
//! ```
//!
//! which yields stance and swing durations `T_st = D_f / f_s` and
//! `T_sw = (1 - D_f) / f_s`. The frequency index is the discrete decision
//! variable optimized in-loop; the global phase clock is preserved across
//! frequency switches so that only the rate changes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gait shape parameters plus the allowed step-frequency options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Fraction of the cycle each leg spends in stance, in (0, 1].
    pub duty_factor: f64,
    /// Per-leg phase offsets in [0, 1), leg order FL, FR, RL, RR.
    pub phase_offsets: [f64; 4],
    /// Nominal (most energy-efficient) step frequency, Hz.
    pub nominal_freq: f64,
    /// Allowed step frequencies, strictly increasing, first entry nominal.
    pub freq_options: Vec<f64>,
}

impl GaitParams {
    /// Trot at the given duty factor with the standard diagonal offsets.
    pub fn trot(duty_factor: f64, nominal_freq: f64, freq_options: Vec<f64>) -> Result<Self> {
        Self::new(duty_factor, [0.0, 0.5, 0.5, 0.0], nominal_freq, freq_options)
    }

    /// Pace: lateral pairs move together.
    pub fn pace(duty_factor: f64, nominal_freq: f64, freq_options: Vec<f64>) -> Result<Self> {
        Self::new(duty_factor, [0.0, 0.5, 0.0, 0.5], nominal_freq, freq_options)
    }

    pub fn new(
        duty_factor: f64,
        phase_offsets: [f64; 4],
        nominal_freq: f64,
        freq_options: Vec<f64>,
    ) -> Result<Self> {
        if !(duty_factor > 0.0 && duty_factor <= 1.0) {
            return Err(Error::config(format!(
                "duty factor must lie in (0, 1], got {duty_factor}"
            )));
        }
        if phase_offsets.iter().any(|&o| !(0.0..1.0).contains(&o)) {
            return Err(Error::config("phase offsets must lie in [0, 1)"));
        }
        if freq_options.is_empty() {
            return Err(Error::config("frequency option list must not be empty"));
        }
        if freq_options.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("frequency options must be strictly increasing"));
        }
        if freq_options[0] != nominal_freq {
            return Err(Error::config(format!(
                "first frequency option must equal the nominal frequency ({} != {nominal_freq})",
                freq_options[0]
            )));
        }
        if freq_options.iter().any(|&f| f <= 0.0) {
            return Err(Error::config("frequencies must be positive"));
        }
        Ok(Self {
            duty_factor,
            phase_offsets,
            nominal_freq,
            freq_options,
        })
    }

    pub fn freq_hz(&self, index: usize) -> f64 {
        self.freq_options[index]
    }
}

/// Global gait clock: a phase in [0, 1) plus the currently active frequency
/// option. Carried across control steps so gait timing stays continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitPhase {
    /// Phase of the gait cycle, in [0, 1).
    pub phase: f64,
    /// Index into [`GaitParams::freq_options`].
    pub frequency_index: usize,
}

impl GaitPhase {
    pub fn start() -> Self {
        Self {
            phase: 0.0,
            frequency_index: 0,
        }
    }
}

/// Per-step contact flags over a horizon together with the stance/swing
/// timing and the contact transition events inside the horizon window.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSchedule {
    /// One row per horizon step, `flags[j][leg]`.
    pub flags: Vec<[bool; 4]>,
    /// Stance duration `D_f / f_s`, seconds.
    pub stance_time: f64,
    /// Swing duration `(1 - D_f) / f_s`, seconds.
    pub swing_time: f64,
    /// Liftoff times per leg within `[0, N*dt]`, seconds from horizon start.
    pub liftoff_events: [Vec<f64>; 4],
    /// Touchdown times per leg within `[0, N*dt]`, seconds from horizon start.
    pub touchdown_events: [Vec<f64>; 4],
}

impl ContactSchedule {
    pub fn horizon_len(&self) -> usize {
        self.flags.len()
    }

    /// Number of legs in contact at step `j`.
    pub fn stance_count(&self, j: usize) -> usize {
        self.flags[j].iter().filter(|&&c| c).count()
    }
}

fn frac(x: f64) -> f64 {
    x.rem_euclid(1.0)
}

/// Whether a leg with the given cycle position is in stance.
fn in_stance(cycle_pos: f64, duty_factor: f64) -> bool {
    // frac() lands in [0, 1), so a full-stance gait (D_f = 1) is always true.
    cycle_pos < duty_factor
}

/// Builds the contact schedule over `n` steps of `dt` for the frequency
/// selected by `theta1`.
///
/// Leg `i` is in contact at step `j` iff
/// `frac(phase + f_s * j * dt + offset_i) < D_f`. The schedule also records
/// the exact liftoff (stance→swing) and touchdown (swing→stance) times that
/// fall inside the horizon window.
pub fn compute_contact_sequence(
    theta1: usize,
    phase: &GaitPhase,
    params: &GaitParams,
    n: usize,
    dt: f64,
) -> ContactSchedule {
    debug_assert!(theta1 < params.freq_options.len());
    debug_assert!(n >= 1 || n == 0); // n = 0 allowed for degenerate rollouts
    let f_s = params.freq_options[theta1];
    let d_f = params.duty_factor;
    let horizon = n as f64 * dt;

    let mut flags = Vec::with_capacity(n);
    for j in 0..n {
        let t = j as f64 * dt;
        let mut row = [false; 4];
        for (leg, row_leg) in row.iter_mut().enumerate() {
            let pos = frac(phase.phase + f_s * t + params.phase_offsets[leg]);
            *row_leg = in_stance(pos, d_f);
        }
        flags.push(row);
    }

    // Events: with local cycle position s(t) = frac(phase + offset + f_s t),
    // touchdowns happen where s wraps through 0 and liftoffs where s crosses
    // D_f. Enumerate the cycle indices whose events land inside [0, horizon].
    let mut liftoff_events: [Vec<f64>; 4] = Default::default();
    let mut touchdown_events: [Vec<f64>; 4] = Default::default();
    if d_f < 1.0 {
        for leg in 0..4 {
            let s0 = frac(phase.phase + params.phase_offsets[leg]);
            // Earliest integer k with event time >= 0, then walk forward.
            let mut k = 0.0f64;
            loop {
                let td = (k - s0 + 1.0) / f_s; // s reaches 1 (wraps to 0)
                if td > horizon && (k + d_f - s0) / f_s > horizon {
                    break;
                }
                let lo = (k + d_f - s0) / f_s; // s crosses D_f
                if (0.0..=horizon).contains(&lo) {
                    liftoff_events[leg].push(lo);
                }
                if (0.0..=horizon).contains(&td) {
                    touchdown_events[leg].push(td);
                }
                k += 1.0;
            }
        }
    }

    ContactSchedule {
        flags,
        stance_time: d_f / f_s,
        swing_time: (1.0 - d_f) / f_s,
        liftoff_events,
        touchdown_events,
    }
}

/// Advances the gait clock by `dt` at the currently selected frequency.
pub fn advance_phase(phase: &GaitPhase, params: &GaitParams, dt: f64) -> GaitPhase {
    debug_assert!(dt > 0.0);
    GaitPhase {
        phase: frac(phase.phase + params.freq_hz(phase.frequency_index) * dt),
        frequency_index: phase.frequency_index,
    }
}

/// Stance indicator for one leg at the current instant of the gait clock.
pub fn leg_in_stance_now(phase: &GaitPhase, params: &GaitParams, leg: usize) -> bool {
    in_stance(
        frac(phase.phase + params.phase_offsets[leg]),
        params.duty_factor,
    )
}
