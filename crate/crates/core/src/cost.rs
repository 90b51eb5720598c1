//! Quadratic tracking cost, step-frequency regularization, and reference
//! trajectory generation.
//!
//! The per-step cost is the diagonal quadratic form
//!
//! ```text
//! r(x, u) = (x - x^r)' Q (x - x^r) + (u - u^r)' R (u - u^r)
//! ```
//!
//! over the 12 state channels and the 12 force components, with the yaw
//! error wrapped to (-pi, pi]. Each rollout additionally pays
//! `rho (theta1 - theta1_ref)^2` once for deviating from the nominal step
//! frequency.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::gait::ContactSchedule;
use crate::srbd_model::{ControlInput, RobotModel, State};

/// Diagonal cost weights plus the frequency regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    /// State weights in (p, v, Phi, omega) order.
    pub q: [f64; 12],
    /// Force weights, leg-major (4 legs x 3 axes).
    pub r: [f64; 12],
    /// Step-frequency regularization weight.
    pub rho: f64,
    /// Frequency the regularizer pulls toward, Hz.
    pub theta1_ref: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            q: [
                15.0, 15.0, 150.0, // CoM position
                8.0, 8.0, 8.0, // CoM velocity
                5.0, 5.0, 5.0, // orientation
                0.2, 0.2, 0.2, // angular rate
            ],
            r: [1e-5; 12],
            rho: 0.1,
            theta1_ref: 1.3,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.q.iter().chain(self.r.iter()).any(|&w| w < 0.0) {
            return Err(crate::Error::config("cost weights must be non-negative"));
        }
        if self.rho < 0.0 {
            return Err(crate::Error::config(
                "frequency regularization weight must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Velocity command: linear velocity plus a yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub velocity: Vector3<f64>,
    pub yaw_rate: f64,
}

impl Command {
    pub fn zero() -> Self {
        Self {
            velocity: Vector3::zeros(),
            yaw_rate: 0.0,
        }
    }

    pub fn forward(vx: f64) -> Self {
        Self {
            velocity: Vector3::new(vx, 0.0, 0.0),
            yaw_rate: 0.0,
        }
    }
}

/// Desired states and nominal stance forces over one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub states: Vec<State>,
    /// Nominal per-leg forces per step; gravity shared equally among the
    /// legs the schedule puts in stance.
    pub inputs: Vec<[Vector3<f64>; 4]>,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Builds the horizon reference from the current state and the command.
///
/// Positions integrate the commanded velocity from the current horizontal
/// position at the nominal height; roll and pitch references are level, the
/// yaw reference integrates the commanded yaw rate.
pub fn build_reference(
    x0: &State,
    cmd: &Command,
    model: &RobotModel,
    schedule: &ContactSchedule,
    n: usize,
    dt: f64,
) -> ReferenceTrajectory {
    debug_assert_eq!(schedule.horizon_len(), n);
    let mg = model.weight();
    let mut states = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n);
    for j in 0..n {
        let t = j as f64 * dt;
        let p = Vector3::new(
            x0.p_c.x + cmd.velocity.x * t,
            x0.p_c.y + cmd.velocity.y * t,
            model.nominal_height + cmd.velocity.z * t,
        );
        let yaw = x0.yaw() + cmd.yaw_rate * t;
        states.push(State {
            p_c: p,
            v_c: cmd.velocity,
            phi: Vector3::new(0.0, 0.0, yaw),
            omega: Vector3::new(0.0, 0.0, cmd.yaw_rate),
        });

        let stance = schedule.stance_count(j);
        let fz = mg / stance.max(1) as f64;
        let mut forces = [Vector3::zeros(); 4];
        for (leg, force) in forces.iter_mut().enumerate() {
            if schedule.flags[j][leg] {
                *force = Vector3::new(0.0, 0.0, fz);
            }
        }
        inputs.push(forces);
    }
    ReferenceTrajectory { states, inputs }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = a.rem_euclid(two_pi);
    if wrapped > std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// One-step quadratic tracking cost.
pub fn stage_cost(
    x: &State,
    u: &ControlInput,
    x_r: &State,
    u_r: &[Vector3<f64>; 4],
    cfg: &CostConfig,
) -> f64 {
    let xe = [
        x.p_c.x - x_r.p_c.x,
        x.p_c.y - x_r.p_c.y,
        x.p_c.z - x_r.p_c.z,
        x.v_c.x - x_r.v_c.x,
        x.v_c.y - x_r.v_c.y,
        x.v_c.z - x_r.v_c.z,
        x.phi.x - x_r.phi.x,
        x.phi.y - x_r.phi.y,
        wrap_angle(x.phi.z - x_r.phi.z),
        x.omega.x - x_r.omega.x,
        x.omega.y - x_r.omega.y,
        x.omega.z - x_r.omega.z,
    ];
    let mut cost = 0.0;
    for (e, w) in xe.iter().zip(cfg.q.iter()) {
        cost += w * e * e;
    }
    for leg in 0..4 {
        let fe = u.grf[leg] - u_r[leg];
        for axis in 0..3 {
            let w = cfg.r[3 * leg + axis];
            cost += w * fe[axis] * fe[axis];
        }
    }
    cost
}

/// Penalty for running a step frequency away from the nominal one. Paid once
/// per rollout.
pub fn gait_regularization(theta1_hz: f64, cfg: &CostConfig) -> f64 {
    let d = theta1_hz - cfg.theta1_ref;
    cfg.rho * d * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{compute_contact_sequence, GaitParams, GaitPhase};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> RobotModel {
        RobotModel::aliengo_like()
    }

    fn full_stance_schedule(n: usize) -> ContactSchedule {
        let gait = GaitParams::new(1.0, [0.0; 4], 1.3, vec![1.3]).unwrap();
        compute_contact_sequence(0, &GaitPhase::start(), &gait, n, 0.02)
    }

    #[test]
    fn standstill_reference_holds_pose() {
        let m = model();
        let x0 = State {
            p_c: Vector3::new(0.3, -0.2, 0.31),
            v_c: Vector3::new(0.1, 0.0, 0.0),
            phi: Vector3::new(0.05, -0.02, 1.1),
            omega: Vector3::new(0.0, 0.0, 0.2),
        };
        let sched = full_stance_schedule(12);
        let reference = build_reference(&x0, &Command::zero(), &m, &sched, 12, 0.02);
        for s in &reference.states {
            assert_eq!(s.p_c.x, 0.3);
            assert_eq!(s.p_c.y, -0.2);
            assert_eq!(s.p_c.z, m.nominal_height);
            assert_eq!(s.v_c, Vector3::zeros());
            assert_eq!(s.phi, Vector3::new(0.0, 0.0, 1.1));
            assert_eq!(s.omega, Vector3::zeros());
        }
    }

    #[test]
    fn forward_reference_integrates_command() {
        let m = model();
        let sched = full_stance_schedule(12);
        let reference =
            build_reference(&State::zero(), &Command::forward(0.5), &m, &sched, 12, 0.02);
        for (j, s) in reference.states.iter().enumerate() {
            assert_relative_eq!(s.p_c.x, 0.01 * j as f64, epsilon = 1e-14);
            assert_eq!(s.v_c.x, 0.5);
        }
    }

    #[test]
    fn reference_forces_share_weight_among_stance_legs() {
        let m = model();
        let sched = full_stance_schedule(4);
        let reference = build_reference(&State::zero(), &Command::zero(), &m, &sched, 4, 0.02);
        for forces in &reference.inputs {
            for f in forces {
                assert_relative_eq!(f.z, 51.5025, epsilon = 1e-10);
            }
        }

        // Trot rows with two stance legs split the weight in half.
        let gait = GaitParams::trot(0.5, 2.0, vec![2.0]).unwrap();
        let sched2 = compute_contact_sequence(0, &GaitPhase::start(), &gait, 12, 0.02);
        let ref2 = build_reference(&State::zero(), &Command::zero(), &m, &sched2, 12, 0.02);
        for (j, forces) in ref2.inputs.iter().enumerate() {
            let stance = sched2.stance_count(j);
            for (leg, f) in forces.iter().enumerate() {
                if sched2.flags[j][leg] {
                    assert_relative_eq!(f.z, m.weight() / stance as f64, epsilon = 1e-10);
                } else {
                    assert_eq!(f.z, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_error_costs_nothing() {
        let cfg = CostConfig::default();
        let x = State::zero();
        let u_r = [Vector3::new(0.0, 0.0, 51.5); 4];
        let u = ControlInput {
            grf: u_r,
            contact: [true; 4],
        };
        assert_eq!(stage_cost(&x, &u, &x, &u_r, &cfg), 0.0);
    }

    #[test]
    fn single_channel_error_is_weighted_square() {
        let mut cfg = CostConfig::default();
        cfg.q = [0.0; 12];
        cfg.r = [0.0; 12];
        cfg.q[4] = 7.0; // v_y channel
        let mut x = State::zero();
        x.v_c.y = 0.3;
        let u = ControlInput::zero();
        let u_r = [Vector3::zeros(); 4];
        assert_relative_eq!(
            stage_cost(&x, &u, &State::zero(), &u_r, &cfg),
            7.0 * 0.09,
            epsilon = 1e-15
        );
    }

    /// Dense-matrix oracle: generic e' M e with M = diag(q, r).
    fn dense_quadratic_oracle(
        x: &State,
        u: &ControlInput,
        x_r: &State,
        u_r: &[Vector3<f64>; 4],
        cfg: &CostConfig,
    ) -> f64 {
        let mut e = [0.0f64; 24];
        let xa = x.as_array();
        let ra = x_r.as_array();
        for i in 0..12 {
            e[i] = xa[i] - ra[i];
        }
        e[8] = wrap_angle(e[8]);
        let uf = u.force_array();
        for leg in 0..4 {
            for axis in 0..3 {
                e[12 + 3 * leg + axis] = uf[3 * leg + axis] - u_r[leg][axis];
            }
        }
        let mut m = [[0.0f64; 24]; 24];
        for i in 0..12 {
            m[i][i] = cfg.q[i];
            m[12 + i][12 + i] = cfg.r[i];
        }
        let mut total = 0.0;
        for i in 0..24 {
            for j in 0..24 {
                total += e[i] * m[i][j] * e[j];
            }
        }
        total
    }

    #[test]
    fn stage_cost_matches_dense_quadratic_oracle() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let mut cfg = CostConfig::default();
            for w in cfg.q.iter_mut().chain(cfg.r.iter_mut()) {
                *w = rng.random_range(0.0..100.0);
            }
            let rand_state = |rng: &mut StdRng| {
                State::from_array(std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
            };
            let x = rand_state(&mut rng);
            let x_r = rand_state(&mut rng);
            let u = ControlInput {
                grf: std::array::from_fn(|_| {
                    Vector3::new(
                        rng.random_range(-50.0..50.0),
                        rng.random_range(-50.0..50.0),
                        rng.random_range(0.0..150.0),
                    )
                }),
                contact: [true; 4],
            };
            let u_r = std::array::from_fn(|_| Vector3::new(0.0, 0.0, rng.random_range(0.0..100.0)));
            let got = stage_cost(&x, &u, &x_r, &u_r, &cfg);
            let want = dense_quadratic_oracle(&x, &u, &x_r, &u_r, &cfg);
            assert_relative_eq!(got, want, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn yaw_error_wraps() {
        let mut cfg = CostConfig::default();
        cfg.q = [0.0; 12];
        cfg.r = [0.0; 12];
        cfg.q[8] = 1.0;
        let mut x = State::zero();
        x.phi.z = std::f64::consts::PI + 0.1;
        let u = ControlInput::zero();
        let u_r = [Vector3::zeros(); 4];
        let cost = stage_cost(&x, &u, &State::zero(), &u_r, &cfg);
        // Wrapped error is -(pi - 0.1), not pi + 0.1.
        let want = (std::f64::consts::PI - 0.1).powi(2);
        assert_relative_eq!(cost, want, epsilon = 1e-12);
    }

    #[test]
    fn regularization_examples() {
        let cfg = CostConfig::default();
        assert_eq!(gait_regularization(1.3, &cfg), 0.0);

        let mut free = cfg.clone();
        free.rho = 0.0;
        assert_eq!(gait_regularization(2.4, &free), 0.0);

        let mut strong = cfg.clone();
        strong.rho = 2.0;
        assert_relative_eq!(gait_regularization(2.4, &strong), 2.42, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn cost_is_nonnegative_and_scales_linearly(
            seed in 0u64..500,
            scale in 0.1f64..10.0,
        ) {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut cfg = CostConfig::default();
            for w in cfg.q.iter_mut().chain(cfg.r.iter_mut()) {
                *w = rng.random_range(0.0..10.0);
            }
            let x = State::from_array(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let u = ControlInput {
                grf: [Vector3::new(1.0, 2.0, 30.0); 4],
                contact: [true; 4],
            };
            let u_r = [Vector3::zeros(); 4];
            let base = stage_cost(&x, &u, &State::zero(), &u_r, &cfg);
            prop_assert!(base >= 0.0);

            let mut scaled = cfg.clone();
            for w in scaled.q.iter_mut().chain(scaled.r.iter_mut()) {
                *w *= scale;
            }
            let got = stage_cost(&x, &u, &State::zero(), &u_r, &scaled);
            prop_assert!((got - scale * base).abs() <= 1e-9 * base.max(1.0) * scale);
        }

        #[test]
        fn cost_is_symmetric_under_error_sign_flip(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let cfg = CostConfig::default();
            let e: [f64; 12] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            let x_pos = State::from_array(e);
            let x_neg = State::from_array(std::array::from_fn(|i| -e[i]));
            let u = ControlInput::zero();
            let u_r = [Vector3::zeros(); 4];
            let a = stage_cost(&x_pos, &u, &State::zero(), &u_r, &cfg);
            let b = stage_cost(&x_neg, &u, &State::zero(), &u_r, &cfg);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn regularization_increases_with_distance(
            d1 in 0.0f64..2.0,
            extra in 0.01f64..2.0,
        ) {
            let cfg = CostConfig::default();
            let near = gait_regularization(cfg.theta1_ref + d1, &cfg);
            let far = gait_regularization(cfg.theta1_ref + d1 + extra, &cfg);
            prop_assert!(far > near);
        }
    }
}
