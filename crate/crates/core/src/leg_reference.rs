//! Foothold targets, swing-foot trajectories, and the stance torque map.
//!
//! Touchdown targets combine a half-stance feedforward along the commanded
//! velocity with a capture-point correction proportional to the velocity
//! error:
//!
//! ```text
//! p_f = p_hip + (T_st / 2) v_c^d + sqrt(p_cz / g) (v_c - v_c^d)
//! ```
//!
//! projected onto the (flat) terrain plane. Swing feet travel on cubic
//! Hermite arcs from liftoff to touchdown with an apex at the window
//! midpoint; stance-leg forces map to joint torques through the leg Jacobian
//! transpose.

use nalgebra::{Matrix3, Vector3};

use crate::srbd_model::{RobotModel, State};
use crate::{Error, Result};

/// One swing-foot arc between a liftoff and a touchdown event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingTrajectory {
    pub liftoff_point: Vector3<f64>,
    pub liftoff_time: f64,
    pub touchdown_point: Vector3<f64>,
    pub touchdown_time: f64,
    /// Clearance of the arc midpoint above the terrain, meters.
    pub apex_height: f64,
}

impl SwingTrajectory {
    pub fn new(
        liftoff_point: Vector3<f64>,
        liftoff_time: f64,
        touchdown_point: Vector3<f64>,
        touchdown_time: f64,
        apex_height: f64,
    ) -> Result<Self> {
        if touchdown_time <= liftoff_time {
            return Err(Error::config(
                "touchdown must happen strictly after liftoff",
            ));
        }
        if !(apex_height > 0.0) {
            return Err(Error::config("apex height must be positive"));
        }
        Ok(Self {
            liftoff_point,
            liftoff_time,
            touchdown_point,
            touchdown_time,
            apex_height,
        })
    }

    /// Retargets the touchdown point, keeping the timing and apex.
    pub fn retarget(&mut self, touchdown_point: Vector3<f64>) {
        self.touchdown_point = touchdown_point;
    }
}

/// Touchdown target for one leg.
///
/// The vertical component is snapped to the terrain plane (height 0); the
/// capture-point gain `sqrt(p_cz / g)` uses the current CoM height.
pub fn foothold_reference(
    p_hip: Vector3<f64>,
    v_c: Vector3<f64>,
    v_c_desired: Vector3<f64>,
    p_cz: f64,
    stance_time: f64,
    g: f64,
) -> Vector3<f64> {
    debug_assert!(p_cz > 0.0 && g > 0.0);
    let gain = (p_cz / g).sqrt();
    let mut p = p_hip + v_c_desired * (stance_time / 2.0) + (v_c - v_c_desired) * gain;
    p.z = 0.0;
    p
}

/// Hip pivot projected onto the terrain plane, yaw-aligned with the body.
pub fn hip_position_world(model: &RobotModel, state: &State, leg: usize) -> Vector3<f64> {
    let (sy, cy) = state.yaw().sin_cos();
    let hip = model.hip_offsets[leg];
    Vector3::new(
        state.p_c.x + cy * hip.x - sy * hip.y,
        state.p_c.y + sy * hip.x + cy * hip.y,
        0.0,
    )
}

fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * m1;
    let deriv = (6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * m1;
    (value, deriv)
}

/// Swing-foot position and velocity at time `t` within the swing window.
///
/// Horizontal components follow a single Hermite segment from liftoff to
/// touchdown with zero end velocities; the vertical component rises to the
/// apex at the window midpoint and descends symmetrically, also with zero
/// end velocities.
pub fn swing_trajectory(traj: &SwingTrajectory, t: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if t < traj.liftoff_time || t > traj.touchdown_time {
        return Err(Error::OutOfRange {
            t,
            lo: traj.liftoff_time,
            hi: traj.touchdown_time,
        });
    }
    let duration = traj.touchdown_time - traj.liftoff_time;
    let s = (t - traj.liftoff_time) / duration;

    let mut pos = Vector3::zeros();
    let mut vel = Vector3::zeros();
    for axis in 0..2 {
        let (v, d) = hermite(traj.liftoff_point[axis], traj.touchdown_point[axis], 0.0, 0.0, s);
        pos[axis] = v;
        vel[axis] = d / duration;
    }

    let apex_z = traj.apex_height;
    let half = 0.5 * duration;
    if s < 0.5 {
        let (v, d) = hermite(traj.liftoff_point.z, apex_z, 0.0, 0.0, s * 2.0);
        pos.z = v;
        vel.z = d / half;
    } else {
        let (v, d) = hermite(apex_z, traj.touchdown_point.z, 0.0, 0.0, (s - 0.5) * 2.0);
        pos.z = v;
        vel.z = d / half;
    }
    Ok((pos, vel))
}

/// Maps a ground reaction force to joint torques: `tau = -J' * grf`.
pub fn stance_torque(jacobian: &Matrix3<f64>, grf: &Vector3<f64>) -> Vector3<f64> {
    -(jacobian.tr_mul(grf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn standstill_foothold_is_the_hip_projection() {
        let p_hip = Vector3::new(0.2, 0.15, 0.0);
        let p = foothold_reference(p_hip, Vector3::zeros(), Vector3::zeros(), 0.3, 0.5, 9.81);
        assert_eq!(p, Vector3::new(0.2, 0.15, 0.0));
    }

    #[test]
    fn feedforward_term_leads_the_hip() {
        let p_hip = Vector3::new(0.2, 0.15, 0.0);
        let v = Vector3::new(0.5, 0.0, 0.0);
        let p = foothold_reference(p_hip, v, v, 0.3, 0.5, 9.81);
        assert_relative_eq!(p.x, 0.325, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.15, epsilon = 1e-12);
        assert_eq!(p.z, 0.0);
    }

    #[test]
    fn capture_point_term_reacts_to_velocity_error() {
        let p_hip = Vector3::new(0.2, 0.15, 0.0);
        let v = Vector3::new(0.6, 0.0, 0.0);
        let v_d = Vector3::new(0.5, 0.0, 0.0);
        let p = foothold_reference(p_hip, v, v_d, 0.3, 0.5, 9.81);
        assert_relative_eq!(p.x - 0.2, 0.142486, epsilon = 1e-5);
    }

    #[test]
    fn foothold_offset_direction_and_magnitude() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let p_hip = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let v_d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let p_cz = rng.random_range(0.2..0.5);
            let p = foothold_reference(p_hip, v, v_d, p_cz, 0.5, 9.81);
            let disturbance_part = p - p_hip - v_d * 0.25;
            let expected = (v - v_d) * (p_cz / 9.81).sqrt();
            assert_relative_eq!(disturbance_part.x, expected.x, epsilon = 1e-12);
            assert_relative_eq!(disturbance_part.y, expected.y, epsilon = 1e-12);
            assert_relative_eq!(
                disturbance_part.xy().norm(),
                (v - v_d).xy().norm() * (p_cz / 9.81).sqrt(),
                epsilon = 1e-12
            );
        }
    }

    fn arc() -> SwingTrajectory {
        SwingTrajectory::new(
            Vector3::new(0.1, 0.2, 0.0),
            1.0,
            Vector3::new(0.3, 0.25, 0.0),
            1.27,
            0.08,
        )
        .unwrap()
    }

    #[test]
    fn swing_endpoints_are_exact() {
        let traj = arc();
        let (p0, v0) = swing_trajectory(&traj, traj.liftoff_time).unwrap();
        assert_eq!(p0, traj.liftoff_point);
        assert_eq!(v0.x, 0.0);
        assert_eq!(v0.y, 0.0);
        assert!(v0.z >= 0.0);
        let (p1, _) = swing_trajectory(&traj, traj.touchdown_time).unwrap();
        assert_relative_eq!(p1, traj.touchdown_point, epsilon = 1e-12);
    }

    #[test]
    fn apex_height_at_midpoint() {
        let traj = arc();
        let mid = 0.5 * (traj.liftoff_time + traj.touchdown_time);
        let (p, _) = swing_trajectory(&traj, mid).unwrap();
        assert_relative_eq!(p.z, 0.08, epsilon = 1e-9);
    }

    #[test]
    fn swing_rejects_times_outside_window() {
        let traj = arc();
        assert!(matches!(
            swing_trajectory(&traj, 0.99),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            swing_trajectory(&traj, 1.28),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn analytic_velocity_matches_central_differences() {
        let traj = arc();
        let h = 1e-4;
        let mut t = traj.liftoff_time + h;
        let mut max_err = 0.0f64;
        while t < traj.touchdown_time - h {
            // Skip the apex junction where the acceleration jumps.
            let mid = 0.5 * (traj.liftoff_time + traj.touchdown_time);
            if (t - mid).abs() > 2.0 * h {
                let (_, v) = swing_trajectory(&traj, t).unwrap();
                let (pm, _) = swing_trajectory(&traj, t - h).unwrap();
                let (pp, _) = swing_trajectory(&traj, t + h).unwrap();
                let fd = (pp - pm) / (2.0 * h);
                max_err = max_err.max((v - fd).norm());
            }
            t += h;
        }
        assert!(max_err < 1e-3, "velocity mismatch {max_err}");
    }

    #[test]
    fn swing_position_is_continuous_at_apex() {
        let traj = arc();
        let mid = 0.5 * (traj.liftoff_time + traj.touchdown_time);
        let (below, _) = swing_trajectory(&traj, mid - 1e-9).unwrap();
        let (above, _) = swing_trajectory(&traj, mid + 1e-9).unwrap();
        assert_relative_eq!(below, above, epsilon = 1e-6);
    }

    #[test]
    fn stance_torque_sign_and_transpose() {
        assert_eq!(
            stance_torque(&Matrix3::identity(), &Vector3::new(0.0, 0.0, 100.0)),
            Vector3::new(0.0, 0.0, -100.0)
        );
        assert_eq!(
            stance_torque(&Matrix3::identity(), &Vector3::zeros()),
            Vector3::zeros()
        );

        // Transpose convention: an off-diagonal Jacobian entry must show up
        // transposed in the torque map.
        let mut j = Matrix3::zeros();
        j[(0, 1)] = 2.0;
        let tau = stance_torque(&j, &Vector3::new(3.0, 0.0, 0.0));
        assert_eq!(tau, Vector3::new(0.0, -6.0, 0.0));
    }

    #[test]
    fn stance_torque_is_linear() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let j = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let g1 = Vector3::from_fn(|_, _| rng.random_range(-100.0..100.0));
            let g2 = Vector3::from_fn(|_, _| rng.random_range(-100.0..100.0));
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combined = stance_torque(&j, &(g1 * a + g2 * b));
            let separate = stance_torque(&j, &g1) * a + stance_torque(&j, &g2) * b;
            assert_relative_eq!(combined, separate, epsilon = 1e-12);
        }
    }

    #[test]
    fn hip_projection_rotates_with_yaw() {
        let model = RobotModel::aliengo_like();
        let state = State {
            p_c: Vector3::new(1.0, 2.0, 0.35),
            phi: Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            ..State::zero()
        };
        let p = hip_position_world(&model, &state, 0);
        // FL hip (0.24, 0.11) rotated 90 degrees becomes (-0.11, 0.24).
        assert_relative_eq!(p.x, 1.0 - 0.11, epsilon = 1e-12);
        assert_relative_eq!(p.y, 2.0 + 0.24, epsilon = 1e-12);
        assert_eq!(p.z, 0.0);
    }
}
