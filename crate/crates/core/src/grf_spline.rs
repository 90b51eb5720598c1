//! Knot-parametrized ground-reaction-force trajectories.
//!
//! The per-sample decision variable `theta2` is a set of `P` force knots per
//! leg and axis, placed at fixed times spanning the horizon. Evaluation uses
//! Catmull-Rom interpolation: a cubic Hermite per segment whose knot tangents
//! are the centered finite differences of neighboring knots,
//!
//! ```text
//! m_j = (P_{j+1} - P_{j-1}) / (t_{j+1} - t_{j-1})
//! ```
//!
//! with duplicated end knots, which halves the one-sided slope at the
//! boundary tangents:
//!
//! ```text
//! m_0     = (P_1 - P_0) / (2 (t_1 - t_0))
//! m_{P-1} = (P_{P-1} - P_{P-2}) / (2 (t_{P-1} - t_{P-2}))
//! ```
//!
//! Materialized forces are gated by the contact schedule first (swing legs
//! exert nothing) and then projected onto the friction pyramid.

use nalgebra::Vector3;

use crate::gait::ContactSchedule;
use crate::srbd_model::{ControlInput, RobotModel};
use crate::{Error, Result};

/// Force knots for all legs with their shared time grid.
///
/// Values are stored flat in `[knot][leg][axis]` order so the optimizer can
/// treat `theta2` as one real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineParams {
    /// Knot times, strictly increasing, starting at 0, ending at the horizon.
    pub knot_times: Vec<f64>,
    /// `P * 12` force values, newtons.
    pub values: Vec<f64>,
}

impl SplineParams {
    pub fn new(knot_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knot_times.len() < 2 {
            return Err(Error::config("spline needs at least two knots"));
        }
        if knot_times[0] != 0.0 {
            return Err(Error::config("first knot time must be 0"));
        }
        if knot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("knot times must be strictly increasing"));
        }
        if values.len() != knot_times.len() * 12 {
            return Err(Error::config(format!(
                "expected {} knot values, got {}",
                knot_times.len() * 12,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("knot values must be finite"));
        }
        Ok(Self { knot_times, values })
    }

    /// Uniform time grid over `[0, horizon]` with every leg initialized to
    /// the same constant force.
    pub fn uniform(knot_count: usize, horizon: f64, init_force: Vector3<f64>) -> Result<Self> {
        if knot_count < 2 {
            return Err(Error::config("spline needs at least two knots"));
        }
        if !(horizon > 0.0) {
            return Err(Error::config("horizon must be positive"));
        }
        let knot_times = (0..knot_count)
            .map(|k| horizon * k as f64 / (knot_count - 1) as f64)
            .collect();
        let mut values = vec![0.0; knot_count * 12];
        for k in 0..knot_count {
            for leg in 0..4 {
                values[idx(k, leg, 0)] = init_force.x;
                values[idx(k, leg, 1)] = init_force.y;
                values[idx(k, leg, 2)] = init_force.z;
            }
        }
        Ok(Self { knot_times, values })
    }

    pub fn knot_count(&self) -> usize {
        self.knot_times.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.knot_times.last().unwrap()
    }

    pub fn knot(&self, k: usize, leg: usize, axis: usize) -> f64 {
        self.values[idx(k, leg, axis)]
    }

    pub fn set_knot(&mut self, k: usize, leg: usize, axis: usize, value: f64) {
        self.values[idx(k, leg, axis)] = value;
    }

    /// Evaluates the spline at `t`, returning one force vector per leg.
    pub fn eval(&self, t: f64) -> Result<[Vector3<f64>; 4]> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                lo: 0.0,
                hi: horizon,
            });
        }
        let seg = self.segment_for(t);
        let h = self.knot_times[seg + 1] - self.knot_times[seg];
        let s = (t - self.knot_times[seg]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);

        let mut out = [Vector3::zeros(); 4];
        for (leg, force) in out.iter_mut().enumerate() {
            for axis in 0..3 {
                let p0 = self.knot(seg, leg, axis);
                let p1 = self.knot(seg + 1, leg, axis);
                let m0 = self.tangent(seg, leg, axis);
                let m1 = self.tangent(seg + 1, leg, axis);
                force[axis] = h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;
            }
        }
        Ok(out)
    }

    fn segment_for(&self, t: f64) -> usize {
        let after = self.knot_times.partition_point(|&kt| kt <= t);
        after.saturating_sub(1).min(self.knot_count() - 2)
    }

    /// Catmull-Rom tangent at knot `k` (module docs give the boundary rule).
    fn tangent(&self, k: usize, leg: usize, axis: usize) -> f64 {
        let last = self.knot_count() - 1;
        if k == 0 {
            (self.knot(1, leg, axis) - self.knot(0, leg, axis))
                / (2.0 * (self.knot_times[1] - self.knot_times[0]))
        } else if k == last {
            (self.knot(last, leg, axis) - self.knot(last - 1, leg, axis))
                / (2.0 * (self.knot_times[last] - self.knot_times[last - 1]))
        } else {
            (self.knot(k + 1, leg, axis) - self.knot(k - 1, leg, axis))
                / (self.knot_times[k + 1] - self.knot_times[k - 1])
        }
    }
}

pub(crate) fn idx(k: usize, leg: usize, axis: usize) -> usize {
    (k * 4 + leg) * 3 + axis
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Clamps a force into the inner-pyramid friction cone: the normal component
/// into `[fz_min, fz_max]`, then each tangential component into
/// `[-mu f_z, mu f_z]`. Idempotent.
pub fn project_friction_cone(force: Vector3<f64>, model: &RobotModel) -> Vector3<f64> {
    let fz = force.z.clamp(model.fz_min, model.fz_max);
    let limit = model.friction_mu * fz;
    Vector3::new(
        force.x.clamp(-limit, limit),
        force.y.clamp(-limit, limit),
        fz,
    )
}

/// Membership test for the pyramid cone, used by tests and input validation.
pub fn satisfies_friction_cone(force: &Vector3<f64>, model: &RobotModel) -> bool {
    force.z >= model.fz_min
        && force.z <= model.fz_max
        && force.x.abs() <= model.friction_mu * force.z
        && force.y.abs() <= model.friction_mu * force.z
}

/// Evaluates the spline at every horizon step, zeroes swing legs, and
/// projects stance-leg forces onto the cone.
pub fn materialize_controls(
    params: &SplineParams,
    schedule: &ContactSchedule,
    model: &RobotModel,
    n: usize,
    dt: f64,
) -> Result<Vec<ControlInput>> {
    debug_assert_eq!(schedule.horizon_len(), n);
    let mut out = Vec::with_capacity(n);
    for (j, flags) in schedule.flags.iter().enumerate().take(n) {
        let raw = params.eval(j as f64 * dt)?;
        out.push(gate_and_project(&raw, flags, model));
    }
    Ok(out)
}

pub(crate) fn gate_and_project(
    raw: &[Vector3<f64>; 4],
    flags: &[bool; 4],
    model: &RobotModel,
) -> ControlInput {
    let mut grf = [Vector3::zeros(); 4];
    for leg in 0..4 {
        if flags[leg] {
            grf[leg] = project_friction_cone(raw[leg], model);
        }
    }
    ControlInput {
        grf,
        contact: *flags,
    }
}

/// Precomputed evaluation weights for a fixed (knot grid, sample times) pair.
///
/// The Catmull-Rom value at a fixed time is linear in the knot values, so for
/// the rollout hot path each horizon step collapses to a four-knot dot
/// product per (leg, axis). Rebuilding is only needed when the grid changes.
#[derive(Debug, Clone)]
pub(crate) struct SplineBasis {
    rows: Vec<BasisRow>,
}

#[derive(Debug, Clone, Copy)]
struct BasisRow {
    knot_idx: [usize; 4],
    weight: [f64; 4],
}

impl SplineBasis {
    /// Weights for evaluation at `t_j = j * dt`, `j = 0..n`.
    pub(crate) fn for_steps(knot_times: &[f64], n: usize, dt: f64) -> Result<Self> {
        let times: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
        Self::for_times(knot_times, &times)
    }

    /// Weights for evaluation at arbitrary times inside the knot span.
    pub(crate) fn for_times(knot_times: &[f64], times: &[f64]) -> Result<Self> {
        let p = knot_times.len();
        if p < 2 {
            return Err(Error::config("spline needs at least two knots"));
        }
        let horizon = knot_times[p - 1];
        let mut rows = Vec::with_capacity(times.len());
        for &t in times {
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::OutOfRange {
                    t,
                    lo: 0.0,
                    hi: horizon,
                });
            }
            let after = knot_times.partition_point(|&kt| kt <= t);
            let seg = after.saturating_sub(1).min(p - 2);
            let h = knot_times[seg + 1] - knot_times[seg];
            let s = (t - knot_times[seg]) / h;
            let (h00, h10, h01, h11) = hermite_basis(s);

            let mut acc: Vec<(usize, f64)> = Vec::with_capacity(6);
            let mut add = |k: usize, w: f64| {
                if let Some(entry) = acc.iter_mut().find(|(i, _)| *i == k) {
                    entry.1 += w;
                } else {
                    acc.push((k, w));
                }
            };
            add(seg, h00);
            add(seg + 1, h01);
            for (knot, hw) in [(seg, h10 * h), (seg + 1, h11 * h)] {
                // Distribute the tangent onto the knots it differences.
                if knot == 0 {
                    let c = 1.0 / (2.0 * (knot_times[1] - knot_times[0]));
                    add(1, hw * c);
                    add(0, -hw * c);
                } else if knot == p - 1 {
                    let c = 1.0 / (2.0 * (knot_times[p - 1] - knot_times[p - 2]));
                    add(p - 1, hw * c);
                    add(p - 2, -hw * c);
                } else {
                    let c = 1.0 / (knot_times[knot + 1] - knot_times[knot - 1]);
                    add(knot + 1, hw * c);
                    add(knot - 1, -hw * c);
                }
            }
            debug_assert!(acc.len() <= 4);
            let mut knot_idx = [0usize; 4];
            let mut weight = [0.0f64; 4];
            for (slot, (k, w)) in acc.into_iter().enumerate() {
                knot_idx[slot] = k;
                weight[slot] = w;
            }
            rows.push(BasisRow { knot_idx, weight });
        }
        Ok(Self { rows })
    }

    /// Gated, cone-projected input at horizon step `j` for raw knot `values`.
    pub(crate) fn control_at(
        &self,
        j: usize,
        values: &[f64],
        flags: &[bool; 4],
        model: &RobotModel,
    ) -> ControlInput {
        let row = &self.rows[j];
        let mut grf = [Vector3::zeros(); 4];
        for leg in 0..4 {
            if flags[leg] {
                let mut f = Vector3::zeros();
                for axis in 0..3 {
                    let mut v = 0.0;
                    for slot in 0..4 {
                        v += row.weight[slot] * values[idx(row.knot_idx[slot], leg, axis)];
                    }
                    f[axis] = v;
                }
                grf[leg] = project_friction_cone(f, model);
            }
        }
        ControlInput {
            grf,
            contact: *flags,
        }
    }

    /// Raw (ungated) evaluation, used by the warm-start shift.
    pub(crate) fn eval_axis(&self, j: usize, values: &[f64], leg: usize, axis: usize) -> f64 {
        let row = &self.rows[j];
        let mut v = 0.0;
        for slot in 0..4 {
            v += row.weight[slot] * values[idx(row.knot_idx[slot], leg, axis)];
        }
        v
    }
}
