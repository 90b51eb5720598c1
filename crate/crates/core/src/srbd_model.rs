//! Single-rigid-body dynamics of the quadruped trunk.
//!
//! The 12-dimensional state is
//!
//! ```text
//! x = (p_c, v_c, Phi, omega)
//! ```
//!
//! with CoM position `p_c` and velocity `v_c` in the world frame, ZYX Euler
//! angles `Phi = (roll, pitch, yaw)` and the angular rate `omega` expressed in
//! the body frame. The continuous dynamics driven by per-leg ground reaction
//! forces `G_i` gated by contact flags `d_i` are
//!
//! ```text
//! p_c'   = v_c
//! v_c'   = (1/m) Σ d_i G_i + g
//! Phi'   = M(Phi) omega                      (Euler-rate map)
//! omega' = -I⁻¹ (omega × I omega) + Σ d_i I⁻¹ (Rᵀ p_cf,i) × (Rᵀ G_i)
//! ```
//!
//! Forces and lever arms `p_cf,i = p_f,i - p_c` live in the world frame and
//! are rotated into the body frame by `Rᵀ`, keeping the inertia tensor
//! constant. Swing legs (`d_i = 0`) contribute nothing; their dynamics are
//! not modeled.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Pitch margin below ±π/2 at which the Euler-rate map is declared singular.
pub const PITCH_SINGULARITY_MARGIN: f64 = 1e-3;

/// Trunk state: CoM position/velocity in the world frame, ZYX Euler angles,
/// body-frame angular rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    /// CoM position, meters, world frame.
    pub p_c: Vector3<f64>,
    /// CoM velocity, m/s, world frame.
    pub v_c: Vector3<f64>,
    /// Euler angles (roll, pitch, yaw), radians.
    pub phi: Vector3<f64>,
    /// Angular velocity, rad/s, body frame.
    pub omega: Vector3<f64>,
}

impl State {
    pub fn new(p_c: Vector3<f64>, v_c: Vector3<f64>, phi: Vector3<f64>, omega: Vector3<f64>) -> Self {
        Self { p_c, v_c, phi, omega }
    }

    /// All-zero state.
    pub fn zero() -> Self {
        Self {
            p_c: Vector3::zeros(),
            v_c: Vector3::zeros(),
            phi: Vector3::zeros(),
            omega: Vector3::zeros(),
        }
    }

    pub fn roll(&self) -> f64 {
        self.phi.x
    }

    pub fn pitch(&self) -> f64 {
        self.phi.y
    }

    pub fn yaw(&self) -> f64 {
        self.phi.z
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Largest absolute component, used for divergence detection.
    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Flat 12-vector view in (p, v, Phi, omega) order.
    pub fn as_array(&self) -> [f64; 12] {
        [
            self.p_c.x, self.p_c.y, self.p_c.z, self.v_c.x, self.v_c.y, self.v_c.z, self.phi.x,
            self.phi.y, self.phi.z, self.omega.x, self.omega.y, self.omega.z,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        Self {
            p_c: Vector3::new(a[0], a[1], a[2]),
            v_c: Vector3::new(a[3], a[4], a[5]),
            phi: Vector3::new(a[6], a[7], a[8]),
            omega: Vector3::new(a[9], a[10], a[11]),
        }
    }
}

/// Time derivative of [`State`], used by the RK4 stepper.
#[derive(Debug, Clone, Copy)]
pub struct StateDerivative {
    pub dp: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub dphi: Vector3<f64>,
    pub domega: Vector3<f64>,
}

impl StateDerivative {
    fn scaled_add(a: &Self, wa: f64, b: &Self, wb: f64) -> Self {
        Self {
            dp: a.dp * wa + b.dp * wb,
            dv: a.dv * wa + b.dv * wb,
            dphi: a.dphi * wa + b.dphi * wb,
            domega: a.domega * wa + b.domega * wb,
        }
    }
}

/// Physical parameters of the trunk model plus contact force limits.
#[derive(Debug, Clone)]
pub struct RobotModel {
    /// Trunk mass, kg.
    pub mass: f64,
    /// Body-frame inertia tensor at the CoM, kg·m².
    pub inertia: Matrix3<f64>,
    /// Inverse of `inertia`, precomputed at construction.
    pub inertia_inv: Matrix3<f64>,
    /// Gravitational acceleration, m/s², world frame.
    pub gravity: Vector3<f64>,
    /// Friction coefficient of the pyramid cone.
    pub friction_mu: f64,
    /// Normal-force floor for stance legs, N.
    pub fz_min: f64,
    /// Normal-force ceiling, N.
    pub fz_max: f64,
    /// Hip positions relative to the CoM, meters, body frame.
    /// Leg order: FL, FR, RL, RR.
    pub hip_offsets: [Vector3<f64>; 4],
    /// Standing CoM height used for references and foothold targets, m.
    pub nominal_height: f64,
}

impl RobotModel {
    /// Validates the physical parameters and precomputes the inertia inverse.
    pub fn new(
        mass: f64,
        inertia: Matrix3<f64>,
        gravity: Vector3<f64>,
        friction_mu: f64,
        fz_min: f64,
        fz_max: f64,
        hip_offsets: [Vector3<f64>; 4],
        nominal_height: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::config(format!("mass must be positive, got {mass}")));
        }
        let asym = (inertia - inertia.transpose()).norm();
        if asym > 1e-9 * inertia.norm().max(1.0) {
            return Err(Error::config("inertia tensor must be symmetric"));
        }
        let eigs = inertia.symmetric_eigenvalues();
        if eigs.iter().any(|&e| e <= 0.0) {
            return Err(Error::config("inertia tensor must be positive definite"));
        }
        if !(friction_mu > 0.0) {
            return Err(Error::config(format!(
                "friction coefficient must be positive, got {friction_mu}"
            )));
        }
        if !(0.0 <= fz_min && fz_min < fz_max) {
            return Err(Error::config(format!(
                "normal force bounds must satisfy 0 <= fz_min < fz_max, got [{fz_min}, {fz_max}]"
            )));
        }
        if !(nominal_height > 0.0) {
            return Err(Error::config(format!(
                "nominal height must be positive, got {nominal_height}"
            )));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or_else(|| Error::config("inertia tensor is not invertible"))?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
            gravity,
            friction_mu,
            fz_min,
            fz_max,
            hip_offsets,
            nominal_height,
        })
    }

    /// Aliengo-sized default used by the shipped configuration. The inertia
    /// approximates the full robot in a standing pose (legs included), not
    /// the bare trunk.
    pub fn aliengo_like() -> Self {
        Self::new(
            21.0,
            Matrix3::from_diagonal(&Vector3::new(0.35, 1.1, 1.2)),
            Vector3::new(0.0, 0.0, -9.81),
            0.5,
            5.0,
            180.0,
            [
                Vector3::new(0.24, 0.11, 0.0),
                Vector3::new(0.24, -0.11, 0.0),
                Vector3::new(-0.24, 0.11, 0.0),
                Vector3::new(-0.24, -0.11, 0.0),
            ],
            0.35,
        )
        .expect("defaults are valid")
    }

    /// Total weight mg, N.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity.norm()
    }
}

/// Per-leg ground reaction forces and contact flags. Leg order FL, FR, RL, RR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    /// Ground reaction forces, N, world frame.
    pub grf: [Vector3<f64>; 4],
    /// Contact flags: `true` means the leg can exert force.
    pub contact: [bool; 4],
}

impl ControlInput {
    pub fn zero() -> Self {
        Self {
            grf: [Vector3::zeros(); 4],
            contact: [false; 4],
        }
    }

    /// Flattened 12-vector of forces in leg-major order.
    pub fn force_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (leg, f) in self.grf.iter().enumerate() {
            out[3 * leg] = f.x;
            out[3 * leg + 1] = f.y;
            out[3 * leg + 2] = f.z;
        }
        out
    }
}

/// World-frame foot positions and stance indicators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootState {
    /// Foot positions, meters, world frame.
    pub positions: [Vector3<f64>; 4],
    pub in_stance: [bool; 4],
}

impl FootState {
    /// Feet placed at the yaw-rotated hip projections on flat ground, all in
    /// stance. The standard standing pose.
    pub fn standing(model: &RobotModel, p_c: Vector3<f64>, yaw: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let mut positions = [Vector3::zeros(); 4];
        for (i, hip) in model.hip_offsets.iter().enumerate() {
            let x = cy * hip.x - sy * hip.y;
            let y = sy * hip.x + cy * hip.y;
            positions[i] = Vector3::new(p_c.x + x, p_c.y + y, 0.0);
        }
        Self {
            positions,
            in_stance: [true; 4],
        }
    }
}

/// Sines and cosines of the three Euler angles, shared between the rotation
/// matrix and the Euler-rate map within one derivative evaluation.
struct EulerTrig {
    sr: f64,
    cr: f64,
    sp: f64,
    cp: f64,
    sy: f64,
    cy: f64,
}

impl EulerTrig {
    fn new(phi: &Vector3<f64>) -> Self {
        let (sr, cr) = phi.x.sin_cos();
        let (sp, cp) = phi.y.sin_cos();
        let (sy, cy) = phi.z.sin_cos();
        Self { sr, cr, sp, cp, sy, cy }
    }

    /// Body-to-world rotation R = Rz(yaw) Ry(pitch) Rx(roll).
    fn rotation(&self) -> Matrix3<f64> {
        let Self { sr, cr, sp, cp, sy, cy } = *self;
        Matrix3::new(
            cy * cp,
            cy * sp * sr - sy * cr,
            cy * sp * cr + sy * sr,
            sy * cp,
            sy * sp * sr + cy * cr,
            sy * sp * cr - cy * sr,
            -sp,
            cp * sr,
            cp * cr,
        )
    }

    /// Euler-rate map M with Phi' = M omega for body-frame omega.
    fn euler_rate_map(&self) -> Matrix3<f64> {
        let Self { sr, cr, sp, cp, .. } = *self;
        let tp = sp / cp;
        Matrix3::new(
            1.0,
            sr * tp,
            cr * tp,
            0.0,
            cr,
            -sr,
            0.0,
            sr / cp,
            cr / cp,
        )
    }
}

fn check_pitch(phi: &Vector3<f64>) -> Result<()> {
    let pitch = phi.y;
    if pitch.abs() >= std::f64::consts::FRAC_PI_2 - PITCH_SINGULARITY_MARGIN {
        return Err(Error::SingularOrientation { pitch });
    }
    Ok(())
}

/// Body-to-world rotation matrix for ZYX Euler angles.
pub fn rotation_matrix(phi: &Vector3<f64>) -> Matrix3<f64> {
    EulerTrig::new(phi).rotation()
}

/// Map from body angular rate to Euler-angle rates: `Phi' = M(Phi) omega`.
///
/// Fails with [`Error::SingularOrientation`] when the pitch is within
/// [`PITCH_SINGULARITY_MARGIN`] of ±π/2.
pub fn euler_rate_map(phi: &Vector3<f64>) -> Result<Matrix3<f64>> {
    check_pitch(phi)?;
    Ok(EulerTrig::new(phi).euler_rate_map())
}

/// Continuous trunk dynamics.
///
/// Contact forces of legs with `contact = false` are ignored regardless of
/// their value, matching the `d_i` gate in the force and moment sums.
pub fn continuous_dynamics(
    x: &State,
    u: &ControlInput,
    feet: &FootState,
    model: &RobotModel,
) -> Result<StateDerivative> {
    check_pitch(&x.phi)?;
    let trig = EulerTrig::new(&x.phi);
    let rot = trig.rotation();

    // Force sum and the gravity term.
    let mut force = Vector3::zeros();
    // Gyroscopic term plus contact moments, all in the body frame.
    let i_omega = model.inertia * x.omega;
    let mut torque = -x.omega.cross(&i_omega);
    for leg in 0..4 {
        if u.contact[leg] {
            let grf = u.grf[leg];
            force += grf;
            let lever_world = feet.positions[leg] - x.p_c;
            let lever_body = rot.tr_mul(&lever_world);
            let grf_body = rot.tr_mul(&grf);
            torque += lever_body.cross(&grf_body);
        }
    }

    Ok(StateDerivative {
        dp: x.v_c,
        dv: force / model.mass + model.gravity,
        dphi: trig.euler_rate_map() * x.omega,
        domega: model.inertia_inv * torque,
    })
}

/// One explicit RK4 step of [`continuous_dynamics`] with the input and feet
/// held constant over `dt`. Deterministic: identical arguments produce
/// bit-identical results.
pub fn step(
    x: &State,
    u: &ControlInput,
    feet: &FootState,
    model: &RobotModel,
    dt: f64,
) -> Result<State> {
    step_with_accel(x, u, feet, model, dt, &Vector3::zeros(), &Vector3::zeros())
}

/// RK4 step with constant extra linear/angular accelerations added to every
/// stage derivative. The closed-loop plant uses this to inject disturbance
/// wrenches (`dv = F/m`, `domega = I⁻¹ tau`).
pub fn step_with_accel(
    x: &State,
    u: &ControlInput,
    feet: &FootState,
    model: &RobotModel,
    dt: f64,
    dv_extra: &Vector3<f64>,
    domega_extra: &Vector3<f64>,
) -> Result<State> {
    debug_assert!(dt > 0.0, "dt must be positive");
    let eval = |s: &State| -> Result<StateDerivative> {
        let mut d = continuous_dynamics(s, u, feet, model)?;
        d.dv += dv_extra;
        d.domega += domega_extra;
        Ok(d)
    };
    let k1 = eval(x)?;
    let x2 = advance(x, &k1, dt * 0.5);
    let k2 = eval(&x2)?;
    let x3 = advance(x, &k2, dt * 0.5);
    let k3 = eval(&x3)?;
    let x4 = advance(x, &k3, dt);
    let k4 = eval(&x4)?;

    let k12 = StateDerivative::scaled_add(&k1, 1.0, &k2, 2.0);
    let k34 = StateDerivative::scaled_add(&k3, 2.0, &k4, 1.0);
    let ksum = StateDerivative::scaled_add(&k12, 1.0, &k34, 1.0);
    Ok(advance(x, &ksum, dt / 6.0))
}

fn advance(x: &State, d: &StateDerivative, h: f64) -> State {
    State {
        p_c: x.p_c + d.dp * h,
        v_c: x.v_c + d.dv * h,
        phi: x.phi + d.dphi * h,
        omega: x.omega + d.domega * h,
    }
}
