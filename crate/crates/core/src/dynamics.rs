//! Simplified centroidal dynamics of the robot and its extension with the
//! manipulation force as three additional (constant) states.
//!
//! State layout (13): `[p_c (3), Θ (3), ṗ_c (3), ω_b (3), ‖g‖]`.
//! Extended layout (16): the 13 robot states followed by `F_b (3)`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATE_DIM: usize = 13;
pub const EXT_STATE_DIM: usize = 16;
pub const FORCE_DIM: usize = 12;
pub const NUM_LEGS: usize = 4;

/// Offsets into the state vector.
pub mod idx {
    pub const POS: usize = 0;
    pub const ANGLES: usize = 3;
    pub const VEL: usize = 6;
    pub const RATES: usize = 9;
    pub const GRAVITY: usize = 12;
    pub const FB: usize = 13;
}

/// Robot base state `X` (without the manipulation force).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// Center of mass position, world frame (m).
    pub position: Vector3<f64>,
    /// Roll, pitch, yaw (rad).
    pub angles: Vector3<f64>,
    /// Linear velocity of the center of mass (m/s).
    pub velocity: Vector3<f64>,
    /// Body angular velocity (rad/s).
    pub rates: Vector3<f64>,
    /// Gravity magnitude carried as a state so the drift is linear.
    pub g_norm: f64,
}

impl RobotState {
    pub fn standing(height: f64, g_norm: f64) -> Self {
        Self {
            position: Vector3::new(0.0, 0.0, height),
            angles: Vector3::zeros(),
            velocity: Vector3::zeros(),
            rates: Vector3::zeros(),
            g_norm,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.angles.z
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut x = DVector::zeros(STATE_DIM);
        x.fixed_rows_mut::<3>(idx::POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(idx::ANGLES).copy_from(&self.angles);
        x.fixed_rows_mut::<3>(idx::VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(idx::RATES).copy_from(&self.rates);
        x[idx::GRAVITY] = self.g_norm;
        x
    }

    /// Extended state `η = [X; F_b]`.
    pub fn to_extended(&self, fb: &Vector3<f64>) -> DVector<f64> {
        let mut eta = DVector::zeros(EXT_STATE_DIM);
        eta.rows_mut(0, STATE_DIM).copy_from(&self.to_vector());
        eta.fixed_rows_mut::<3>(idx::FB).copy_from(fb);
        eta
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            position: Vector3::new(x[0], x[1], x[2]),
            angles: Vector3::new(x[3], x[4], x[5]),
            velocity: Vector3::new(x[6], x[7], x[8]),
            rates: Vector3::new(x[9], x[10], x[11]),
            g_norm: x[12],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.angles.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.rates.iter().all(|v| v.is_finite())
            && self.g_norm.is_finite()
    }

    /// Largest absolute component, used for divergence detection.
    pub fn max_abs(&self) -> f64 {
        self.to_vector().amax()
    }
}

/// Mass properties and geometry of the robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModel {
    /// Robot mass (kg).
    pub mass: f64,
    /// Moment of inertia in the world frame (kg·m²), constant.
    pub inertia_world: Matrix3<f64>,
    /// Body-frame hip positions relative to the COM, legs ordered FR, FL, RR, RL.
    pub hip_offsets: [Vector3<f64>; NUM_LEGS],
    /// Gravity vector (m/s²).
    pub gravity: Vector3<f64>,
    /// Distance from the COM to the push contact point along the body axis (m).
    pub head_offset: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            mass: 11.7,
            inertia_world: Matrix3::from_diagonal(&Vector3::new(0.02, 0.06, 0.07)),
            hip_offsets: [
                Vector3::new(0.18, -0.13, 0.0),
                Vector3::new(0.18, 0.13, 0.0),
                Vector3::new(-0.18, -0.13, 0.0),
                Vector3::new(-0.18, 0.13, 0.0),
            ],
            gravity: Vector3::new(0.0, 0.0, -9.81),
            head_offset: 0.25,
        }
    }
}

impl RobotModel {
    pub fn g_norm(&self) -> f64 {
        self.gravity.norm()
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.g_norm()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(
                "model.mass",
                format!("must be > 0, got {}", self.mass),
            ));
        }
        let i = &self.inertia_world;
        if (i - i.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("model.inertia_world", "must be symmetric"));
        }
        if i.cholesky().is_none() {
            return Err(Error::invalid(
                "model.inertia_world",
                "must be positive definite",
            ));
        }
        if !(self.g_norm() > 0.0) {
            return Err(Error::invalid("model.gravity", "must be nonzero"));
        }
        Ok(())
    }
}

/// Continuous-time robot dynamics `Ẋ = D X + H F`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousDynamics {
    pub d: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

/// How the manipulation force enters the velocity rows of the extended drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    /// Identity block: `F_b` is added to the acceleration rows as written.
    PaperLiteral,
    /// `−I/m`: the robot feels the reaction of the force it applies, scaled to
    /// an acceleration.
    #[default]
    MassScaledReaction,
}

impl InjectionMode {
    pub fn block_scale(self, mass: f64) -> f64 {
        match self {
            InjectionMode::PaperLiteral => 1.0,
            InjectionMode::MassScaledReaction => -1.0 / mass,
        }
    }
}

/// Extended dynamics `η̇ = D̄ η + H̄ F`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedDynamics {
    pub d_bar: DMatrix<f64>,
    pub h_bar: DMatrix<f64>,
    pub injection_mode: InjectionMode,
}

/// Yaw rotation `R_z(ψ)`.
pub fn rotation_z(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Cross-product matrix: `skew(v) * w == v × w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn build_continuous(
    model: &RobotModel,
    state: &RobotState,
    feet: &[Vector3<f64>; NUM_LEGS],
) -> Result<ContinuousDynamics> {
    if feet.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("foot positions"));
    }
    let inertia_inv = model
        .inertia_world
        .try_inverse()
        .ok_or(Error::SingularInertia)?;

    let mut d = DMatrix::zeros(STATE_DIM, STATE_DIM);
    d.fixed_view_mut::<3, 3>(idx::POS, idx::VEL)
        .copy_from(&Matrix3::identity());
    d.fixed_view_mut::<3, 3>(idx::ANGLES, idx::RATES)
        .copy_from(&rotation_z(state.yaw()));
    let g_dir = model.gravity / model.g_norm();
    d.fixed_view_mut::<3, 1>(idx::VEL, idx::GRAVITY)
        .copy_from(&g_dir);

    let mut h = DMatrix::zeros(STATE_DIM, FORCE_DIM);
    let lin = Matrix3::identity() / model.mass;
    for (leg, foot) in feet.iter().enumerate() {
        let col = 3 * leg;
        h.fixed_view_mut::<3, 3>(idx::VEL, col).copy_from(&lin);
        let r = foot - state.position;
        h.fixed_view_mut::<3, 3>(idx::RATES, col)
            .copy_from(&(inertia_inv * skew(&r)));
    }
    Ok(ContinuousDynamics { d, h })
}

pub fn build_extended(
    cd: &ContinuousDynamics,
    model: &RobotModel,
    mode: InjectionMode,
) -> ExtendedDynamics {
    let mut d_bar = DMatrix::zeros(EXT_STATE_DIM, EXT_STATE_DIM);
    d_bar
        .view_mut((0, 0), (STATE_DIM, STATE_DIM))
        .copy_from(&cd.d);
    d_bar
        .fixed_view_mut::<3, 3>(idx::VEL, idx::FB)
        .copy_from(&(Matrix3::identity() * mode.block_scale(model.mass)));

    let mut h_bar = DMatrix::zeros(EXT_STATE_DIM, FORCE_DIM);
    h_bar
        .view_mut((0, 0), (STATE_DIM, FORCE_DIM))
        .copy_from(&cd.h);
    ExtendedDynamics {
        d_bar,
        h_bar,
        injection_mode: mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn feet_default(model: &RobotModel, height: f64) -> [Vector3<f64>; 4] {
        model
            .hip_offsets
            .map(|h| Vector3::new(h.x, h.y, h.z - height))
    }

    #[test]
    fn rotation_z_exact_values() {
        assert_eq!(rotation_z(0.0), Matrix3::identity());
        let r = rotation_z(PI / 2.0);
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(r, expected, epsilon = 1e-15);
        let r = rotation_z(PI);
        assert_relative_eq!(
            r,
            Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn skew_matches_cross_product() {
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
        let s = skew(&Vector3::x());
        assert_eq!(
            s,
            Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
        );
        let out = skew(&Vector3::new(1.0, 2.0, 3.0)) * Vector3::new(4.0, 5.0, 6.0);
        // (2*6 - 3*5, 3*4 - 1*6, 1*5 - 2*4)
        assert_eq!(out, Vector3::new(-3.0, 6.0, -3.0));
    }

    #[test]
    fn continuous_structure() {
        let model = RobotModel::default();
        let state = RobotState::standing(0.3, 9.81);
        let feet = feet_default(&model, 0.3);
        let cd = build_continuous(&model, &state, &feet).unwrap();
        assert_eq!(cd.d.view((3, 9), (3, 3)), Matrix3::<f64>::identity());
        assert_eq!(cd.d.view((0, 6), (3, 3)), Matrix3::<f64>::identity());
        assert_eq!(cd.d[(6, 12)], 0.0);
        assert_eq!(cd.d[(7, 12)], 0.0);
        assert_eq!(cd.d[(8, 12)], -1.0);
        // velocity/rate/gravity rows carry only the gravity column
        for r in 6..13 {
            for c in 0..13 {
                if c != 12 {
                    assert_eq!(cd.d[(r, c)], 0.0, "D[{r},{c}]");
                }
            }
        }
        for c in 0..12 {
            for r in (0..6).chain(std::iter::once(12)) {
                assert_eq!(cd.h[(r, c)], 0.0);
            }
        }
    }

    #[test]
    fn torque_block_matches_hand_computation() {
        let model = RobotModel::default();
        let state = RobotState::standing(0.3, 9.81);
        let mut feet = feet_default(&model, 0.3);
        feet[1] = Vector3::new(0.18, 0.13, 0.0);
        let cd = build_continuous(&model, &state, &feet).unwrap();
        // r = (0.18, 0.13, -0.30); skew(r) rows, then divide row-wise by the
        // diagonal inertia (0.02, 0.06, 0.07).
        let (rx, ry, rz) = (0.18, 0.13, -0.30);
        let sk = [[0.0, -rz, ry], [rz, 0.0, -rx], [-ry, rx, 0.0]];
        let diag = [0.02, 0.06, 0.07];
        for i in 0..3 {
            for (j, v) in sk[i].iter().enumerate() {
                assert_relative_eq!(cd.h[(9 + i, 3 + j)], v / diag[i], epsilon = 1e-12);
            }
            assert_relative_eq!(cd.h[(6 + i, 3 + i)], 1.0 / 11.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn singular_inertia_is_rejected() {
        let model = RobotModel {
            inertia_world: Matrix3::zeros(),
            ..RobotModel::default()
        };
        let state = RobotState::standing(0.3, 9.81);
        let feet = feet_default(&model, 0.3);
        assert!(matches!(
            build_continuous(&model, &state, &feet),
            Err(Error::SingularInertia)
        ));
    }

    #[test]
    fn extended_injection_modes() {
        let model = RobotModel::default();
        let state = RobotState::standing(0.3, 9.81);
        let feet = feet_default(&model, 0.3);
        let cd = build_continuous(&model, &state, &feet).unwrap();
        let lit = build_extended(&cd, &model, InjectionMode::PaperLiteral);
        let scaled = build_extended(&cd, &model, InjectionMode::MassScaledReaction);
        assert_eq!(lit.d_bar.view((6, 13), (3, 3)), Matrix3::<f64>::identity());
        assert_relative_eq!(
            scaled.d_bar.fixed_view::<3, 3>(6, 13).into_owned(),
            Matrix3::identity() * (-1.0 / 11.7),
            epsilon = 1e-15
        );
        for e in [&lit, &scaled] {
            assert!(e.d_bar.rows(13, 3).iter().all(|&v| v == 0.0));
            assert!(e.h_bar.rows(13, 3).iter().all(|&v| v == 0.0));
            assert_eq!(e.d_bar.view((0, 0), (13, 13)), cd.d);
            assert_eq!(e.h_bar.rows(0, 13), cd.h);
        }
        let mut diff = &lit.d_bar - &scaled.d_bar;
        diff.fixed_view_mut::<3, 3>(6, 13).fill(0.0);
        assert_eq!(diff.amax(), 0.0);
        assert_eq!(lit.h_bar, scaled.h_bar);
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(psi in -10.0f64..10.0) {
            let r = rotation_z(psi);
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn skew_is_cross(v in prop::array::uniform3(-5.0f64..5.0), w in prop::array::uniform3(-5.0f64..5.0)) {
            let v = Vector3::from(v);
            let w = Vector3::from(w);
            let s = skew(&v);
            prop_assert!((s * w - v.cross(&w)).amax() < 1e-12);
            prop_assert_eq!(s.transpose(), -s);
        }

        #[test]
        fn moving_one_foot_changes_only_its_block(
            leg in 0usize..4,
            delta in prop::array::uniform3(-0.2f64..0.2),
            yaw in -3.0f64..3.0,
        ) {
            let model = RobotModel::default();
            let mut state = RobotState::standing(0.3, 9.81);
            state.angles.z = yaw;
            let feet = feet_default(&model, 0.3);
            let mut moved = feet;
            moved[leg] += Vector3::from(delta);
            let a = build_extended(&build_continuous(&model, &state, &feet).unwrap(), &model, InjectionMode::default());
            let b = build_extended(&build_continuous(&model, &state, &moved).unwrap(), &model, InjectionMode::default());
            prop_assert_eq!(&a.d_bar, &b.d_bar);
            for other in (0..4).filter(|&l| l != leg) {
                prop_assert_eq!(a.h_bar.columns(3 * other, 3), b.h_bar.columns(3 * other, 3));
            }
        }
    }
}
