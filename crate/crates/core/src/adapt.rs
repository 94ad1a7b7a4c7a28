//! Adaptive force controller for pushing an object of unknown mass against
//! unknown resistive forces.
//!
//! Object model: `F_b = m_b ẍ + Y_f θ`. The controller drives the composite
//! error `s = ė + λe` to zero while estimating `m_b` and `θ` online.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveGains {
    pub lambda: f64,
    /// Diagonal of the damping matrix `K_D` (N·s/m).
    pub k_d: [f64; 3],
    pub gamma_m: f64,
    /// Diagonal of `Γ_f`, reused cyclically when the regressor has more
    /// than three columns.
    pub gamma_f: [f64; 3],
}

impl Default for AdaptiveGains {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            k_d: [200.0; 3],
            gamma_m: 10.0,
            gamma_f: [10.0; 3],
        }
    }
}

impl AdaptiveGains {
    pub fn validate(&self, path: &str) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.lambda) {
            return Err(Error::invalid(
                format!("{path}.lambda"),
                format!("must be > 0, got {}", self.lambda),
            ));
        }
        if let Some(i) = self.k_d.iter().position(|v| !positive(*v)) {
            return Err(Error::invalid(format!("{path}.k_d[{i}]"), "must be > 0"));
        }
        if !positive(self.gamma_m) {
            return Err(Error::invalid(
                format!("{path}.gamma_m"),
                format!("must be > 0, got {}", self.gamma_m),
            ));
        }
        if let Some(i) = self.gamma_f.iter().position(|v| !positive(*v)) {
            return Err(Error::invalid(
                format!("{path}.gamma_f[{i}]"),
                "must be > 0",
            ));
        }
        Ok(())
    }

    fn k_d_vec(&self) -> Vector3<f64> {
        Vector3::from(self.k_d)
    }

    fn gamma_f_at(&self, i: usize) -> f64 {
        self.gamma_f[i % 3]
    }
}

/// Structure of the external-force regressor `Y_f`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceModel {
    /// `Y_f = I`: a constant lumped disturbance per axis.
    #[default]
    Constant,
    /// `Y_f = [I | diag(sign ẋ)]`: constant part plus Coulomb friction.
    SignedFriction,
}

impl ForceModel {
    pub fn num_params(self) -> usize {
        match self {
            ForceModel::Constant => 3,
            ForceModel::SignedFriction => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveEstimates {
    pub m_hat: f64,
    pub theta_hat: DVector<f64>,
}

impl AdaptiveEstimates {
    pub fn zeros(model: ForceModel) -> Self {
        Self {
            m_hat: 0.0,
            theta_hat: DVector::zeros(model.num_params()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.m_hat.is_finite() && self.theta_hat.iter().all(|v| v.is_finite())
    }
}

pub fn composite_error(e: &Vector3<f64>, e_dot: &Vector3<f64>, lambda: f64) -> Vector3<f64> {
    e_dot + e * lambda
}

pub fn regressor_m(xdd_d: &Vector3<f64>, e_dot: &Vector3<f64>, lambda: f64) -> Vector3<f64> {
    xdd_d - e_dot * lambda
}

pub fn regressor_f(model: ForceModel, velocity: &Vector3<f64>) -> DMatrix<f64> {
    match model {
        ForceModel::Constant => DMatrix::identity(3, 3),
        ForceModel::SignedFriction => {
            let mut y = DMatrix::zeros(3, 6);
            for i in 0..3 {
                y[(i, i)] = 1.0;
                y[(i, 3 + i)] = sign(velocity[i]);
            }
            y
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `F_b = Y_m m̂ + Y_f θ̂ − K_D s`
pub fn control_law(
    est: &AdaptiveEstimates,
    y_m: &Vector3<f64>,
    y_f: &DMatrix<f64>,
    s: &Vector3<f64>,
    gains: &AdaptiveGains,
) -> Vector3<f64> {
    let ff = y_f * &est.theta_hat;
    y_m * est.m_hat + Vector3::new(ff[0], ff[1], ff[2]) - gains.k_d_vec().component_mul(s)
}

/// Time derivatives `(ṁ̂, θ̂̇)` of the adaptation laws.
pub fn adaptation_rates(
    y_m: &Vector3<f64>,
    y_f: &DMatrix<f64>,
    s: &Vector3<f64>,
    gains: &AdaptiveGains,
) -> (f64, DVector<f64>) {
    let m_dot = -gains.gamma_m * y_m.dot(s);
    let mut theta_dot = y_f.tr_mul(s) * -1.0;
    for (i, v) in theta_dot.iter_mut().enumerate() {
        *v *= gains.gamma_f_at(i);
    }
    (m_dot, theta_dot)
}

/// One explicit-Euler step of the adaptation laws.
pub fn update(
    est: &AdaptiveEstimates,
    y_m: &Vector3<f64>,
    y_f: &DMatrix<f64>,
    s: &Vector3<f64>,
    gains: &AdaptiveGains,
    dt: f64,
) -> AdaptiveEstimates {
    let (m_dot, theta_dot) = adaptation_rates(y_m, y_f, s, gains);
    AdaptiveEstimates {
        m_hat: est.m_hat + m_dot * dt,
        theta_hat: &est.theta_hat + theta_dot * dt,
    }
}

/// `V = ½(m_b sᵀs + m̃²/Γ_m + θ̃ᵀΓ_f⁻¹θ̃)`
pub fn lyapunov_value(
    s: &Vector3<f64>,
    m_tilde: f64,
    theta_tilde: &DVector<f64>,
    m_b_true: f64,
    gains: &AdaptiveGains,
) -> f64 {
    let theta_term: f64 = theta_tilde
        .iter()
        .enumerate()
        .map(|(i, t)| t * t / gains.gamma_f_at(i))
        .sum();
    0.5 * (m_b_true * s.norm_squared() + m_tilde * m_tilde / gains.gamma_m + theta_term)
}

/// Tracking errors of the pushed body relative to its desired motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingErrors {
    pub e: Vector3<f64>,
    pub e_dot: Vector3<f64>,
    pub xdd_d: Vector3<f64>,
    /// Actual velocity, used by velocity-dependent regressors.
    pub velocity: Vector3<f64>,
}

/// Stateful controller owned by one control loop.
#[derive(Clone, Debug)]
pub struct AdaptiveController {
    pub gains: AdaptiveGains,
    pub model: ForceModel,
    pub estimates: AdaptiveEstimates,
    /// Optional bound on `|m̂|`.
    pub mass_clamp: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveOutput {
    pub fb: Vector3<f64>,
    pub s: Vector3<f64>,
}

impl AdaptiveController {
    pub fn new(gains: AdaptiveGains, model: ForceModel, mass_clamp: Option<f64>) -> Self {
        Self {
            gains,
            model,
            estimates: AdaptiveEstimates::zeros(model),
            mass_clamp,
        }
    }

    /// Computes the force with the current estimates, then advances them by `dt`.
    pub fn step(&mut self, err: &TrackingErrors, dt: f64) -> AdaptiveOutput {
        let g = &self.gains;
        let s = composite_error(&err.e, &err.e_dot, g.lambda);
        let y_m = regressor_m(&err.xdd_d, &err.e_dot, g.lambda);
        let y_f = regressor_f(self.model, &err.velocity);
        let fb = control_law(&self.estimates, &y_m, &y_f, &s, g);
        let mut next = update(&self.estimates, &y_m, &y_f, &s, g, dt);
        if let Some(limit) = self.mass_clamp {
            next.m_hat = next.m_hat.clamp(-limit, limit);
        }
        self.estimates = next;
        AdaptiveOutput { fb, s }
    }
}

/// Object driven directly by the adaptive force, with constant true
/// parameters. Used to check the closed-loop stability properties without the
/// robot in the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsolatedLoop {
    pub m_b: f64,
    /// True external force `f_k = θ` (identity regressor).
    pub theta: Vector3<f64>,
    /// Constant desired velocity; the desired path starts at the origin.
    pub v_d: Vector3<f64>,
    pub gains: AdaptiveGains,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsolatedSample {
    pub t: f64,
    pub s: Vector3<f64>,
    pub m_hat: f64,
    pub theta_hat: Vector3<f64>,
    pub lyapunov: f64,
}

/// Object position, velocity, m̂ and θ̂.
type IsoState = (Vector3<f64>, Vector3<f64>, f64, Vector3<f64>);

impl IsolatedLoop {
    fn errors(&self, t: f64, x: &Vector3<f64>, v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        (x - self.v_d * t, v - self.v_d)
    }

    fn derivative(&self, t: f64, st: &IsoState) -> IsoState {
        let (x, v, m_hat, theta_hat) = st;
        let (e, e_dot) = self.errors(t, x, v);
        let lambda = self.gains.lambda;
        let s = composite_error(&e, &e_dot, lambda);
        let y_m = regressor_m(&Vector3::zeros(), &e_dot, lambda);
        let fb = y_m * *m_hat + theta_hat - Vector3::from(self.gains.k_d).component_mul(&s);
        let acc = (fb - self.theta) / self.m_b;
        let m_dot = -self.gains.gamma_m * y_m.dot(&s);
        let theta_dot = -Vector3::from(self.gains.gamma_f).component_mul(&s);
        (*v, acc, m_dot, theta_dot)
    }

    fn sample(&self, t: f64, st: &IsoState) -> IsolatedSample {
        let (x, v, m_hat, theta_hat) = st;
        let (e, e_dot) = self.errors(t, x, v);
        let s = composite_error(&e, &e_dot, self.gains.lambda);
        let theta_tilde = DVector::from_column_slice((theta_hat - self.theta).as_slice());
        IsolatedSample {
            t,
            s,
            m_hat: *m_hat,
            theta_hat: *theta_hat,
            lyapunov: lyapunov_value(&s, m_hat - self.m_b, &theta_tilde, self.m_b, &self.gains),
        }
    }

    /// RK4 integration from rest at the origin with zero estimates; returns
    /// one sample per step including `t = 0`.
    pub fn simulate(&self, duration: f64, dt: f64) -> Vec<IsolatedSample> {
        let steps = (duration / dt).round() as usize;
        let mut st: IsoState = (Vector3::zeros(), Vector3::zeros(), 0.0, Vector3::zeros());
        let mut out = Vec::with_capacity(steps + 1);
        out.push(self.sample(0.0, &st));
        let axpy = |a: &IsoState, h: f64, d: &IsoState| -> IsoState {
            (a.0 + d.0 * h, a.1 + d.1 * h, a.2 + d.2 * h, a.3 + d.3 * h)
        };
        for i in 0..steps {
            let t = i as f64 * dt;
            let k1 = self.derivative(t, &st);
            let k2 = self.derivative(t + dt / 2.0, &axpy(&st, dt / 2.0, &k1));
            let k3 = self.derivative(t + dt / 2.0, &axpy(&st, dt / 2.0, &k2));
            let k4 = self.derivative(t + dt, &axpy(&st, dt, &k3));
            st = (
                st.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0),
                st.1 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0),
                st.2 + (k1.2 + k2.2 * 2.0 + k3.2 * 2.0 + k4.2) * (dt / 6.0),
                st.3 + (k1.3 + k2.3 * 2.0 + k3.3 * 2.0 + k4.3) * (dt / 6.0),
            );
            out.push(self.sample((i + 1) as f64 * dt, &st));
        }
        out
    }
}
