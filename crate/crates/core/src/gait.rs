//! Contact scheduling, velocity-command references, foot placement and the
//! slope pitch estimate.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{idx, rotation_z, RobotModel, RobotState, EXT_STATE_DIM, NUM_LEGS};
use crate::error::{Error, Result};

pub type Contacts = [bool; NUM_LEGS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    Standing,
    Trot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSchedule {
    pub kind: GaitKind,
    /// Gait cycle length (s).
    pub period: f64,
    /// Stance fraction of the cycle.
    pub duty: f64,
    /// Per-leg phase offsets in [0, 1).
    pub phase_offsets: [f64; NUM_LEGS],
}

impl Default for GaitSchedule {
    fn default() -> Self {
        Self::trot()
    }
}

impl GaitSchedule {
    pub fn trot() -> Self {
        Self {
            kind: GaitKind::Trot,
            period: 0.5,
            duty: 0.5,
            phase_offsets: [0.0, 0.5, 0.5, 0.0],
        }
    }

    pub fn standing() -> Self {
        Self {
            kind: GaitKind::Standing,
            ..Self::trot()
        }
    }

    pub fn stance_duration(&self) -> f64 {
        self.period * self.duty
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::invalid(
                format!("{path}.period"),
                format!("must be > 0, got {}", self.period),
            ));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::invalid(
                format!("{path}.duty"),
                format!("must be in (0, 1], got {}", self.duty),
            ));
        }
        if let Some(o) = self.phase_offsets.iter().find(|o| !(0.0..1.0).contains(*o)) {
            return Err(Error::invalid(
                format!("{path}.phase_offsets"),
                format!("offsets must lie in [0, 1), got {o}"),
            ));
        }
        Ok(())
    }
}

/// Leg `i` is in stance iff its phase is strictly below the duty factor.
pub fn contact_state(gait: &GaitSchedule, t: f64) -> Contacts {
    match gait.kind {
        GaitKind::Standing => [true; NUM_LEGS],
        GaitKind::Trot => {
            let base = t / gait.period;
            gait.phase_offsets
                .map(|offset| (base + offset).rem_euclid(1.0) < gait.duty)
        }
    }
}

pub fn horizon_contacts(gait: &GaitSchedule, t0: f64, dt: f64, k: usize) -> Vec<Contacts> {
    (0..k)
        .map(|j| contact_state(gait, t0 + j as f64 * dt))
        .collect()
}

/// One constant-command interval of the operator input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSegment {
    /// Segment start (s).
    pub start: f64,
    /// Commanded planar velocity, world frame (m/s). On a slope the x part is
    /// the speed along the estimated slope.
    pub velocity: [f64; 2],
    /// Commanded yaw rate (rad/s).
    #[serde(default)]
    pub yaw_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandProfile {
    pub segments: Vec<CommandSegment>,
}

impl CommandProfile {
    pub fn constant(vx: f64, vy: f64, yaw_rate: f64) -> Self {
        Self {
            segments: vec![CommandSegment {
                start: 0.0,
                velocity: [vx, vy],
                yaw_rate,
            }],
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::invalid(path, "at least one segment is required"))?;
        if first.start != 0.0 {
            return Err(Error::invalid(
                format!("{path}[0].start"),
                "first segment must start at t = 0",
            ));
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if !(w[1].start > w[0].start) {
                return Err(Error::invalid(
                    format!("{path}[{}].start", i + 1),
                    "segment start times must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> &CommandSegment {
        let pos = self.segments.partition_point(|s| s.start <= t);
        &self.segments[pos.saturating_sub(1)]
    }

    /// Integral of the commanded (vx, vy, yaw rate) over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        for (i, seg) in self.segments.iter().enumerate() {
            let end = self.segments.get(i + 1).map_or(f64::INFINITY, |s| s.start);
            let lo = seg.start.max(t0);
            let hi = end.min(t1);
            if hi > lo {
                let span = hi - lo;
                acc += Vector3::new(seg.velocity[0], seg.velocity[1], seg.yaw_rate) * span;
            }
        }
        acc
    }

    /// Finite difference of the commanded forward speed over one control step.
    pub fn acceleration(&self, t: f64, dt: f64, initial_speed: f64) -> f64 {
        let prev = if t - dt < 0.0 {
            initial_speed
        } else {
            self.at(t - dt).velocity[0]
        };
        (self.at(t).velocity[0] - prev) / dt
    }
}

/// Ground plane inferred from foot placement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    /// Body pitch that makes the trunk parallel to the ground (rad).
    pub pitch: f64,
    /// A point on the ground plane.
    pub ground_point: Vector3<f64>,
}

impl SlopeEstimate {
    pub fn flat(ground_z: f64) -> Self {
        Self {
            pitch: 0.0,
            ground_point: Vector3::new(0.0, 0.0, ground_z),
        }
    }

    /// Inclination of the ground along x (rad, positive uphill).
    pub fn incline(&self) -> f64 {
        -self.pitch
    }

    pub fn ground_height(&self, x: f64) -> f64 {
        self.ground_point.z + self.incline().tan() * (x - self.ground_point.x)
    }

    /// Unit vector along the slope in the x-z plane.
    pub fn along_slope(&self) -> Vector3<f64> {
        let a = self.incline();
        Vector3::new(a.cos(), 0.0, a.sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceOptions {
    /// Body height above the ground (m).
    pub height: f64,
    pub slope: SlopeEstimate,
    /// Heading to integrate the yaw command from; `None` uses the current yaw.
    pub heading: Option<f64>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            height: 0.3,
            slope: SlopeEstimate::flat(0.0),
            heading: None,
        }
    }
}

/// Targets for horizon steps `1..=k` as extended 16-vectors.
///
/// Position and yaw integrate the command from the current pose (yaw from
/// `opts.heading` when set); height is
/// held above the ground; roll, pitch (or the slope pitch), vertical velocity
/// and roll/pitch rates are zero; the manipulation force is held at `fb_des`.
pub fn reference_trajectory(
    cmd: &CommandProfile,
    current: &RobotState,
    t0: f64,
    dt: f64,
    k: usize,
    fb_des: &Vector3<f64>,
    opts: &ReferenceOptions,
) -> Vec<DVector<f64>> {
    let along = opts.slope.along_slope();
    (1..=k)
        .map(|i| {
            let t = t0 + i as f64 * dt;
            let travelled = cmd.integrate(t0, t);
            let seg = cmd.at(t - 0.5 * dt);
            let mut eta = DVector::zeros(EXT_STATE_DIM);
            let x = current.position.x + travelled.x * along.x;
            let y = current.position.y + travelled.y;
            eta[idx::POS] = x;
            eta[idx::POS + 1] = y;
            eta[idx::POS + 2] = opts.slope.ground_height(x) + opts.height;
            eta[idx::ANGLES + 1] = opts.slope.pitch;
            eta[idx::ANGLES + 2] = opts.heading.unwrap_or(current.yaw()) + travelled.z;
            eta[idx::VEL] = seg.velocity[0] * along.x;
            eta[idx::VEL + 1] = seg.velocity[1];
            eta[idx::VEL + 2] = seg.velocity[0] * along.z;
            eta[idx::RATES + 2] = seg.yaw_rate;
            eta[idx::GRAVITY] = current.g_norm;
            eta.fixed_rows_mut::<3>(idx::FB).copy_from(fb_des);
            eta
        })
        .collect()
}

/// World-frame hip position projected onto the ground.
pub fn hip_projection(
    model: &RobotModel,
    state: &RobotState,
    leg: usize,
    ground: &dyn Fn(f64, f64) -> f64,
) -> Vector3<f64> {
    let hip = state.position + rotation_z(state.yaw()) * model.hip_offsets[leg];
    Vector3::new(hip.x, hip.y, ground(hip.x, hip.y))
}

/// Raibert-style touchdown: hip projection plus half a stance of travel.
pub fn touchdown_position(
    model: &RobotModel,
    state: &RobotState,
    leg: usize,
    stance_duration: f64,
    ground: &dyn Fn(f64, f64) -> f64,
) -> Vector3<f64> {
    let hip = hip_projection(model, state, leg, ground);
    let x = hip.x + state.velocity.x * stance_duration / 2.0;
    let y = hip.y + state.velocity.y * stance_duration / 2.0;
    Vector3::new(x, y, ground(x, y))
}

/// Per-leg touchdown memory. Stance feet hold their touchdown position; swing
/// feet report where they are predicted to land.
#[derive(Clone, Debug)]
pub struct FootPlanner {
    positions: [Vector3<f64>; NUM_LEGS],
    in_stance: Contacts,
}

impl FootPlanner {
    /// All feet planted under the hips.
    pub fn new(model: &RobotModel, state: &RobotState, ground: &dyn Fn(f64, f64) -> f64) -> Self {
        Self {
            positions: std::array::from_fn(|leg| hip_projection(model, state, leg, ground)),
            in_stance: [true; NUM_LEGS],
        }
    }

    pub fn update(
        &mut self,
        model: &RobotModel,
        state: &RobotState,
        gait: &GaitSchedule,
        t: f64,
        ground: &dyn Fn(f64, f64) -> f64,
    ) -> [Vector3<f64>; NUM_LEGS] {
        let contacts = contact_state(gait, t);
        let stance = gait.stance_duration();
        let mut out = self.positions;
        for leg in 0..NUM_LEGS {
            match (self.in_stance[leg], contacts[leg]) {
                (true, true) => {}
                (false, true) => {
                    self.positions[leg] = touchdown_position(model, state, leg, stance, ground);
                }
                (_, false) => {}
            }
            out[leg] = if contacts[leg] {
                self.positions[leg]
            } else {
                touchdown_position(model, state, leg, stance, ground)
            };
        }
        self.in_stance = contacts;
        out
    }

    /// Current stance positions (held) for every leg.
    pub fn held(&self) -> &[Vector3<f64>; NUM_LEGS] {
        &self.positions
    }
}

/// Pitch target that aligns the trunk with the line through the front and
/// rear foot midpoints.
pub fn slope_pitch(front_mid: &Vector3<f64>, rear_mid: &Vector3<f64>) -> Result<f64> {
    let d = front_mid - rear_mid;
    if d.x.abs() < 1e-6 {
        return Err(Error::DegenerateFeet);
    }
    Ok(-d.z.atan2(d.x))
}

/// Slope estimate from the four foot positions (legs FR, FL, RR, RL).
pub fn estimate_slope(feet: &[Vector3<f64>; NUM_LEGS]) -> Result<SlopeEstimate> {
    let front = (feet[0] + feet[1]) / 2.0;
    let rear = (feet[2] + feet[3]) / 2.0;
    let pitch = slope_pitch(&front, &rear)?;
    Ok(SlopeEstimate {
        pitch,
        ground_point: (front + rear) / 2.0,
    })
}
