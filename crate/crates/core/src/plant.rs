//! Ground-truth simulation of the robot pushing a rigid object.
//!
//! The robot is a single rigid body driven by the commanded ground reaction
//! forces. The object slides along the push axis (the terrain's downhill-uphill
//! line) under Coulomb friction and gravity. Robot and object interact through a
//! unilateral contact at the robot's head: while they touch and the contact is
//! compressive they move as one body, otherwise they move independently.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constraints::ContactSurface;
use crate::dynamics::{rotation_z, RobotModel, RobotState, NUM_LEGS};
use crate::error::{Error, Result};

/// Velocity scale of the regularized friction sign (m/s).
pub const FRICTION_REG_VELOCITY: f64 = 0.01;
/// Below this speed an object whose driving force is within the static limit
/// sticks (m/s).
pub const STICK_VELOCITY: f64 = 1e-4;

pub fn sgn_reg(v: f64) -> f64 {
    (v / FRICTION_REG_VELOCITY).clamp(-1.0, 1.0)
}

/// A strip of ground starting at `x_start` (world x) and extending to the next
/// zone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub x_start: f64,
    pub mu_robot: f64,
    pub mu_object: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terrain {
    pub zones: Vec<Zone>,
    /// Inclination about the world y axis (rad, positive uphill along +x).
    #[serde(default)]
    pub slope: f64,
}

impl Default for Terrain {
    fn default() -> Self {
        Self {
            zones: vec![Zone {
                x_start: -10.0,
                mu_robot: 0.6,
                mu_object: 0.6,
            }],
            slope: 0.0,
        }
    }
}

impl Terrain {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::invalid(
                format!("{path}.zones"),
                "at least one zone is required",
            ));
        }
        for (i, z) in self.zones.iter().enumerate() {
            if !(z.mu_robot > 0.0 && z.mu_object > 0.0) {
                return Err(Error::invalid(
                    format!("{path}.zones[{i}]"),
                    "friction coefficients must be > 0",
                ));
            }
            if !z.x_start.is_finite() {
                return Err(Error::invalid(
                    format!("{path}.zones[{i}].x_start"),
                    "must be finite",
                ));
            }
        }
        for (i, w) in self.zones.windows(2).enumerate() {
            if !(w[1].x_start > w[0].x_start) {
                return Err(Error::invalid(
                    format!("{path}.zones[{}].x_start", i + 1),
                    "zone boundaries must be strictly increasing",
                ));
            }
        }
        if !(self.slope.abs() < std::f64::consts::FRAC_PI_2 * 0.9) {
            return Err(Error::invalid(
                format!("{path}.slope"),
                "slope must be well below 90 degrees",
            ));
        }
        Ok(())
    }

    pub fn zone_at(&self, x: f64) -> Option<&Zone> {
        let pos = self.zones.partition_point(|z| z.x_start <= x);
        pos.checked_sub(1).map(|i| &self.zones[i])
    }

    pub fn height(&self, x: f64) -> f64 {
        x * self.slope.tan()
    }

    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(-self.slope.sin(), 0.0, self.slope.cos())
    }

    /// Unit vector along the slope, pointing uphill in +x.
    pub fn push_axis(&self) -> Vector3<f64> {
        Vector3::new(self.slope.cos(), 0.0, self.slope.sin())
    }

    /// True contact surface under a foot.
    pub fn surface_at(&self, x: f64, leg: usize) -> Result<ContactSurface> {
        let zone = self.zone_at(x).ok_or(Error::OffTerrain { leg, x })?;
        Ok(ContactSurface::inclined(
            zone.mu_robot,
            self.slope,
            0.0,
            f64::INFINITY,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassEvent {
    pub t: f64,
    pub mass: f64,
}

/// Removal (`present = false`) or placement of the object. A placed object
/// appears at rest `gap` metres ahead of the robot's head.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresenceEvent {
    pub t: f64,
    pub present: bool,
    #[serde(default)]
    pub gap: f64,
}

/// Hidden parameters of the pushed object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectTruth {
    /// Whether an object exists at the start.
    #[serde(default = "default_true")]
    pub present: bool,
    pub mass: f64,
    #[serde(default)]
    pub mass_events: Vec<MassEvent>,
    #[serde(default)]
    pub presence_events: Vec<PresenceEvent>,
    /// Distance from the back face to the centre (m); friction is looked up
    /// at the centre.
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    /// Initial gap between head and object (m).
    #[serde(default)]
    pub initial_gap: f64,
}

fn default_true() -> bool {
    true
}

fn default_half_length() -> f64 {
    0.2
}

impl ObjectTruth {
    pub fn with_mass(mass: f64) -> Self {
        Self {
            present: true,
            mass,
            mass_events: Vec::new(),
            presence_events: Vec::new(),
            half_length: default_half_length(),
            initial_gap: 0.0,
        }
    }

    pub fn absent() -> Self {
        Self {
            present: false,
            ..Self::with_mass(1.0)
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(
                format!("{path}.mass"),
                format!("must be > 0, got {}", self.mass),
            ));
        }
        for (i, e) in self.mass_events.iter().enumerate() {
            if !(e.mass > 0.0 && e.mass.is_finite()) {
                return Err(Error::invalid(
                    format!("{path}.mass_events[{i}].mass"),
                    "must be > 0",
                ));
            }
        }
        if self.mass_events.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid(
                format!("{path}.mass_events"),
                "event times must be strictly increasing",
            ));
        }
        if self.presence_events.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid(
                format!("{path}.presence_events"),
                "event times must be strictly increasing",
            ));
        }
        if let Some(i) = self.presence_events.iter().position(|e| !(e.gap >= 0.0)) {
            return Err(Error::invalid(
                format!("{path}.presence_events[{i}].gap"),
                "must be >= 0",
            ));
        }
        if !(self.half_length >= 0.0) || !(self.initial_gap >= 0.0) {
            return Err(Error::invalid(
                path,
                "half_length and initial_gap must be >= 0",
            ));
        }
        Ok(())
    }

    /// Mass in effect at time `t` (events take effect at their time stamp).
    pub fn mass_at(&self, t: f64) -> f64 {
        self.mass_events
            .iter()
            .take_while(|e| e.t <= t)
            .last()
            .map_or(self.mass, |e| e.mass)
    }
}

/// Mass schedule applied to a copy of the truth: the mass jumps to the
/// scheduled value while velocity is untouched.
pub fn apply_mass_event(truth: &ObjectTruth, object: &ObjectState, t: f64) -> ObjectState {
    ObjectState {
        mass: truth.mass_at(t),
        ..*object
    }
}

/// Object motion along the push axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectState {
    pub present: bool,
    /// Back-face coordinate along the push axis (m).
    pub position: f64,
    pub velocity: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CouplingState {
    pub attached: bool,
    /// Compressive force between head and object (N, ≥ 0).
    pub contact_force: f64,
}

/// Friction and slope terms for a body sliding along the axis.
#[derive(Clone, Copy, Debug)]
struct Sliding {
    /// Maximum friction force `μ m g cos α`.
    friction_max: f64,
    /// Gravity along the axis (negative uphill).
    gravity: f64,
}

/// Result of resolving Coulomb friction for a body with total mass `mass`,
/// non-friction force `drive` and velocity `v` along the axis.
#[derive(Clone, Copy, Debug)]
struct FrictionResolution {
    accel: f64,
    friction: f64,
    stuck: bool,
}

fn resolve_friction(mass: f64, drive: f64, v: f64, friction_max: f64) -> FrictionResolution {
    if v.abs() < STICK_VELOCITY {
        if drive.abs() <= friction_max {
            return FrictionResolution {
                accel: 0.0,
                friction: drive,
                stuck: true,
            };
        }
        // breakaway: friction opposes the impending motion
        let friction = friction_max * drive.signum();
        return FrictionResolution {
            accel: (drive - friction) / mass,
            friction,
            stuck: false,
        };
    }
    let friction = friction_max * sgn_reg(v);
    FrictionResolution {
        accel: (drive - friction) / mass,
        friction,
        stuck: false,
    }
}

/// Acceleration of an isolated object pushed with `f_push` along the slope.
pub fn object_accel(m_b: f64, mu_o: f64, alpha: f64, v: f64, f_push: f64, g: f64) -> f64 {
    let friction_max = mu_o * m_b * g * alpha.cos();
    let drive = f_push - m_b * g * alpha.sin();
    resolve_friction(m_b, drive, v, friction_max).accel
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Number of feet whose force was projected onto the true friction cone.
    pub slips: usize,
    pub coupling: CouplingState,
    /// Forces actually applied per leg.
    pub applied: [Vector3<f64>; NUM_LEGS],
}

/// Robot + object world with its event schedules.
#[derive(Clone, Debug)]
pub struct Plant {
    pub model: RobotModel,
    pub terrain: Terrain,
    pub truth: ObjectTruth,
    pub robot: RobotState,
    pub object: ObjectState,
    pub coupling: CouplingState,
    pub t: f64,
    pub slip_events: usize,
    inertia_inv: Matrix3<f64>,
    next_presence: usize,
}

impl Plant {
    /// Robot standing at `robot`; the object (if present) touches the head at
    /// rest, or sits `initial_gap` ahead of it.
    pub fn new(
        model: RobotModel,
        terrain: Terrain,
        truth: ObjectTruth,
        robot: RobotState,
    ) -> Result<Self> {
        let inertia_inv = model
            .inertia_world
            .try_inverse()
            .ok_or(Error::SingularInertia)?;
        let mut plant = Self {
            model,
            terrain,
            object: ObjectState {
                present: truth.present,
                position: 0.0,
                velocity: 0.0,
                mass: truth.mass_at(0.0),
            },
            truth,
            robot,
            coupling: CouplingState::default(),
            t: 0.0,
            slip_events: 0,
            inertia_inv,
            next_presence: 0,
        };
        plant.object.position = plant.head_coordinate() + plant.truth.initial_gap;
        plant.coupling.attached = plant.object.present && plant.truth.initial_gap == 0.0;
        Ok(plant)
    }

    pub fn push_axis(&self) -> Vector3<f64> {
        self.terrain.push_axis()
    }

    /// Robot COM coordinate along the push axis.
    pub fn robot_coordinate(&self) -> f64 {
        self.robot.position.dot(&self.push_axis())
    }

    pub fn robot_axis_velocity(&self) -> f64 {
        self.robot.velocity.dot(&self.push_axis())
    }

    pub fn head_coordinate(&self) -> f64 {
        self.robot_coordinate() + self.model.head_offset
    }

    /// World x of the object's centre.
    pub fn object_center_x(&self) -> f64 {
        (self.object.position + self.truth.half_length) * self.push_axis().x
    }

    fn object_sliding(&self) -> Result<Sliding> {
        let x = self.object_center_x();
        let zone = self.terrain.zone_at(x).ok_or_else(|| {
            Error::invalid(
                "terrain.zones",
                format!("object at x={x:.3} is outside the terrain"),
            )
        })?;
        let g = self.model.g_norm();
        let m = self.object.mass;
        Ok(Sliding {
            friction_max: zone.mu_object * m * g * self.terrain.slope.cos(),
            gravity: m * self.model.gravity.dot(&self.push_axis()),
        })
    }

    fn apply_events(&mut self) {
        self.object.mass = self.truth.mass_at(self.t);
        while let Some(ev) = self.truth.presence_events.get(self.next_presence) {
            if ev.t > self.t {
                break;
            }
            self.next_presence += 1;
            if ev.present {
                self.object.present = true;
                self.object.position = self.head_coordinate() + ev.gap;
                self.object.velocity = 0.0;
                self.coupling.attached = ev.gap == 0.0;
            } else {
                self.object.present = false;
                self.coupling = CouplingState::default();
            }
        }
    }

    /// Projects a commanded foot force onto the true friction cone.
    fn project(&self, f: &Vector3<f64>, surface: &ContactSurface) -> (Vector3<f64>, bool) {
        let (fn_, ft) = surface.decompose(f);
        if fn_ <= 0.0 {
            return (Vector3::zeros(), f.norm() > 0.0);
        }
        let limit = surface.mu * fn_;
        if ft <= limit * (1.0 + 1e-9) {
            return (*f, false);
        }
        let tangential = f - surface.n * fn_;
        (surface.n * fn_ + tangential * (limit / ft), true)
    }

    /// Advances the world by `dt` with the given foot forces. Only legs with
    /// `contacts[leg]` transmit force.
    pub fn step(
        &mut self,
        grf: &[Vector3<f64>; NUM_LEGS],
        contacts: &[bool; NUM_LEGS],
        feet: &[Vector3<f64>; NUM_LEGS],
        dt: f64,
    ) -> Result<StepReport> {
        if !(dt > 0.0 && dt <= 0.005) {
            return Err(Error::invalid(
                "sim_dt",
                format!("must be in (0, 0.005], got {dt}"),
            ));
        }
        self.apply_events();

        let mut report = StepReport::default();
        let mut total = Vector3::zeros();
        let mut torque = Vector3::zeros();
        for leg in 0..NUM_LEGS {
            if !contacts[leg] {
                continue;
            }
            let surface = self.terrain.surface_at(feet[leg].x, leg)?;
            let (f, slipped) = self.project(&grf[leg], &surface);
            if slipped {
                report.slips += 1;
            }
            report.applied[leg] = f;
            total += f;
            torque += (feet[leg] - self.robot.position).cross(&f);
        }
        self.slip_events += report.slips;

        let m = self.model.mass;
        let u = self.push_axis();
        let robot_drive = u.dot(&(total + self.model.gravity * m));

        // Resolve the along-axis interaction.
        let mut contact = 0.0;
        let mut object_accel = 0.0;
        let mut stuck = false;
        if self.object.present {
            let slide = self.object_sliding()?;
            let mb = self.object.mass;
            if self.coupling.attached {
                let pair = resolve_friction(
                    m + mb,
                    robot_drive + slide.gravity,
                    self.object.velocity,
                    slide.friction_max,
                );
                let c = mb * pair.accel + pair.friction - slide.gravity;
                if c >= 0.0 {
                    contact = c;
                    object_accel = pair.accel;
                    stuck = pair.stuck;
                } else {
                    self.coupling.attached = false;
                }
            }
            if !self.coupling.attached {
                let free =
                    resolve_friction(mb, slide.gravity, self.object.velocity, slide.friction_max);
                object_accel = free.accel;
                stuck = free.stuck;
            }
        }
        self.coupling.contact_force = contact;

        // Robot: semi-implicit Euler on the rigid-body equations.
        let accel = (total + self.model.gravity * m - u * contact) / m;
        self.robot.velocity += accel * dt;
        if self.coupling.attached && stuck {
            let along = self.robot.velocity.dot(&u);
            self.robot.velocity -= u * along;
        }
        self.robot.position += self.robot.velocity * dt;
        self.robot.rates += self.inertia_inv * torque * dt;
        self.robot.angles += rotation_z(self.robot.yaw()) * self.robot.rates * dt;

        if self.object.present {
            if stuck {
                self.object.velocity = 0.0;
            } else {
                self.object.velocity += object_accel * dt;
            }
            self.object.position += self.object.velocity * dt;
            self.resolve_contact();
        }

        self.t += dt;
        report.coupling = self.coupling;
        Ok(report)
    }

    /// Keeps the head from passing through the object and merges the bodies
    /// on impact.
    fn resolve_contact(&mut self) {
        let u = self.push_axis();
        let head = self.head_coordinate();
        if self.coupling.attached {
            self.object.position = head;
            self.object.velocity = self.robot_axis_velocity();
            return;
        }
        if self.object.position - head > 0.0 {
            return;
        }
        let vr = self.robot_axis_velocity();
        let vo = self.object.velocity;
        let (m, mb) = (self.model.mass, self.object.mass);
        if vr > vo {
            let v = (m * vr + mb * vo) / (m + mb);
            self.robot.velocity += u * (v - vr);
            self.object.velocity = v;
            self.coupling.attached = true;
        }
        self.object.position = head;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const G: f64 = 9.81;

    #[test]
    fn object_accel_examples() {
        assert_relative_eq!(
            object_accel(5.0, 0.6, 0.0, 0.5, 40.0, G),
            (40.0 - 29.43) / 5.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            object_accel(5.0, 0.6, 0.0, 0.5, 40.0, G),
            2.114,
            epsilon = 1e-12
        );
        // holds on a 20° slope with μ = 0.6
        let a = 20f64.to_radians();
        assert_relative_eq!(5.0 * G * a.sin(), 16.78, epsilon = 0.01);
        assert_eq!(object_accel(5.0, 0.6, a, 0.0, 0.0, G), 0.0);
        // slides back with low friction
        assert!(object_accel(5.0, 0.2, a, 0.0, 0.0, G) < 0.0);
        // balance
        assert_relative_eq!(
            object_accel(5.0, 0.6, 0.0, 1.0, 29.43, G),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sgn_reg_saturates() {
        assert_eq!(sgn_reg(1.0), 1.0);
        assert_eq!(sgn_reg(-1.0), -1.0);
        assert_relative_eq!(sgn_reg(0.005), 0.5);
    }

    fn feet(model: &RobotModel) -> [Vector3<f64>; 4] {
        std::array::from_fn(|l| {
            let h = model.hip_offsets[l];
            Vector3::new(h.x, h.y, 0.0)
        })
    }

    #[test]
    fn balanced_stand_is_equilibrium() {
        let model = RobotModel::default();
        let robot = RobotState::standing(0.3, G);
        let mut plant = Plant::new(
            model.clone(),
            Terrain::default(),
            ObjectTruth::absent(),
            robot,
        )
        .unwrap();
        let f = [Vector3::new(0.0, 0.0, model.weight() / 4.0); 4];
        for _ in 0..100 {
            plant.step(&f, &[true; 4], &feet(&model), 1e-3).unwrap();
        }
        assert_relative_eq!(plant.robot.position, robot.position, epsilon = 1e-12);
        assert!(plant.robot.velocity.norm() < 1e-12);
        assert!(plant.robot.rates.norm() < 1e-12);
    }

    #[test]
    fn coupled_push_arithmetic() {
        let model = RobotModel::default();
        let mut robot = RobotState::standing(0.3, G);
        robot.velocity.x = 0.3;
        let mut truth = ObjectTruth::with_mass(5.0);
        truth.half_length = 0.0;
        let mut plant = Plant::new(model.clone(), Terrain::default(), truth, robot).unwrap();
        plant.object.velocity = 0.3;
        let w = model.weight() / 4.0;
        let f = [Vector3::new(15.0, 0.0, w); 4];
        let report = plant.step(&f, &[true; 4], &feet(&model), 1e-3).unwrap();
        let a = (60.0 - 0.6 * 5.0 * G) / 16.7;
        assert_relative_eq!(a, 1.830, epsilon = 1e-3);
        assert!(report.coupling.attached);
        assert_relative_eq!(
            report.coupling.contact_force,
            5.0 * a + 29.43,
            epsilon = 1e-9
        );
        assert_relative_eq!(plant.robot.velocity.x, 0.3 + a * 1e-3, epsilon = 1e-12);
        assert_relative_eq!(plant.object.velocity, 0.3 + a * 1e-3, epsilon = 1e-12);
        // Newton's third law: the robot equation gives the same contact force
        let robot_side = 60.0 - model.mass * a;
        assert_relative_eq!(report.coupling.contact_force, robot_side, epsilon = 1e-9);
    }

    #[test]
    fn braking_robot_detaches() {
        let model = RobotModel::default();
        let mut robot = RobotState::standing(0.3, G);
        robot.velocity.x = 0.3;
        let mut terrain = Terrain::default();
        terrain.zones[0].mu_robot = 1.0;
        let mut plant =
            Plant::new(model.clone(), terrain, ObjectTruth::with_mass(5.0), robot).unwrap();
        plant.object.velocity = 0.3;
        let w = model.weight() / 4.0;
        let f = [Vector3::new(-20.0, 0.0, w); 4];
        let report = plant.step(&f, &[true; 4], &feet(&model), 1e-3).unwrap();
        assert!(!report.coupling.attached);
        assert_eq!(report.coupling.contact_force, 0.0);
        assert_relative_eq!(plant.object.velocity, 0.3 - 0.6 * G * 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn object_coasts_to_rest() {
        let model = RobotModel::default();
        let robot = RobotState::standing(0.3, G);
        let mut truth = ObjectTruth::with_mass(5.0);
        truth.initial_gap = 1.0;
        let mut plant = Plant::new(model.clone(), Terrain::default(), truth, robot).unwrap();
        plant.object.velocity = 0.5;
        let w = [Vector3::new(0.0, 0.0, model.weight() / 4.0); 4];
        let mut ke = f64::INFINITY;
        for _ in 0..500 {
            plant.step(&w, &[true; 4], &feet(&model), 1e-3).unwrap();
            let k = 0.5 * 5.0 * plant.object.velocity.powi(2);
            assert!(k <= ke + 1e-12);
            ke = k;
        }
        assert_eq!(plant.object.velocity, 0.0);
    }

    #[test]
    fn mass_and_presence_events() {
        let mut truth = ObjectTruth::with_mass(4.0);
        truth.mass_events = vec![
            MassEvent { t: 10.0, mass: 5.0 },
            MassEvent { t: 15.0, mass: 6.0 },
            MassEvent { t: 20.0, mass: 7.0 },
        ];
        assert_eq!(truth.mass_at(9.99), 4.0);
        assert_eq!(truth.mass_at(10.01), 5.0);
        assert_eq!(truth.mass_at(30.0), 7.0);
        assert_eq!(ObjectTruth::with_mass(3.0).mass_at(100.0), 3.0);

        let obj = ObjectState {
            present: true,
            position: 1.0,
            velocity: 0.3,
            mass: 4.0,
        };
        let after = apply_mass_event(&truth, &obj, 10.5);
        assert_eq!((after.mass, after.velocity), (5.0, 0.3));

        let model = RobotModel::default();
        truth.presence_events = vec![
            PresenceEvent {
                t: 0.01,
                present: false,
                gap: 0.0,
            },
            PresenceEvent {
                t: 0.02,
                present: true,
                gap: 0.05,
            },
        ];
        let mut plant = Plant::new(
            model.clone(),
            Terrain::default(),
            truth,
            RobotState::standing(0.3, G),
        )
        .unwrap();
        let w = [Vector3::new(0.0, 0.0, model.weight() / 4.0); 4];
        for _ in 0..15 {
            plant.step(&w, &[true; 4], &feet(&model), 1e-3).unwrap();
        }
        assert!(!plant.object.present);
        for _ in 0..10 {
            plant.step(&w, &[true; 4], &feet(&model), 1e-3).unwrap();
        }
        assert!(plant.object.present && !plant.coupling.attached);
        assert_relative_eq!(
            plant.object.position - plant.head_coordinate(),
            0.05,
            epsilon = 1e-9
        );
    }

    #[test]
    fn excessive_tangential_force_is_projected() {
        let model = RobotModel::default();
        let mut plant = Plant::new(
            model.clone(),
            Terrain::default(),
            ObjectTruth::absent(),
            RobotState::standing(0.3, G),
        )
        .unwrap();
        let mut f = [Vector3::new(0.0, 0.0, model.weight() / 4.0); 4];
        f[0].x = 100.0;
        let report = plant.step(&f, &[true; 4], &feet(&model), 1e-3).unwrap();
        assert_eq!(report.slips, 1);
        assert_relative_eq!(report.applied[0].x, 0.6 * f[0].z, epsilon = 1e-9);
        assert_eq!(plant.slip_events, 1);
    }

    #[test]
    fn off_terrain_foot_is_an_error() {
        let model = RobotModel::default();
        let terrain = Terrain {
            zones: vec![Zone {
                x_start: 0.0,
                mu_robot: 0.6,
                mu_object: 0.6,
            }],
            slope: 0.0,
        };
        let mut plant = Plant::new(
            model.clone(),
            terrain,
            ObjectTruth::absent(),
            RobotState::standing(0.3, G),
        )
        .unwrap();
        let f = [Vector3::zeros(); 4];
        assert!(matches!(
            plant.step(&f, &[true; 4], &feet(&model), 1e-3),
            Err(Error::OffTerrain { .. })
        ));
    }

    #[test]
    fn terrain_validation_and_lookup() {
        let t = Terrain {
            zones: vec![
                Zone {
                    x_start: -10.0,
                    mu_robot: 0.3,
                    mu_object: 0.3,
                },
                Zone {
                    x_start: 2.0,
                    mu_robot: 0.8,
                    mu_object: 0.6,
                },
            ],
            slope: 0.0,
        };
        t.validate("terrain").unwrap();
        assert_eq!(t.zone_at(1.99).unwrap().mu_robot, 0.3);
        assert_eq!(t.zone_at(2.0).unwrap().mu_robot, 0.8);
        assert!(t.zone_at(-11.0).is_none());
        let mut bad = t.clone();
        bad.zones[1].x_start = -10.0;
        assert!(bad.validate("terrain").is_err());
    }
}
