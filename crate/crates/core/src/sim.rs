//! Closed-loop run: adaptive controller → unified MPC → plant.

use std::io::Write;

use nalgebra::{DVector, Vector3};
use serde::Serialize;

use crate::adapt::{composite_error, lyapunov_value, AdaptiveController, TrackingErrors};
use crate::config::ScenarioConfig;
use crate::constraints::ContactSurface;
use crate::dynamics::{RobotState, NUM_LEGS, STATE_DIM};
use crate::error::{Error, Result};
use crate::gait::{
    contact_state, estimate_slope, horizon_contacts, reference_trajectory, FootPlanner,
    ReferenceOptions, SlopeEstimate,
};
use crate::mpc::{MpcController, MpcInputs};
use crate::plant::{Plant, Terrain};
use crate::qp::QpStatus;

/// States beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// One control step of the closed loop.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub state: [f64; STATE_DIM],
    pub grf: [f64; 12],
    pub fb: [f64; 3],
    pub m_hat: f64,
    pub theta_hat: [f64; 3],
    pub contacts: [bool; NUM_LEGS],
    /// Object back-face coordinate and velocity along the push axis.
    pub object_position: f64,
    pub object_velocity: f64,
    pub attached: bool,
    pub contact_force: f64,
    /// Robot velocity along the push axis.
    pub axis_velocity: f64,
    pub commanded_velocity: f64,
    /// Lyapunov diagnostic against the plant truth (NaN without an object).
    pub lyapunov: f64,
    pub qp_iterations: usize,
    pub qp_residual: f64,
    pub qp_solved: bool,
    /// Largest friction-row violation of the applied MPC forces.
    pub cone_violation: f64,
}

impl TraceRecord {
    pub fn velocity_error(&self) -> f64 {
        (self.axis_velocity - self.commanded_velocity).abs()
    }
}

pub const STATE_COLUMNS: [&str; STATE_DIM] = [
    "px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz", "g",
];

pub fn csv_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(STATE_COLUMNS.iter().map(|s| s.to_string()));
    for leg in ["fr", "fl", "rr", "rl"] {
        for axis in ["x", "y", "z"] {
            h.push(format!("f_{leg}_{axis}"));
        }
    }
    h.extend(
        [
            "fb_x", "fb_y", "fb_z", "m_hat", "theta_x", "theta_y", "theta_z",
        ]
        .map(String::from),
    );
    h.extend(["c_fr", "c_fl", "c_rr", "c_rl"].map(String::from));
    h.extend(
        [
            "obj_pos",
            "obj_vel",
            "attached",
            "contact_force",
            "v_axis",
            "v_cmd",
            "lyapunov",
            "qp_iters",
            "qp_residual",
            "qp_solved",
            "cone_violation",
        ]
        .map(String::from),
    );
    h
}

/// Shortest decimal that round-trips to the same `f64`.
fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:?}")
    }
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

impl TraceRecord {
    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![num(self.t)];
        row.extend(self.state.iter().map(|v| num(*v)));
        row.extend(self.grf.iter().map(|v| num(*v)));
        row.extend(self.fb.iter().map(|v| num(*v)));
        row.push(num(self.m_hat));
        row.extend(self.theta_hat.iter().map(|v| num(*v)));
        row.extend(self.contacts.iter().map(|c| flag(*c)));
        row.push(num(self.object_position));
        row.push(num(self.object_velocity));
        row.push(flag(self.attached));
        row.push(num(self.contact_force));
        row.push(num(self.axis_velocity));
        row.push(num(self.commanded_velocity));
        row.push(num(self.lyapunov));
        row.push(self.qp_iterations.to_string());
        row.push(num(self.qp_residual));
        row.push(flag(self.qp_solved));
        row.push(num(self.cone_violation));
        row
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(csv_header())?;
        for r in &self.records {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// Records with `t` in `[from, to)`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.t >= from && r.t < to)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub records: usize,
    /// Start of the evaluation window (final half of the run).
    pub window_start: f64,
    pub mean_velocity: f64,
    pub mean_velocity_error: f64,
    pub max_velocity_error: f64,
    pub final_m_hat: f64,
    pub final_theta_x: f64,
    pub min_m_hat: f64,
    pub max_m_hat: f64,
    pub slip_events: usize,
    pub qp_failures: usize,
    pub max_cone_violation: f64,
}

impl RunSummary {
    pub fn from_trace(scenario: &str, duration: f64, trace: &SimTrace, slip_events: usize) -> Self {
        let window_start = duration / 2.0;
        let window: Vec<&TraceRecord> = trace
            .records
            .iter()
            .filter(|r| r.t >= window_start)
            .collect();
        let n = window.len().max(1) as f64;
        let mean_velocity = window.iter().map(|r| r.axis_velocity).sum::<f64>() / n;
        let mean_velocity_error = window.iter().map(|r| r.velocity_error()).sum::<f64>() / n;
        let max_velocity_error = window
            .iter()
            .map(|r| r.velocity_error())
            .fold(0.0, f64::max);
        let last = trace.records.last();
        Self {
            scenario: scenario.to_string(),
            records: trace.records.len(),
            window_start,
            mean_velocity,
            mean_velocity_error,
            max_velocity_error,
            final_m_hat: last.map_or(0.0, |r| r.m_hat),
            final_theta_x: last.map_or(0.0, |r| r.theta_hat[0]),
            min_m_hat: trace
                .records
                .iter()
                .map(|r| r.m_hat)
                .fold(f64::INFINITY, f64::min),
            max_m_hat: trace
                .records
                .iter()
                .map(|r| r.m_hat)
                .fold(f64::NEG_INFINITY, f64::max),
            slip_events,
            qp_failures: trace.records.iter().filter(|r| !r.qp_solved).count(),
            max_cone_violation: trace
                .records
                .iter()
                .map(|r| r.cone_violation)
                .fold(0.0, f64::max),
        }
    }

    /// Single `key=value` line; floats use round-trip formatting.
    pub fn to_line(&self) -> String {
        format!(
            "scenario={} records={} window_start={} mean_velocity={} mean_velocity_error={} max_velocity_error={} final_m_hat={} final_theta_x={} min_m_hat={} max_m_hat={} slip_events={} qp_failures={} max_cone_violation={}",
            self.scenario,
            self.records,
            num(self.window_start),
            num(self.mean_velocity),
            num(self.mean_velocity_error),
            num(self.max_velocity_error),
            num(self.final_m_hat),
            num(self.final_theta_x),
            num(self.min_m_hat),
            num(self.max_m_hat),
            self.slip_events,
            self.qp_failures,
            num(self.max_cone_violation),
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: SimTrace,
    pub summary: RunSummary,
}

/// Failure partway through a run, with the trace recorded so far.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub trace: SimTrace,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            trace: SimTrace::default(),
        }
    }
}

fn initial_state(cfg: &ScenarioConfig) -> RobotState {
    let mut s = RobotState::standing(cfg.reference.height, cfg.model.g_norm());
    s.position.z = cfg.terrain.height(0.0) + cfg.reference.height;
    s.angles.y = -cfg.terrain.slope;
    s
}

fn foot_surfaces(
    terrain: &Terrain,
    feet: &[Vector3<f64>; NUM_LEGS],
    slope: &SlopeEstimate,
    cfg: &ScenarioConfig,
) -> Result<[ContactSurface; NUM_LEGS]> {
    let mut out = [ContactSurface::flat(1.0, cfg.contact.f_min, cfg.contact.f_max); NUM_LEGS];
    for (leg, f) in feet.iter().enumerate() {
        let zone = terrain
            .zone_at(f.x)
            .ok_or(Error::OffTerrain { leg, x: f.x })?;
        out[leg] = ContactSurface::inclined(
            zone.mu_robot,
            slope.incline(),
            cfg.contact.f_min,
            cfg.contact.f_max,
        );
    }
    Ok(out)
}

/// Runs a scenario to completion. Identical configs give identical traces.
pub fn run(cfg: &ScenarioConfig) -> std::result::Result<RunOutput, RunFailure> {
    cfg.validate()?;
    let mut sim = Simulation::new(cfg)?;
    while sim.step_index < sim.steps {
        if let Err(error) = sim.control_step() {
            return Err(RunFailure {
                error,
                trace: sim.trace,
            });
        }
    }
    let summary =
        RunSummary::from_trace(&cfg.name, cfg.duration, &sim.trace, sim.plant.slip_events);
    Ok(RunOutput {
        trace: sim.trace,
        summary,
    })
}

/// Stepwise access to the closed loop.
pub struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    pub plant: Plant,
    planner: FootPlanner,
    adaptive: AdaptiveController,
    mpc: MpcController,
    /// Start of the desired path along the push axis.
    origin: f64,
    last_forces: [Vector3<f64>; NUM_LEGS],
    consecutive_failures: usize,
    step_index: usize,
    steps: usize,
    pub trace: SimTrace,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let robot = initial_state(cfg);
        let plant = Plant::new(
            cfg.model.clone(),
            cfg.terrain.clone(),
            cfg.object.clone(),
            robot,
        )?;
        let terrain = &cfg.terrain;
        let planner = FootPlanner::new(&cfg.model, &robot, &|x, _| terrain.height(x));
        let origin = plant.robot_coordinate();
        Ok(Self {
            cfg,
            plant,
            planner,
            adaptive: AdaptiveController::new(
                cfg.gains,
                cfg.adapt.force_model,
                cfg.adapt.mass_clamp,
            ),
            mpc: MpcController::new(cfg.mpc.clone(), cfg.injection),
            origin,
            last_forces: [Vector3::new(0.0, 0.0, cfg.model.weight() / 4.0); NUM_LEGS],
            consecutive_failures: 0,
            step_index: 0,
            steps: cfg.control_steps(),
            trace: SimTrace::default(),
        })
    }

    /// Velocity and position errors of the pushed body, measured on the robot.
    fn tracking_errors(&self, t: f64) -> TrackingErrors {
        let cfg = self.cfg;
        let dt = cfg.rates.control_dt;
        let desired = self.origin + cfg.commands.integrate(0.0, t).x;
        let e = self.plant.robot_coordinate() - desired;
        let v = self.plant.robot_axis_velocity();
        let e_dot = v - cfg.commanded_speed(t);
        let xdd_d = cfg.commands.acceleration(t, dt, 0.0);
        TrackingErrors {
            e: Vector3::new(e, 0.0, 0.0),
            e_dot: Vector3::new(e_dot, 0.0, 0.0),
            xdd_d: Vector3::new(xdd_d, 0.0, 0.0),
            velocity: Vector3::new(v, 0.0, 0.0),
        }
    }

    fn lyapunov(&self, s: &Vector3<f64>, m_hat: f64, theta_hat: &DVector<f64>) -> f64 {
        let obj = &self.plant.object;
        if !obj.present {
            return f64::NAN;
        }
        let cfg = self.cfg;
        let g = cfg.model.g_norm();
        let alpha = cfg.terrain.slope;
        let mu = cfg
            .terrain
            .zone_at(self.plant.object_center_x())
            .map_or(f64::NAN, |z| z.mu_object);
        let mut theta_true = DVector::zeros(theta_hat.len());
        theta_true[0] = obj.mass * g * (mu * alpha.cos() + alpha.sin());
        lyapunov_value(
            s,
            m_hat - obj.mass,
            &(theta_hat - theta_true),
            obj.mass,
            &cfg.gains,
        )
    }

    pub fn control_step(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let k = self.step_index;
        let dt = cfg.rates.control_dt;
        let t = k as f64 * dt;
        let robot = self.plant.robot;
        let terrain = &cfg.terrain;
        let ground = |x: f64, _y: f64| terrain.height(x);

        // Adaptive manipulation force, expressed along the push axis.
        let errors = self.tracking_errors(t);
        let m_hat = self.adaptive.estimates.m_hat;
        let theta_hat = self.adaptive.estimates.theta_hat.clone();
        // The baseline keeps its estimates at zero and applies no force.
        let (fb_axis, s) = if cfg.adapt.enabled {
            let out = self.adaptive.step(&errors, dt);
            (out.fb.x, out.s)
        } else {
            (
                0.0,
                composite_error(&errors.e, &errors.e_dot, cfg.gains.lambda),
            )
        };
        let fb = self.plant.push_axis() * fb_axis;

        // Footholds, slope estimate and contact schedule.
        let feet = self
            .planner
            .update(&cfg.model, &robot, &cfg.gait, t, &ground);
        let slope = if cfg.reference.follow_slope {
            estimate_slope(self.planner.held())?
        } else {
            SlopeEstimate::flat(0.0)
        };
        let contacts = horizon_contacts(&cfg.gait, t, cfg.mpc.dt, cfg.mpc.horizon);
        let surfaces = foot_surfaces(terrain, &feet, &slope, cfg)?;
        let opts = ReferenceOptions {
            height: cfg.reference.height,
            slope,
            heading: cfg
                .reference
                .hold_heading
                .then(|| cfg.commands.integrate(0.0, t).z),
        };
        let targets = reference_trajectory(
            &cfg.commands,
            &robot,
            t,
            cfg.mpc.dt,
            cfg.mpc.horizon,
            &fb,
            &opts,
        );

        let inputs = MpcInputs {
            model: &cfg.model,
            state: &robot,
            fb,
            feet: &feet,
            contacts: &contacts,
            surfaces: &surfaces,
            targets: &targets,
        };
        let (forces, qp_iterations, qp_residual, qp_solved, cone_violation) =
            match self.mpc.solve(&inputs) {
                Ok(sol) if sol.qp.status == QpStatus::Solved => {
                    self.consecutive_failures = 0;
                    (
                        sol.forces,
                        sol.qp.iterations,
                        sol.qp.kkt_residual,
                        true,
                        sol.cone_violation,
                    )
                }
                Ok(sol) => {
                    self.consecutive_failures += 1;
                    if self.consecutive_failures > cfg.qp_retry_budget {
                        return Err(Error::Solver {
                            t,
                            status: sol.qp.status,
                            residual: sol.qp.kkt_residual,
                            iterations: sol.qp.iterations,
                        });
                    }
                    (
                        self.last_forces,
                        sol.qp.iterations,
                        sol.qp.kkt_residual,
                        false,
                        0.0,
                    )
                }
                Err(e) => return Err(e),
            };
        self.last_forces = forces;

        let mut grf = [0.0; 12];
        for (leg, f) in forces.iter().enumerate() {
            grf[3 * leg..3 * leg + 3].copy_from_slice(f.as_slice());
        }
        let mut state = [0.0; STATE_DIM];
        state.copy_from_slice(robot.to_vector().as_slice());
        let mut theta3 = [0.0; 3];
        for (i, v) in theta_hat.iter().take(3).enumerate() {
            theta3[i] = *v;
        }
        let record = TraceRecord {
            t,
            state,
            grf,
            fb: [fb.x, fb.y, fb.z],
            m_hat,
            theta_hat: theta3,
            contacts: contacts[0],
            object_position: self.plant.object.position,
            object_velocity: self.plant.object.velocity,
            attached: self.plant.coupling.attached,
            contact_force: self.plant.coupling.contact_force,
            axis_velocity: errors.velocity.x,
            commanded_velocity: cfg.commanded_speed(t),
            lyapunov: self.lyapunov(&s, m_hat, &theta_hat),
            qp_iterations,
            qp_residual,
            qp_solved,
            cone_violation,
        };
        self.trace.records.push(record);

        // The contact pattern is sampled at the control instant and held.
        let applied_contacts = contact_state(&cfg.gait, t);
        for _ in 0..cfg.rates.substeps() {
            self.plant
                .step(&forces, &applied_contacts, &feet, cfg.rates.sim_dt)?;
        }
        let r = &self.plant.robot;
        let magnitude = r.max_abs();
        if !r.is_finite() || magnitude > DIVERGENCE_LIMIT || !self.plant.object.velocity.is_finite()
        {
            return Err(Error::Diverged {
                t: t + dt,
                magnitude,
            });
        }
        self.step_index += 1;
        Ok(())
    }
}
