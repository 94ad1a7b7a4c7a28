//! Condensed linear MPC over the extended dynamics.
//!
//! The decision vector stacks, for every horizon step, the forces of the legs
//! that are in stance at that step. Swing-leg forces are eliminated rather
//! than bounded to zero.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::constraints::{stack, ContactSurface, StackedConstraints};
use crate::discretize::{zoh, DiscreteDynamics};
use crate::dynamics::{
    build_continuous, build_extended, InjectionMode, RobotModel, RobotState, EXT_STATE_DIM,
    FORCE_DIM, NUM_LEGS, STATE_DIM,
};
use crate::error::{Error, Result};
use crate::gait::Contacts;
use crate::qp::{QpProblem, QpSettings, QpSolution, QpSolver, QpStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcConfig {
    /// Horizon length in steps.
    pub horizon: usize,
    /// Horizon step (s); also the re-solve period.
    pub dt: f64,
    /// State weights: position, angles, velocity, rates, gravity, F_b.
    pub q_diag: [f64; EXT_STATE_DIM],
    /// Force weights per axis (x, y, z), shared by all legs.
    pub r_diag: [f64; 3],
    pub qp: QpSettings,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: 0.03,
            q_diag: [
                50.0, 50.0, 80.0, //
                60.0, 60.0, 30.0, //
                20.0, 8.0, 20.0, //
                1.0, 1.0, 1.0, //
                0.0, //
                0.0, 0.0, 0.0,
            ],
            r_diag: [1e-3, 1e-3, 1e-4],
            qp: QpSettings::default(),
        }
    }
}

impl MpcConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid(format!("{path}.horizon"), "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(
                format!("{path}.dt"),
                format!("must be > 0, got {}", self.dt),
            ));
        }
        if let Some(i) = self
            .q_diag
            .iter()
            .position(|q| !(*q >= 0.0 && q.is_finite()))
        {
            return Err(Error::invalid(
                format!("{path}.q_diag[{i}]"),
                "weights must be finite and >= 0",
            ));
        }
        if let Some(i) = self.q_diag[STATE_DIM..].iter().position(|q| *q != 0.0) {
            return Err(Error::invalid(
                format!("{path}.q_diag[{}]", STATE_DIM + i),
                "manipulation-force states are not controllable and must have zero weight",
            ));
        }
        if let Some(i) = self
            .r_diag
            .iter()
            .position(|r| !(*r > 0.0 && r.is_finite()))
        {
            return Err(Error::invalid(
                format!("{path}.r_diag[{i}]"),
                "weights must be finite and > 0",
            ));
        }
        if !(self.qp.tol > 0.0) || self.qp.max_iter == 0 {
            return Err(Error::invalid(
                format!("{path}.qp"),
                "tol must be > 0 and max_iter >= 1",
            ));
        }
        Ok(())
    }

    /// Weight for each column of the 12-force input.
    pub fn r_per_force(&self) -> DVector<f64> {
        DVector::from_fn(FORCE_DIM, |i, _| self.r_diag[i % 3])
    }
}

/// Inputs and friction rows active during one horizon step.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonStep {
    /// Columns of `B_d` that are decision variables at this step.
    pub columns: Vec<usize>,
    pub c: DMatrix<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl HorizonStep {
    pub fn from_stack(sc: &StackedConstraints) -> Self {
        let columns = sc
            .stance_index_map
            .iter()
            .flat_map(|&leg| 3 * leg..3 * leg + 3)
            .collect();
        Self {
            columns,
            c: sc.c.clone(),
            lo: sc.d_lo.clone(),
            hi: sc.d_hi.clone(),
        }
    }

    pub fn unconstrained(columns: Vec<usize>) -> Self {
        let n = columns.len();
        Self {
            columns,
            c: DMatrix::zeros(0, n),
            lo: DVector::zeros(0),
            hi: DVector::zeros(0),
        }
    }
}

/// Condensed program plus the prediction matrices that produced it.
#[derive(Clone, Debug)]
pub struct Condensed {
    pub qp: QpProblem,
    /// Stacked `[A; A²; …; Aᵏ]`.
    pub a_qp: DMatrix<f64>,
    /// Lower block-triangular input-to-state map.
    pub b_qp: DMatrix<f64>,
    /// Offset of each step's inputs in the decision vector.
    pub offsets: Vec<usize>,
}

impl Condensed {
    pub fn predict(&self, x0: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a_qp * x0 + &self.b_qp * u
    }
}

pub fn condense(
    dd: &DiscreteDynamics,
    x0: &DVector<f64>,
    targets: &[DVector<f64>],
    q_diag: &DVector<f64>,
    r_per_input: &DVector<f64>,
    steps: &[HorizonStep],
) -> Result<Condensed> {
    let n = dd.state_dim();
    let k = steps.len();
    let dim = |context, expected, got| Error::Dimension {
        context,
        expected,
        got,
    };
    if k == 0 {
        return Err(dim("mpc horizon", 1, 0));
    }
    if targets.len() != k {
        return Err(dim("mpc targets", k, targets.len()));
    }
    if x0.len() != n {
        return Err(dim("mpc initial state", n, x0.len()));
    }
    if q_diag.len() != n {
        return Err(dim("mpc state weights", n, q_diag.len()));
    }
    if r_per_input.len() != dd.input_dim() {
        return Err(dim("mpc input weights", dd.input_dim(), r_per_input.len()));
    }
    if let Some(t) = targets.iter().find(|t| t.len() != n) {
        return Err(dim("mpc target", n, t.len()));
    }
    for s in steps {
        if s.c.ncols() != s.columns.len() || s.lo.len() != s.c.nrows() || s.hi.len() != s.c.nrows()
        {
            return Err(dim("mpc step constraints", s.columns.len(), s.c.ncols()));
        }
        if let Some(&c) = s.columns.iter().find(|&&c| c >= dd.input_dim()) {
            return Err(dim("mpc step column", dd.input_dim(), c));
        }
    }

    let mut offsets = Vec::with_capacity(k);
    let mut nu = 0;
    for s in steps {
        offsets.push(nu);
        nu += s.columns.len();
    }

    // powers[i] = Aⁱ
    let mut powers = Vec::with_capacity(k + 1);
    powers.push(DMatrix::identity(n, n));
    for i in 1..=k {
        let next = &dd.a_d * &powers[i - 1];
        powers.push(next);
    }
    let b_steps: Vec<DMatrix<f64>> = steps
        .iter()
        .map(|s| dd.b_d.select_columns(s.columns.iter()))
        .collect();

    let mut a_qp = DMatrix::zeros(n * k, n);
    let mut b_qp = DMatrix::zeros(n * k, nu);
    for i in 0..k {
        a_qp.view_mut((n * i, 0), (n, n)).copy_from(&powers[i + 1]);
        for j in 0..=i {
            let block = &powers[i - j] * &b_steps[j];
            b_qp.view_mut((n * i, offsets[j]), (n, steps[j].columns.len()))
                .copy_from(&block);
        }
    }

    let q_bar = DVector::from_fn(n * k, |r, _| q_diag[r % n]);
    let mut reference = DVector::zeros(n * k);
    for (i, t) in targets.iter().enumerate() {
        reference.rows_mut(n * i, n).copy_from(t);
    }
    let err0 = &a_qp * x0 - reference;

    let mut qb = b_qp.clone();
    for (r, w) in q_bar.iter().enumerate() {
        qb.row_mut(r).scale_mut(*w);
    }
    let mut p = b_qp.tr_mul(&qb) * 2.0;
    for (s, off) in steps.iter().zip(&offsets) {
        for (local, &col) in s.columns.iter().enumerate() {
            p[(off + local, off + local)] += 2.0 * r_per_input[col];
        }
    }
    // symmetrize against round-off
    let p = (&p + p.transpose()) * 0.5;
    let q = qb.tr_mul(&err0) * 2.0;

    let m: usize = steps.iter().map(|s| s.c.nrows()).sum();
    let mut a = DMatrix::zeros(m, nu);
    let mut lo = DVector::zeros(m);
    let mut hi = DVector::zeros(m);
    let mut row = 0;
    for (s, off) in steps.iter().zip(&offsets) {
        let r = s.c.nrows();
        a.view_mut((row, *off), (r, s.columns.len()))
            .copy_from(&s.c);
        lo.rows_mut(row, r).copy_from(&s.lo);
        hi.rows_mut(row, r).copy_from(&s.hi);
        row += r;
    }

    Ok(Condensed {
        qp: QpProblem { p, q, a, lo, hi },
        a_qp,
        b_qp,
        offsets,
    })
}

/// Everything the MPC needs about the current control instant.
#[derive(Clone, Copy, Debug)]
pub struct MpcInputs<'a> {
    pub model: &'a RobotModel,
    pub state: &'a RobotState,
    /// Manipulation force from the adaptive controller.
    pub fb: Vector3<f64>,
    pub feet: &'a [Vector3<f64>; NUM_LEGS],
    /// Contact flags per horizon step.
    pub contacts: &'a [Contacts],
    pub surfaces: &'a [ContactSurface; NUM_LEGS],
    /// Extended-state targets for steps `1..=k`.
    pub targets: &'a [DVector<f64>],
}

#[derive(Clone, Debug)]
pub struct MpcSolution {
    /// Ground reaction forces to apply now; swing legs are exactly zero.
    pub forces: [Vector3<f64>; NUM_LEGS],
    /// Predicted states for steps `1..=k`.
    pub predicted: Vec<DVector<f64>>,
    pub qp: QpSolution,
    /// Largest friction-row violation of the applied forces.
    pub cone_violation: f64,
}

impl MpcSolution {
    pub fn is_solved(&self) -> bool {
        self.qp.status == QpStatus::Solved
    }

    pub fn force_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            FORCE_DIM,
            self.forces.iter().flat_map(|f| f.iter().copied()),
        )
    }
}

/// Stateful MPC: keeps a solver workspace and the previous solution for warm
/// starts.
#[derive(Clone, Debug)]
pub struct MpcController {
    pub config: MpcConfig,
    pub injection: InjectionMode,
    solver: QpSolver,
    warm: Option<DVector<f64>>,
}

impl MpcController {
    pub fn new(config: MpcConfig, injection: InjectionMode) -> Self {
        let solver = QpSolver::new(config.qp);
        Self {
            config,
            injection,
            solver,
            warm: None,
        }
    }

    pub fn solve(&mut self, inputs: &MpcInputs) -> Result<MpcSolution> {
        let sol = solve_with(
            inputs,
            &self.config,
            Some(self.injection),
            &mut self.solver,
            self.warm.as_ref(),
        )?;
        self.warm = Some(sol.qp.x.clone());
        Ok(sol)
    }
}

/// Unified MPC over the 16-state extended dynamics.
pub fn solve_mpc(inputs: &MpcInputs, cfg: &MpcConfig, mode: InjectionMode) -> Result<MpcSolution> {
    let mut solver = QpSolver::new(cfg.qp);
    solve_with(inputs, cfg, Some(mode), &mut solver, None)
}

/// Locomotion-only MPC over the 13-state robot dynamics; `inputs.fb` is
/// ignored and targets may be 13- or 16-dimensional (extra entries dropped).
pub fn solve_locomotion_mpc(inputs: &MpcInputs, cfg: &MpcConfig) -> Result<MpcSolution> {
    let mut solver = QpSolver::new(cfg.qp);
    solve_with(inputs, cfg, None, &mut solver, None)
}

fn solve_with(
    inputs: &MpcInputs,
    cfg: &MpcConfig,
    mode: Option<InjectionMode>,
    solver: &mut QpSolver,
    warm: Option<&DVector<f64>>,
) -> Result<MpcSolution> {
    let k = cfg.horizon;
    if inputs.contacts.len() != k {
        return Err(Error::Dimension {
            context: "mpc contact schedule",
            expected: k,
            got: inputs.contacts.len(),
        });
    }
    let cd = build_continuous(inputs.model, inputs.state, inputs.feet)?;
    let (a, b, x0, n) = match mode {
        Some(mode) => {
            let ext = build_extended(&cd, inputs.model, mode);
            (
                ext.d_bar,
                ext.h_bar,
                inputs.state.to_extended(&inputs.fb),
                EXT_STATE_DIM,
            )
        }
        None => (cd.d, cd.h, inputs.state.to_vector(), STATE_DIM),
    };
    let dd = zoh(&a, &b, cfg.dt)?;
    let targets: Vec<DVector<f64>> = inputs
        .targets
        .iter()
        .map(|t| t.rows(0, n.min(t.len())).into_owned())
        .collect();
    let q_diag = DVector::from_column_slice(&cfg.q_diag[..n]);

    let stacks = inputs
        .contacts
        .iter()
        .map(|c| stack(inputs.surfaces, c))
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<HorizonStep> = stacks.iter().map(HorizonStep::from_stack).collect();
    let condensed = condense(&dd, &x0, &targets, &q_diag, &cfg.r_per_force(), &steps)?;

    let warm = warm.filter(|w| w.len() == condensed.qp.num_vars());
    let qp = solver.solve(&condensed.qp, warm)?;

    let mut forces = [Vector3::zeros(); NUM_LEGS];
    for (slot, &leg) in stacks[0].stance_index_map.iter().enumerate() {
        forces[leg] = Vector3::new(qp.x[3 * slot], qp.x[3 * slot + 1], qp.x[3 * slot + 2]);
    }
    let first = qp.x.rows(0, steps[0].columns.len()).into_owned();
    let cone_violation = stacks[0].max_violation(&first);
    let traj = condensed.predict(&x0, &qp.x);
    let predicted = (0..k).map(|i| traj.rows(n * i, n).into_owned()).collect();

    Ok(MpcSolution {
        forces,
        predicted,
        qp,
        cone_violation,
    })
}
