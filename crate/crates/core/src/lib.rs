//! Adaptive loco-manipulation control for a simulated quadruped pushing an
//! object of unknown mass and friction.
//!
//! The pipeline per control tick: [`gait`] builds the contact schedule and
//! reference trajectory, [`dynamics`] and [`discretize`] produce the
//! prediction model, [`mpc`] condenses it into a QP over the ground reaction
//! forces (with the [`constraints`] friction pyramids) and solves it with the
//! interior-point method in [`qp`], while [`adapt`] updates the manipulation
//! force estimate. [`plant`] integrates the coupled robot/object system at
//! the plant rate, and [`sim`] ties everything into scenario runs configured
//! through [`config`]. [`exec`] runs batches of QPs and parameter sweeps,
//! in parallel when the `parallel` feature is enabled.

// Negated float comparisons deliberately reject NaN in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod config;
pub mod constraints;
pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod gait;
pub mod mpc;
pub mod plant;
pub mod qp;
pub mod sim;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use sim::{run, RunOutput, RunSummary, SimTrace, TraceRecord};
