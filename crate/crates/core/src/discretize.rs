//! Zero-order-hold discretization.
//!
//! `A_d` and `B_d` come out of a single matrix exponential of the augmented
//! block `[[A, B], [0, 0]]·dt`. The exponential uses scaling and squaring with
//! a truncated Taylor series; for nilpotent inputs the series terminates and no
//! entries appear outside the reachable block pattern.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDynamics {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub dt: f64,
}

impl DiscreteDynamics {
    pub fn state_dim(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b_d.ncols()
    }
}

const TAYLOR_MAX_TERMS: usize = 40;
const SCALED_NORM_TARGET: f64 = 0.5;

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension {
            context: "expm",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let n = m.nrows();
    let norm = inf_norm(m);
    let squarings = if norm > SCALED_NORM_TARGET {
        (norm / SCALED_NORM_TARGET).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);

    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=TAYLOR_MAX_TERMS {
        term = &term * &scaled / k as f64;
        sum += &term;
        let t = inf_norm(&term);
        if t == 0.0 || t <= f64::EPSILON * 1e-2 * inf_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Exact discretization for inputs held constant over each step.
pub fn zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> Result<DiscreteDynamics> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() {
        return Err(Error::Dimension {
            context: "zoh",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("continuous dynamics"));
    }
    let n = a.nrows();
    let m = b.ncols();
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    block.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = expm(&block)?;
    Ok(DiscreteDynamics {
        a_d: e.view((0, 0), (n, n)).into_owned(),
        b_d: e.view((0, n), (n, m)).into_owned(),
        dt,
    })
}
