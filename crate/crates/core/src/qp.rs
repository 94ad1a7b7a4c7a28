//! Dense convex QP solver.
//!
//! Solves `min ½ xᵀPx + qᵀx  s.t.  lo ≤ Ax ≤ hi` with a Mehrotra
//! predictor-corrector interior-point method. Two-sided rows are split into
//! one-sided inequalities `Gx + s = h, s ≥ 0`; the normal matrix `P + GᵀDG` is
//! assembled from the sparse rows of `A`, so block-structured constraint
//! matrices stay cheap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl QpProblem {
    pub fn unconstrained(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            p,
            q,
            a: DMatrix::zeros(0, n),
            lo: DVector::zeros(0),
            hi: DVector::zeros(0),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.q.len();
        let dim = |context, expected, got| Error::Dimension {
            context,
            expected,
            got,
        };
        if self.p.nrows() != n || self.p.ncols() != n {
            return Err(dim("qp cost matrix", n, self.p.nrows()));
        }
        if self.a.ncols() != n {
            return Err(dim("qp constraint columns", n, self.a.ncols()));
        }
        let m = self.a.nrows();
        if self.lo.len() != m || self.hi.len() != m {
            return Err(dim("qp bounds", m, self.lo.len().min(self.hi.len())));
        }
        if self
            .p
            .iter()
            .chain(self.q.iter())
            .chain(self.a.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("qp data"));
        }
        if self.lo.iter().chain(self.hi.iter()).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("qp bounds"));
        }
        Ok(())
    }

    /// Full invariant check, including symmetry and positive semi-definiteness.
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        let asym = (&self.p - self.p.transpose()).amax();
        if asym > 1e-9 {
            return Err(Error::invalid(
                "qp.p",
                format!("not symmetric (max |P - Pᵀ| = {asym:e})"),
            ));
        }
        if !self.q.is_empty() {
            let min_eig = self.p.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-9 {
                return Err(Error::invalid(
                    "qp.p",
                    format!("not positive semi-definite (min eigenvalue {min_eig:e})"),
                ));
            }
        }
        if let Some(r) = (0..self.lo.len()).find(|&r| self.lo[r] > self.hi[r]) {
            return Err(Error::invalid(
                format!("qp.lo[{r}]"),
                "lower bound exceeds upper bound",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Solved,
    MaxIters,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers per row of `A`: positive when the upper bound binds,
    /// negative when the lower bound binds.
    pub y: DVector<f64>,
    pub status: QpStatus,
    /// KKT residual with the objective normalized to unit magnitude
    /// (`max(|P|, |q|) = 1`); constraint rows are measured as given.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 4000,
        }
    }
}

/// One-sided inequality `sign · a_row · x ≤ h`.
#[derive(Clone, Copy, Debug)]
struct Side {
    row: usize,
    sign: f64,
}

/// Solver with reusable workspace. One instance per thread.
#[derive(Clone, Debug, Default)]
pub struct QpSolver {
    pub settings: QpSettings,
    sides: Vec<Side>,
    h: Vec<f64>,
    /// Rows with `lo == hi`, kept as equalities rather than two opposing sides.
    eq: Vec<usize>,
    row_nz: Vec<Vec<(usize, f64)>>,
}

const STEP_FRACTION: f64 = 0.99;
const INFEASIBILITY_TOL: f64 = 1e-9;

impl QpSolver {
    pub fn new(settings: QpSettings) -> Self {
        Self {
            settings,
            ..Self::default()
        }
    }

    pub fn solve(
        &mut self,
        prob: &QpProblem,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<QpSolution> {
        prob.check_shapes()?;
        let n = prob.num_vars();
        let m_rows = prob.num_rows();
        if (0..m_rows).any(|r| prob.lo[r] > prob.hi[r]) {
            return Ok(QpSolution {
                x: DVector::zeros(n),
                y: DVector::zeros(m_rows),
                status: QpStatus::Infeasible,
                kkt_residual: f64::INFINITY,
                iterations: 0,
            });
        }

        self.sides.clear();
        self.h.clear();
        self.eq.clear();
        for r in 0..m_rows {
            if prob.lo[r] == prob.hi[r] {
                self.eq.push(r);
                continue;
            }
            if prob.hi[r].is_finite() {
                self.sides.push(Side { row: r, sign: 1.0 });
                self.h.push(prob.hi[r]);
            }
            if prob.lo[r].is_finite() {
                self.sides.push(Side { row: r, sign: -1.0 });
                self.h.push(-prob.lo[r]);
            }
        }
        self.row_nz.clear();
        for r in 0..m_rows {
            let nz = (0..n)
                .filter_map(|c| {
                    let v = prob.a[(r, c)];
                    (v != 0.0).then_some((c, v))
                })
                .collect();
            self.row_nz.push(nz);
        }

        // Iterate on the objective divided by its magnitude so the result and
        // the stopping test do not depend on how the cost is scaled.
        let c = prob.p.amax().max(prob.q.amax());
        let c = if c > 0.0 && c.is_finite() { c } else { 1.0 };
        let normalized = QpProblem {
            p: &prob.p / c,
            q: &prob.q / c,
            a: prob.a.clone(),
            lo: prob.lo.clone(),
            hi: prob.hi.clone(),
        };
        let mut sol = if self.sides.is_empty() && self.eq.is_empty() {
            self.solve_unconstrained(&normalized)
        } else {
            self.interior_point(&normalized, warm_start)?
        };
        sol.y *= c;
        Ok(sol)
    }

    fn solve_unconstrained(&self, prob: &QpProblem) -> QpSolution {
        let n = prob.num_vars();
        let rhs = -&prob.q;
        let x = match prob.p.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => prob
                .p
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(n)),
        };
        let y = DVector::zeros(prob.num_rows());
        let kkt_residual = self.residual(prob, &x, &y);
        let status = if kkt_residual <= self.settings.tol {
            QpStatus::Solved
        } else {
            QpStatus::MaxIters
        };
        QpSolution {
            x,
            y,
            status,
            kkt_residual,
            iterations: 1,
        }
    }

    /// `a_row · x`
    fn row_dot(&self, row: usize, x: &DVector<f64>) -> f64 {
        self.row_nz[row].iter().map(|&(c, v)| v * x[c]).sum()
    }

    fn g_times(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.sides.len(),
            self.sides.iter().map(|s| s.sign * self.row_dot(s.row, x)),
        )
    }

    fn gt_times(&self, v: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (k, s) in self.sides.iter().enumerate() {
            let w = s.sign * v[k];
            if w != 0.0 {
                for &(c, a) in &self.row_nz[s.row] {
                    out[c] += w * a;
                }
            }
        }
        out
    }

    fn multipliers(&self, z: &DVector<f64>, w: &DVector<f64>, m_rows: usize) -> DVector<f64> {
        let mut y = DVector::zeros(m_rows);
        for (k, s) in self.sides.iter().enumerate() {
            y[s.row] += s.sign * z[k];
        }
        for (j, &r) in self.eq.iter().enumerate() {
            y[r] += w[j];
        }
        y
    }

    /// Max of stationarity, bound violation and complementarity, measured on
    /// the original two-sided problem.
    fn residual(&self, prob: &QpProblem, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let n = prob.num_vars();
        let mut grad = &prob.p * x + &prob.q;
        for (r, nz) in self.row_nz.iter().enumerate() {
            if y[r] != 0.0 {
                for &(c, a) in nz {
                    grad[c] += y[r] * a;
                }
            }
        }
        let mut res = if n > 0 { grad.amax() } else { 0.0 };
        for r in 0..prob.num_rows() {
            let ax = self.row_dot(r, x);
            let (lo, hi) = (prob.lo[r], prob.hi[r]);
            res = res.max(ax - hi).max(lo - ax);
            let yr = y[r];
            if yr > 0.0 {
                res = res.max(if hi.is_finite() {
                    yr * (hi - ax).abs()
                } else {
                    yr
                });
            } else if yr < 0.0 {
                res = res.max(if lo.is_finite() {
                    -yr * (ax - lo).abs()
                } else {
                    -yr
                });
            }
        }
        res
    }

    fn normal_matrix(&self, p: &DMatrix<f64>, d: &DVector<f64>, m_rows: usize) -> DMatrix<f64> {
        let mut w = vec![0.0; m_rows];
        for (k, s) in self.sides.iter().enumerate() {
            w[s.row] += d[k];
        }
        let mut m = p.clone();
        for (r, nz) in self.row_nz.iter().enumerate() {
            if w[r] == 0.0 {
                continue;
            }
            for &(i, ai) in nz {
                let wi = w[r] * ai;
                for &(j, aj) in nz {
                    m[(i, j)] += wi * aj;
                }
            }
        }
        m
    }

    fn factor(m: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let n = m.nrows();
        if let Some(ch) = m.clone().cholesky() {
            return Some(ch);
        }
        let scale = m.diagonal().amax().max(1.0);
        let mut reg = 1e-13 * scale;
        for _ in 0..8 {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += reg;
            }
            if let Some(ch) = shifted.cholesky() {
                return Some(ch);
            }
            reg *= 100.0;
        }
        None
    }

    /// `A_eq x` for the equality rows.
    fn eq_times(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.eq.len(), self.eq.iter().map(|&r| self.row_dot(r, x)))
    }

    fn eq_t_times(&self, w: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (j, &r) in self.eq.iter().enumerate() {
            for &(c, a) in &self.row_nz[r] {
                out[c] += w[j] * a;
            }
        }
        out
    }

    /// Newton system `[M Aᵀ_eq; A_eq −δI]`, factored once per iteration;
    /// `δ` stays zero unless the equality rows are dependent.
    fn factor_system(&self, m: DMatrix<f64>) -> Option<Factored> {
        if self.eq.is_empty() {
            return Self::factor(m).map(Factored::Cholesky);
        }
        let n = m.nrows();
        let me = self.eq.len();
        let mut k = DMatrix::zeros(n + me, n + me);
        k.view_mut((0, 0), (n, n)).copy_from(&m);
        for (j, &r) in self.eq.iter().enumerate() {
            for &(c, a) in &self.row_nz[r] {
                k[(n + j, c)] = a;
                k[(c, n + j)] = a;
            }
        }
        for delta in [0.0, 1e-12, 1e-9] {
            let mut shifted = k.clone();
            for j in 0..me {
                shifted[(n + j, n + j)] = -delta;
            }
            let lu = shifted.lu();
            if lu.is_invertible() {
                return Some(Factored::Lu(lu, n));
            }
        }
        None
    }

    fn interior_point(
        &mut self,
        prob: &QpProblem,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<QpSolution> {
        let n = prob.num_vars();
        let m_rows = prob.num_rows();
        let m = self.sides.len();
        let h = DVector::from_column_slice(&self.h);
        let b_eq = DVector::from_iterator(self.eq.len(), self.eq.iter().map(|&r| prob.hi[r]));

        let mut x = match warm_start {
            Some(w) if w.len() == n && w.iter().all(|v| v.is_finite()) => w.clone(),
            _ => DVector::zeros(n),
        };
        let gx = self.g_times(&x);
        let mut s = (&h - &gx).map(|v| v.max(1.0));
        let mut z = DVector::from_element(m, 1.0);
        let mut w = DVector::zeros(self.eq.len());

        let mut best = (f64::INFINITY, x.clone(), DVector::zeros(m_rows));
        for iter in 1..=self.settings.max_iter {
            let r_d = &prob.p * &x + &prob.q + self.gt_times(&z, n) + self.eq_t_times(&w, n);
            let r_p = self.g_times(&x) + &s - &h;
            let r_e = self.eq_times(&x) - &b_eq;
            let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };
            let d = z.component_div(&s);

            let Some(system) = self.factor_system(self.normal_matrix(&prob.p, &d, m_rows)) else {
                break;
            };

            let solve_dir = |r_c: &DVector<f64>| {
                // Δz = D(GΔx + r_p) − S⁻¹ r_c, eliminated into the normal equations.
                let v = d.component_mul(&r_p) - r_c.component_div(&s);
                let rhs = -&r_d - self.gt_times(&v, n);
                let (dx, dw) = system.solve(&rhs, &(-&r_e));
                let ds = -&r_p - self.g_times(&dx);
                let dz = -(r_c + z.component_mul(&ds)).component_div(&s);
                (dx, ds, dz, dw)
            };

            let r_c_aff = s.component_mul(&z);
            let (_, ds_a, dz_a, _) = solve_dir(&r_c_aff);
            let sigma = if m > 0 {
                let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
                let mu_aff = (&s + &ds_a * alpha_aff).dot(&(&z + &dz_a * alpha_aff)) / m as f64;
                (mu_aff / mu).powi(3).clamp(0.0, 1.0)
            } else {
                0.0
            };

            let r_c = r_c_aff + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
            let (dx, ds, dz, dw) = solve_dir(&r_c);
            let alpha = (STEP_FRACTION * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);

            x += &dx * alpha;
            s += &ds * alpha;
            z += &dz * alpha;
            w += &dw * alpha;
            // keep strictly interior against round-off
            s.apply(|v| *v = v.max(1e-300));
            z.apply(|v| *v = v.max(1e-300));

            let y = self.multipliers(&z, &w, m_rows);
            let res = self.residual(prob, &x, &y);
            if res < best.0 {
                best = (res, x.clone(), y.clone());
            }
            if res <= self.settings.tol {
                return Ok(QpSolution {
                    x,
                    y,
                    status: QpStatus::Solved,
                    kkt_residual: res,
                    iterations: iter,
                });
            }
            if self.farkas_certificate(&z, &w, &h, &b_eq, n) {
                return Ok(QpSolution {
                    x,
                    y,
                    status: QpStatus::Infeasible,
                    kkt_residual: res,
                    iterations: iter,
                });
            }
        }
        let (res, x, y) = best;
        Ok(QpSolution {
            x,
            y,
            status: QpStatus::MaxIters,
            kkt_residual: res,
            iterations: self.settings.max_iter,
        })
    }

    /// `z ≥ 0, Gᵀz + A_eqᵀw ≈ 0, hᵀz + bᵀw < 0` proves the constraints have
    /// no solution.
    fn farkas_certificate(
        &self,
        z: &DVector<f64>,
        w: &DVector<f64>,
        h: &DVector<f64>,
        b: &DVector<f64>,
        n: usize,
    ) -> bool {
        let htz = h.dot(z) + b.dot(w);
        if !(htz < 0.0) {
            return false;
        }
        let gtz = self.gt_times(z, n) + self.eq_t_times(w, n);
        let scale = -htz;
        n == 0 || gtz.amax() / scale <= INFEASIBILITY_TOL
    }
}

/// Factored Newton matrix.
enum Factored {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// LU of the augmented system; the primal block has the given size.
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, usize),
}

impl Factored {
    /// Returns `(Δx, Δw)` for primal right-hand side `r1` and equality
    /// right-hand side `r2`.
    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match self {
            Factored::Cholesky(ch) => (ch.solve(r1), DVector::zeros(0)),
            Factored::Lu(lu, n) => {
                let mut rhs = DVector::zeros(n + r2.len());
                rhs.rows_mut(0, *n).copy_from(r1);
                rhs.rows_mut(*n, r2.len()).copy_from(r2);
                let sol = lu
                    .solve(&rhs)
                    .unwrap_or_else(|| DVector::from_element(rhs.len(), f64::NAN));
                (
                    sol.rows(0, *n).into_owned(),
                    sol.rows(*n, r2.len()).into_owned(),
                )
            }
        }
    }
}

/// Largest step in [0, ∞) keeping `v + t·dv ≥ 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(vi, di)| -vi / di)
        .fold(f64::INFINITY, f64::min)
}

/// Convenience wrapper with default warm start.
pub fn solve(prob: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    QpSolver::new(QpSettings { tol, max_iter }).solve(prob, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_stationary_point() {
        let prob =
            QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -1.0]));
        let sol = solve(&prob, 1e-6, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-12);
    }

    #[test]
    fn fully_infinite_rows_are_dropped() {
        let mut prob =
            QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, 2.0]));
        prob.a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        prob.lo = DVector::from_element(1, f64::NEG_INFINITY);
        prob.hi = DVector::from_element(1, f64::INFINITY);
        let sol = solve(&prob, 1e-6, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_eq!(sol.iterations, 1);
        assert_relative_eq!(sol.x, DVector::from_vec(vec![1.0, -2.0]), epsilon = 1e-12);
    }

    #[test]
    fn one_dimensional_clip() {
        let prob = QpProblem {
            p: DMatrix::from_element(1, 1, 2.0),
            q: DVector::from_element(1, -4.0),
            a: DMatrix::from_element(1, 1, 1.0),
            lo: DVector::from_element(1, 0.0),
            hi: DVector::from_element(1, 1.0),
        };
        let sol = solve(&prob, 1e-9, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
        // multiplier of the active upper bound: 2x - 4 + y = 0
        assert_relative_eq!(sol.y[0], 2.0, epsilon = 1e-5);
    }

    #[test]
    fn inconsistent_rows_are_infeasible() {
        let prob = QpProblem {
            p: DMatrix::identity(1, 1),
            q: DVector::zeros(1),
            a: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            lo: DVector::from_vec(vec![f64::NEG_INFINITY, 1.0]),
            hi: DVector::from_vec(vec![0.0, f64::INFINITY]),
        };
        let sol = solve(&prob, 1e-6, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let prob = QpProblem {
            p: DMatrix::identity(1, 1),
            q: DVector::zeros(1),
            a: DMatrix::identity(1, 1),
            lo: DVector::from_element(1, 2.0),
            hi: DVector::from_element(1, 1.0),
        };
        assert_eq!(
            solve(&prob, 1e-6, 4000).unwrap().status,
            QpStatus::Infeasible
        );
        assert!(prob.validate().is_err());
    }

    #[test]
    fn equality_row() {
        // min x² + y² s.t. x + y = 1
        let prob = QpProblem {
            p: DMatrix::identity(2, 2) * 2.0,
            q: DVector::zeros(2),
            a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            lo: DVector::from_element(1, 1.0),
            hi: DVector::from_element(1, 1.0),
        };
        let sol = solve(&prob, 1e-8, 4000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_relative_eq!(sol.x, DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-7);
    }

    #[test]
    fn max_iters_returns_best_iterate() {
        let prob = QpProblem {
            p: DMatrix::from_element(1, 1, 2.0),
            q: DVector::from_element(1, -4.0),
            a: DMatrix::from_element(1, 1, 1.0),
            lo: DVector::from_element(1, 0.0),
            hi: DVector::from_element(1, 1.0),
        };
        let sol = solve(&prob, 1e-14, 2).unwrap();
        assert_eq!(sol.status, QpStatus::MaxIters);
        assert!(sol.kkt_residual.is_finite());
        assert_eq!(sol.iterations, 2);
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let prob = QpProblem {
            p: DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]),
            q: DVector::from_vec(vec![1.0, 1.0]),
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]),
            lo: DVector::from_vec(vec![1.0, f64::NEG_INFINITY]),
            hi: DVector::from_vec(vec![1.0, 0.2]),
        };
        let mut solver = QpSolver::new(QpSettings::default());
        let cold = solver.solve(&prob, None).unwrap();
        let warm = solver.solve(&prob, Some(&cold.x)).unwrap();
        assert_eq!(cold.status, QpStatus::Solved);
        assert_eq!(warm.status, QpStatus::Solved);
        assert_relative_eq!(cold.x, warm.x, epsilon = 1e-6);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut prob = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2));
        prob.a = DMatrix::zeros(1, 3);
        prob.lo = DVector::zeros(1);
        prob.hi = DVector::zeros(1);
        assert!(solve(&prob, 1e-6, 10).is_err());
    }
}
