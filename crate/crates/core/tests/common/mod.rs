//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use locomanip_core::qp::{QpProblem, QpSolution};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

/// Random matrix with every eigenvalue in the open left half plane.
pub fn random_stable(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n, 1.0);
    let shift = m.iter().map(|v| v.abs()).sum::<f64>() / n as f64 + rng.random_range(0.1..1.0);
    // Gershgorin: every disc lies left of the origin after the shift.
    let row_bound = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    m - DMatrix::identity(n, n) * (row_bound.max(shift) + 0.1)
}

/// Random strictly convex QP with a known feasible point. Rows are a mix of
/// two-sided, one-sided and equality constraints.
pub fn random_qp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> QpProblem {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(0..=max_rows);
    let l = random_matrix(rng, n, n, 1.0);
    let p = &l * l.transpose() + DMatrix::identity(n, n) * rng.random_range(0.05..1.0);
    let q = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
    let a = random_matrix(rng, m, n, 1.0);
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let ax0 = &a * &x0;
    let mut lo = DVector::zeros(m);
    let mut hi = DVector::zeros(m);
    for i in 0..m {
        let below = rng.random_range(0.0..1.0);
        let above = rng.random_range(0.0..1.0);
        match rng.random_range(0..10) {
            0 => {
                lo[i] = ax0[i];
                hi[i] = ax0[i];
            }
            1..=2 => {
                lo[i] = f64::NEG_INFINITY;
                hi[i] = ax0[i] + above;
            }
            3..=4 => {
                lo[i] = ax0[i] - below;
                hi[i] = f64::INFINITY;
            }
            _ => {
                lo[i] = ax0[i] - below;
                hi[i] = ax0[i] + above;
            }
        }
    }
    QpProblem { p, q, a, lo, hi }
}

/// One active bound: row index and which side (`true` = upper).
type Active = (usize, bool);

fn candidate_sides(prob: &QpProblem) -> Vec<Vec<Active>> {
    (0..prob.num_rows())
        .map(|i| {
            let (lo, hi) = (prob.lo[i], prob.hi[i]);
            if lo == hi {
                vec![(i, true)]
            } else {
                let mut v = Vec::new();
                if lo.is_finite() {
                    v.push((i, false));
                }
                if hi.is_finite() {
                    v.push((i, true));
                }
                v
            }
        })
        .collect()
}

/// Solves the equality-constrained subproblem for one active set; returns the
/// primal point and the multipliers in active-set order.
fn equality_solve(prob: &QpProblem, active: &[Active]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = prob.num_vars();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&prob.p);
    rhs.rows_mut(0, n).copy_from(&(-&prob.q));
    for (j, &(row, upper)) in active.iter().enumerate() {
        let a = prob.a.row(row);
        kkt.view_mut((n + j, 0), (1, n)).copy_from(&a);
        kkt.view_mut((0, n + j), (n, 1)).copy_from(&a.transpose());
        rhs[n + j] = if upper { prob.hi[row] } else { prob.lo[row] };
    }
    // SVD handles dependent equality rows; the residual check below rejects
    // inconsistent ones.
    let sol = match kkt.clone().lu().solve(&rhs) {
        Some(sol) => sol,
        None => kkt.clone().svd(true, true).solve(&rhs, 1e-12).ok()?,
    };
    if !sol.iter().all(|v| v.is_finite()) || (&kkt * &sol - &rhs).amax() > 1e-8 * (1.0 + rhs.amax())
    {
        return None;
    }
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

fn primal_feasible(prob: &QpProblem, x: &DVector<f64>, tol: f64) -> bool {
    let ax = &prob.a * x;
    (0..prob.num_rows()).all(|i| ax[i] >= prob.lo[i] - tol && ax[i] <= prob.hi[i] + tol)
}

/// Active-set enumeration in order of increasing size: every combination of
/// active bounds is solved as an equality-constrained QP, and the first
/// candidate that is primal feasible with correctly signed multipliers is the
/// (unique) optimum.
pub fn active_set_oracle(prob: &QpProblem) -> Option<(DVector<f64>, f64)> {
    let n = prob.num_vars();
    let sides = candidate_sides(prob);
    let mut fixed = Vec::new();
    let mut free = Vec::new();
    for (i, s) in sides.iter().enumerate() {
        if prob.lo[i] == prob.hi[i] {
            fixed.push(s[0]);
        } else if !s.is_empty() {
            free.push(s.clone());
        }
    }
    let fixed_rows = prob.a.select_rows(fixed.iter().map(|(r, _)| r));
    let rank = if fixed.is_empty() {
        0
    } else {
        fixed_rows.rank(1e-10)
    };
    let limit = n.saturating_sub(rank).min(free.len());
    for size in 0..=limit {
        let mut chosen = Vec::with_capacity(size);
        if let Some(found) = search(prob, &free, &fixed, 0, size, &mut chosen) {
            return Some(found);
        }
    }
    None
}

fn search(
    prob: &QpProblem,
    free: &[Vec<Active>],
    fixed: &[Active],
    start: usize,
    remaining: usize,
    chosen: &mut Vec<Active>,
) -> Option<(DVector<f64>, f64)> {
    if remaining == 0 {
        let active: Vec<Active> = fixed.iter().chain(chosen.iter()).copied().collect();
        let (x, lambda) = equality_solve(prob, &active)?;
        if !primal_feasible(prob, &x, 1e-9) {
            return None;
        }
        let signs_ok = active.iter().zip(lambda.iter()).all(|(&(row, upper), &l)| {
            prob.lo[row] == prob.hi[row] || if upper { l >= -1e-9 } else { l <= 1e-9 }
        });
        return signs_ok.then(|| {
            let f = prob.objective(&x);
            (x, f)
        });
    }
    for i in start..free.len() {
        if free.len() - i < remaining {
            break;
        }
        for &side in &free[i] {
            chosen.push(side);
            let found = search(prob, free, fixed, i + 1, remaining - 1, chosen);
            chosen.pop();
            if found.is_some() {
                return found;
            }
        }
    }
    None
}

/// Independent KKT verification. Multipliers follow the solver convention:
/// `y > 0` on an active upper bound, `y < 0` on an active lower bound.
pub fn verify_kkt(prob: &QpProblem, sol: &QpSolution, tol: f64) -> Result<(), String> {
    let x = &sol.x;
    let y = &sol.y;
    let scale = 1.0 + prob.q.amax().max(prob.p.amax());
    let stationarity = (&prob.p * x + &prob.q + prob.a.transpose() * y).amax();
    if stationarity > tol * scale {
        return Err(format!("stationarity residual {stationarity:e}"));
    }
    let ax = &prob.a * x;
    for i in 0..prob.num_rows() {
        let (lo, hi) = (prob.lo[i], prob.hi[i]);
        let row_scale = 1.0 + lo.abs().min(1e6).max(hi.abs().min(1e6));
        if ax[i] < lo - tol * row_scale || ax[i] > hi + tol * row_scale {
            return Err(format!("row {i} infeasible: {} not in [{lo}, {hi}]", ax[i]));
        }
        // complementary slackness, scaled by the multiplier
        let gap = if y[i] > 0.0 {
            y[i] * (hi - ax[i])
        } else if y[i] < 0.0 {
            -y[i] * (ax[i] - lo)
        } else {
            0.0
        };
        if gap.is_nan() || gap.abs() > tol * scale * row_scale {
            return Err(format!("row {i} complementarity {gap:e} (y = {})", y[i]));
        }
    }
    Ok(())
}

/// Forward rollout of `x_{i+1} = A x_i + B u_i`.
pub fn rollout(
    a: &DMatrix<f64>,
    b_steps: &[DMatrix<f64>],
    x0: &DVector<f64>,
    u: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let mut x = x0.clone();
    b_steps
        .iter()
        .zip(u)
        .map(|(b, ui)| {
            x = a * &x + b * ui;
            x.clone()
        })
        .collect()
}

/// Mean of `|v - v_cmd|` over a sliding window of `w` records, one value per
/// record start.
pub fn rolling_mean(values: &[f64], w: usize) -> Vec<f64> {
    if values.len() < w || w == 0 {
        return Vec::new();
    }
    values
        .windows(w)
        .map(|s| s.iter().sum::<f64>() / w as f64)
        .collect()
}
