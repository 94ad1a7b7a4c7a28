//! Linearized friction pyramids for stance feet.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::NUM_LEGS;
use crate::error::{Error, Result};

pub const ROWS_PER_LEG: usize = 5;

const FRAME_TOL: f64 = 1e-9;

/// Contact frame and force limits for one foot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSurface {
    pub mu: f64,
    pub n: Vector3<f64>,
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
    pub f_min: f64,
    pub f_max: f64,
}

impl ContactSurface {
    pub fn flat(mu: f64, f_min: f64, f_max: f64) -> Self {
        Self {
            mu,
            n: Vector3::z(),
            t1: Vector3::x(),
            t2: Vector3::y(),
            f_min,
            f_max,
        }
    }

    /// Ground inclined by `incline` about the world y axis (positive uphill
    /// along +x).
    pub fn inclined(mu: f64, incline: f64, f_min: f64, f_max: f64) -> Self {
        let (s, c) = incline.sin_cos();
        Self {
            mu,
            n: Vector3::new(-s, 0.0, c),
            t1: Vector3::new(c, 0.0, s),
            t2: Vector3::y(),
            f_min,
            f_max,
        }
    }

    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        Self {
            n: r * self.n,
            t1: r * self.t1,
            t2: r * self.t2,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: &Vector3<f64>| (v.norm() - 1.0).abs() <= FRAME_TOL;
        if !(unit(&self.n) && unit(&self.t1) && unit(&self.t2)) {
            return Err(Error::invalid(
                "surface",
                "contact frame vectors must be unit length",
            ));
        }
        if self.n.dot(&self.t1).abs() > FRAME_TOL
            || self.n.dot(&self.t2).abs() > FRAME_TOL
            || self.t1.dot(&self.t2).abs() > FRAME_TOL
        {
            return Err(Error::invalid(
                "surface",
                "contact frame must be orthogonal",
            ));
        }
        if !(self.mu > 0.0) {
            return Err(Error::invalid(
                "surface.mu",
                format!("must be > 0, got {}", self.mu),
            ));
        }
        if !(self.f_min >= 0.0 && self.f_min < self.f_max) {
            return Err(Error::invalid(
                "surface.f_min",
                format!(
                    "need 0 <= f_min < f_max, got [{}, {}]",
                    self.f_min, self.f_max
                ),
            ));
        }
        Ok(())
    }

    /// Normal and tangential magnitude of `f` in this frame.
    pub fn decompose(&self, f: &Vector3<f64>) -> (f64, f64) {
        let fn_ = f.dot(&self.n);
        let ft = (f - self.n * fn_).norm();
        (fn_, ft)
    }
}

pub type ConeRows = (
    SMatrix<f64, ROWS_PER_LEG, 3>,
    [f64; ROWS_PER_LEG],
    [f64; ROWS_PER_LEG],
);

pub fn cone_rows(s: &ContactSurface) -> Result<ConeRows> {
    s.validate()?;
    let mn = s.n * s.mu;
    let rows = [mn - s.t1, mn - s.t2, mn + s.t2, mn + s.t1, s.n];
    let mut c = SMatrix::<f64, ROWS_PER_LEG, 3>::zeros();
    for (i, r) in rows.iter().enumerate() {
        c.set_row(i, &r.transpose());
    }
    let inf = f64::INFINITY;
    Ok((
        c,
        [0.0, 0.0, 0.0, 0.0, s.f_min],
        [inf, inf, inf, inf, s.f_max],
    ))
}

/// Friction rows for the stance legs of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedConstraints {
    pub c: DMatrix<f64>,
    pub d_lo: DVector<f64>,
    pub d_hi: DVector<f64>,
    /// Leg id for each stance slot, in increasing leg order.
    pub stance_index_map: Vec<usize>,
}

impl StackedConstraints {
    pub fn num_stance(&self) -> usize {
        self.stance_index_map.len()
    }

    /// Largest violation of any row by the stance-reduced force vector `f`.
    pub fn max_violation(&self, f: &DVector<f64>) -> f64 {
        let cf = &self.c * f;
        (0..cf.len())
            .map(|r| (self.d_lo[r] - cf[r]).max(cf[r] - self.d_hi[r]))
            .fold(0.0, f64::max)
    }
}

pub fn stack(
    surfaces: &[ContactSurface; NUM_LEGS],
    contacts: &[bool; NUM_LEGS],
) -> Result<StackedConstraints> {
    let stance: Vec<usize> = (0..NUM_LEGS).filter(|&l| contacts[l]).collect();
    if stance.is_empty() {
        return Err(Error::NoSupport);
    }
    let k = stance.len();
    let mut c = DMatrix::zeros(ROWS_PER_LEG * k, 3 * k);
    let mut d_lo = DVector::zeros(ROWS_PER_LEG * k);
    let mut d_hi = DVector::zeros(ROWS_PER_LEG * k);
    for (slot, &leg) in stance.iter().enumerate() {
        let (rows, lo, hi) = cone_rows(&surfaces[leg])?;
        let r0 = ROWS_PER_LEG * slot;
        c.fixed_view_mut::<ROWS_PER_LEG, 3>(r0, 3 * slot)
            .copy_from(&rows);
        for i in 0..ROWS_PER_LEG {
            d_lo[r0 + i] = lo[i];
            d_hi[r0 + i] = hi[i];
        }
    }
    Ok(StackedConstraints {
        c,
        d_lo,
        d_hi,
        stance_index_map: stance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn feasible(s: &ContactSurface, f: &Vector3<f64>, tol: f64) -> bool {
        let (c, lo, hi) = cone_rows(s).unwrap();
        let v = c * f;
        (0..5).all(|i| v[i] >= lo[i] - tol && v[i] <= hi[i] + tol)
    }

    #[test]
    fn flat_rows() {
        let s = ContactSurface::flat(0.6, 1.0, 120.0);
        let (c, lo, hi) = cone_rows(&s).unwrap();
        let expected = SMatrix::<f64, 5, 3>::from_row_slice(&[
            -1.0, 0.0, 0.6, //
            0.0, -1.0, 0.6, //
            0.0, 1.0, 0.6, //
            1.0, 0.0, 0.6, //
            0.0, 0.0, 1.0,
        ]);
        assert_eq!(c, expected);
        assert_eq!(lo, [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(&hi[..4], &[f64::INFINITY; 4]);
        assert_eq!(hi[4], 120.0);

        let v = c * Vector3::new(0.0, 0.0, 10.0);
        assert_relative_eq!(
            v,
            nalgebra::Vector5::new(6.0, 6.0, 6.0, 6.0, 10.0),
            epsilon = 1e-12
        );
        assert!(feasible(&s, &Vector3::new(0.0, 0.0, 10.0), 0.0));
        let v = c * Vector3::new(7.0, 0.0, 10.0);
        assert_relative_eq!(v[0], -1.0, epsilon = 1e-12);
        assert!(!feasible(&s, &Vector3::new(7.0, 0.0, 10.0), 0.0));
    }

    #[test]
    fn bad_frames_rejected() {
        let mut s = ContactSurface::flat(0.6, 1.0, 120.0);
        s.t1 = Vector3::new(1.0, 0.0, 0.1);
        assert!(cone_rows(&s).is_err());
        let mut s = ContactSurface::flat(0.6, 1.0, 120.0);
        s.t1 = Vector3::new(0.0, 0.0, 1.0);
        assert!(cone_rows(&s).is_err());
        let s = ContactSurface::flat(0.6, 130.0, 120.0);
        assert!(cone_rows(&s).is_err());
    }

    #[test]
    fn stack_sizes() {
        let s = [ContactSurface::flat(0.6, 1.0, 120.0); 4];
        let all = stack(&s, &[true; 4]).unwrap();
        assert_eq!((all.c.nrows(), all.c.ncols()), (20, 12));
        let two = stack(&s, &[true, false, false, true]).unwrap();
        assert_eq!((two.c.nrows(), two.c.ncols()), (10, 6));
        assert_eq!(two.stance_index_map, vec![0, 3]);
        assert!(two.c.view((0, 3), (5, 3)).iter().all(|v| *v == 0.0));
        assert!(two.c.view((5, 0), (5, 3)).iter().all(|v| *v == 0.0));
        let one = stack(&s, &[false, false, true, false]).unwrap();
        let (rows, _, _) = cone_rows(&s[2]).unwrap();
        assert_eq!(one.c, DMatrix::from_iterator(5, 3, rows.iter().copied()));
        assert!(matches!(stack(&s, &[false; 4]), Err(Error::NoSupport)));
    }

    #[test]
    fn inclined_frame_is_orthonormal() {
        let s = ContactSurface::inclined(0.6, 20f64.to_radians(), 1.0, 120.0);
        s.validate().unwrap();
        assert!(s.n.z > 0.0 && s.n.x < 0.0);
    }

    proptest! {
        #[test]
        fn normal_forces_always_feasible(mu in 0.01f64..2.0, c in 1.0f64..120.0) {
            let s = ContactSurface::flat(mu, 1.0, 120.0);
            prop_assert!(feasible(&s, &(s.n * c), 1e-12));
        }

        #[test]
        fn rotation_invariance(
            mu in 0.1f64..1.5,
            f in prop::array::uniform3(-50.0f64..50.0),
            axis in prop::array::uniform3(-1.0f64..1.0),
            angle in -3.0f64..3.0,
        ) {
            let axis = Vector3::from(axis);
            prop_assume!(axis.norm() > 1e-3);
            let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            let s = ContactSurface::flat(mu, 1.0, 120.0);
            let f = Vector3::from(f);
            let rs = s.rotated(r.matrix());
            let rf = r * f;
            let a = feasible(&s, &f, 1e-9);
            let b = feasible(&rs, &rf, 1e-9);
            // ignore forces sitting on a facet where round-off decides
            let (c, _, _) = cone_rows(&s).unwrap();
            let margin = (c * f).iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
                .min((f.z - 1.0).abs()).min((f.z - 120.0).abs());
            prop_assume!(margin > 1e-6);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn pyramid_between_cones(mu in 0.1f64..1.5, f in prop::array::uniform3(-50.0f64..50.0)) {
            let s = ContactSurface::flat(mu, 0.0, 1e9);
            let f = Vector3::from(f);
            let (fn_, ft) = s.decompose(&f);
            if feasible(&s, &f, 0.0) {
                prop_assert!(ft <= mu * 2f64.sqrt() * fn_ + 1e-9);
            }
            if ft <= mu * fn_ {
                prop_assert!(feasible(&s, &f, 1e-9));
            }
        }
    }
}
