//! Robot-world/hand-eye calibration `A_i X = Z B_i`.
//!
//! The linear solve stacks the rotation constraint
//! `(R_A ⊗ I) vec(R_X) - (I ⊗ R_Bᵀ) vec(R_Z) = 0` (row-major `vec`) for every
//! pair, takes the right singular vector of the smallest singular value,
//! normalises it to unit determinant and projects each block onto SO(3).
//! Translations then follow from `R_A t_X - t_Z = R_Z t_B - t_A`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::check_rotation_variety;
use crate::error::{Error, Result};
use crate::se3::{
    exp_rotation, project_to_rotation, rotation_angle_between, Mat3, Transform, Vec3,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandEyePair {
    /// Tracker-side chain, e.g. the camera in the tracked-tool frame.
    pub a: Transform,
    /// Robot-side chain, e.g. the world in the end-effector frame.
    pub b: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandEyeResult {
    pub x: Transform,
    pub z: Transform,
    /// RMS over pairs of the angle between `R_A R_X` and `R_Z R_B` (rad).
    pub rotation_residual: f64,
    /// RMS over pairs of `|t(A X) - t(Z B)|` (mm).
    pub translation_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandEyeOptions {
    /// Run a Gauss-Newton pass after the linear solution.
    pub refine: bool,
    pub refine_iterations: usize,
}

impl Default for HandEyeOptions {
    fn default() -> Self {
        HandEyeOptions {
            refine: false,
            refine_iterations: 20,
        }
    }
}

/// Linear solution with default options (no refinement).
pub fn hand_eye_calibrate(pairs: &[HandEyePair]) -> Result<HandEyeResult> {
    hand_eye_calibrate_with(pairs, &HandEyeOptions::default())
}

pub fn hand_eye_calibrate_with(
    pairs: &[HandEyePair],
    opts: &HandEyeOptions,
) -> Result<HandEyeResult> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pairs.len(),
        });
    }
    // A_j⁻¹ A_i = X (B_j⁻¹ B_i) X⁻¹, so the robot-side relative motions must
    // turn about at least two distinct axes.
    check_rotation_variety(pairs.iter().map(|p| &p.b.rotation))?;

    let (rx, rz) = solve_rotations(pairs)?;
    let (tx, tz) = solve_translations(pairs, &rz)?;
    let mut x = Transform::new(rx, tx);
    let mut z = Transform::new(rz, tz);
    if opts.refine {
        (x, z) = refine(pairs, x, z, opts.refine_iterations);
    }
    Ok(with_residuals(pairs, x, z))
}

fn solve_rotations(pairs: &[HandEyePair]) -> Result<(crate::se3::Rotation, crate::se3::Rotation)> {
    let n = pairs.len();
    let eye = Mat3::identity();
    let mut m = DMatrix::<f64>::zeros(9 * n, 18);
    for (i, p) in pairs.iter().enumerate() {
        let ra = p.a.rotation.matrix();
        let rb = p.b.rotation.matrix();
        m.view_mut((9 * i, 0), (9, 9)).copy_from(&ra.kronecker(&eye));
        m.view_mut((9 * i, 9), (9, 9))
            .copy_from(&(-eye.kronecker(&rb.transpose())));
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let smallest = order[order.len() - 1];
    let second = sv[order[order.len() - 2]];
    if second <= 1e-10 * sv[order[0]] {
        return Err(Error::DegenerateMotion(
            "rotation constraints admit more than one solution".into(),
        ));
    }
    let row = v_t.row(smallest);
    let mut bx = Mat3::from_iterator(row.iter().take(9).copied()).transpose();
    let mut bz = Mat3::from_iterator(row.iter().skip(9).take(9).copied()).transpose();
    let det = bx.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::DegenerateMatrix(
            "rotation block of the null vector is singular".into(),
        ));
    }
    let scale = det.cbrt();
    bx /= scale;
    bz /= scale;
    Ok((project_to_rotation(&bx)?, project_to_rotation(&bz)?))
}

fn solve_translations(
    pairs: &[HandEyePair],
    rz: &crate::se3::Rotation,
) -> Result<(Vec3, Vec3)> {
    let n = pairs.len();
    let mut m = DMatrix::<f64>::zeros(3 * n, 6);
    let mut rhs = DVector::<f64>::zeros(3 * n);
    for (i, p) in pairs.iter().enumerate() {
        m.fixed_view_mut::<3, 3>(3 * i, 0)
            .copy_from(p.a.rotation.matrix());
        m.fixed_view_mut::<3, 3>(3 * i, 3)
            .copy_from(&(-Mat3::identity()));
        rhs.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(rz * &p.b.translation - p.a.translation));
    }
    let sol = m
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::DegenerateMatrix(e.to_string()))?;
    Ok((
        Vec3::new(sol[0], sol[1], sol[2]),
        Vec3::new(sol[3], sol[4], sol[5]),
    ))
}

fn with_residuals(pairs: &[HandEyePair], x: Transform, z: Transform) -> HandEyeResult {
    let n = pairs.len() as f64;
    let (mut rot, mut trans) = (0.0, 0.0);
    for p in pairs {
        let lhs = p.a * x;
        let rhs = z * p.b;
        rot += rotation_angle_between(&lhs.rotation, &rhs.rotation).powi(2);
        trans += (lhs.translation - rhs.translation).norm_squared();
    }
    HandEyeResult {
        x,
        z,
        rotation_residual: (rot / n).sqrt(),
        translation_residual: (trans / n).sqrt(),
    }
}

/// Stacked residual `[rotvec((Z B)⁻¹ A X); t(A X) - t(Z B)]` per pair.
fn residual_vector(pairs: &[HandEyePair], x: &Transform, z: &Transform) -> DVector<f64> {
    let mut r = DVector::zeros(6 * pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let lhs = p.a * *x;
        let rhs = *z * p.b;
        let w = (rhs.rotation.inverse() * lhs.rotation).log();
        let d = lhs.translation - rhs.translation;
        r.fixed_rows_mut::<3>(6 * i).copy_from(&w);
        r.fixed_rows_mut::<3>(6 * i + 3).copy_from(&d);
    }
    r
}

fn perturb(t: &Transform, d: &SVector<f64, 6>) -> Transform {
    let w = Vec3::new(d[0], d[1], d[2]);
    let angle = w.norm();
    let rot = if angle > 0.0 {
        exp_rotation(&(w / angle), angle).expect("unit axis") * t.rotation
    } else {
        t.rotation
    };
    Transform::new(rot, t.translation + Vec3::new(d[3], d[4], d[5]))
}

/// Gauss-Newton on the 12 parameters of `(X, Z)` with a central-difference
/// Jacobian. Steps that increase the cost are rejected.
fn refine(
    pairs: &[HandEyePair],
    mut x: Transform,
    mut z: Transform,
    iterations: usize,
) -> (Transform, Transform) {
    const H: f64 = 1e-7;
    let mut r = residual_vector(pairs, &x, &z);
    let mut cost = r.norm_squared();
    for _ in 0..iterations {
        let mut jac = DMatrix::<f64>::zeros(r.len(), 12);
        for k in 0..12 {
            let mut d = SVector::<f64, 12>::zeros();
            d[k] = H;
            let (xp, zp, xm, zm) = apply(&x, &z, &d);
            let rp = residual_vector(pairs, &xp, &zp);
            let rm = residual_vector(pairs, &xm, &zm);
            jac.set_column(k, &((rp - rm) / (2.0 * H)));
        }
        let jtj: SMatrix<f64, 12, 12> = (jac.transpose() * &jac).fixed_view::<12, 12>(0, 0).into();
        let jtr: SVector<f64, 12> = (jac.transpose() * &r).fixed_rows::<12>(0).into();
        let Some(step) = jtj.cholesky().map(|c| -c.solve(&jtr)) else {
            break;
        };
        let (xn, zn, _, _) = apply(&x, &z, &step);
        let rn = residual_vector(pairs, &xn, &zn);
        let cn = rn.norm_squared();
        if cn >= cost {
            break;
        }
        x = xn;
        z = zn;
        r = rn;
        cost = cn;
    }
    (x, z)
}

fn apply(
    x: &Transform,
    z: &Transform,
    d: &SVector<f64, 12>,
) -> (Transform, Transform, Transform, Transform) {
    let dx: SVector<f64, 6> = d.fixed_rows::<6>(0).into();
    let dz: SVector<f64, 6> = d.fixed_rows::<6>(6).into();
    (
        perturb(x, &dx),
        perturb(z, &dz),
        perturb(x, &-dx),
        perturb(z, &-dz),
    )
}
