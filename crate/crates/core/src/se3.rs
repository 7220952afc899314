//! Rigid-motion arithmetic: rotations, transforms, screw exponentials and logs.
//!
//! Rotations are stored as 3x3 matrices. Lengths are millimetres and angles
//! radians throughout.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector6};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance for the orthonormality and unit-axis checks.
pub const VALIDITY_TOL: f64 = 1e-9;
/// Below this angle the exponential and log use series forms.
pub const SMALL_ANGLE: f64 = 1e-10;

/// Skew-symmetric matrix of `v`, so that `skew(v) * u == v.cross(u)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]; reads the antisymmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

fn check_unit(w: &Vec3) -> Result<()> {
    let norm = w.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > VALIDITY_TOL {
        return Err(Error::InvalidAxis { norm });
    }
    Ok(())
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Validates orthonormality and a positive unit determinant within
    /// [`VALIDITY_TOL`].
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        Self::from_matrix_tol(m, VALIDITY_TOL)
    }

    pub fn from_matrix_tol(m: Mat3, tol: f64) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let gram = m.transpose() * m - Mat3::identity();
        let worst = gram.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if worst > tol {
            return Err(Error::InvalidRotation(format!(
                "not orthonormal (max |RᵀR - I| = {worst:.3e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > tol {
            return Err(Error::InvalidRotation(format!("determinant {det}")));
        }
        Ok(Rotation(m))
    }

    /// Row-major nine-element constructor, validated.
    pub fn from_row_major(r: &[f64; 9]) -> Result<Self> {
        Self::from_matrix(Mat3::from_row_slice(r))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Converts a quaternion (scalar first). The quaternion is normalised.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidRotation("zero quaternion".into()));
        }
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Ok(Rotation(Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )))
    }

    pub fn about_x(angle: f64) -> Self {
        exp_rotation_unchecked(&Vec3::x(), angle)
    }

    pub fn about_y(angle: f64) -> Self {
        exp_rotation_unchecked(&Vec3::y(), angle)
    }

    pub fn about_z(angle: f64) -> Self {
        exp_rotation_unchecked(&Vec3::z(), angle)
    }

    /// Uniformly distributed random rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
            if q.iter().map(|c| c * c).sum::<f64>() > 1e-12 {
                return Self::from_quaternion(q[0], q[1], q[2], q[3])
                    .expect("non-zero quaternion");
            }
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// Geodesic angle from the identity, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let cos = 0.5 * (self.0.trace() - 1.0);
        let sin = vee(&self.0).norm();
        sin.atan2(cos)
    }

    /// Rotation vector (axis times angle).
    pub fn log(&self) -> Vec3 {
        let (w, theta) = log_rotation(self);
        w * theta
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Rigid transform `p ↦ R p + t`.
///
/// Read as the pose of a child frame in its parent: it maps child
/// coordinates into parent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct Transform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl TryFrom<TransformRepr> for Transform {
    type Error = Error;
    fn try_from(r: TransformRepr) -> Result<Self> {
        Ok(Transform::new(
            Rotation::from_row_major(&r.rotation)?,
            Vec3::from(r.translation),
        ))
    }
}

impl From<Transform> for TransformRepr {
    fn from(t: Transform) -> Self {
        TransformRepr {
            rotation: t.rotation.to_row_major(),
            translation: t.translation.into(),
        }
    }
}

impl Transform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Transform {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Transform::new(Rotation::identity(), Vec3::zeros())
    }

    pub fn from_translation(t: Vec3) -> Self {
        Transform::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Transform::new(r, Vec3::zeros())
    }

    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.0 * other.translation + self.translation,
        }
    }

    /// Closed-form inverse using the rotation transpose.
    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.inverse();
        Transform {
            rotation: rt,
            translation: -(rt.0 * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.0 * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation.0 * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation.0);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// 6x6 adjoint acting on (angular, linear) twists.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation.0;
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.translation) * r));
        ad
    }

    /// Axis `i` (0 = X, 1 = Y, 2 = Z) of this frame expressed in the parent.
    pub fn axis(&self, i: usize) -> Vec3 {
        self.rotation.0.column(i).into_owned()
    }
}

impl Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

impl Mul<&Transform> for &Transform {
    type Output = Transform;
    fn mul(self, rhs: &Transform) -> Transform {
        self.compose(rhs)
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.to_homogeneous();
        for r in 0..4 {
            writeln!(
                f,
                "[{:>14.9} {:>14.9} {:>14.9} {:>14.6}]",
                m[(r, 0)],
                m[(r, 1)],
                m[(r, 2)],
                m[(r, 3)]
            )?;
        }
        Ok(())
    }
}

/// Screw axis `(w, v)`.
///
/// Revolute and helical axes have unit `w`; the pitch is `w · v`. A pure
/// translation has `w = 0` and unit `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewAxis {
    pub w: Vec3,
    pub v: Vec3,
}

impl ScrewAxis {
    pub fn new(w: Vec3, v: Vec3) -> Result<Self> {
        if w.norm() < SMALL_ANGLE {
            check_unit(&v)?;
            return Ok(ScrewAxis { w: Vec3::zeros(), v });
        }
        check_unit(&w)?;
        Ok(ScrewAxis { w, v })
    }

    pub fn is_prismatic(&self) -> bool {
        self.w == Vec3::zeros()
    }

    /// Pitch `h = w · v` (zero for a pure rotation).
    pub fn pitch(&self) -> f64 {
        self.w.dot(&self.v)
    }

    /// The point on the axis closest to the origin, `w × v` for unit `w`.
    pub fn point_on_axis(&self) -> Vec3 {
        self.w.cross(&self.v)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.w.x, self.w.y, self.w.z, self.v.x, self.v.y, self.v.z)
    }
}

fn exp_rotation_unchecked(w: &Vec3, theta: f64) -> Rotation {
    let k = skew(w);
    let (s, c) = theta.sin_cos();
    Rotation(Mat3::identity() + k * s + k * k * (1.0 - c))
}

/// Rodrigues rotation about the unit axis `w` by `theta`.
pub fn exp_rotation(w: &Vec3, theta: f64) -> Result<Rotation> {
    check_unit(w)?;
    Ok(exp_rotation_unchecked(w, theta))
}

/// Closed-form exponential of the screw motion `S θ`.
pub fn exp_screw(s: &ScrewAxis, theta: f64) -> Transform {
    if s.is_prismatic() {
        return Transform::from_translation(s.v * theta);
    }
    let k = skew(&s.w);
    let (sin, cos) = theta.sin_cos();
    let rotation = Rotation(Mat3::identity() + k * sin + k * k * (1.0 - cos));
    let g = Mat3::identity() * theta + k * (1.0 - cos) + k * k * (theta - sin);
    Transform::new(rotation, g * s.v)
}

/// Unit axis and angle in `[0, π]`. The identity maps to `((0,0,1), 0)`.
fn log_rotation(r: &Rotation) -> (Vec3, f64) {
    let m = &r.0;
    let axial = vee(m);
    let sin = axial.norm();
    let cos = 0.5 * (m.trace() - 1.0);
    let theta = sin.atan2(cos);
    if theta < SMALL_ANGLE {
        return (Vec3::z(), 0.0);
    }
    if theta < std::f64::consts::PI - 1e-3 {
        return (axial / sin, theta);
    }
    // Near π the antisymmetric part vanishes; read the axis from the
    // symmetric part using the largest diagonal entry.
    let one_minus_cos = 1.0 - cos;
    let k = (0..3)
        .max_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]))
        .unwrap();
    let mut w = Vec3::zeros();
    w[k] = ((m[(k, k)] - cos) / one_minus_cos).max(0.0).sqrt();
    for j in 0..3 {
        if j != k {
            w[j] = (m[(k, j)] + m[(j, k)]) / (2.0 * one_minus_cos * w[k]);
        }
    }
    w.normalize_mut();
    if w.dot(&axial) < 0.0 {
        w = -w;
    }
    (w, theta)
}

/// Inverse of [`exp_screw`]: returns `(S, θ)` with `θ ∈ [0, π]` for any
/// rotating transform. A pure translation returns `w = 0`, unit `v` and
/// `θ` equal to the distance travelled.
pub fn log_transform(t: &Transform) -> (ScrewAxis, f64) {
    let (w, theta) = log_rotation(&t.rotation);
    if theta == 0.0 {
        let d = t.translation.norm();
        if d < SMALL_ANGLE {
            return (
                ScrewAxis {
                    w: Vec3::z(),
                    v: Vec3::zeros(),
                },
                0.0,
            );
        }
        return (
            ScrewAxis {
                w: Vec3::zeros(),
                v: t.translation / d,
            },
            d,
        );
    }
    let k = skew(&w);
    // 1/θ - cot(θ/2)/2, with its series near zero.
    let c = if theta < 1e-3 {
        theta / 12.0 + theta.powi(3) / 720.0
    } else {
        1.0 / theta - 0.5 / (0.5 * theta).tan()
    };
    let g_inv = Mat3::identity() / theta - k * 0.5 + k * k * c;
    (
        ScrewAxis {
            w,
            v: g_inv * t.translation,
        },
        theta,
    )
}

/// Geodesic angle of `R1ᵀ R2`, in `[0, π]`.
pub fn rotation_angle_between(r1: &Rotation, r2: &Rotation) -> f64 {
    (r1.inverse() * *r2).angle()
}

/// Nearest rotation in the Frobenius norm.
///
/// Uses the SVD `M = U Σ Vᵀ`; when `det(U Vᵀ) < 0` the singular direction
/// with the smallest singular value is flipped.
pub fn project_to_rotation(m: &Mat3) -> Result<Rotation> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateMatrix("non-finite entry".into()));
    }
    let svd = m.svd(true, true);
    let (mut u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let (largest, middle, smallest) = (sv[order[0]], sv[order[1]], order[2]);
    if largest == 0.0 || middle <= 1e-12 * largest {
        return Err(Error::DegenerateMatrix(format!(
            "rank deficient (singular values {:.3e}, {:.3e}, {:.3e})",
            sv[0], sv[1], sv[2]
        )));
    }
    if (u * v_t).determinant() < 0.0 {
        let flipped = -u.column(smallest);
        u.set_column(smallest, &flipped);
    }
    Ok(Rotation(u * v_t))
}

/// Rotation geodesic (rad) and translation distance (mm) between two poses.
pub fn pose_difference(a: &Transform, b: &Transform) -> (f64, f64) {
    (
        rotation_angle_between(&a.rotation, &b.rotation),
        (a.translation - b.translation).norm(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn mat_close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    fn random_transform(rng: &mut ChaCha8Rng) -> Transform {
        let t = Vec3::new(
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
        );
        Transform::new(Rotation::random(rng), t)
    }

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    #[test]
    fn exp_rotation_zero_angle_is_identity() {
        let r = exp_rotation(&Vec3::z(), 0.0).unwrap();
        assert_eq!(*r.matrix(), Mat3::identity());
    }

    #[test]
    fn exp_rotation_quarter_turn() {
        let r = exp_rotation(&Vec3::z(), FRAC_PI_2).unwrap();
        let p = r * Vec3::x();
        assert!((p - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn exp_rotation_matches_power_series() {
        // 30-term series of exp(θ[w]).
        let k = skew(&Vec3::x()) * 0.3;
        let mut term = Mat3::identity();
        let mut sum = Mat3::identity();
        for n in 1..30 {
            term = term * k / n as f64;
            sum += term;
        }
        let r = exp_rotation(&Vec3::x(), 0.3).unwrap();
        assert!(mat_close(r.matrix(), &sum, 1e-12));
    }

    #[test]
    fn exp_rotation_rejects_non_unit_axis() {
        assert!(matches!(
            exp_rotation(&Vec3::new(0.0, 0.0, 2.0), 1.0),
            Err(Error::InvalidAxis { .. })
        ));
    }

    #[test]
    fn exp_screw_axis_through_origin() {
        let s = ScrewAxis::new(Vec3::z(), Vec3::zeros()).unwrap();
        let t = exp_screw(&s, PI);
        assert!(t.translation.norm() < 1e-15);
        assert!(mat_close(
            t.rotation.matrix(),
            Rotation::about_z(PI).matrix(),
            1e-15
        ));
    }

    #[test]
    fn exp_screw_offset_axis_matches_conjugation() {
        let q = Vec3::new(1.0, 0.0, 0.0);
        let w = Vec3::z();
        let s = ScrewAxis::new(w, -w.cross(&q)).unwrap();
        assert_eq!(s.v, Vec3::new(0.0, -1.0, 0.0));
        let t = exp_screw(&s, PI);
        let oracle = Transform::from_translation(q)
            * Transform::from_rotation(Rotation::about_z(PI))
            * Transform::from_translation(-q);
        let (dr, dt) = pose_difference(&t, &oracle);
        assert!(dr < 1e-12 && dt < 1e-12);
        let origin = t.transform_point(&Vec3::zeros());
        assert!((origin - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exp_screw_zero_angle_is_identity() {
        let s = ScrewAxis::new(unit(1.0, 2.0, 3.0), Vec3::new(4.0, -1.0, 7.0)).unwrap();
        assert_eq!(exp_screw(&s, 0.0), Transform::identity());
    }

    #[test]
    fn log_of_identity_is_canonical() {
        let (s, theta) = log_transform(&Transform::identity());
        assert_eq!(theta, 0.0);
        assert_eq!(s.w, Vec3::z());
    }

    #[test]
    fn log_of_pure_translation() {
        let t = Transform::from_translation(Vec3::new(3.0, 4.0, 0.0));
        let (s, d) = log_transform(&t);
        assert!(s.is_prismatic());
        assert_relative_eq!(d, 5.0);
        let back = exp_screw(&s, d);
        assert!((back.translation - t.translation).norm() < 1e-12);
    }

    #[test]
    fn log_at_half_turn_round_trips() {
        for axis in [Vec3::x(), Vec3::y(), unit(1.0, -1.0, 2.0)] {
            let r = exp_rotation(&axis, PI).unwrap();
            let t = Transform::new(r, Vec3::new(10.0, -3.0, 2.5));
            let (s, theta) = log_transform(&t);
            assert_relative_eq!(theta, PI, epsilon = 1e-12);
            let (dr, dt) = pose_difference(&exp_screw(&s, theta), &t);
            assert!(dr < 1e-9 && dt < 1e-9, "{dr} {dt}");
        }
    }

    #[test]
    fn rotation_angle_between_examples() {
        let deg = PI / 180.0;
        let a = rotation_angle_between(&Rotation::identity(), &Rotation::about_z(30.0 * deg));
        assert_relative_eq!(a, 30.0 * deg, epsilon = 1e-14);
        let b = rotation_angle_between(&Rotation::about_z(10.0 * deg), &Rotation::about_z(40.0 * deg));
        assert_relative_eq!(b, 30.0 * deg, epsilon = 1e-14);
    }

    #[test]
    fn rotation_angle_between_matches_trace_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (r1, r2) = (Rotation::random(&mut rng), Rotation::random(&mut rng));
            let rel = r1.matrix().transpose() * r2.matrix();
            let oracle = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
            let got = rotation_angle_between(&r1, &r2);
            assert!((got - oracle).abs() < 1e-7, "{got} vs {oracle}");
            let (_, theta) = log_transform(&Transform::from_rotation(r1.inverse() * r2));
            assert!((got - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn project_fixes_valid_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = Rotation::random(&mut rng);
            let p = project_to_rotation(r.matrix()).unwrap();
            assert!(mat_close(p.matrix(), r.matrix(), 1e-12));
        }
    }

    #[test]
    fn project_corrects_reflection() {
        let m = Mat3::from_diagonal(&Vec3::new(3.0, 2.0, -0.5));
        let r = project_to_rotation(&m).unwrap();
        assert!(mat_close(r.matrix(), &Mat3::identity(), 1e-12));
    }

    #[test]
    fn project_rejects_rank_one() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let m = a * Vec3::new(0.0, 1.0, 1.0).transpose();
        assert!(matches!(
            project_to_rotation(&m),
            Err(Error::DegenerateMatrix(_))
        ));
        assert!(project_to_rotation(&Mat3::zeros()).is_err());
    }

    #[test]
    fn from_matrix_rejects_non_rotations() {
        assert!(Rotation::from_matrix(Mat3::identity() * 1.01).is_err());
        assert!(Rotation::from_matrix(-Mat3::identity()).is_err());
    }

    #[test]
    fn group_axioms_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (a, b, c) = (
                random_transform(&mut rng),
                random_transform(&mut rng),
                random_transform(&mut rng),
            );
            let (dr, dt) = pose_difference(&((a * b) * c), &(a * (b * c)));
            assert!(dr < 1e-9 && dt < 1e-9);
            let (dr, dt) = pose_difference(&(a.inverse() * a), &Transform::identity());
            assert!(dr < 1e-9 && dt < 1e-9);
            let (dr, dt) = pose_difference(&(a * a.inverse()), &Transform::identity());
            assert!(dr < 1e-9 && dt < 1e-9);
        }
    }

    #[test]
    fn adjoint_transports_twists() {
        // exp(Ad_T S θ) = T exp(S θ) T⁻¹
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_transform(&mut rng);
        let s = ScrewAxis::new(unit(0.2, -0.4, 0.9), Vec3::new(12.0, 3.0, -8.0)).unwrap();
        let moved = t.adjoint() * s.to_vector();
        let s2 = ScrewAxis::new(
            Vec3::new(moved[0], moved[1], moved[2]),
            Vec3::new(moved[3], moved[4], moved[5]),
        )
        .unwrap();
        let lhs = exp_screw(&s2, 0.7);
        let rhs = t * exp_screw(&s, 0.7) * t.inverse();
        let (dr, dt) = pose_difference(&lhs, &rhs);
        assert!(dr < 1e-12 && dt < 1e-9);
    }

    #[test]
    fn quaternion_conversion() {
        let h = (0.5_f64).sqrt();
        let r = Rotation::from_quaternion(h, 0.0, 0.0, h).unwrap();
        assert!(mat_close(r.matrix(), Rotation::about_z(FRAC_PI_2).matrix(), 1e-15));
    }

    #[test]
    fn transform_serde_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_transform(&mut rng);
        let s = serde_json::to_string(&t).unwrap();
        let back: Transform = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }

    fn arb_axis() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| unit(x, y, z))
    }

    fn arb_point() -> impl Strategy<Value = Vec3> {
        (-500.0..500.0f64, -500.0..500.0f64, -500.0..500.0f64)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn exp_screw_is_additive(w in arb_axis(), q in arb_point(), h in -5.0..5.0f64,
                                 a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let s = ScrewAxis::new(w, -w.cross(&q) + w * h).unwrap();
            let lhs = exp_screw(&s, a) * exp_screw(&s, b);
            let rhs = exp_screw(&s, a + b);
            let (dr, dt) = pose_difference(&lhs, &rhs);
            prop_assert!(dr < 1e-9 && dt < 1e-9, "{} {}", dr, dt);
        }

        #[test]
        fn log_exp_round_trip(w in arb_axis(), q in arb_point(), h in -5.0..5.0f64,
                              theta in 1e-6..(PI - 1e-3)) {
            let s = ScrewAxis::new(w, -w.cross(&q) + w * h).unwrap();
            let t = exp_screw(&s, theta);
            let (s2, theta2) = log_transform(&t);
            prop_assert!((theta - theta2).abs() < 1e-9);
            let (dr, dt) = pose_difference(&exp_screw(&s2, theta2), &t);
            prop_assert!(dr < 1e-9 && dt < 1e-9, "{} {}", dr, dt);
        }
    }
}
