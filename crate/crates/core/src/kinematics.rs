//! Screw-theory model of a 7-joint serial arm.

use std::ops::{Index, IndexMut};

use nalgebra::{Matrix6, SMatrix, Vector6};

use crate::error::{Error, Result};
use crate::se3::{exp_screw, log_transform, pose_difference, ScrewAxis, Transform, Vec3};

pub const DOF: usize = 7;

pub type Jacobian = SMatrix<f64, 6, DOF>;

/// Builds `S = (w, -w × q + h w)` for an axis through `q` with direction `w`.
pub fn make_screw_axis(w: Vec3, q: Vec3, h: f64) -> Result<ScrewAxis> {
    let v = -w.cross(&q) + w * h;
    let axis = ScrewAxis::new(w, v)?;
    if axis.is_prismatic() {
        return Err(Error::InvalidAxis { norm: w.norm() });
    }
    Ok(axis)
}

/// Joint angles in radians, base to tip.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointVector(pub [f64; DOF]);

impl JointVector {
    pub fn zeros() -> Self {
        JointVector([0.0; DOF])
    }

    pub fn from_degrees(deg: [f64; DOF]) -> Self {
        JointVector(deg.map(f64::to_radians))
    }

    pub fn to_degrees(&self) -> [f64; DOF] {
        self.0.map(f64::to_degrees)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }
}

impl Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Ordered screw axes, home pose `M` and joint limits.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    axes: [ScrewAxis; DOF],
    home: Transform,
    limits: [(f64, f64); DOF],
}

impl RobotModel {
    pub fn new(axes: Vec<ScrewAxis>, home: Transform, limits: Vec<(f64, f64)>) -> Result<Self> {
        let axes: [ScrewAxis; DOF] = axes.try_into().map_err(|v: Vec<ScrewAxis>| {
            Error::InvalidModel(format!("expected {DOF} joint axes, got {}", v.len()))
        })?;
        let limits: [(f64, f64); DOF] = limits.try_into().map_err(|v: Vec<(f64, f64)>| {
            Error::InvalidModel(format!("expected {DOF} joint limits, got {}", v.len()))
        })?;
        for (i, (lo, hi)) in limits.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidModel(format!(
                    "joint {i}: limits [{lo}, {hi}] are not ordered"
                )));
            }
        }
        for (i, a) in axes.iter().enumerate() {
            if a.is_prismatic() || a.pitch().abs() > 1e-9 {
                return Err(Error::InvalidModel(format!("joint {i} is not revolute")));
            }
        }
        Ok(RobotModel { axes, home, limits })
    }

    /// The bundled LBR Med 7 R800-style model (link offsets 340/400/400/126 mm).
    pub fn default_arm() -> Self {
        crate::io::RobotModelFile::from_json(include_str!("../data/lbr_med7_r800.json"))
            .and_then(|f| f.to_model())
            .expect("bundled robot model is valid")
    }

    pub fn axes(&self) -> &[ScrewAxis; DOF] {
        &self.axes
    }

    pub fn home(&self) -> &Transform {
        &self.home
    }

    pub fn limits(&self) -> &[(f64, f64); DOF] {
        &self.limits
    }

    pub fn check_limits(&self, theta: &JointVector) -> Result<()> {
        for (i, (&value, &(lower, upper))) in theta.iter().zip(self.limits.iter()).enumerate() {
            if !(lower..=upper).contains(&value) {
                return Err(Error::JointLimit {
                    joint: i,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    fn clamp(&self, theta: &mut JointVector) -> bool {
        let mut clamped = false;
        for (t, &(lo, hi)) in theta.0.iter_mut().zip(self.limits.iter()) {
            let c = t.clamp(lo, hi);
            clamped |= c != *t;
            *t = c;
        }
        clamped
    }
}

/// `T = e^[S1]θ1 ... e^[S7]θ7 M`. Joint limits are not checked.
pub fn forward_kinematics(model: &RobotModel, theta: &JointVector) -> Transform {
    let chain = model
        .axes
        .iter()
        .zip(theta.iter())
        .fold(Transform::identity(), |acc, (s, &t)| acc * exp_screw(s, t));
    chain * model.home
}

/// Space Jacobian: column `i` is `Ad(e^[S1]θ1 ... e^[S(i-1)]θ(i-1)) S_i`.
pub fn space_jacobian(model: &RobotModel, theta: &JointVector) -> Jacobian {
    let mut jac = Jacobian::zeros();
    let mut prefix = Transform::identity();
    for (i, (s, &t)) in model.axes.iter().zip(theta.iter()).enumerate() {
        jac.set_column(i, &(prefix.adjoint() * s.to_vector()));
        prefix = prefix * exp_screw(s, t);
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    /// Base damping factor of the damped least-squares step.
    pub damping: f64,
    pub max_iter: usize,
    /// Convergence threshold on `sqrt(angle² + distance²)` (rad, mm).
    pub tol: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            damping: 0.01,
            max_iter: 200,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub theta: JointVector,
    /// `sqrt(angle² + distance²)` between the reached pose and the target.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when an update was clamped to the joint limits.
    pub limit_clamped: bool,
}

fn pose_residual(a: &Transform, b: &Transform) -> f64 {
    let (dr, dt) = pose_difference(a, b);
    dr.hypot(dt)
}

/// Damped least-squares inverse kinematics.
///
/// The damping starts at `opts.damping` and is raised whenever a step fails
/// to reduce the residual. When `max_iter` is exhausted the best
/// configuration found is returned with `converged == false`.
pub fn solve_ik(
    model: &RobotModel,
    target: &Transform,
    seed: &JointVector,
    opts: &IkOptions,
) -> Result<IkSolution> {
    model.check_limits(seed)?;
    let mut theta = *seed;
    let mut current = forward_kinematics(model, &theta);
    let mut residual = pose_residual(&current, target);
    let mut lambda = opts.damping;
    let mut limit_clamped = false;
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let (s, angle) = log_transform(&(current.inverse() * *target));
        let body: Vector6<f64> = s.to_vector() * angle;
        let spatial = current.adjoint() * body;
        let jac = space_jacobian(model, &theta);
        let jjt: Matrix6<f64> = jac * jac.transpose() + Matrix6::identity() * (lambda * lambda);
        let Some(y) = jjt.cholesky().map(|c| c.solve(&spatial)) else {
            lambda *= 10.0;
            continue;
        };
        let delta = jac.transpose() * y;

        let mut trial = theta;
        for (t, d) in trial.0.iter_mut().zip(delta.iter()) {
            *t += d;
        }
        let clamped = model.clamp(&mut trial);
        let trial_pose = forward_kinematics(model, &trial);
        let trial_residual = pose_residual(&trial_pose, target);
        if trial_residual < residual {
            theta = trial;
            current = trial_pose;
            residual = trial_residual;
            limit_clamped |= clamped;
            lambda = (lambda * 0.5).max(opts.damping);
        } else {
            lambda *= 10.0;
            if lambda > 1e6 {
                break;
            }
        }
    }

    Ok(IkSolution {
        theta,
        residual,
        iterations,
        converged: residual <= opts.tol,
        limit_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{Rotation, Vec3};
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_config(rng: &mut ChaCha8Rng, model: &RobotModel) -> JointVector {
        let mut q = JointVector::zeros();
        for (t, &(lo, hi)) in q.0.iter_mut().zip(model.limits().iter()) {
            *t = rng.random_range(lo..hi);
        }
        q
    }

    /// Independent FK: rotate about each joint line by conjugation.
    fn conjugation_fk(model: &RobotModel, raw: &[(Vec3, Vec3)], theta: &JointVector) -> Transform {
        let mut pose = Transform::identity();
        for ((w, q), &t) in raw.iter().zip(theta.iter()) {
            let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*w), t);
            let rot = Rotation::from_matrix(*r.matrix()).unwrap();
            pose = pose
                * Transform::from_translation(*q)
                * Transform::from_rotation(rot)
                * Transform::from_translation(-q);
        }
        pose * *model.home()
    }

    fn bundled_axes() -> Vec<(Vec3, Vec3)> {
        let v: serde_json::Value =
            serde_json::from_str(include_str!("../data/lbr_med7_r800.json")).unwrap();
        v["joints"]
            .as_array()
            .unwrap()
            .iter()
            .map(|j| {
                let f = |k: &str| {
                    let a = j[k].as_array().unwrap();
                    Vec3::new(
                        a[0].as_f64().unwrap(),
                        a[1].as_f64().unwrap(),
                        a[2].as_f64().unwrap(),
                    )
                };
                (f("w"), f("q"))
            })
            .collect()
    }

    #[test]
    fn screw_axis_examples() {
        let s = make_screw_axis(Vec3::z(), Vec3::zeros(), 0.0).unwrap();
        assert_eq!(s.to_vector(), Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        let s = make_screw_axis(Vec3::z(), Vec3::x(), 0.0).unwrap();
        assert_eq!(s.v, Vec3::new(0.0, -1.0, 0.0));
        let q = Vec3::new(0.0, 0.0, 0.34);
        let s = make_screw_axis(Vec3::y(), q, 0.0).unwrap();
        let oracle = -Vec3::y().cross(&q);
        assert_eq!(s.v, oracle);
        assert!((s.v - Vec3::new(-0.34, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn screw_axis_with_pitch() {
        let s = make_screw_axis(Vec3::z(), Vec3::x(), 2.0).unwrap();
        assert!((s.pitch() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn screw_axis_rejects_non_unit() {
        assert!(make_screw_axis(Vec3::new(0.0, 0.0, 0.5), Vec3::zeros(), 0.0).is_err());
        assert!(make_screw_axis(Vec3::zeros(), Vec3::zeros(), 0.0).is_err());
    }

    #[test]
    fn zero_configuration_gives_home() {
        let model = RobotModel::default_arm();
        assert_eq!(
            forward_kinematics(&model, &JointVector::zeros()),
            *model.home()
        );
    }

    #[test]
    fn single_joint_quarter_turn() {
        let model = RobotModel::default_arm();
        let single = RobotModel::new(
            model.axes().to_vec(),
            Transform::identity(),
            model.limits().to_vec(),
        )
        .unwrap();
        let mut theta = JointVector::zeros();
        theta[0] = FRAC_PI_2;
        let t = forward_kinematics(&single, &theta);
        let (dr, dt) = pose_difference(&t, &Transform::from_rotation(Rotation::about_z(FRAC_PI_2)));
        assert!(dr < 1e-15 && dt < 1e-15);
    }

    #[test]
    fn fk_matches_conjugation_chain() {
        let model = RobotModel::default_arm();
        let raw = bundled_axes();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let q = random_config(&mut rng, &model);
            let (dr, dt) = pose_difference(
                &forward_kinematics(&model, &q),
                &conjugation_fk(&model, &raw, &q),
            );
            assert!(dr + dt < 1e-10, "{dr} {dt}");
        }
    }

    #[test]
    fn jacobian_at_zero_is_raw_axes() {
        let model = RobotModel::default_arm();
        let j = space_jacobian(&model, &JointVector::zeros());
        for (i, s) in model.axes().iter().enumerate() {
            assert_eq!(j.column(i).into_owned(), s.to_vector());
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let model = RobotModel::default_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..20 {
            let q = random_config(&mut rng, &model);
            let jac = space_jacobian(&model, &q);
            let t0 = forward_kinematics(&model, &q);
            for i in 0..DOF {
                let (mut qp, mut qm) = (q, q);
                qp[i] += h;
                qm[i] -= h;
                let dm = (forward_kinematics(&model, &qp).to_homogeneous()
                    - forward_kinematics(&model, &qm).to_homogeneous())
                    / (2.0 * h);
                // [V] = dT T⁻¹
                let vs = dm * t0.inverse().to_homogeneous();
                let fd = Vector6::new(
                    vs[(2, 1)],
                    vs[(0, 2)],
                    vs[(1, 0)],
                    vs[(0, 3)],
                    vs[(1, 3)],
                    vs[(2, 3)],
                );
                let col = jac.column(i).into_owned();
                let err = (fd - col).norm() / col.norm().max(1.0);
                assert!(err < 1e-6, "joint {i}: {err}");
            }
        }
    }

    #[test]
    fn ik_at_seed_returns_immediately() {
        let model = RobotModel::default_arm();
        let seed = JointVector::from_degrees([10.0, 30.0, -5.0, -60.0, 20.0, 45.0, 0.0]);
        let target = forward_kinematics(&model, &seed);
        let sol = solve_ik(&model, &target, &seed, &IkOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.theta, seed);
        assert!(sol.converged);
    }

    #[test]
    fn ik_recovers_nearby_target() {
        let model = RobotModel::default_arm();
        let truth = JointVector::from_degrees([10.0, 30.0, -5.0, -60.0, 20.0, 45.0, 0.0]);
        let mut seed = truth;
        for t in seed.0.iter_mut() {
            *t += 5f64.to_radians();
        }
        let target = forward_kinematics(&model, &truth);
        let sol = solve_ik(&model, &target, &seed, &IkOptions::default()).unwrap();
        assert!(sol.converged, "residual {}", sol.residual);
        assert!(sol.residual < 1e-6);
    }

    #[test]
    fn ik_rejects_seed_outside_limits() {
        let model = RobotModel::default_arm();
        let mut seed = JointVector::zeros();
        seed[1] = 3.0;
        assert!(matches!(
            solve_ik(&model, &Transform::identity(), &seed, &IkOptions::default()),
            Err(Error::JointLimit { joint: 1, .. })
        ));
    }

    #[test]
    fn ik_reports_best_effort_when_unreachable() {
        let model = RobotModel::default_arm();
        let target = Transform::from_translation(Vec3::new(5000.0, 0.0, 0.0));
        let sol = solve_ik(
            &model,
            &target,
            &JointVector::zeros(),
            &IkOptions {
                max_iter: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!sol.converged);
        assert!(sol.residual > 1000.0);
        assert!(model.check_limits(&sol.theta).is_ok());
    }

    #[test]
    fn model_rejects_wrong_joint_count() {
        let model = RobotModel::default_arm();
        let r = RobotModel::new(
            model.axes()[..6].to_vec(),
            *model.home(),
            model.limits().to_vec(),
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }
}
