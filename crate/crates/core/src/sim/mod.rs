//! Synthetic world with known ground truth: calibration datasets, digitized
//! specimen faces and end-to-end drilling trials.
//!
//! Every random draw comes from a ChaCha stream derived from the noise seed
//! and a fixed per-stage stream id, so trials replay bit for bit and the same
//! seed sees the same underlying normals at every noise level.

mod circle;
mod metrics;

pub use circle::{fit_circle, fit_circle_radius, Circle};
pub use metrics::{aggregate, mean, sample_std, SummaryReport, SummaryRow, TrialReport};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::calibration::{
    fit_plane_toward, hand_eye_calibrate, pivot_calibrate, HandEyePair, PivotSample,
};
use crate::ctsdr::{arc_offset, plan_waypoints, DrillPlan, Phase};
use crate::error::{Error, Result};
use crate::frame_graph::{build_entry_pose, EdgeSource, EntryGoal, FrameGraph, FrameId};
use crate::kinematics::{forward_kinematics, solve_ik, IkOptions, JointVector, RobotModel};
use crate::se3::{exp_rotation, rotation_angle_between, Rotation, Transform, Vec3};

/// Entry point at the centre of the specimen face (world, mm).
pub const ENTRY_POINT: [f64; 3] = [800.0, 0.0, 250.0];
/// Specimen face extent along its local X and Y (mm).
pub const FACE_SIZE: [f64; 2] = [60.0, 40.0];
/// Height of the home tool tip above the entry point (mm).
pub const HOME_CLEARANCE: f64 = 150.0;

const STREAM_DRILL_PIVOT: u64 = 1;
const STREAM_DIGITIZER_PIVOT: u64 = 2;
const STREAM_HANDEYE: u64 = 3;
const STREAM_FACE: u64 = 4;
const STREAM_ENTRY: u64 = 5;
const STREAM_TRACKING: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The transforms a real setup would have to calibrate, plus the specimen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `ndi_T_world`: robot base seen from the tracker.
    pub x_true: Transform,
    /// `tracker_T_ee`: end-effector seen from the tool marker body.
    pub z_true: Transform,
    /// Drill tip in the end-effector frame (mm).
    pub tip_true: [f64; 3],
    /// Stylus tip in the digitizer marker frame (mm).
    pub digitizer_tip_true: [f64; 3],
    /// `world_T_specimen`; origin at the entry point, +Z the outward face normal.
    pub specimen_pose: Transform,
    /// Fixture angle (degrees).
    pub mount_angle: f64,
}

impl GroundTruth {
    /// Nominal bench geometry with the specimen tilted about world Y.
    pub fn new(mount_angle: f64) -> Result<Self> {
        if !(mount_angle.is_finite() && (0.0..=75.0).contains(&mount_angle)) {
            return Err(Error::OutOfRange(format!(
                "mount angle {mount_angle} not in [0, 75] degrees"
            )));
        }
        let entry = Vec3::from(ENTRY_POINT);
        let specimen_pose = Transform::new(Rotation::about_y(-mount_angle.to_radians()), entry);

        // Tracker above and to the side of the table, looking at the specimen.
        let camera = Vec3::new(250.0, -900.0, 1400.0);
        let look = (entry - camera).normalize();
        let right = look.cross(&Vec3::z()).normalize();
        let down = look.cross(&right);
        let world_t_ndi = Transform::new(
            Rotation::from_matrix(nalgebra::Matrix3::from_columns(&[right, down, look]))?,
            camera,
        );

        let ee_t_tracker = Transform::new(
            Rotation::about_x(20f64.to_radians()) * Rotation::about_z(-35f64.to_radians()),
            Vec3::new(60.0, -45.0, 95.0),
        );

        Ok(GroundTruth {
            x_true: world_t_ndi.inverse(),
            z_true: ee_t_tracker.inverse(),
            tip_true: [187.5, 1.5, 42.0],
            digitizer_tip_true: [-3.2, 1.1, -142.0],
            specimen_pose,
            mount_angle,
        })
    }

    pub fn tip(&self) -> Vec3 {
        self.tip_true.into()
    }

    pub fn digitizer_tip(&self) -> Vec3 {
        self.digitizer_tip_true.into()
    }

    pub fn ee_t_tip(&self) -> Transform {
        Transform::from_translation(self.tip())
    }

    /// Outward face normal (world).
    pub fn face_normal(&self) -> Vec3 {
        self.specimen_pose.axis(2)
    }

    pub fn entry_point(&self) -> Vec3 {
        self.specimen_pose.translation
    }
}

/// Tracker noise. Positions get isotropic Gaussian noise; rotations get a
/// uniform random axis with a half-normal angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// mm
    pub sigma_pos: f64,
    /// degrees
    pub sigma_rot: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_pos: 0.25,
            sigma_rot: 0.05,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn new(sigma_pos: f64, sigma_rot: f64, seed: u64) -> Result<Self> {
        let n = NoiseModel {
            sigma_pos,
            sigma_rot,
            seed,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn zero(seed: u64) -> Self {
        NoiseModel {
            sigma_pos: 0.0,
            sigma_rot: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_pos", self.sigma_pos), ("sigma_rot", self.sigma_rot)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Always consumes the same number of draws regardless of the sigmas.
    pub fn perturb<R: Rng + ?Sized>(&self, pose: &Transform, rng: &mut R) -> Transform {
        let axis: [f64; 3] = UnitSphere.sample(rng);
        let a: f64 = StandardNormal.sample(rng);
        let d = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let angle = a.abs() * self.sigma_rot.to_radians();
        let dr = exp_rotation(&Vec3::from(axis).normalize(), angle).unwrap_or_else(|_| Rotation::identity());
        Transform::new(dr * pose.rotation, pose.translation + d * self.sigma_pos)
    }
}

/// Rotation of `angle` about a uniformly random axis.
fn random_tilt<R: Rng + ?Sized>(rng: &mut R, angle: f64) -> Rotation {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    exp_rotation(&Vec3::from(axis).normalize(), angle).unwrap_or_else(|_| Rotation::identity())
}

/// Tool orientation at home and at a level (0°) entry: +X down, +Y along world Y.
pub fn home_tool_rotation() -> Rotation {
    Rotation::about_y(PI / 2.0)
}

/// Robot-side pivot poses (`world_T_ee`) about a fixed point, tracked with noise.
pub fn synth_pivot_dataset(gt: &GroundTruth, n: usize, noise: &NoiseModel) -> Vec<PivotSample> {
    let pivot = gt.entry_point() + Vec3::new(-120.0, 80.0, 60.0);
    let base = home_tool_rotation();
    pivot_poses(&pivot, &base, &gt.tip(), n, noise, STREAM_DRILL_PIVOT)
}

/// Digitizer marker poses (`ndi_T_markers`) pivoting about a divot.
pub fn synth_digitizer_pivot_dataset(gt: &GroundTruth, n: usize, noise: &NoiseModel) -> Vec<PivotSample> {
    let pivot = gt.x_true.transform_point(&(gt.entry_point() + Vec3::new(80.0, 120.0, -20.0)));
    let base = gt.x_true.rotation * Rotation::about_x(PI);
    pivot_poses(&pivot, &base, &gt.digitizer_tip(), n, noise, STREAM_DIGITIZER_PIVOT)
}

/// Rotations tilt 15°–35° about axes spread over the whole sphere.
fn pivot_poses(
    pivot: &Vec3,
    base: &Rotation,
    tip: &Vec3,
    n: usize,
    noise: &NoiseModel,
    id: u64,
) -> Vec<PivotSample> {
    let mut rng = stream(noise.seed, id);
    (0..n)
        .map(|_| {
            let tilt = rng.random_range(15f64.to_radians()..35f64.to_radians());
            let r = random_tilt(&mut rng, tilt) * *base;
            let exact = Transform::new(r, pivot - r * *tip);
            noise.perturb(&exact, &mut rng).into()
        })
        .collect()
}

/// Joint configurations scattered ±25° around `center`, inside the limits.
pub fn handeye_joint_configs(
    model: &RobotModel,
    center: &JointVector,
    n: usize,
    seed: u64,
) -> Vec<JointVector> {
    let mut rng = stream(seed, STREAM_HANDEYE);
    let spread = 25f64.to_radians();
    (0..n)
        .map(|_| {
            let mut q = *center;
            for (t, &(lo, hi)) in q.0.iter_mut().zip(model.limits()) {
                *t = (*t + rng.random_range(-spread..spread)).clamp(lo, hi);
            }
            q
        })
        .collect()
}

/// `B_i = (world_T_ee)⁻¹` from the arm and `A_i = (ndi_T_tracker)⁻¹` from the
/// tracker, so that `A_i X = Z B_i`. Noise is applied to the tracked side.
pub fn synth_handeye_dataset(
    gt: &GroundTruth,
    joint_configs: &[JointVector],
    model: &RobotModel,
    noise: &NoiseModel,
) -> Vec<HandEyePair> {
    let mut rng = stream(noise.seed, STREAM_HANDEYE + 100);
    joint_configs
        .iter()
        .map(|q| {
            let ee = forward_kinematics(model, q);
            let tracked = gt.x_true * ee * gt.z_true.inverse();
            HandEyePair {
                a: noise.perturb(&tracked, &mut rng).inverse(),
                b: ee.inverse(),
            }
        })
        .collect()
}

/// Face points on a regular grid centred on the entry point (world).
pub fn face_grid(gt: &GroundTruth, grid: (usize, usize)) -> Vec<Vec3> {
    let (nx, ny) = grid;
    let coord = |i: usize, n: usize, size: f64| {
        if n <= 1 {
            0.0
        } else {
            -size / 2.0 + size * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let local = Vec3::new(coord(i, nx, FACE_SIZE[0]), coord(j, ny, FACE_SIZE[1]), 0.0);
            out.push(gt.specimen_pose.transform_point(&local));
        }
    }
    out
}

fn touch_poses(gt: &GroundTruth, targets: &[Vec3], noise: &NoiseModel, id: u64) -> Vec<Transform> {
    let mut rng = stream(noise.seed, id);
    let base = gt.x_true.rotation * Rotation::about_x(PI);
    let d = gt.digitizer_tip();
    targets
        .iter()
        .map(|w| {
            let tilt = rng.random_range(0.0..15f64.to_radians());
            let r = random_tilt(&mut rng, tilt) * base;
            let c = gt.x_true.transform_point(w);
            noise.perturb(&Transform::new(r, c - r * d), &mut rng)
        })
        .collect()
}

/// Tracked digitizer marker poses (`ndi_T_markers`) touching the face grid.
pub fn synth_digitizer_poses(gt: &GroundTruth, grid: (usize, usize), noise: &NoiseModel) -> Vec<Transform> {
    touch_poses(gt, &face_grid(gt, grid), noise, STREAM_FACE)
}

/// Face grid as seen through the tracked digitizer chain with the true
/// stylus offset and registration, expressed in the world frame.
pub fn synth_digitizer_points(gt: &GroundTruth, grid: (usize, usize), noise: &NoiseModel) -> Vec<Vec3> {
    let world_t_ndi = gt.x_true.inverse();
    synth_digitizer_poses(gt, grid, noise)
        .iter()
        .map(|m| world_t_ndi.transform_point(&m.transform_point(&gt.digitizer_tip())))
        .collect()
}

/// Sizes and fixed settings of a simulated trial.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: RobotModel,
    /// Arm configuration with the tool level above the entry point.
    pub home_config: JointVector,
    pub pivot_poses: usize,
    pub handeye_poses: usize,
    pub face_grid: (usize, usize),
    /// Upper bound on waypoint spacing (mm along the path).
    pub waypoint_step: f64,
    /// Samples of the drilled arc used for the radius fit.
    pub arc_samples: usize,
}

impl SimConfig {
    /// Solves for the home configuration of `model`.
    pub fn new(model: RobotModel) -> Result<Self> {
        let tip_home = Vec3::from(ENTRY_POINT) + Vec3::new(0.0, 0.0, HOME_CLEARANCE);
        let ee_t_tip = GroundTruth::new(0.0)?.ee_t_tip();
        let target = Transform::new(home_tool_rotation(), tip_home) * ee_t_tip.inverse();
        let seed = JointVector::from_degrees([0.0, 35.0, 0.0, -75.0, 0.0, -60.0, 0.0]);
        let sol = solve_ik(&model, &target, &seed, &IkOptions::default())?;
        if !sol.converged {
            return Err(Error::OutOfRange(format!(
                "home pose unreachable (residual {:.3e})",
                sol.residual
            )));
        }
        Ok(SimConfig {
            model,
            home_config: sol.theta,
            pivot_poses: 30,
            handeye_poses: 15,
            face_grid: (7, 5),
            waypoint_step: 1.0,
            arc_samples: 71,
        })
    }

    pub fn default_arm() -> Self {
        Self::new(RobotModel::default_arm()).expect("home pose of the bundled arm is reachable")
    }
}

/// Everything the pipeline derived from the noisy measurements.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub tip: Vec3,
    pub digitizer_tip: Vec3,
    /// `ndi_T_world`
    pub x: Transform,
    /// `tracker_T_ee`
    pub z: Transform,
}

fn calibrate(gt: &GroundTruth, noise: &NoiseModel, cfg: &SimConfig) -> Result<Calibration> {
    let tip = pivot_calibrate(&synth_pivot_dataset(gt, cfg.pivot_poses, noise))?;
    let dig = pivot_calibrate(&synth_digitizer_pivot_dataset(gt, cfg.pivot_poses, noise))?;
    let configs = handeye_joint_configs(&cfg.model, &cfg.home_config, cfg.handeye_poses, noise.seed);
    let he = hand_eye_calibrate(&synth_handeye_dataset(gt, &configs, &cfg.model, noise))?;
    Ok(Calibration {
        tip: tip.tip(),
        digitizer_tip: dig.tip(),
        x: he.x,
        z: he.z,
    })
}

fn move_to(cfg: &SimConfig, target: &Transform, seed: &JointVector) -> Result<JointVector> {
    let sol = solve_ik(&cfg.model, target, seed, &IkOptions::default())?;
    if !sol.converged {
        return Err(Error::OutOfRange(format!(
            "target unreachable (residual {:.3e})",
            sol.residual
        )));
    }
    Ok(sol.theta)
}

/// Runs one trial with [`SimConfig::default_arm`].
pub fn run_trial(gt: &GroundTruth, noise: &NoiseModel, plan: &DrillPlan) -> Result<TrialReport> {
    run_trial_with(gt, noise, plan, &SimConfig::default_arm())
}

/// Calibrate, digitize, plan and drill in the ground-truth world.
///
/// Commands are derived from calibrated quantities only; the arm executes
/// them exactly and the tool tip follows the true tip offset, so calibration
/// error shows up as placement error. `plan` supplies everything except the
/// entry pose, which is rebuilt from the digitized face.
pub fn run_trial_with(
    gt: &GroundTruth,
    noise: &NoiseModel,
    plan: &DrillPlan,
    cfg: &SimConfig,
) -> Result<TrialReport> {
    noise.validate()?;
    let cal = calibrate(gt, noise, cfg)?;

    // Registration and digitizer chain live in the frame graph.
    let mut graph = FrameGraph::new();
    graph.add_edge(FrameId::NdiCamera, FrameId::World, cal.x, EdgeSource::Calibrated)?;
    graph.add_edge(
        FrameId::DigitizerMarkers,
        FrameId::DigitizerTip,
        Transform::from_translation(cal.digitizer_tip),
        EdgeSource::Calibrated,
    )?;
    let mut digitize = |poses: &[Transform]| -> Result<Vec<Vec3>> {
        poses
            .iter()
            .map(|m| {
                graph.set_edge(FrameId::NdiCamera, FrameId::DigitizerMarkers, *m, EdgeSource::Tracked)?;
                Ok(graph.resolve(FrameId::World, FrameId::DigitizerTip)?.translation)
            })
            .collect()
    };
    let face = digitize(&synth_digitizer_poses(gt, cfg.face_grid, noise))?;
    let entry = digitize(&touch_poses(gt, &[gt.entry_point()], noise, STREAM_ENTRY))?[0];
    let camera = cal.x.inverse().translation;
    let plane = fit_plane_toward(&face, &camera)?;

    let goal = EntryGoal::with_default_heading(entry, plane.normal(), plan.standoff)?;
    let mut plan = *plan;
    plan.entry_pose = build_entry_pose(&goal)?;
    let ee_t_tip_cal = Transform::from_translation(cal.tip);
    let waypoints = plan_waypoints(&plan, &ee_t_tip_cal, cfg.waypoint_step)?;

    // Execute: align, then follow the straight advance.
    let home_ee = forward_kinematics(&cfg.model, &cfg.home_config);
    let mut q = cfg.home_config;
    let mut entry_ee_target = None;
    let mut start_ee = None;
    let mut end_ee = home_ee;
    for wp in &waypoints {
        match wp.phase {
            Phase::Aligning | Phase::StraightDrill => {
                q = move_to(cfg, &wp.ee_target, &q)?;
                let reached = forward_kinematics(&cfg.model, &q);
                if wp.phase == Phase::Aligning {
                    entry_ee_target = Some(wp.ee_target);
                    start_ee = Some(reached);
                }
                end_ee = reached;
            }
            Phase::CurvedDrill => break,
            _ => {}
        }
    }
    let (Some(entry_ee_target), Some(start_ee)) = (entry_ee_target, start_ee) else {
        return Err(Error::InvalidPlan("plan has no alignment waypoint".into()));
    };

    // Entry metrics in the ideal face frame.
    let tip_true = gt.ee_t_tip();
    let ideal = build_entry_pose(&EntryGoal::with_default_heading(
        gt.entry_point(),
        gt.face_normal(),
        plan.standoff,
    )?)?;
    let n = gt.face_normal();
    let e = gt.entry_point();
    let start_tip = start_ee * tip_true;
    let a0 = start_tip.translation;
    let dir = start_tip.axis(0);
    let approach = dir.dot(&n);
    if approach > -1e-6 {
        return Err(Error::DegenerateGeometry("drill does not advance into the face".into()));
    }
    let t_star = (e - a0).dot(&n) / approach;
    let crossing = a0 + dir * t_star;
    let offset = crossing - e;
    let entry_offset_y = offset.dot(&ideal.axis(1));
    let entry_offset_z = offset.dot(&ideal.axis(2));
    let end_tip = (end_ee * tip_true).translation;
    let straight_length_measured = (end_tip - crossing).dot(&dir);
    let straight_length_error = straight_length_measured - (plan.straight_travel - plan.standoff);
    let entry_position_error =
        (entry_offset_y.powi(2) + entry_offset_z.powi(2) + straight_length_error.powi(2)).sqrt();

    // Rotation as seen by the tracker between home and entry.
    let mut rng = stream(noise.seed, STREAM_TRACKING);
    let tracked = |ee: &Transform, rng: &mut ChaCha8Rng| {
        noise.perturb(&(gt.x_true * *ee * gt.z_true.inverse()), rng)
    };
    let tracked_home = tracked(&home_ee, &mut rng);
    let tracked_entry = tracked(&start_ee, &mut rng);
    let rotation_actual =
        rotation_angle_between(&tracked_home.rotation, &tracked_entry.rotation).to_degrees();
    let rotation_commanded =
        rotation_angle_between(&home_ee.rotation, &entry_ee_target.rotation).to_degrees();

    // The guide bends the tool off the held arm along the true tip frame.
    let arc_start = end_ee * tip_true;
    let k = cfg.arc_samples.max(3);
    let path: Vec<Vec3> = (0..k)
        .map(|i| {
            let s = plan.arc_length * i as f64 / (k - 1) as f64;
            (arc_start * arc_offset(plan.guide.radius, s)).translation
        })
        .collect();
    let radius_measured = fit_circle_radius(&path)?;

    Ok(TrialReport {
        seed: noise.seed,
        mount_angle: gt.mount_angle,
        entry_position_error,
        entry_offset_y,
        entry_offset_z,
        straight_length_measured,
        straight_length_error,
        rotation_goal: gt.mount_angle,
        rotation_commanded,
        rotation_actual,
        radius_measured,
    })
}

/// Runs trials with seeds `base.seed, base.seed + 1, ...` on worker threads.
/// Results come back ordered by seed.
pub fn run_trials(
    gt: &GroundTruth,
    base: &NoiseModel,
    plan: &DrillPlan,
    count: usize,
    cfg: &SimConfig,
) -> Result<Vec<TrialReport>> {
    let noises: Vec<NoiseModel> = (0..count as u64)
        .map(|i| NoiseModel {
            seed: base.seed.wrapping_add(i),
            ..*base
        })
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(count.max(1));
    let chunk = count.div_ceil(workers).max(1);
    let results: Vec<Result<Vec<TrialReport>>> = std::thread::scope(|s| {
        let handles: Vec<_> = noises
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|n| run_trial_with(gt, n, plan, cfg))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(count);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
