//! Constant-curvature model of the concentric tube steerable drill and its
//! drilling plan.
//!
//! The curved steering guide bends in the tool XY plane: the tangent turns
//! about tool +Z by `-φ` so that the tip displaces toward tool -Y.

mod procedure;

pub use procedure::{step_procedure, Event, Phase, Procedure, ProcedureState, Rejected};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{Rotation, Transform, Vec3};

/// Guide radius of the curved steering guide (mm).
pub const DEFAULT_RADIUS: f64 = 69.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringGuide {
    pub radius: f64,
}

impl Default for SteeringGuide {
    fn default() -> Self {
        SteeringGuide {
            radius: DEFAULT_RADIUS,
        }
    }
}

/// Parameters of one drilling execution. Lengths in mm, speeds in mm/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrillPlan {
    pub standoff: f64,
    /// Straight advance including the standoff.
    pub straight_travel: f64,
    pub straight_speed: f64,
    pub arc_length: f64,
    pub arc_speed: f64,
    pub drill_rpm: f64,
    pub retract_rpm: f64,
    pub guide: SteeringGuide,
    /// Tool tip pose at the start of the straight advance (world).
    pub entry_pose: Transform,
}

impl DrillPlan {
    /// 13 mm straight (plus standoff) at 1 mm/s, 35 mm of arc at 2.5 mm/s,
    /// 8250 rpm while drilling and 1000 rpm while retracting.
    pub fn new(entry_pose: Transform) -> Self {
        Self::with_standoff(entry_pose, 5.0)
    }

    pub fn with_standoff(entry_pose: Transform, standoff: f64) -> Self {
        DrillPlan {
            standoff,
            straight_travel: 13.0 + standoff,
            straight_speed: 1.0,
            arc_length: 35.0,
            arc_speed: 2.5,
            drill_rpm: 8250.0,
            retract_rpm: 1000.0,
            guide: SteeringGuide::default(),
            entry_pose,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("straight_travel", self.straight_travel),
            ("straight_speed", self.straight_speed),
            ("arc_length", self.arc_length),
            ("arc_speed", self.arc_speed),
            ("drill_rpm", self.drill_rpm),
            ("retract_rpm", self.retract_rpm),
            ("radius", self.guide.radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidPlan(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.standoff.is_finite() && self.standoff >= 0.0) {
            return Err(Error::InvalidPlan(format!(
                "standoff must be non-negative, got {}",
                self.standoff
            )));
        }
        if self.arc_length >= self.guide.radius * std::f64::consts::PI {
            return Err(Error::InvalidPlan(format!(
                "arc length {} exceeds a half circle of radius {}",
                self.arc_length, self.guide.radius
            )));
        }
        Ok(())
    }

    /// Time spent advancing in material: straight plus curved phases (s).
    pub fn drilling_time(&self) -> f64 {
        self.straight_travel / self.straight_speed + self.arc_length / self.arc_speed
    }
}

fn check_range(name: &str, value: f64, max: f64) -> Result<()> {
    if !(0.0..=max).contains(&value) {
        return Err(Error::OutOfRange(format!("{name} {value} not in [0, {max}]")));
    }
    Ok(())
}

/// Entry pose advanced `depth` mm along its own +X axis.
pub fn tip_pose_straight(plan: &DrillPlan, depth: f64) -> Result<Transform> {
    check_range("straight depth", depth, plan.straight_travel)?;
    Ok(plan.entry_pose * Transform::from_translation(Vec3::new(depth, 0.0, 0.0)))
}

/// Arc pose relative to the start of the arc for arc length `s`.
pub fn arc_offset(radius: f64, s: f64) -> Transform {
    let phi = s / radius;
    Transform::new(
        Rotation::about_z(-phi),
        Vec3::new(radius * phi.sin(), -radius * (1.0 - phi.cos()), 0.0),
    )
}

/// Tip pose after `s` mm along the curved guide, starting from the end of the
/// straight phase.
pub fn tip_pose_curved(plan: &DrillPlan, s: f64) -> Result<Transform> {
    check_range("arc length", s, plan.arc_length)?;
    Ok(tip_pose_straight(plan, plan.straight_travel)? * arc_offset(plan.guide.radius, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Seconds since arrival at the entry pose.
    pub time: f64,
    pub phase: Phase,
    /// Commanded end-effector pose (world).
    pub ee_target: Transform,
    /// Expected tool tip pose (world).
    pub tip_target: Transform,
    pub rpm: f64,
}

/// `k` evenly spaced samples in `(0, length]` no further apart than `step`.
fn samples(length: f64, step: f64) -> impl Iterator<Item = f64> {
    let k = ((length / step).ceil() as usize).max(1);
    (1..=k).map(move |i| length * i as f64 / k as f64)
}

/// Discretises the procedure from arrival at the entry pose to the return.
///
/// While the straight tube advances, the end-effector follows the tip:
/// `ee = tip · ee_T_tip⁻¹`. During the curved phases the arm holds still
/// at the end of the straight advance and only the guide moves.
pub fn plan_waypoints(plan: &DrillPlan, ee_t_tip: &Transform, step: f64) -> Result<Vec<Waypoint>> {
    plan.validate()?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::OutOfRange(format!("step must be positive, got {step}")));
    }
    let tip_to_ee = ee_t_tip.inverse();
    let mut out = Vec::new();
    let mut time = 0.0;
    let mut push = |time: f64, phase, tip: Transform, ee: Option<Transform>, rpm| {
        out.push(Waypoint {
            time,
            phase,
            ee_target: ee.unwrap_or(tip * tip_to_ee),
            tip_target: tip,
            rpm,
        });
    };

    let entry = plan.entry_pose;
    push(time, Phase::Aligning, entry, None, 0.0);
    push(time, Phase::SpinUp, entry, None, plan.drill_rpm);

    let mut last = 0.0;
    for d in samples(plan.straight_travel, step) {
        time += (d - last) / plan.straight_speed;
        last = d;
        push(time, Phase::StraightDrill, tip_pose_straight(plan, d)?, None, plan.drill_rpm);
    }
    let arc_start = tip_pose_straight(plan, plan.straight_travel)?;
    let held = arc_start * tip_to_ee;

    last = 0.0;
    for s in samples(plan.arc_length, step) {
        time += (s - last) / plan.arc_speed;
        last = s;
        push(time, Phase::CurvedDrill, tip_pose_curved(plan, s)?, Some(held), plan.drill_rpm);
    }
    let arc_end = tip_pose_curved(plan, plan.arc_length)?;
    push(time, Phase::SpinDown, arc_end, Some(held), plan.retract_rpm);

    // Retraction reverses the drilled geometry at the advance speeds.
    let mut pos = plan.arc_length;
    for s in samples(plan.arc_length, step) {
        let target = plan.arc_length - s;
        time += (pos - target) / plan.arc_speed;
        pos = target;
        push(time, Phase::RetractCurved, tip_pose_curved(plan, target)?, Some(held), plan.retract_rpm);
    }
    let mut pos = plan.straight_travel;
    for d in samples(plan.straight_travel, step) {
        let target = plan.straight_travel - d;
        time += (pos - target) / plan.straight_speed;
        pos = target;
        push(time, Phase::RetractStraight, tip_pose_straight(plan, target)?, None, plan.retract_rpm);
    }
    push(time, Phase::ReturnHome, entry, None, 0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{pose_difference, rotation_angle_between};
    use std::f64::consts::FRAC_PI_2;

    fn plan() -> DrillPlan {
        let entry = Transform::new(
            Rotation::about_y(0.4) * Rotation::about_x(-0.2),
            Vec3::new(600.0, 20.0, 250.0),
        );
        DrillPlan::new(entry)
    }

    #[test]
    fn straight_endpoints() {
        let p = plan();
        assert_eq!(tip_pose_straight(&p, 0.0).unwrap(), p.entry_pose);
        let end = tip_pose_straight(&p, 18.0).unwrap();
        let d = end.translation - p.entry_pose.translation;
        assert!((d - p.entry_pose.axis(0) * 18.0).norm() < 1e-12);
        assert_eq!(end.rotation, p.entry_pose.rotation);
        let mid = tip_pose_straight(&p, 9.0).unwrap().translation;
        let dm = mid - p.entry_pose.translation;
        assert!(dm.cross(&d).norm() < 1e-9);
        assert!((dm.norm() - 9.0).abs() < 1e-12);
        assert!(tip_pose_straight(&p, 18.5).is_err());
        assert!(tip_pose_straight(&p, -0.1).is_err());
    }

    #[test]
    fn arc_start_matches_straight_end() {
        let p = plan();
        assert_eq!(
            tip_pose_curved(&p, 0.0).unwrap(),
            tip_pose_straight(&p, p.straight_travel).unwrap()
        );
        assert!(matches!(tip_pose_curved(&p, 35.1), Err(Error::OutOfRange(_))));
    }

    /// Unit-speed planar curve with curvature -1/r integrated by RK4.
    fn integrate_arc(r: f64, length: f64, steps: usize) -> (Vec3, f64) {
        let h = length / steps as f64;
        let f = |heading: f64| Vec3::new(heading.cos(), heading.sin(), 0.0);
        let mut p = Vec3::zeros();
        let mut heading = 0.0_f64;
        for _ in 0..steps {
            let k1 = f(heading);
            let k2 = f(heading - 0.5 * h / r);
            let k4 = f(heading - h / r);
            p += (k1 + k2 * 4.0 + k4) * (h / 6.0);
            heading -= h / r;
        }
        (p, heading)
    }

    #[test]
    fn quarter_arc_matches_integration() {
        let r = DEFAULT_RADIUS;
        let s = r * FRAC_PI_2;
        let local = arc_offset(r, s);
        assert!((local.translation - Vec3::new(r, -r, 0.0)).norm() < 1e-12);
        let (p, heading) = integrate_arc(r, s, 2000);
        assert!((local.translation - p).norm() < 1e-9, "{}", (local.translation - p).norm());
        assert!((heading + FRAC_PI_2).abs() < 1e-12);
        let tangent = local.axis(0);
        assert!((tangent - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn default_arc_end_position() {
        let p = plan();
        let r = 69.5_f64;
        let phi = 35.0 / r;
        let expected = Vec3::new(r * phi.sin(), -r * (1.0 - phi.cos()), 0.0);
        let local = tip_pose_straight(&p, 18.0).unwrap().inverse() * tip_pose_curved(&p, 35.0).unwrap();
        assert!((local.translation - expected).norm() < 1e-12);
        let (q, _) = integrate_arc(r, 35.0, 2000);
        assert!((local.translation - q).norm() < 1e-9);
        assert!((rotation_angle_between(&Rotation::identity(), &local.rotation) - phi).abs() < 1e-12);
    }

    #[test]
    fn chord_converges_to_arc_length() {
        let p = plan();
        let ds = 0.01;
        let mut prev = tip_pose_curved(&p, 0.0).unwrap().translation;
        let n = (p.arc_length / ds) as usize;
        for i in 1..=n {
            let cur = tip_pose_curved(&p, i as f64 * ds).unwrap().translation;
            assert!(((cur - prev).norm() - ds).abs() < 1e-6);
            prev = cur;
        }
    }

    #[test]
    fn curved_path_is_planar() {
        let p = plan();
        let start = tip_pose_curved(&p, 0.0).unwrap();
        let z = start.axis(2);
        for i in 0..=100 {
            let pt = tip_pose_curved(&p, 0.35 * i as f64).unwrap().translation;
            assert!((pt - start.translation).dot(&z).abs() < 1e-9);
        }
    }

    #[test]
    fn plan_validation() {
        let mut p = plan();
        assert!(p.validate().is_ok());
        p.arc_length = 300.0;
        assert!(p.validate().is_err());
        let mut p = plan();
        p.arc_speed = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn waypoint_timing_and_rpm() {
        let p = plan();
        let tip = Transform::from_translation(Vec3::new(187.5, 0.0, 42.0));
        let wps = plan_waypoints(&p, &tip, 1.0).unwrap();
        assert_eq!(wps[0].rpm, 0.0);
        assert_eq!(wps[0].phase, Phase::Aligning);
        let curved_end = wps
            .iter()
            .filter(|w| w.phase == Phase::CurvedDrill)
            .last()
            .unwrap();
        assert!((curved_end.time - 32.0).abs() < 1e-12);
        assert!((p.drilling_time() - 32.0).abs() < 1e-12);
        assert!(wps
            .iter()
            .filter(|w| w.phase == Phase::StraightDrill)
            .all(|w| w.rpm == 8250.0));
        assert!(wps
            .iter()
            .filter(|w| matches!(w.phase, Phase::RetractCurved | Phase::RetractStraight))
            .all(|w| w.rpm == 1000.0));
        // retraction mirrors the advance, total 64 s
        assert!((wps.last().unwrap().time - 64.0).abs() < 1e-9);
        for w in wps.windows(2) {
            assert!(w[1].time >= w[0].time);
        }
        for w in &wps {
            let (dr, dt) = pose_difference(&(w.ee_target * tip), &w.tip_target);
            let on_tube = !matches!(
                w.phase,
                Phase::CurvedDrill | Phase::SpinDown | Phase::RetractCurved
            );
            if on_tube {
                assert!(dr < 1e-12 && dt < 1e-9);
            }
        }
    }

    #[test]
    fn coarse_step_gives_single_waypoint_phases() {
        let p = plan();
        let wps = plan_waypoints(&p, &Transform::identity(), 100.0).unwrap();
        let count = |ph| wps.iter().filter(|w| w.phase == ph).count();
        assert_eq!(count(Phase::StraightDrill), 1);
        assert_eq!(count(Phase::CurvedDrill), 1);
        assert!(plan_waypoints(&p, &Transform::identity(), 0.0).is_err());
    }
}
