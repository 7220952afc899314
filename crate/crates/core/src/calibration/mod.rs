//! Solvers for the unknown transforms of the drilling setup: tool-tip pivot
//! offsets, the robot-world/hand-eye pair `AX = ZB`, and the digitized
//! specimen plane.

mod handeye;
mod pivot;
mod plane;

pub use handeye::{hand_eye_calibrate, hand_eye_calibrate_with, HandEyeOptions, HandEyePair, HandEyeResult};
pub use pivot::{pivot_calibrate, PivotResult, PivotSample};
pub use plane::{fit_plane, fit_plane_toward, Plane};

use crate::error::{Error, Result};
use crate::se3::{Rotation, Vec3};

/// Relative rotations smaller than this carry no usable axis (1°).
pub const MIN_MOTION_ANGLE: f64 = 1.0 * std::f64::consts::PI / 180.0;
/// Required spread between relative rotation axes (5°).
pub const MIN_AXIS_SPREAD: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Checks that the relative rotations `R_0ᵀ R_i` turn about at least two
/// axis lines separated by [`MIN_AXIS_SPREAD`].
pub(crate) fn check_rotation_variety<'a>(
    rotations: impl IntoIterator<Item = &'a Rotation>,
) -> Result<()> {
    let mut iter = rotations.into_iter();
    let Some(first) = iter.next() else {
        return Err(Error::InsufficientData { needed: 2, got: 0 });
    };
    let axes: Vec<Vec3> = iter
        .filter_map(|r| {
            let v = (first.inverse() * *r).log();
            let angle = v.norm();
            (angle >= MIN_MOTION_ANGLE).then(|| v / angle)
        })
        .collect();
    if axes.is_empty() {
        return Err(Error::DegenerateMotion(
            "no relative rotation exceeds 1°".into(),
        ));
    }
    let spread = axes
        .iter()
        .enumerate()
        .flat_map(|(i, a)| axes[i + 1..].iter().map(move |b| line_angle(a, b)))
        .fold(0.0_f64, f64::max);
    if spread < MIN_AXIS_SPREAD {
        return Err(Error::DegenerateMotion(format!(
            "rotation axes span only {:.3}°; at least 5° is required",
            spread.to_degrees()
        )));
    }
    Ok(())
}

/// Angle between two undirected lines with unit directions `a` and `b`.
fn line_angle(a: &Vec3, b: &Vec3) -> f64 {
    let c = a.cross(b).norm();
    let d = a.dot(b).abs();
    c.atan2(d)
}
