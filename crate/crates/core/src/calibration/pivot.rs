use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::check_rotation_variety;
use crate::error::{Error, Result};
use crate::se3::{Mat3, Rotation, Transform, Vec3};

/// Above this condition number of the stacked system the motion is
/// treated as degenerate.
pub const MAX_CONDITION: f64 = 1e6;

/// One captured tool pose while pivoting about a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotSample {
    pub rotation: Rotation,
    pub position: Vec3,
}

impl From<Transform> for PivotSample {
    fn from(t: Transform) -> Self {
        PivotSample {
            rotation: t.rotation,
            position: t.translation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotResult {
    /// Tip offset in the tool frame (mm).
    pub x_tip: [f64; 3],
    /// Pivot point in the reference frame of the samples (mm).
    pub x_pivot: [f64; 3],
    pub rms_residual: f64,
    pub condition_number: f64,
}

impl PivotResult {
    pub fn tip(&self) -> Vec3 {
        Vec3::from(self.x_tip)
    }

    pub fn pivot(&self) -> Vec3 {
        Vec3::from(self.x_pivot)
    }

    /// Tool-to-tip transform: identity rotation, `x_tip` translation.
    pub fn tip_transform(&self) -> Transform {
        Transform::from_translation(self.tip())
    }
}

/// Least-squares pivot calibration.
///
/// Solves the stacked system `[R_i | -I] [x_tip; x_pivot] = -p_i` with an
/// SVD of the tall matrix, so the conditioning is not squared.
pub fn pivot_calibrate(samples: &[PivotSample]) -> Result<PivotResult> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: samples.len(),
        });
    }
    check_rotation_variety(samples.iter().map(|s| &s.rotation))?;

    let n = samples.len();
    let mut a = DMatrix::<f64>::zeros(3 * n, 6);
    let mut b = DVector::<f64>::zeros(3 * n);
    for (i, s) in samples.iter().enumerate() {
        a.fixed_view_mut::<3, 3>(3 * i, 0)
            .copy_from(s.rotation.matrix());
        a.fixed_view_mut::<3, 3>(3 * i, 3)
            .copy_from(&(-Mat3::identity()));
        b.fixed_rows_mut::<3>(3 * i).copy_from(&(-s.position));
    }

    let svd = a.svd(true, true);
    let (max, min) = svd
        .singular_values
        .iter()
        .fold((0.0_f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition_number = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition_number > MAX_CONDITION {
        return Err(Error::DegenerateMotion(format!(
            "pivot system condition number {condition_number:.3e} exceeds {MAX_CONDITION:.0e}"
        )));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::DegenerateMatrix(e.to_string()))?;
    let tip = Vec3::new(x[0], x[1], x[2]);
    let pivot = Vec3::new(x[3], x[4], x[5]);

    let sq: f64 = samples
        .iter()
        .map(|s| (s.rotation * tip + s.position - pivot).norm_squared())
        .sum();
    Ok(PivotResult {
        x_tip: tip.into(),
        x_pivot: pivot.into(),
        rms_residual: (sq / n as f64).sqrt(),
        condition_number,
    })
}
