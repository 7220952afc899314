use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    /// Unit normal, oriented toward the reference point used in the fit.
    pub normal: [f64; 3],
    /// Centroid of the samples (mm).
    pub point: [f64; 3],
    /// RMS point-to-plane distance (mm).
    pub rms_distance: f64,
}

impl Plane {
    pub fn normal(&self) -> Vec3 {
        Vec3::from(self.normal)
    }

    pub fn point(&self) -> Vec3 {
        Vec3::from(self.point)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point()).dot(&self.normal())
    }
}

/// Least-squares plane with the normal oriented toward the origin.
pub fn fit_plane(points: &[Vec3]) -> Result<Plane> {
    fit_plane_toward(points, &Vec3::zeros())
}

/// Least-squares plane through `points`.
///
/// The normal is the right singular vector of the smallest singular value
/// of the centred point matrix, flipped if needed so that `reference` lies
/// on its positive side.
pub fn fit_plane_toward(points: &[Vec3], reference: &Vec3) -> Result<Plane> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let centroid = points.iter().sum::<Vec3>() / n as f64;
    let centred = DMatrix::from_fn(n, 3, |r, c| points[r][c] - centroid[c]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    if sv[order[0]] == 0.0 || sv[order[1]] < 1e-9 * sv[order[0]] {
        return Err(Error::DegenerateGeometry(
            "points are collinear or coincident".into(),
        ));
    }
    let row = v_t.row(order[2]);
    let mut normal = Vec3::new(row[0], row[1], row[2]).normalize();
    if (reference - centroid).dot(&normal) < 0.0 {
        normal = -normal;
    }
    let sq: f64 = points
        .iter()
        .map(|p| (p - centroid).dot(&normal).powi(2))
        .sum();
    Ok(Plane {
        normal: normal.into(),
        point: centroid.into(),
        rms_distance: (sq / n as f64).sqrt(),
    })
}
