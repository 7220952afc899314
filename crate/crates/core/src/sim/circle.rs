use nalgebra::{DMatrix, DVector};

use crate::calibration::fit_plane;
use crate::error::{Error, Result};
use crate::se3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec3,
    /// Unit normal of the fitted bend plane.
    pub normal: Vec3,
    pub radius: f64,
}

/// Algebraic (Kåsa) circle fit after projecting onto the best-fit plane.
pub fn fit_circle(points: &[Vec3]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let plane = fit_plane(points)?;
    let normal = plane.normal();
    let origin = plane.point();
    let seed = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = normal.cross(&seed).normalize();
    let v = normal.cross(&u);

    // x² + y² = 2 a x + 2 b y + c
    let n = points.len();
    let mut m = DMatrix::<f64>::zeros(n, 3);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, p) in points.iter().enumerate() {
        let d = p - origin;
        let (x, y) = (d.dot(&u), d.dot(&v));
        m[(i, 0)] = 2.0 * x;
        m[(i, 1)] = 2.0 * y;
        m[(i, 2)] = 1.0;
        rhs[i] = x * x + y * y;
    }
    let svd = m.svd(true, true);
    let sv = &svd.singular_values;
    let (hi, lo) = sv
        .iter()
        .fold((0.0_f64, f64::INFINITY), |(h, l), &s| (h.max(s), l.min(s)));
    if lo <= 1e-12 * hi {
        return Err(Error::DegenerateGeometry("points do not determine a circle".into()));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateMatrix(e.to_string()))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    let r2 = c + a * a + b * b;
    if !(r2 > 0.0) {
        return Err(Error::DegenerateGeometry("non-positive squared radius".into()));
    }
    Ok(Circle {
        center: origin + u * a + v * b,
        normal,
        radius: r2.sqrt(),
    })
}

/// Radius of curvature of a drilled path (mm).
pub fn fit_circle_radius(points: &[Vec3]) -> Result<f64> {
    fit_circle(points).map(|c| c.radius)
}
