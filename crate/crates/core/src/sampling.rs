//! Direction sampling on the half-circle and the upper half-sphere.

use nalgebra::Matrix3;

use crate::scene::Point;

/// `pi (3 - sqrt 5)`.
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Fibonacci lattice on the open upper half-sphere `z > 0`.
///
/// Heights are the cell midpoints `(k + 1/2) / K`, so the mean of the
/// samples has `z = 1/2` exactly.
pub fn fibonacci_hemisphere(count: usize) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let z = (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = k as f64 * GOLDEN_ANGLE;
            Point::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Uniform angles `k pi / K` on `[0, pi)`.
pub fn half_circle_angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| k as f64 * std::f64::consts::PI / count as f64)
        .collect()
}

fn skew(v: &Point) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Orthonormal pair `(e1, e2)` spanning `w^perp` with `e1 x e2 = w`.
///
/// The frame is carried from the reference direction `-y`, where it is
/// `(x, z)`, by the minimal rotation onto `w`. This puts `(1,0,0), (0,1,0)`
/// at the north pole and `(0,1,0), (0,0,1)` at `w = (1,0,0)`; the field is
/// continuous everywhere except at `w = +y`.
pub fn stable_frame(omega: &Point) -> (Point, Point) {
    let reference = Point::new(0.0, -1.0, 0.0);
    let c = reference.dot(omega);
    let rotation = if 1.0 + c < 1e-12 {
        // half turn about z
        Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0)
    } else {
        let k = skew(&reference.cross(omega));
        Matrix3::identity() + k + k * k / (1.0 + c)
    };
    // re-orthogonalise against round-off near the singular direction
    let rx = rotation * Point::x();
    let e1 = (rx - omega * omega.dot(&rx)).normalize();
    (e1, omega.cross(&e1))
}
