use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::scene::{Point, Scene};

/// Bessel `J1` from its periodic integral representation; the trapezoid rule
/// converges geometrically.
fn bessel_j1(x: f64) -> f64 {
    let n = 64 + (4.0 * x.abs()).ceil() as usize;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let t = i as f64 * h;
            (t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / n as f64
}

/// Fourier transform of the indicator of a centred ball of radius `r` in
/// dimension `dim`, at frequency magnitude `k`.
pub fn ball_fourier(dim: usize, r: f64, k: f64) -> f64 {
    let kr = k * r;
    if dim == 2 {
        if kr < 1e-8 {
            PI * r * r
        } else {
            2.0 * PI * r * r * bessel_j1(kr) / kr
        }
    } else if kr < 1e-3 {
        4.0 / 3.0 * PI * r.powi(3) * (1.0 - kr * kr / 10.0)
    } else {
        4.0 * PI * (kr.sin() - kr * kr.cos()) / k.powi(3)
    }
}

/// `f^(xi) = int e^{-i x.xi} f(x) dx` of the scene: unit-indicator
/// ellipsoids plus, when asked, the Gaussian background.
pub fn scene_fourier(scene: &Scene, xi: &Point, include_background: bool) -> Complex64 {
    let dim = scene.dim();
    let mut total = Complex64::new(0.0, 0.0);
    for b in scene.bodies() {
        let k = xi.dot(&(b.shape_inv() * xi)).max(0.0).sqrt();
        let det = if dim == 2 {
            let q = b.shape();
            q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)]
        } else {
            b.shape().determinant()
        };
        let phase = Complex64::from_polar(1.0, -b.center().dot(xi));
        total += phase * (ball_fourier(dim, 1.0, k) / det.sqrt());
    }
    if include_background {
        for g in scene.background() {
            let phase = Complex64::from_polar(1.0, -g.center().dot(xi));
            total += phase * (g.mass() * (-0.5 * xi.dot(&(g.covariance() * xi))).exp());
        }
    }
    total
}
