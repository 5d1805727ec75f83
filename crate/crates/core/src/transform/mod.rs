//! The d-plane transform `R_d`, its filtered back-projection inverse, and
//! consistency checkers.

mod backproject;
mod checks;
mod filter;
mod fourier;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, ChartSpec, Flat};
use crate::scene::{ConvexBody, GaussianBump, Point, Scene};

pub use backproject::{backproject, fbp_reconstruct, BackprojectReport, OUT_OF_RANGE_WARN_FRACTION};
pub use checks::{fourier_slice_check, moment_condition_check, moment_samples, MomentSample};
pub use filter::{apply_fractional_filter, filter_multiplier, rolloff, ROLLOFF_START};
pub use fourier::{ball_fourier, scene_fourier};

/// What a sinogram's values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// `R_d f`.
    Transform,
    /// Polychromatic measurement `P_d`.
    Measurement,
    /// Metal part `P_{d,MA}`.
    MetalTerm,
    /// Output of the fractional filter.
    Filtered,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Transform => "transform",
            Role::Measurement => "measurement",
            Role::MetalTerm => "metal_term",
            Role::Filtered => "filtered",
        }
    }
}

/// Values on a chart grid, stored row-major as `[direction][offset axes...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub chart: ChartSpec,
    pub role: Role,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn new(chart: ChartSpec, role: Role, values: Vec<f64>) -> Result<Self> {
        chart.validate()?;
        if values.len() != chart.len() {
            return Err(Error::input(format!(
                "sinogram has {} values, chart needs {}",
                values.len(),
                chart.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sinogram contains non-finite values".into()));
        }
        Ok(Self { chart, role, values })
    }

    pub fn zeros(chart: ChartSpec, role: Role) -> Self {
        let len = chart.len();
        Self {
            chart,
            role,
            values: vec![0.0; len],
        }
    }

    /// Offset profile of one direction sample.
    pub fn row(&self, dir: usize) -> &[f64] {
        let m = self.chart.offsets_per_direction();
        &self.values[dir * m..(dir + 1) * m]
    }

    pub fn map(&self, role: Role, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            chart: self.chart.clone(),
            role,
            values: self.values.par_iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(self.role, |v| a * v)
    }
}

/// Cell-centred image on an axis-aligned grid. Two-dimensional images have
/// `shape[2] == 1`; values are row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub dim: usize,
    pub origin: Point,
    pub spacing: [f64; 3],
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(dim: usize, origin: Point, spacing: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        crate::scene::check_dim(dim)?;
        if spacing[..dim].iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::config("image spacing must be positive"));
        }
        if shape[..dim].contains(&0) || (dim == 2 && shape[2] != 1) {
            return Err(Error::config("invalid image shape"));
        }
        let len = shape.iter().product();
        Ok(Self {
            dim,
            origin,
            spacing,
            shape,
            values: vec![0.0; len],
        })
    }

    /// `count^dim` cells covering `[-extent, extent]^dim`; `origin` is the
    /// centre of the first cell.
    pub fn centered(dim: usize, count: usize, extent: f64) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::config("image extent must be positive"));
        }
        let h = 2.0 * extent / count.max(1) as f64;
        let first = -extent + 0.5 * h;
        let mut origin = Point::zeros();
        let mut shape = [1; 3];
        for i in 0..dim {
            origin[i] = first;
            shape[i] = count;
        }
        Self::new(dim, origin, [h; 3], shape)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.shape[2];
        let j = (idx / self.shape[2]) % self.shape[1];
        [idx / (self.shape[1] * self.shape[2]), j, k]
    }

    pub fn point(&self, idx: usize) -> Point {
        let ijk = self.unravel(idx);
        let mut p = Point::zeros();
        for a in 0..self.dim {
            p[a] = self.origin[a] + ijk[a] as f64 * self.spacing[a];
        }
        p
    }

    /// Volume of one cell.
    pub fn cell(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    /// Fill with `f` evaluated at the cell centres.
    pub fn sample(mut self, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let pts: Vec<Point> = (0..self.len()).map(|i| self.point(i)).collect();
        self.values = pts.par_iter().map(&f).collect();
        self
    }

    /// Nearest cell index of a point, if inside the grid.
    pub fn nearest(&self, x: &Point) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..self.dim {
            let f = ((x[a] - self.origin[a]) / self.spacing[a]).round();
            if f < 0.0 || f >= self.shape[a] as f64 {
                return None;
            }
            ijk[a] = f as usize;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    /// Multilinear interpolation between cell centres; `None` outside the
    /// hull of the centres.
    pub fn interpolate(&self, x: &Point) -> Option<f64> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let f = (x[a] - self.origin[a]) / self.spacing[a];
            let m = self.shape[a];
            if !(f >= 0.0 && f <= (m - 1) as f64) || m < 2 {
                return None;
            }
            let i = (f.floor() as usize).min(m - 2);
            base[a] = i;
            frac[a] = f - i as f64;
        }
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut ijk = base;
            let mut w = 1.0;
            for a in 0..self.dim {
                if c >> a & 1 == 1 {
                    ijk[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.index(ijk[0], ijk[1], ijk[2])];
            }
        }
        Some(acc)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            ..self.clone()
        }
    }
}

fn chart_matches(scene_dim: usize, kind: ChartKind) -> Result<()> {
    if kind.n() != scene_dim {
        return Err(Error::config(format!(
            "chart ({}) does not act on {scene_dim}-dimensional scenes",
            kind.label()
        )));
    }
    Ok(())
}

fn body_section(body: &ConvexBody, flat: &Flat) -> f64 {
    let q = body.shape();
    let r = flat.offset() - body.center();
    let qr = q * r;
    let c = r.dot(&qr) - 1.0;
    let frame = flat.frame();
    match frame.len() {
        1 => {
            let w = frame[0];
            let a = w.dot(&(q * w));
            let b = w.dot(&qr);
            let disc = b * b - a * c;
            if disc > 0.0 {
                2.0 * disc.sqrt() / a
            } else {
                0.0
            }
        }
        _ => {
            let (a, b) = restrict(q, &qr, frame);
            let Some(ainv) = a.try_inverse() else {
                return 0.0;
            };
            let m = c - b.dot(&(ainv * b));
            if m < 0.0 {
                std::f64::consts::PI * (-m) / a.determinant().sqrt()
            } else {
                0.0
            }
        }
    }
}

/// `(W^T M W, W^T v)` for a two-vector frame `W`.
fn restrict(m: &nalgebra::Matrix3<f64>, v: &Point, frame: &[Point]) -> (Matrix2<f64>, Vector2<f64>) {
    let mw0 = m * frame[0];
    let mw1 = m * frame[1];
    let a = Matrix2::new(
        frame[0].dot(&mw0),
        frame[0].dot(&mw1),
        frame[1].dot(&mw0),
        frame[1].dot(&mw1),
    );
    (a, Vector2::new(frame[0].dot(v), frame[1].dot(v)))
}

fn gaussian_section(g: &GaussianBump, flat: &Flat) -> f64 {
    let p = g.precision();
    let r = g_offset(g, flat.offset());
    let pr = p * r;
    let rpr = r.dot(&pr);
    let frame = flat.frame();
    let two_pi = 2.0 * std::f64::consts::PI;
    match frame.len() {
        1 => {
            let w = frame[0];
            let a = w.dot(&(p * w));
            let b = w.dot(&pr);
            g.amplitude() * (two_pi / a).sqrt() * (-0.5 * (rpr - b * b / a)).exp()
        }
        _ => {
            let (a, b) = restrict(p, &pr, frame);
            let ainv = a.try_inverse().expect("precision restricted to a plane is definite");
            g.amplitude() * two_pi / a.determinant().sqrt()
                * (-0.5 * (rpr - b.dot(&(ainv * b)))).exp()
        }
    }
}

fn g_offset(g: &GaussianBump, x: &Point) -> Point {
    let mut w = x - g.center();
    if g.dim() == 2 {
        w.z = 0.0;
    }
    w
}

/// Exact integral over the flat of `chi_D` plus, when asked, the Gaussian
/// background.
pub fn forward_analytic(scene: &Scene, flat: &Flat, include_background: bool) -> Result<f64> {
    chart_matches(scene.dim(), flat.kind())?;
    let mut total: f64 = scene.bodies().iter().map(|b| body_section(b, flat)).sum();
    if include_background {
        total += scene
            .background()
            .iter()
            .map(|g| gaussian_section(g, flat))
            .sum::<f64>();
    }
    Ok(total)
}

/// Gaussian components are truncated at this many standard deviations.
pub const QUADRATURE_REACH: f64 = 8.0;

/// Reach, in standard deviations, past which a bump's data may be cut off
/// by the chart without a warning (about 1% of its peak).
const TRUNCATION_WARN_REACH: f64 = 3.0;

/// Midpoint-rule integral of the total attenuation over the flat, restricted
/// to the part of the flat inside the scene's bounding box.
pub fn forward_quadrature(scene: &Scene, flat: &Flat, step: f64) -> Result<f64> {
    chart_matches(scene.dim(), flat.kind())?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::input(format!("quadrature step must be positive, got {step}")));
    }
    let Some((lo, hi)) = scene.bounding_box(QUADRATURE_REACH) else {
        return Ok(0.0);
    };
    let dim = scene.dim();
    let frame = flat.frame();
    let base = *flat.offset();
    if frame.len() == 1 {
        let w = frame[0];
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..dim {
            if w[a].abs() < 1e-300 {
                if base[a] < lo[a] || base[a] > hi[a] {
                    return Ok(0.0);
                }
                continue;
            }
            let (u, v) = ((lo[a] - base[a]) / w[a], (hi[a] - base[a]) / w[a]);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
        if t1 <= t0 {
            return Ok(0.0);
        }
        let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let terms: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| scene.attenuation(&(base + w * (t0 + (i as f64 + 0.5) * h))))
            .collect();
        let sum: f64 = terms.iter().sum();
        Ok(sum * h)
    } else {
        let center = (lo + hi) * 0.5;
        let radius = (hi - lo).norm() * 0.5;
        let c = [frame[0].dot(&(center - base)), frame[1].dot(&(center - base))];
        let n = ((2.0 * radius) / step).ceil().max(1.0) as usize;
        let h = 2.0 * radius / n as f64;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let t1 = c[0] - radius + (i as f64 + 0.5) * h;
                (0..n)
                    .map(|j| {
                        let t2 = c[1] - radius + (j as f64 + 0.5) * h;
                        scene.attenuation(&(base + frame[0] * t1 + frame[1] * t2))
                    })
                    .sum::<f64>()
            })
            .collect();
        let sum: f64 = rows.iter().sum();
        Ok(sum * h * h)
    }
}

/// `R_d f` on every grid flat of the chart.
pub fn forward_sinogram(scene: &Scene, chart: &ChartSpec, include_background: bool) -> Result<Sinogram> {
    chart.validate()?;
    chart_matches(scene.dim(), chart.kind)?;
    let support = if include_background { scene.clone() } else { scene.metal_only() };
    if let Some((lo, hi)) = support.bounding_box(TRUNCATION_WARN_REACH) {
        let reach = lo.abs().sup(&hi.abs()).norm();
        if reach > 0.9 * chart.offset_extent {
            log::warn!(
                "scene reaches {reach:.3}, beyond 90% of the offset extent {}",
                chart.offset_extent
            );
        }
    }
    let dirs = chart.directions();
    let per = chart.offsets_per_direction();
    let values: Vec<f64> = (0..chart.len())
        .into_par_iter()
        .map(|idx| {
            let flat = chart.grid_flat(&dirs[idx / per], idx % per);
            forward_analytic(scene, &flat, include_background).expect("chart checked")
        })
        .collect();
    Sinogram::new(chart.clone(), Role::Transform, values)
}
