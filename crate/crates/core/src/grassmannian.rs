//! Charts on the affine Grassmannian `G(d,n)` for `(n,d)` in
//! `{(2,1), (3,1), (3,2)}`.
//!
//! A flat is stored twice: as an orthonormal frame of its direction space
//! `sigma` plus an offset `x'' in sigma^perp`, and as chart parameters.
//! Hyperplane charts use `(w, s)` with the normal canonicalised to
//! `w_last >= 0` (ties broken lexicographically), and a line in the plane
//! with normal `(cos theta, sin theta)` has frame `(sin theta, -cos theta)`
//! so that frame and normal are right-handed. The line chart in `R^3`
//! uses the canonicalised direction `w` and offset coordinates `u` in the
//! frame returned by [`stable_frame`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{fibonacci_hemisphere, half_circle_angles, stable_frame};
use crate::scene::Point;

const FRAME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    /// Lines in the plane (`n = 2, d = 1`).
    #[serde(rename = "2,1")]
    Line2,
    /// Lines in space (`n = 3, d = 1`).
    #[serde(rename = "3,1")]
    Line3,
    /// Planes in space (`n = 3, d = 2`).
    #[serde(rename = "3,2")]
    Plane3,
}

impl ChartKind {
    pub fn from_nd(n: usize, d: usize) -> Result<Self> {
        match (n, d) {
            (2, 1) => Ok(ChartKind::Line2),
            (3, 1) => Ok(ChartKind::Line3),
            (3, 2) => Ok(ChartKind::Plane3),
            _ => Err(Error::config(format!("unsupported (n, d) = ({n}, {d})"))),
        }
    }

    pub fn n(self) -> usize {
        match self {
            ChartKind::Line2 => 2,
            ChartKind::Line3 | ChartKind::Plane3 => 3,
        }
    }

    pub fn d(self) -> usize {
        match self {
            ChartKind::Line2 | ChartKind::Line3 => 1,
            ChartKind::Plane3 => 2,
        }
    }

    /// Dimension of the offset space `sigma^perp`.
    pub fn codim(self) -> usize {
        self.n() - self.d()
    }

    pub fn is_hyperplane(self) -> bool {
        self.codim() == 1
    }

    /// `N(d,n) = (d+1)(n-d)`, the dimension of `G(d,n)`.
    pub fn grassmannian_dim(self) -> usize {
        (self.d() + 1) * (self.n() - self.d())
    }

    /// Normalisation of the back-projection,
    /// `C(d,n) = (4 pi)^(d/2) Gamma(n/2) / Gamma((n-d)/2)`.
    pub fn backprojection_constant(self) -> f64 {
        let (n, d) = (self.n() as f64, self.d() as f64);
        (4.0 * std::f64::consts::PI).powf(d / 2.0) * gamma(n / 2.0) / gamma((n - d) / 2.0)
    }

    pub fn label(self) -> &'static str {
        match self {
            ChartKind::Line2 => "2,1",
            ChartKind::Line3 => "3,1",
            ChartKind::Plane3 => "3,2",
        }
    }
}

/// Gamma function at the positive half-integers and integers used by the
/// supported charts.
fn gamma(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    debug_assert!((2.0 * x - twice).abs() < 1e-12 && twice >= 1.0);
    let mut k = twice as i64;
    let mut acc = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    // Gamma(k/2) = (k/2 - 1) Gamma(k/2 - 1)
    while k > 2 {
        k -= 2;
        acc *= k as f64 / 2.0;
    }
    acc
}

/// Sampling layout of a chart: direction samples times a uniform,
/// cell-centred offset grid on `[-extent, extent]` per offset axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub direction_count: usize,
    pub offset_counts: Vec<usize>,
    pub offset_extent: f64,
}

/// One sampled direction: the frame of `sigma`, a basis of `sigma^perp`
/// used for offset coordinates, and its quadrature weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSample {
    /// Chart angle for `(2,1)`; `None` otherwise.
    pub theta: Option<f64>,
    /// Normal of the hyperplane, or direction of the line for `(3,1)`.
    pub omega: Point,
    pub frame: Vec<Point>,
    pub complement: Vec<Point>,
    pub weight: f64,
}

impl ChartSpec {
    pub fn new(
        kind: ChartKind,
        direction_count: usize,
        offset_counts: Vec<usize>,
        offset_extent: f64,
    ) -> Result<Self> {
        let spec = Self {
            kind,
            direction_count,
            offset_counts,
            offset_extent,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square offset grid with `offsets` samples per axis.
    pub fn uniform(kind: ChartKind, direction_count: usize, offsets: usize, extent: f64) -> Result<Self> {
        Self::new(kind, direction_count, vec![offsets; kind.codim()], extent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction_count < 2 {
            return Err(Error::config(format!(
                "direction_count must be >= 2, got {}",
                self.direction_count
            )));
        }
        if self.offset_counts.len() != self.kind.codim() {
            return Err(Error::config(format!(
                "chart ({}) needs {} offset counts, got {}",
                self.kind.label(),
                self.kind.codim(),
                self.offset_counts.len()
            )));
        }
        if self.offset_counts.iter().any(|&m| m < 2) {
            return Err(Error::config("offset counts must be >= 2"));
        }
        if !(self.offset_extent > 0.0) || !self.offset_extent.is_finite() {
            return Err(Error::config("offset_extent must be positive"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.kind.n()
    }

    pub fn d(&self) -> usize {
        self.kind.d()
    }

    pub fn backprojection_constant(&self) -> f64 {
        self.kind.backprojection_constant()
    }

    pub fn offset_spacing(&self, axis: usize) -> f64 {
        2.0 * self.offset_extent / self.offset_counts[axis] as f64
    }

    pub fn offset_coords(&self, axis: usize) -> Vec<f64> {
        let h = self.offset_spacing(axis);
        (0..self.offset_counts[axis])
            .map(|m| -self.offset_extent + (m as f64 + 0.5) * h)
            .collect()
    }

    /// Number of offset samples per direction.
    pub fn offsets_per_direction(&self) -> usize {
        self.offset_counts.iter().product()
    }

    pub fn len(&self) -> usize {
        self.direction_count * self.offsets_per_direction()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sinogram array shape: directions first, then offset axes.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.direction_count];
        s.extend_from_slice(&self.offset_counts);
        s
    }

    /// Offset-grid cell measure (`h` or `h1 h2`).
    pub fn offset_cell(&self) -> f64 {
        (0..self.kind.codim()).map(|a| self.offset_spacing(a)).product()
    }

    pub fn directions(&self) -> Vec<DirectionSample> {
        sample_directions(self).expect("validated chart")
    }

    /// Offset vector `x''` of grid cell `offset_index` for a direction.
    pub fn offset_vector(&self, dir: &DirectionSample, offset_index: usize) -> Point {
        match self.kind.codim() {
            1 => {
                let h = self.offset_spacing(0);
                dir.complement[0] * (-self.offset_extent + (offset_index as f64 + 0.5) * h)
            }
            _ => {
                let m2 = self.offset_counts[1];
                let (i, j) = (offset_index / m2, offset_index % m2);
                let h = [self.offset_spacing(0), self.offset_spacing(1)];
                let u0 = -self.offset_extent + (i as f64 + 0.5) * h[0];
                let u1 = -self.offset_extent + (j as f64 + 0.5) * h[1];
                dir.complement[0] * u0 + dir.complement[1] * u1
            }
        }
    }

    /// Flat at a grid cell.
    pub fn grid_flat(&self, dir: &DirectionSample, offset_index: usize) -> Flat {
        let offset = self.offset_vector(dir, offset_index);
        Flat::from_frame(self.kind, dir.frame.clone(), offset).expect("grid flats are valid")
    }
}

/// Direction samples with equal weights summing to one: uniform angles on
/// `[0, pi)` for `(2,1)`, a Fibonacci lattice on the upper half-sphere
/// otherwise.
pub fn sample_directions(chart: &ChartSpec) -> Result<Vec<DirectionSample>> {
    if chart.direction_count < 2 {
        return Err(Error::config("direction_count must be >= 2"));
    }
    let k = chart.direction_count;
    let weight = 1.0 / k as f64;
    let samples = match chart.kind {
        ChartKind::Line2 => half_circle_angles(k)
            .into_iter()
            .map(|theta| {
                let (s, c) = theta.sin_cos();
                DirectionSample {
                    theta: Some(theta),
                    omega: Point::new(c, s, 0.0),
                    frame: vec![Point::new(s, -c, 0.0)],
                    complement: vec![Point::new(c, s, 0.0)],
                    weight,
                }
            })
            .collect(),
        ChartKind::Plane3 => fibonacci_hemisphere(k)
            .into_iter()
            .map(|w| {
                let (e1, e2) = stable_frame(&w);
                DirectionSample {
                    theta: None,
                    omega: w,
                    frame: vec![e1, e2],
                    complement: vec![w],
                    weight,
                }
            })
            .collect(),
        ChartKind::Line3 => fibonacci_hemisphere(k)
            .into_iter()
            .map(|w| {
                let (e1, e2) = stable_frame(&w);
                DirectionSample {
                    theta: None,
                    omega: w,
                    frame: vec![w],
                    complement: vec![e1, e2],
                    weight,
                }
            })
            .collect(),
    };
    Ok(samples)
}

/// Flip `w` into the canonical half-space `w_last >= 0`, breaking ties
/// lexicographically. Returns the canonical vector and whether it flipped.
pub fn canonical_orientation(w: &Point, dim: usize) -> (Point, bool) {
    let mut flip = false;
    for i in (0..dim).rev() {
        if w[i] > 0.0 {
            break;
        }
        if w[i] < 0.0 {
            flip = true;
            break;
        }
    }
    if flip {
        (-w, true)
    } else {
        (*w, false)
    }
}

/// Chart coordinates of a flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartParams {
    /// `(2,1)`: normal `(cos theta, sin theta)`, `theta in [0, pi)`.
    Angle { theta: f64, s: f64 },
    /// `(3,2)`: unit normal in the canonical half-space and signed offset.
    Normal { omega: Point, s: f64 },
    /// `(3,1)`: canonical direction and offset coordinates in its stable frame.
    Ray { omega: Point, u: [f64; 2] },
}

/// A point `x'' + sigma` of `G(d,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat {
    kind: ChartKind,
    frame: Vec<Point>,
    offset: Point,
    params: ChartParams,
}

impl Flat {
    /// Build from an orthonormal frame of `sigma` and any point of the flat;
    /// the offset is projected onto `sigma^perp`.
    pub fn from_frame(kind: ChartKind, frame: Vec<Point>, point: Point) -> Result<Self> {
        if frame.len() != kind.d() {
            return Err(Error::input(format!(
                "chart ({}) needs {} frame vectors, got {}",
                kind.label(),
                kind.d(),
                frame.len()
            )));
        }
        for (i, a) in frame.iter().enumerate() {
            if kind.n() == 2 && a.z.abs() > FRAME_TOL {
                return Err(Error::input("frame vector leaves the plane"));
            }
            for (j, b) in frame.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (a.dot(b) - expect).abs() > FRAME_TOL {
                    return Err(Error::input("frame is not orthonormal"));
                }
            }
        }
        let mut offset = point;
        for w in &frame {
            offset -= w * w.dot(&point);
        }
        if kind.n() == 2 {
            offset.z = 0.0;
        }
        let params = match kind {
            ChartKind::Line2 => {
                let w = frame[0];
                let normal = Point::new(-w.y, w.x, 0.0);
                let (normal, _) = canonical_orientation(&normal, 2);
                let mut theta = normal.y.atan2(normal.x);
                if theta >= std::f64::consts::PI {
                    theta -= std::f64::consts::PI;
                }
                ChartParams::Angle {
                    theta,
                    s: offset.dot(&normal),
                }
            }
            ChartKind::Plane3 => {
                let normal = frame[0].cross(&frame[1]).normalize();
                let (normal, _) = canonical_orientation(&normal, 3);
                ChartParams::Normal {
                    omega: normal,
                    s: offset.dot(&normal),
                }
            }
            ChartKind::Line3 => {
                let (w, _) = canonical_orientation(&frame[0], 3);
                let (e1, e2) = stable_frame(&w);
                ChartParams::Ray {
                    omega: w,
                    u: [offset.dot(&e1), offset.dot(&e2)],
                }
            }
        };
        Ok(Self {
            kind,
            frame,
            offset,
            params,
        })
    }

    /// Build from chart coordinates; the frame follows the chart's
    /// conventions.
    pub fn from_params(params: ChartParams) -> Result<Self> {
        match params {
            ChartParams::Angle { theta, s } => {
                let (sn, c) = theta.sin_cos();
                let normal = Point::new(c, sn, 0.0);
                Self::from_frame(ChartKind::Line2, vec![Point::new(sn, -c, 0.0)], normal * s)
            }
            ChartParams::Normal { omega, s } => {
                let w = unit_or_err(&omega)?;
                let (e1, e2) = stable_frame(&w);
                Self::from_frame(ChartKind::Plane3, vec![e1, e2], w * s)
            }
            ChartParams::Ray { omega, u } => {
                let w = unit_or_err(&omega)?;
                let (e1, e2) = stable_frame(&w);
                Self::from_frame(ChartKind::Line3, vec![w], e1 * u[0] + e2 * u[1])
            }
        }
    }

    /// Hyperplane with unit normal `w` at signed offset `s` (`n = 2` gives a
    /// line in the plane).
    pub fn hyperplane(dim: usize, normal: &Point, s: f64) -> Result<Self> {
        let w = unit_or_err(normal)?;
        let (w, flipped) = canonical_orientation(&w, dim);
        let s = if flipped { -s } else { s };
        match dim {
            2 => Self::from_params(ChartParams::Angle {
                theta: w.y.atan2(w.x).rem_euclid(std::f64::consts::PI),
                s,
            }),
            3 => Self::from_params(ChartParams::Normal { omega: w, s }),
            _ => Err(Error::config("hyperplanes need n in {2, 3}")),
        }
    }

    /// Line in `R^3` through `point` with direction `dir`.
    pub fn line3(point: &Point, dir: &Point) -> Result<Self> {
        let w = unit_or_err(dir)?;
        let (w, _) = canonical_orientation(&w, 3);
        Self::from_frame(ChartKind::Line3, vec![w], *point)
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn frame(&self) -> &[Point] {
        &self.frame
    }

    pub fn offset(&self) -> &Point {
        &self.offset
    }

    pub fn params(&self) -> ChartParams {
        self.params
    }

    /// Unit normal for hyperplane flats (canonical orientation).
    pub fn normal(&self) -> Option<Point> {
        match self.params {
            ChartParams::Angle { theta, .. } => Some(Point::new(theta.cos(), theta.sin(), 0.0)),
            ChartParams::Normal { omega, .. } => Some(omega),
            ChartParams::Ray { .. } => None,
        }
    }

    /// Signed offset `s` for hyperplane flats.
    pub fn signed_offset(&self) -> Option<f64> {
        match self.params {
            ChartParams::Angle { s, .. } | ChartParams::Normal { s, .. } => Some(s),
            ChartParams::Ray { .. } => None,
        }
    }

    /// Basis of `sigma^perp` in the chart's offset-coordinate convention.
    pub fn complement(&self) -> Vec<Point> {
        match self.params {
            ChartParams::Ray { omega, .. } => {
                let (e1, e2) = stable_frame(&omega);
                vec![e1, e2]
            }
            _ => vec![self.normal().expect("hyperplane")],
        }
    }

    /// Offset coordinates in the chart (`[s]` or `[u1, u2]`).
    pub fn offset_coords(&self) -> Vec<f64> {
        match self.params {
            ChartParams::Angle { s, .. } | ChartParams::Normal { s, .. } => vec![s],
            ChartParams::Ray { u, .. } => u.to_vec(),
        }
    }

    /// Euclidean distance from `x` to the flat.
    pub fn distance_to(&self, x: &Point) -> f64 {
        (x - project_onto_sigma(self, x) - self.offset).norm()
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.distance_to(x) <= tol
    }

    /// Point of the flat at frame coordinates `t`.
    pub fn point_at(&self, t: &[f64]) -> Point {
        self.frame
            .iter()
            .zip(t)
            .fold(self.offset, |acc, (w, ti)| acc + w * *ti)
    }
}

fn unit_or_err(w: &Point) -> Result<Point> {
    let n = w.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::input("zero or non-finite direction"));
    }
    Ok(w / n)
}

/// `pi_sigma x = sum_i (x . w_i) w_i`.
pub fn project_onto_sigma(flat: &Flat, x: &Point) -> Point {
    flat.frame
        .iter()
        .fold(Point::zeros(), |acc, w| acc + w * w.dot(x))
}

/// The flat with the same `sigma` passing through `point`.
pub fn flat_through(point: &Point, flat: &Flat) -> Flat {
    Flat::from_frame(flat.kind, flat.frame.clone(), *point).expect("frame already validated")
}
