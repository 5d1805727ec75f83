//! Metal bodies and the smooth tissue background.
//!
//! Every point and direction is a `Vector3`; two-dimensional scenes live in
//! the `z = 0` plane and their bodies carry a unit `zz` entry in the shape
//! matrix that never influences an in-plane computation.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::sampling::fibonacci_hemisphere;

pub type Point = Vector3<f64>;

const UNIT_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Minimum body separation, in grid spacings, accepted by
/// [`Scene::check_separation`].
pub const SEPARATION_SPACINGS: f64 = 10.0;

/// Lift an `n`-component slice into the embedding space.
pub fn point_from_slice(dim: usize, xs: &[f64]) -> Result<Point> {
    if xs.len() != dim {
        return Err(Error::input(format!(
            "expected {dim} coordinates, got {}",
            xs.len()
        )));
    }
    let mut p = Point::zeros();
    for (i, v) in xs.iter().enumerate() {
        p[i] = *v;
    }
    Ok(p)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::config(format!("dimension must be 2 or 3, got {dim}")))
    }
}

fn lift_matrix(dim: usize, entries: &[f64]) -> Result<Matrix3<f64>> {
    if entries.len() != dim * dim {
        return Err(Error::input(format!(
            "expected {} matrix entries, got {}",
            dim * dim,
            entries.len()
        )));
    }
    let mut m = Matrix3::identity();
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = entries[i * dim + j];
        }
    }
    Ok(m)
}

fn check_spd(dim: usize, m: &Matrix3<f64>, what: &str) -> Result<()> {
    for i in 0..dim {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::input(format!("{what} is not symmetric")));
            }
        }
    }
    let min_eig = if dim == 2 {
        let sub = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        SymmetricEigen::new(sub).eigenvalues.min()
    } else {
        SymmetricEigen::new(*m).eigenvalues.min()
    };
    if !(min_eig > 0.0) {
        return Err(Error::input(format!(
            "{what} is not positive definite (min eigenvalue {min_eig})"
        )));
    }
    Ok(())
}

/// An ellipsoid `{x : (x-c)^T Q (x-c) <= 1}` with symmetric positive
/// definite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    label: usize,
    dim: usize,
    center: Point,
    shape: Matrix3<f64>,
    shape_inv: Matrix3<f64>,
}

impl ConvexBody {
    pub fn ellipsoid(label: usize, center: &[f64], shape: &[f64]) -> Result<Self> {
        let dim = center.len();
        check_dim(dim)?;
        let center = point_from_slice(dim, center)?;
        let shape = lift_matrix(dim, shape)?;
        check_spd(dim, &shape, "shape matrix")?;
        let shape_inv = shape
            .try_inverse()
            .ok_or_else(|| Error::input("shape matrix is singular"))?;
        Ok(Self {
            label,
            dim,
            center,
            shape,
            shape_inv,
        })
    }

    pub fn ball(label: usize, center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::input(format!("ball radius must be positive, got {radius}")));
        }
        let dim = center.len();
        check_dim(dim)?;
        let q = 1.0 / (radius * radius);
        let mut shape = vec![0.0; dim * dim];
        for i in 0..dim {
            shape[i * dim + i] = q;
        }
        Self::ellipsoid(label, center, &shape)
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn shape(&self) -> &Matrix3<f64> {
        &self.shape
    }

    pub fn shape_inv(&self) -> &Matrix3<f64> {
        &self.shape_inv
    }

    pub(crate) fn check_direction(&self, omega: &Point) -> Result<()> {
        let norm = omega.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::input(format!("direction is not unit (|w| = {norm})")));
        }
        if self.dim == 2 && omega.z.abs() > UNIT_TOL {
            return Err(Error::input("direction leaves the plane of a 2D body"));
        }
        Ok(())
    }

    /// `sqrt(w^T Q^-1 w)`: support value of the centred body.
    pub fn support_radius(&self, omega: &Point) -> f64 {
        omega.dot(&(self.shape_inv * omega)).sqrt()
    }

    pub(crate) fn support_unchecked(&self, omega: &Point) -> f64 {
        omega.dot(&self.center) + self.support_radius(omega)
    }

    /// `h(w) = w.c + sqrt(w^T Q^-1 w)`; the hyperplane `x.w = h(w)` touches
    /// the body.
    pub fn support_value(&self, omega: &Point) -> Result<f64> {
        self.check_direction(omega)?;
        Ok(self.support_unchecked(omega))
    }

    pub(crate) fn boundary_point_unchecked(&self, omega: &Point) -> Point {
        let qw = self.shape_inv * omega;
        self.center + qw / omega.dot(&qw).sqrt()
    }

    /// Boundary point maximising `w.y` together with its outward unit normal.
    pub fn boundary_point_and_normal(&self, omega: &Point) -> Result<(Point, Point)> {
        self.check_direction(omega)?;
        let y = self.boundary_point_unchecked(omega);
        Ok((y, self.outward_normal(&y)))
    }

    /// Unit normal `Q(y-c)/|Q(y-c)|` at (or near) a boundary point.
    pub fn outward_normal(&self, y: &Point) -> Point {
        let mut g = self.shape * (y - self.center);
        if self.dim == 2 {
            g.z = 0.0;
        }
        g.normalize()
    }

    pub fn quadratic_form(&self, x: &Point) -> f64 {
        let mut w = x - self.center;
        if self.dim == 2 {
            w.z = 0.0;
        }
        w.dot(&(self.shape * w))
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.quadratic_form(x) <= 1.0
    }

    /// Largest semi-axis.
    pub fn max_radius(&self) -> f64 {
        let s = &self.shape_inv;
        let eig = if self.dim == 2 {
            SymmetricEigen::new(Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]))
                .eigenvalues
                .max()
        } else {
            SymmetricEigen::new(*s).eigenvalues.max()
        };
        eig.sqrt()
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut half = Point::zeros();
        for i in 0..self.dim {
            half[i] = self.shape_inv[(i, i)].sqrt();
        }
        (self.center - half, self.center + half)
    }
}

/// Anisotropic Gaussian bump `a * exp(-(x-m)^T S^-1 (x-m) / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    dim: usize,
    center: Point,
    covariance: Matrix3<f64>,
    precision: Matrix3<f64>,
    amplitude: f64,
}

impl GaussianBump {
    pub fn new(center: &[f64], covariance: &[f64], amplitude: f64) -> Result<Self> {
        let dim = center.len();
        check_dim(dim)?;
        if !amplitude.is_finite() {
            return Err(Error::input("bump amplitude must be finite"));
        }
        let center = point_from_slice(dim, center)?;
        let covariance = lift_matrix(dim, covariance)?;
        check_spd(dim, &covariance, "covariance")?;
        let precision = covariance
            .try_inverse()
            .ok_or_else(|| Error::input("covariance is singular"))?;
        Ok(Self {
            dim,
            center,
            covariance,
            precision,
            amplitude,
        })
    }

    /// Isotropic bump with standard deviation `std`.
    pub fn isotropic(center: &[f64], std: f64, amplitude: f64) -> Result<Self> {
        let dim = center.len();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = std * std;
        }
        Self::new(center, &cov, amplitude)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn covariance(&self) -> &Matrix3<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &Matrix3<f64> {
        &self.precision
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub(crate) fn offset(&self, x: &Point) -> Point {
        let mut w = x - self.center;
        if self.dim == 2 {
            w.z = 0.0;
        }
        w
    }

    pub fn value(&self, x: &Point) -> f64 {
        let w = self.offset(x);
        self.amplitude * (-0.5 * w.dot(&(self.precision * w))).exp()
    }

    pub fn covariance_det(&self) -> f64 {
        if self.dim == 2 {
            let c = &self.covariance;
            c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)]
        } else {
            self.covariance.determinant()
        }
    }

    /// Integral over the whole space.
    pub fn mass(&self) -> f64 {
        self.amplitude
            * (2.0 * std::f64::consts::PI).powf(self.dim as f64 / 2.0)
            * self.covariance_det().sqrt()
    }

    /// Largest standard deviation.
    pub fn max_std(&self) -> f64 {
        let c = &self.covariance;
        let eig = if self.dim == 2 {
            SymmetricEigen::new(Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]))
                .eigenvalues
                .max()
        } else {
            SymmetricEigen::new(*c).eigenvalues.max()
        };
        eig.sqrt()
    }
}

/// Metal bodies `D_j`, a Gaussian-sum background `f_E0`, and the metal
/// contrast slope `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    dim: usize,
    bodies: Vec<ConvexBody>,
    background: Vec<GaussianBump>,
    alpha: f64,
}

impl Scene {
    pub fn new(
        dim: usize,
        bodies: Vec<ConvexBody>,
        background: Vec<GaussianBump>,
        alpha: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::input(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if let Some(b) = bodies.iter().find(|b| b.dim() != dim) {
            return Err(Error::input(format!(
                "body {} has dimension {}, scene has {dim}",
                b.label(),
                b.dim()
            )));
        }
        if background.iter().any(|g| g.dim() != dim) {
            return Err(Error::input("background bump dimension mismatch"));
        }
        let scene = Self {
            dim,
            bodies,
            background,
            alpha,
        };
        if let Some((j, k, dist)) = scene.closest_pair() {
            if dist <= 0.0 {
                return Err(Error::Geometry(format!(
                    "bodies {} and {} overlap or touch",
                    scene.bodies[j].label(),
                    scene.bodies[k].label()
                )));
            }
        }
        Ok(scene)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new(), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    pub fn background(&self) -> &[GaussianBump] {
        &self.background
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn body(&self, label: usize) -> Option<&ConvexBody> {
        self.bodies.iter().find(|b| b.label() == label)
    }

    /// Same bodies, no background.
    pub fn metal_only(&self) -> Self {
        Self {
            background: Vec::new(),
            ..self.clone()
        }
    }

    /// Same background, no bodies.
    pub fn background_only(&self) -> Self {
        Self {
            bodies: Vec::new(),
            ..self.clone()
        }
    }

    /// Rigid translation of every component.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let d = point_from_slice(self.dim, shift)?;
        let bodies = self
            .bodies
            .iter()
            .map(|b| ConvexBody {
                center: b.center + d,
                ..b.clone()
            })
            .collect();
        let background = self
            .background
            .iter()
            .map(|g| GaussianBump {
                center: g.center + d,
                ..g.clone()
            })
            .collect();
        Ok(Self {
            bodies,
            background,
            ..self.clone()
        })
    }

    /// `chi_D(x)`: 1 inside any body.
    pub fn indicator(&self, x: &Point) -> f64 {
        if self.bodies.iter().any(|b| b.contains(x)) {
            1.0
        } else {
            0.0
        }
    }

    /// `f_E0(x)`: the Gaussian background.
    pub fn background_value(&self, x: &Point) -> f64 {
        self.background.iter().map(|g| g.value(x)).sum()
    }

    /// Total attenuation used by the forward transform: background plus unit
    /// indicators of the bodies.
    pub fn attenuation(&self, x: &Point) -> f64 {
        self.background_value(x) + self.indicator(x)
    }

    /// Bounding box of all components; Gaussians extend `reach` standard
    /// deviations, bodies their exact extent.
    pub fn bounding_box(&self, reach: f64) -> Option<(Point, Point)> {
        let mut boxes = self
            .bodies
            .iter()
            .map(|b| b.bounding_box())
            .chain(self.background.iter().map(|g| {
                let mut half = Point::zeros();
                for i in 0..self.dim {
                    half[i] = reach * g.covariance[(i, i)].sqrt();
                }
                (g.center - half, g.center + half)
            }));
        let first = boxes.next()?;
        Some(boxes.fold(first, |(lo, hi), (l, h)| (lo.inf(&l), hi.sup(&h))))
    }

    /// Closest pair of bodies `(j, k, distance)` by index.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in 0..self.bodies.len() {
            for k in j + 1..self.bodies.len() {
                let d = body_distance(&self.bodies[j], &self.bodies[k]);
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((j, k, d));
                }
            }
        }
        best
    }

    /// Reject scenes whose bodies are within ten grid spacings of each other.
    pub fn check_separation(&self, spacing: f64) -> Result<()> {
        if let Some((j, k, d)) = self.closest_pair() {
            if d <= SEPARATION_SPACINGS * spacing {
                return Err(Error::Geometry(format!(
                    "bodies {} and {} are {d:.4} apart, need more than {} grid spacings ({})",
                    self.bodies[j].label(),
                    self.bodies[k].label(),
                    SEPARATION_SPACINGS,
                    SEPARATION_SPACINGS * spacing
                )));
            }
        }
        Ok(())
    }
}

fn separation(a: &ConvexBody, b: &ConvexBody, omega: &Point) -> f64 {
    // min over b of w.y  minus  max over a of w.x
    let neg = -omega;
    -b.support_unchecked(&neg) - a.support_unchecked(omega)
}

/// Euclidean distance between two bodies, negative when they overlap.
pub fn body_distance(a: &ConvexBody, b: &ConvexBody) -> f64 {
    separating_direction(a, b).1
}

/// Unit `w` maximising `min_{y in b} w.y - max_{x in a} w.x`, with that
/// maximum (the distance when positive).
///
/// A coarse sweep followed by projected gradient ascent.
pub fn separating_direction(a: &ConvexBody, b: &ConvexBody) -> (Point, f64) {
    let dim = a.dim();
    let candidates: Vec<Point> = if dim == 2 {
        (0..720)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 360.0;
                Point::new(t.cos(), t.sin(), 0.0)
            })
            .collect()
    } else {
        let half = fibonacci_hemisphere(1500);
        half.iter().copied().chain(half.iter().map(|w| -w)).collect()
    };
    let mut omega = candidates
        .iter()
        .copied()
        .max_by(|u, v| separation(a, b, u).total_cmp(&separation(a, b, v)))
        .expect("non-empty candidate set");
    let mut value = separation(a, b, &omega);
    let mut step = 0.1;
    for _ in 0..500 {
        let neg = -omega;
        // d/dw of -h_b(-w) is the minimiser of w.y over b
        let grad = b.boundary_point_unchecked(&neg) - a.boundary_point_unchecked(&omega);
        let mut tangential = grad - omega * grad.dot(&omega);
        if dim == 2 {
            tangential.z = 0.0;
        }
        if tangential.norm() < 1e-14 {
            break;
        }
        let mut improved = false;
        while step > 1e-16 {
            let trial = (omega + tangential * step).normalize();
            let v = separation(a, b, &trial);
            if v > value {
                omega = trial;
                value = v;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (omega, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(x: f64, y: f64) -> Point {
        Point::new(x, y, 0.0).normalize()
    }

    #[test]
    fn support_of_translated_ball() {
        let b = ConvexBody::ball(0, &[3.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(b.support_value(&unit(1.0, 0.0)).unwrap(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.support_value(&unit(0.0, 1.0)).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn support_of_ellipse_matches_boundary_sweep() {
        let e = ConvexBody::ellipsoid(0, &[0.0, 0.0], &[0.25, 0.0, 0.0, 1.0]).unwrap();
        // brute force: max of w.x over the sampled boundary (2 cos t, sin t)
        let w = unit(1.0, 0.0);
        let brute = (0..100_000)
            .map(|i| {
                let t = i as f64 * 2.0 * std::f64::consts::PI / 100_000.0;
                2.0 * t.cos() * w.x + t.sin() * w.y
            })
            .fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(brute, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.support_value(&w).unwrap(), brute, epsilon = 1e-9);
        let (y, eta) = e.boundary_point_and_normal(&w).unwrap();
        assert_abs_diff_eq!((y - Point::new(2.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((eta - w).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_points_of_balls() {
        let b0 = ConvexBody::ball(0, &[0.0, 0.0], 1.0).unwrap();
        let (y, eta) = b0.boundary_point_and_normal(&unit(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!((y - Point::new(0.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((eta - Point::new(0.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let b3 = ConvexBody::ball(1, &[3.0, 0.0], 1.0).unwrap();
        let (y, eta) = b3.boundary_point_and_normal(&unit(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!((y - Point::new(3.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((eta - Point::new(0.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let b = ConvexBody::ball(0, &[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            b.support_value(&Point::new(2.0, 0.0, 0.0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(ConvexBody::ellipsoid(0, &[0.0, 0.0], &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(ConvexBody::ellipsoid(0, &[0.0, 0.0], &[1.0, 0.0, 0.0, -1.0]).is_err());
        assert!(ConvexBody::ball(0, &[0.0, 0.0], 0.0).is_err());
        assert!(ConvexBody::ball(0, &[0.0], 1.0).is_err());
    }

    fn two_disks() -> Scene {
        Scene::new(
            2,
            vec![
                ConvexBody::ball(0, &[-2.0, 0.0], 1.0).unwrap(),
                ConvexBody::ball(1, &[2.0, 0.0], 1.0).unwrap(),
            ],
            vec![],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn indicator_examples() {
        let s = two_disks();
        assert_eq!(s.indicator(&Point::new(2.0, 0.0, 0.0)), 1.0);
        assert_eq!(s.indicator(&Point::new(0.0, 0.0, 0.0)), 0.0);
        assert_eq!(s.indicator(&Point::new(3.001, 0.0, 0.0)), 0.0);
        assert_eq!(s.indicator(&Point::new(2.999, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn background_examples() {
        assert_eq!(Scene::empty(2).unwrap().background_value(&Point::zeros()), 0.0);
        let g = GaussianBump::isotropic(&[0.0, 0.0], 1.0, 1.0).unwrap();
        let s = Scene::new(2, vec![], vec![g], 0.0).unwrap();
        assert_abs_diff_eq!(s.background_value(&Point::zeros()), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            s.background_value(&Point::new(1.0, 0.0, 0.0)),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn overlapping_and_touching_bodies_rejected() {
        let a = ConvexBody::ball(0, &[0.0, 0.0], 1.0).unwrap();
        let b = ConvexBody::ball(1, &[1.5, 0.0], 1.0).unwrap();
        assert!(matches!(
            Scene::new(2, vec![a.clone(), b], vec![], 0.0),
            Err(Error::Geometry(_))
        ));
        let c = ConvexBody::ball(1, &[2.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            Scene::new(2, vec![a, c], vec![], 0.0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn distance_between_bodies() {
        let s = two_disks();
        let (_, _, d) = s.closest_pair().unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-9);
        assert!(s.check_separation(0.1).is_ok());
        assert!(s.check_separation(0.2).is_err());

        let a = ConvexBody::ellipsoid(0, &[0.0, 0.0, 0.0], &[0.25, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let b = ConvexBody::ball(1, &[0.0, 3.0, 0.0], 0.5).unwrap();
        assert_abs_diff_eq!(body_distance(&a, &b), 1.5, epsilon = 1e-7);
    }

    #[test]
    fn tangency_of_support_hyperplanes() {
        let e = ConvexBody::ellipsoid(0, &[0.5, -0.3], &[0.7, 0.2, 0.2, 1.9]).unwrap();
        for i in 0..64 {
            let t = i as f64 * 0.1;
            let w = unit(t.cos(), t.sin());
            let h = e.support_value(&w).unwrap();
            // boundary samples via the map  c + L u  with  L L^T = Q^-1
            let l = e.shape_inv().cholesky().unwrap().l();
            let worst = (0..4000)
                .map(|k| {
                    let a = k as f64 * 2.0 * std::f64::consts::PI / 4000.0;
                    let y = e.center() + l * Point::new(a.cos(), a.sin(), 0.0);
                    y.dot(&w) - h
                })
                .fold(f64::MIN, f64::max);
            assert!((-1e-6..=1e-6).contains(&worst), "worst {worst}");
            let (y, _) = e.boundary_point_and_normal(&w).unwrap();
            assert_abs_diff_eq!(y.dot(&w), h, epsilon = 1e-9);
        }
    }
}
