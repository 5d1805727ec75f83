use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, ChartSpec, Flat};
use crate::microlocal::canonical::FlatCovector;
use crate::microlocal::tangent::{common_tangent_hyperplanes, tangent_line, TangentFlat, IN_PLANE_TOL, PLANE_TRACE_SAMPLES};
use crate::sampling::stable_frame;
use crate::scene::{ConvexBody, Point};

/// Smallest singular value above which two conormals count as independent.
pub const TRANSVERSAL_TOL: f64 = 1e-6;
/// Angular samples on a shadow outline when intersecting two outlines.
pub const SHADOW_SAMPLES: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntersectionClass {
    /// Both conormals share a direction: the flat lies in a common tangent
    /// hyperplane.
    Type1,
    /// Distinct normal directions at the two tangency points.
    Type2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionPoint {
    pub tangent: TangentFlat,
    /// Conormals of `S_j` and `S_k` at the flat, in chart coordinates and
    /// normalised.
    pub conormals: [Vec<f64>; 2],
    pub sigma_min: f64,
    pub class: IntersectionClass,
}

impl IntersectionPoint {
    pub fn transversal(&self) -> bool {
        self.sigma_min > TRANSVERSAL_TOL
    }
}

/// Samples of `S_j` meet `S_k` in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    pub pair: (usize, usize),
    pub kind: ChartKind,
    pub points: Vec<IntersectionPoint>,
}

impl IntersectionReport {
    /// Type 2 points cannot occur for hyperplane charts.
    pub fn type2_forbidden(&self) -> bool {
        self.kind.is_hyperplane()
    }

    pub fn count(&self, class: IntersectionClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }

    pub fn all_transversal(&self) -> bool {
        self.points.iter().all(IntersectionPoint::transversal)
    }

    pub fn min_sigma(&self) -> f64 {
        self.points.iter().map(|p| p.sigma_min).fold(f64::INFINITY, f64::min)
    }

    /// Every point transversal and no type 2 points where they are ruled
    /// out.
    pub fn consistent(&self) -> bool {
        self.all_transversal() && !(self.type2_forbidden() && self.count(IntersectionClass::Type2) > 0)
    }
}

/// Conormal `((y.w_1) eta, .., (y.w_d) eta, eta)` of the locus at `flat`,
/// in the flat's offset basis, normalised.
fn locus_conormal(flat: &Flat, y: &Point, eta: &Point) -> Vec<f64> {
    let fc = FlatCovector {
        eta: flat.frame().iter().map(|w| eta * y.dot(w)).collect(),
        xi: *eta,
        flat: flat.clone(),
    };
    let v = fc.coordinates();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn classify(tangent: TangentFlat) -> IntersectionPoint {
    let a = locus_conormal(&tangent.flat, &tangent.y_j, &tangent.eta_j);
    let b = locus_conormal(&tangent.flat, &tangent.y_k, &tangent.eta_k);
    // unit rows a, b: singular values are sqrt(1 +- |a.b|)
    let cos = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().abs().min(1.0);
    let class = if tangent.eta_j.cross(&tangent.eta_k).norm() < IN_PLANE_TOL {
        IntersectionClass::Type1
    } else {
        IntersectionClass::Type2
    };
    IntersectionPoint {
        tangent,
        conormals: [a, b],
        sigma_min: (1.0 - cos).max(0.0).sqrt(),
        class,
    }
}

/// Outline of a body's shadow in `span(e1, e2)`: centre and the matrix `M`
/// with outline `(u - u_c)^T M^-1 (u - u_c) = 1`.
fn shadow(body: &ConvexBody, e1: &Point, e2: &Point) -> (Vector2<f64>, Matrix2<f64>) {
    let qi = body.shape_inv();
    let c = body.center();
    (
        Vector2::new(e1.dot(c), e2.dot(c)),
        Matrix2::new(e1.dot(&(qi * e1)), e1.dot(&(qi * e2)), e2.dot(&(qi * e1)), e2.dot(&(qi * e2))),
    )
}

/// Lines with direction `w` tangent to both bodies where their shadows'
/// outlines cross.
fn shadow_crossings(body_j: &ConvexBody, body_k: &ConvexBody, w: &Point) -> Result<Vec<TangentFlat>> {
    let (e1, e2) = stable_frame(w);
    let (cj, mj) = shadow(body_j, &e1, &e2);
    let (ck, mk) = shadow(body_k, &e1, &e2);
    let lj = mj
        .cholesky()
        .ok_or_else(|| Error::Numerical("shadow outline is degenerate".into()))?
        .l();
    let mk_inv = mk
        .try_inverse()
        .ok_or_else(|| Error::Numerical("shadow outline is degenerate".into()))?;
    let outline = |psi: f64| cj + lj * Vector2::new(psi.cos(), psi.sin());
    let g = |psi: f64| {
        let d = outline(psi) - ck;
        d.dot(&(mk_inv * d)) - 1.0
    };
    let h = 2.0 * std::f64::consts::PI / SHADOW_SAMPLES as f64;
    let mut out = Vec::new();
    for i in 0..SHADOW_SAMPLES {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 || (ga < 0.0) != (gb < 0.0) && gb != 0.0 {
            let psi = if ga == 0.0 { a } else { super::tangent::bisect(a, b, g) };
            let u = outline(psi);
            out.push(tangent_line(body_j, body_k, e1 * u[0] + e2 * u[1], *w)?);
        }
    }
    Ok(out)
}

/// Sample `S_j` and `S_k` where they meet in `chart`, compute both locus
/// conormals at each point and classify it.
///
/// Hyperplane charts use the common tangent hyperplanes. For lines in space,
/// each chart direction contributes the crossings of the two shadow
/// outlines, and every sampled common tangent plane contributes the line
/// through its two tangency points.
pub fn intersection_report(body_j: &ConvexBody, body_k: &ConvexBody, chart: &ChartSpec) -> Result<IntersectionReport> {
    chart.validate()?;
    if body_j.dim() != chart.n() || body_k.dim() != chart.n() {
        return Err(Error::input("bodies and chart disagree on the dimension"));
    }
    let planes = common_tangent_hyperplanes(body_j, body_k, PLANE_TRACE_SAMPLES)?;
    let tangents = match chart.kind {
        ChartKind::Line2 | ChartKind::Plane3 => planes,
        ChartKind::Line3 => {
            let mut lines = Vec::new();
            for dir in chart.directions() {
                lines.extend(shadow_crossings(body_j, body_k, &dir.omega)?);
            }
            for p in &planes {
                lines.push(tangent_line(body_j, body_k, p.y_j, p.y_k - p.y_j)?);
            }
            lines
        }
    };
    Ok(IntersectionReport {
        pair: (body_j.label(), body_k.label()),
        kind: chart.kind,
        points: tangents.into_iter().map(classify).collect(),
    })
}
