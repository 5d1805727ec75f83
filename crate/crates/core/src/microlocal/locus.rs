use crate::error::Result;
use crate::grassmannian::{ChartKind, ChartSpec, Flat};
use crate::sampling::stable_frame;
use crate::scene::{ConvexBody, Point};

/// Tangent lines sampled per direction for the `(3,1)` locus.
pub const LOCUS_RING: usize = 64;

/// Minimum over the flat of `(x-c)^T Q (x-c)` and the minimiser; the flat
/// is tangent to the body exactly when the minimum is 1.
pub fn quadratic_min_on_flat(body: &ConvexBody, flat: &Flat) -> (f64, Point) {
    let q = body.shape();
    let r = flat.offset() - body.center();
    let frame = flat.frame();
    match frame.len() {
        1 => {
            let w = frame[0];
            let t = -w.dot(&(q * r)) / w.dot(&(q * w));
            let x = r + w * t;
            (x.dot(&(q * x)), body.center() + x)
        }
        _ => {
            let (a, b) = (frame[0], frame[1]);
            let qa = q * a;
            let qb = q * b;
            let m = nalgebra::Matrix2::new(a.dot(&qa), a.dot(&qb), b.dot(&qa), b.dot(&qb));
            let rhs = nalgebra::Vector2::new(-qa.dot(&r), -qb.dot(&r));
            let t = m.try_inverse().map(|mi| mi * rhs).unwrap_or_default();
            let x = r + a * t[0] + b * t[1];
            (x.dot(&(q * x)), body.center() + x)
        }
    }
}

/// `min (x-c)^T Q (x-c) - 1` over the flat: zero on the singular locus.
pub fn tangency_residual(body: &ConvexBody, flat: &Flat) -> f64 {
    quadratic_min_on_flat(body, flat).0 - 1.0
}

/// A flat tangent to `Sigma_j`, with its tangency point and outward unit
/// normal there.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusPoint {
    pub flat: Flat,
    pub tangency: Point,
    pub normal: Point,
}

/// Samples of `S_j`, the flats tangent to the boundary of one body.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularLocus {
    pub label: usize,
    pub kind: ChartKind,
    pub points: Vec<LocusPoint>,
}

impl SingularLocus {
    /// Number of parameters of the sampled family; one less than the
    /// chart dimension.
    pub fn parameter_dim(&self) -> usize {
        match self.kind {
            ChartKind::Line2 => 1,
            ChartKind::Plane3 => 2,
            ChartKind::Line3 => 3,
        }
    }

    pub fn max_residual(&self, body: &ConvexBody) -> f64 {
        self.points
            .iter()
            .map(|p| tangency_residual(body, &p.flat).abs())
            .fold(0.0, f64::max)
    }
}

/// `S_j` sampled over the chart's directions. Hyperplane charts give the two
/// branches `s = w.c +- sqrt(w^T Q^-1 w)`; lines in space give, per
/// direction, [`LOCUS_RING`] lines grazing the body's shadow outline.
pub fn singular_locus(body: &ConvexBody, chart: &ChartSpec) -> Result<SingularLocus> {
    chart.validate()?;
    let mut points = Vec::new();
    for dir in chart.directions() {
        match chart.kind {
            ChartKind::Line2 | ChartKind::Plane3 => {
                let w = dir.omega;
                for sign in [1.0, -1.0] {
                    let (y, n) = body.boundary_point_and_normal(&(w * sign))?;
                    points.push(LocusPoint {
                        flat: Flat::hyperplane(chart.n(), &w, w.dot(&y))?,
                        tangency: y,
                        normal: n,
                    });
                }
            }
            ChartKind::Line3 => {
                let w = dir.omega;
                let (e1, e2) = stable_frame(&w);
                for k in 0..LOCUS_RING {
                    let psi = 2.0 * std::f64::consts::PI * k as f64 / LOCUS_RING as f64;
                    let nu = e1 * psi.cos() + e2 * psi.sin();
                    let (y, n) = body.boundary_point_and_normal(&nu)?;
                    points.push(LocusPoint {
                        flat: Flat::line3(&y, &w)?,
                        tangency: y,
                        normal: n,
                    });
                }
            }
        }
    }
    Ok(SingularLocus {
        label: body.label(),
        kind: chart.kind,
        points,
    })
}
