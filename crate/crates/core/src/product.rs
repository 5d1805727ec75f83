//! Decay checks on products of sinograms: the square of one body's
//! transform across its singular locus, and the product of two bodies'
//! transforms near the flats tangent to both.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, ChartParams};
use crate::microlocal::intersection_report;
use crate::probe::{classify_direction, directional_decay, DecayEstimate, DirectionClass, Field, ProbeSettings, DEFAULT_SMOOTH_THRESHOLD};
use crate::scene::{ConvexBody, Point};
use crate::transform::Sinogram;

/// Off-locus probes sit at least this many window widths from both loci.
pub const OFF_LOCUS_WINDOWS: f64 = 5.0;
/// Required ratio of every conormal magnitude to the noise floor.
pub const NONDEGENERATE_MARGIN: f64 = 10.0;

/// Profile exponent of `(R_d chi)^2` across `S_j`: the factor behaves like
/// `rho^{d/2}` and its square like `rho^d`.
pub fn square_profile_exponent(d: usize) -> f64 {
    -(d as f64) - 1.0
}

/// One directional probe of a product field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductProbe {
    /// Field coordinates: offsets for a single row, `(theta, s)` for a
    /// whole `(2,1)` sinogram.
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub estimate: DecayEstimate,
    pub class: DirectionClass,
}

impl ProductProbe {
    pub fn exponent(&self) -> f64 {
        self.estimate.slope
    }

    /// Windowed transform magnitude at the lowest ladder frequency.
    pub fn reference_magnitude(&self) -> f64 {
        self.estimate.magnitudes.first().copied().unwrap_or(0.0)
    }
}

fn serialize_pair<S: serde::Serializer>(pair: &(usize, Option<usize>), s: S) -> Result<S::Ok, S::Error> {
    match pair.1 {
        Some(k) => [pair.0, k].serialize(s),
        None => [pair.0].serialize(s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductProbeReport {
    /// Body labels; the second is absent for a square.
    #[serde(serialize_with = "serialize_pair")]
    pub pair: (usize, Option<usize>),
    /// Nothing to check: the product vanishes or the loci do not meet.
    pub vacuous: bool,
    /// Probes across the loci: one for a square, two per intersection
    /// point for a cross product.
    pub conormal: Vec<ProductProbe>,
    pub off_locus: Vec<ProductProbe>,
}

impl ProductProbeReport {
    fn vacuous(pair: (usize, Option<usize>)) -> Self {
        Self {
            pair,
            vacuous: true,
            conormal: Vec::new(),
            off_locus: Vec::new(),
        }
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.conormal.iter().map(ProductProbe::exponent).collect()
    }

    pub fn all_conormal_singular(&self) -> bool {
        self.conormal.iter().all(|p| p.class == DirectionClass::Singular)
    }

    /// Every conormal magnitude clears the floor by `margin`.
    pub fn nondegenerate(&self, margin: f64) -> bool {
        self.conormal.iter().all(|p| p.estimate.floor_margin() > margin)
    }

    pub fn off_locus_smooth(&self) -> bool {
        self.off_locus.iter().all(|p| p.class == DirectionClass::Smooth)
    }

    /// Every claim of the report holds; vacuous reports pass.
    pub fn passed(&self) -> bool {
        self.vacuous || (self.all_conormal_singular() && self.nondegenerate(NONDEGENERATE_MARGIN) && self.off_locus_smooth())
    }
}

fn probe(field: &Field, point: Point, direction: Point, settings: &ProbeSettings) -> Result<ProductProbe> {
    let estimate = directional_decay(field, &point, &direction, settings)?;
    let dim = field.dim();
    Ok(ProductProbe {
        point: point.as_slice()[..dim].to_vec(),
        direction: direction.as_slice()[..dim].to_vec(),
        class: classify_direction(&estimate, DEFAULT_SMOOTH_THRESHOLD),
        estimate,
    })
}

/// Square `sino` pointwise and fit the decay across `S_j` in the middle
/// direction row, at the edge of the body's shadow in the direction of the
/// first offset axis.
pub fn self_product_order(sino: &Sinogram, body: &ConvexBody, settings: &ProbeSettings) -> Result<ProductProbeReport> {
    if body.dim() != sino.chart.n() {
        return Err(Error::input("body and sinogram disagree on the dimension"));
    }
    let pair = (body.label(), None);
    if sino.values.iter().all(|v| *v == 0.0) {
        return Ok(ProductProbeReport::vacuous(pair));
    }
    let dir_index = sino.chart.direction_count / 2;
    let dir = &sino.chart.directions()[dir_index];
    let square: Vec<f64> = sino.row(dir_index).iter().map(|v| v * v).collect();
    let field = Field::from_chart_row(&sino.chart, &square)?;
    let (y, _) = body.boundary_point_and_normal(&dir.complement[0])?;
    let mut point = Point::zeros();
    for (a, c) in dir.complement.iter().enumerate() {
        point[a] = c.dot(&y);
    }
    let mut normal = Point::zeros();
    normal[0] = 1.0;
    Ok(ProductProbeReport {
        pair,
        vacuous: false,
        conormal: vec![probe(&field, point, normal, settings)?],
        off_locus: Vec::new(),
    })
}

/// Offset `s` of the two branches of `S_j` at chart angle `theta`.
fn locus_branches(body: &ConvexBody, theta: f64) -> Result<[f64; 2]> {
    let w = Point::new(theta.cos(), theta.sin(), 0.0);
    Ok([body.support_value(&w)?, -body.support_value(&-w)?])
}

/// Distance in `(theta, s)` from `x` to either body's locus, scanning
/// angles within `reach` of `x`.
fn locus_distance(bodies: [&ConvexBody; 2], x: &Point, reach: f64, step: f64) -> Result<f64> {
    let n = (reach / step).ceil() as i64;
    let mut best = f64::INFINITY;
    for i in -n..=n {
        let theta = x[0] + i as f64 * step;
        for body in bodies {
            for s in locus_branches(body, theta)? {
                best = best.min((theta - x[0]).hypot(s - x[1]));
            }
        }
    }
    Ok(best)
}

/// Probe `u v` at every flat tangent to both bodies, along the two locus
/// conormals there, plus off-locus probes around each point.
///
/// The product is taken as a field of `(theta, s)`, so the chart must be
/// `(2,1)`. At an intersection point the locus `S_j` is the graph
/// `s = w(theta).y_j` with `w = (cos, sin)`, whose conormal is
/// `(y_j.(sin, -cos), 1)`. Off-locus probes sit [`OFF_LOCUS_WINDOWS`]
/// window widths or more from both loci, on a ring around the point, where
/// the product is nonzero.
pub fn cross_product_probe(
    sino_j: &Sinogram,
    sino_k: &Sinogram,
    body_j: &ConvexBody,
    body_k: &ConvexBody,
    settings: &ProbeSettings,
) -> Result<ProductProbeReport> {
    let chart = &sino_j.chart;
    if chart.kind != ChartKind::Line2 {
        return Err(Error::config("cross-product probes need a (2,1) chart"));
    }
    if sino_k.chart != *chart {
        return Err(Error::input("sinograms are on different charts"));
    }
    let pair = (body_j.label(), Some(body_k.label()));
    let values: Vec<f64> = sino_j.values.par_iter().zip(&sino_k.values).map(|(u, v)| u * v).collect();
    let report = intersection_report(body_j, body_k, chart)?;
    if report.points.is_empty() || values.iter().all(|v| *v == 0.0) {
        return Ok(ProductProbeReport::vacuous(pair));
    }
    let product = Sinogram::new(chart.clone(), sino_j.role, values)?;
    let field = Field::from_angle_sinogram(&product)?;
    let w = settings.window_for(&field);
    let scan = field.max_spacing() / 8.0;

    let mut conormal = Vec::new();
    let mut off_locus = Vec::new();
    for p in &report.points {
        let ChartParams::Angle { theta, s } = p.tangent.flat.params() else {
            unreachable!("(2,1) flats carry angle coordinates")
        };
        let x = Point::new(theta, s, 0.0);
        let frame = Point::new(theta.sin(), -theta.cos(), 0.0);
        for y in [p.tangent.y_j, p.tangent.y_k] {
            conormal.push(probe(&field, x, Point::new(y.dot(&frame), 1.0, 0.0).normalize(), settings)?);
        }
        let ring = OFF_LOCUS_WINDOWS * w * 1.5;
        for i in 0..16 {
            let a = PI * i as f64 / 8.0;
            let q = x + Point::new(a.cos(), a.sin(), 0.0) * ring;
            let nonzero = field.value_near(&q).is_some_and(|v| v != 0.0);
            if !nonzero || locus_distance([body_j, body_k], &q, ring + OFF_LOCUS_WINDOWS * w, scan)? < OFF_LOCUS_WINDOWS * w {
                continue;
            }
            for axis in [Point::x(), Point::y()] {
                if let Ok(pr) = probe(&field, q, axis, settings) {
                    off_locus.push(pr);
                }
            }
            break;
        }
    }
    let mut out = ProductProbeReport {
        pair,
        vacuous: false,
        conormal,
        off_locus,
    };
    let key = |p: &ProductProbe| (p.point.clone(), p.direction.clone());
    out.conormal.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite probe coordinates"));
    out.off_locus.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite probe coordinates"));
    Ok(out)
}
