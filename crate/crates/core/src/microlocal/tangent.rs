use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmannian::Flat;
use crate::microlocal::locus::quadratic_min_on_flat;
use crate::sampling::stable_frame;
use crate::scene::{separating_direction, ConvexBody, Point};

/// Minimum number of samples traced along each family of tangent planes.
pub const PLANE_TRACE_SAMPLES: usize = 64;
/// Newton iteration cap for tangent lines.
pub const NEWTON_MAX_ITER: usize = 100;
/// Residual at which a tangent line counts as converged.
pub const NEWTON_TOL: f64 = 1e-12;
/// Two lines closer than this (in offset and direction) are the same.
pub const DEDUP_TOL: f64 = 1e-6;
/// `|eta_j x eta_k|` below this puts a line inside a common tangent plane.
pub const IN_PLANE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TangentKind {
    /// Hyperplane tangent to both boundaries.
    Hyperplane,
    /// `(n-2)`-plane tangent to both boundaries.
    Codim2,
}

/// A flat tangent to two boundaries, with the tangency points and the
/// conormal lines the artifact may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFlat {
    pub pair: (usize, usize),
    pub kind: TangentKind,
    pub flat: Flat,
    pub y_j: Point,
    pub y_k: Point,
    /// Outward unit normals of each body at its tangency point.
    pub eta_j: Point,
    pub eta_k: Point,
    /// Sign pattern `(eps_j, eps_k)` of the support branches (hyperplanes).
    pub signs: Option<(i8, i8)>,
    pub in_plane: bool,
}

impl TangentFlat {
    /// Allowed conormal lines, each given by one representative: a single
    /// line for hyperplanes and in-plane lines, two otherwise.
    pub fn allowed_conormals(&self) -> Vec<Point> {
        if self.kind == TangentKind::Hyperplane || self.in_plane {
            vec![self.eta_j]
        } else {
            vec![self.eta_j, self.eta_k]
        }
    }

    /// Worst tangency residual against both bodies.
    pub fn residual(&self, body_j: &ConvexBody, body_k: &ConvexBody) -> f64 {
        let a = quadratic_min_on_flat(body_j, &self.flat).0 - 1.0;
        let b = quadratic_min_on_flat(body_k, &self.flat).0 - 1.0;
        a.abs().max(b.abs())
    }

    pub fn record(&self) -> TangentRecord {
        let arr = |p: &Point| [p.x, p.y, p.z];
        TangentRecord {
            pair: [self.pair.0, self.pair.1],
            kind: self.kind,
            chart: self.flat.kind().label().to_string(),
            offset: arr(self.flat.offset()),
            frame: self.flat.frame().iter().map(arr).collect(),
            normal: self.flat.normal().map(|n| arr(&n)),
            signed_offset: self.flat.signed_offset(),
            y_j: arr(&self.y_j),
            y_k: arr(&self.y_k),
            conormals: self.allowed_conormals().iter().map(arr).collect(),
            in_plane: self.in_plane,
        }
    }
}

/// Plain-data form of a [`TangentFlat`] for the atlas export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentRecord {
    pub pair: [usize; 2],
    pub kind: TangentKind,
    pub chart: String,
    pub offset: [f64; 3],
    pub frame: Vec<[f64; 3]>,
    pub normal: Option<[f64; 3]>,
    pub signed_offset: Option<f64>,
    pub y_j: [f64; 3],
    pub y_k: [f64; 3],
    pub conormals: Vec<[f64; 3]>,
    pub in_plane: bool,
}

#[derive(Serialize)]
struct AtlasDoc<'a> {
    flats: &'a [TangentRecord],
}

/// Atlas as TOML: one `[[flats]]` table per tangent flat.
pub fn atlas_to_toml(flats: &[TangentFlat]) -> Result<String> {
    let records: Vec<_> = flats.iter().map(TangentFlat::record).collect();
    toml::to_string(&AtlasDoc { flats: &records }).map_err(|e| Error::Format(e.to_string()))
}

fn check_pair(body_j: &ConvexBody, body_k: &ConvexBody) -> Result<(Point, f64)> {
    if body_j.dim() != body_k.dim() {
        return Err(Error::input("bodies live in different dimensions"));
    }
    let (a, gap) = separating_direction(body_j, body_k);
    if gap <= 0.0 {
        return Err(Error::Geometry(format!(
            "bodies {} and {} overlap (gap {gap:.3e})",
            body_j.label(),
            body_k.label()
        )));
    }
    Ok((a, gap))
}

/// `w.(c_j - c_k) + h_j(w) - eps h_k(w)`, zero exactly on common tangents
/// with sign pattern `(+1, eps)`.
fn tangency_gap(body_j: &ConvexBody, body_k: &ConvexBody, eps: f64, w: &Point) -> f64 {
    w.dot(&(body_j.center() - body_k.center())) + body_j.support_radius(w) - eps * body_k.support_radius(w)
}

pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Hyperplanes tangent to both boundaries.
///
/// With `a` the separating direction (from `j` towards `k`), the gap
/// function is negative at `a` and positive at `-a` for both sign patterns
/// and has one root on every half great circle between them. In the plane
/// the two half circles give the four common tangents; in space
/// `samples.max(64)` meridians trace the two circles of tangent planes.
pub fn common_tangent_hyperplanes(body_j: &ConvexBody, body_k: &ConvexBody, samples: usize) -> Result<Vec<TangentFlat>> {
    let (a, _) = check_pair(body_j, body_k)?;
    let dim = body_j.dim();
    let (e1, e2) = if dim == 2 {
        (Point::new(-a.y, a.x, 0.0), Point::zeros())
    } else {
        stable_frame(&a)
    };
    let meridians = if dim == 2 { 2 } else { samples.max(PLANE_TRACE_SAMPLES) };
    let mut out = Vec::new();
    for eps in [1.0, -1.0] {
        for m in 0..meridians {
            let phi = 2.0 * std::f64::consts::PI * m as f64 / meridians as f64;
            let tangent = e1 * phi.cos() + e2 * phi.sin();
            let omega_at = |beta: f64| a * beta.cos() + tangent * beta.sin();
            let beta = bisect(0.0, std::f64::consts::PI, |b| tangency_gap(body_j, body_k, eps, &omega_at(b)));
            let w = omega_at(beta).normalize();
            let (y_j, eta_j) = body_j.boundary_point_and_normal(&w)?;
            let (y_k, eta_k) = body_k.boundary_point_and_normal(&(w * eps))?;
            let flat = Flat::hyperplane(dim, &w, w.dot(&y_j))?;
            out.push(TangentFlat {
                pair: (body_j.label(), body_k.label()),
                kind: TangentKind::Hyperplane,
                flat,
                y_j,
                y_k,
                eta_j,
                eta_k,
                signs: Some((1, eps as i8)),
                in_plane: true,
            });
        }
    }
    Ok(out)
}

/// Residuals `m_j - 1, m_k - 1` of the line `p + t v` with their gradients
/// in `(p, v)`, where `m` is the quadratic form minimised along the line.
fn line_residuals(bodies: [&ConvexBody; 2], p: &Point, v: &Point) -> ([f64; 2], [[f64; 6]; 2]) {
    let mut res = [0.0; 2];
    let mut jac = [[0.0; 6]; 2];
    for (i, b) in bodies.iter().enumerate() {
        let q = b.shape();
        let r = p - b.center();
        let qr = q * r;
        let qv = q * v;
        let vqv = v.dot(&qv);
        let vqr = v.dot(&qr);
        let ratio = vqr / vqv;
        res[i] = r.dot(&qr) - vqr * ratio - 1.0;
        let dp = qr * 2.0 - qv * (2.0 * ratio);
        let dv = qr * (-2.0 * ratio) + qv * (2.0 * ratio * ratio);
        jac[i] = [dp.x, dp.y, dp.z, dv.x, dv.y, dv.z];
    }
    (res, jac)
}

/// Damped minimum-norm Newton on the two tangency residuals.
fn newton_line(bodies: [&ConvexBody; 2], p0: Point, v0: Point) -> Option<(Point, Point)> {
    let mut p = p0;
    let mut v = v0.try_normalize(1e-300)?;
    let norm = |r: &[f64; 2]| r[0].hypot(r[1]);
    let (mut res, mut jac) = line_residuals(bodies, &p, &v);
    for _ in 0..NEWTON_MAX_ITER {
        if norm(&res) < NEWTON_TOL {
            return Some((p, v));
        }
        let j = nalgebra::SMatrix::<f64, 2, 6>::from_fn(|r, c| jac[r][c]);
        let jjt = j * j.transpose();
        let lambda = jjt.try_inverse()? * nalgebra::Vector2::new(res[0], res[1]);
        let delta = -(j.transpose() * lambda);
        let dp = Point::new(delta[0], delta[1], delta[2]);
        let dv = Point::new(delta[3], delta[4], delta[5]);
        let mut step = 1.0;
        let current = norm(&res);
        loop {
            let tp = p + dp * step;
            let tv = (v + dv * step).try_normalize(1e-300)?;
            let (r2, j2) = line_residuals(bodies, &tp, &tv);
            if norm(&r2) < current || step < 1e-6 {
                p = tp;
                v = tv;
                res = r2;
                jac = j2;
                break;
            }
            step *= 0.5;
        }
        if !res.iter().all(|x| x.is_finite()) {
            return None;
        }
    }
    (norm(&res) < NEWTON_TOL).then_some((p, v))
}

pub(crate) fn tangent_line(body_j: &ConvexBody, body_k: &ConvexBody, p: Point, v: Point) -> Result<TangentFlat> {
    let flat = Flat::line3(&p, &v)?;
    let (_, y_j) = quadratic_min_on_flat(body_j, &flat);
    let (_, y_k) = quadratic_min_on_flat(body_k, &flat);
    let eta_j = body_j.outward_normal(&y_j);
    let eta_k = body_k.outward_normal(&y_k);
    Ok(TangentFlat {
        pair: (body_j.label(), body_k.label()),
        kind: TangentKind::Codim2,
        flat,
        y_j,
        y_k,
        eta_j,
        eta_k,
        signs: None,
        in_plane: eta_j.cross(&eta_k).norm() < IN_PLANE_TOL,
    })
}

fn require_space(body_j: &ConvexBody) -> Result<()> {
    if body_j.dim() != 3 {
        return Err(Error::config("codimension-2 tangent flats are lines in R^3; need n = 3"));
    }
    Ok(())
}

/// Refine a guess `p + t v` into a line tangent to both boundaries; `None`
/// when Newton does not converge.
pub fn refine_tangent_line(body_j: &ConvexBody, body_k: &ConvexBody, p: &Point, v: &Point) -> Result<Option<TangentFlat>> {
    require_space(body_j)?;
    check_pair(body_j, body_k)?;
    newton_line([body_j, body_k], *p, *v)
        .map(|(p, v)| tangent_line(body_j, body_k, p, v))
        .transpose()
}

/// Lines in `R^3` tangent to both boundaries, solved from `count` seeded
/// starts through random boundary-point pairs, sorted and deduplicated.
pub fn common_tangent_codim2_flats(
    body_j: &ConvexBody,
    body_k: &ConvexBody,
    count: usize,
    seed: u64,
) -> Result<Vec<TangentFlat>> {
    require_space(body_j)?;
    check_pair(body_j, body_k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_unit = || loop {
        let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let starts: Vec<(Point, Point)> = (0..count)
        .map(|_| {
            let a = body_j.boundary_point_unchecked(&random_unit());
            let b = body_k.boundary_point_unchecked(&random_unit());
            (a, b - a)
        })
        .collect();
    let solved: Vec<(Point, Point)> = starts
        .into_par_iter()
        .filter_map(|(p, v)| newton_line([body_j, body_k], p, v))
        .collect();
    let mut lines = solved
        .into_iter()
        .map(|(p, v)| tangent_line(body_j, body_k, p, v))
        .collect::<Result<Vec<_>>>()?;
    let key = |t: &TangentFlat| {
        let w = t.flat.frame()[0];
        let o = t.flat.offset();
        [w.x, w.y, w.z, o.x, o.y, o.z]
    };
    lines.sort_by(|a, b| {
        key(a)
            .iter()
            .zip(key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<TangentFlat> = Vec::new();
    for line in lines {
        let dup = kept.iter().any(|k| {
            (k.flat.frame()[0] - line.flat.frame()[0]).norm() < DEDUP_TOL
                && (k.flat.offset() - line.flat.offset()).norm() < DEDUP_TOL
        });
        if !dup {
            kept.push(line);
        }
    }
    if kept.len() < count / 4 {
        log::warn!(
            "only {} of {} tangent-line starts survived for bodies ({}, {})",
            kept.len(),
            count,
            body_j.label(),
            body_k.label()
        );
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::canonical::{canonical_forward, Covector};
    use crate::microlocal::locus::tangency_residual;

    fn disks() -> (ConvexBody, ConvexBody) {
        (
            ConvexBody::ball(0, &[-2.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball(1, &[2.0, 0.0], 1.0).unwrap(),
        )
    }

    fn balls() -> (ConvexBody, ConvexBody) {
        (
            ConvexBody::ball(0, &[-2.0, 0.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball(1, &[2.0, 0.0, 0.0], 1.0).unwrap(),
        )
    }

    #[test]
    fn four_lines_tangent_to_two_disks() {
        let (a, b) = disks();
        let lines = common_tangent_hyperplanes(&a, &b, 0).unwrap();
        assert_eq!(lines.len(), 4);
        let mut external = 0;
        let mut internal = 0;
        for l in &lines {
            let w = l.flat.normal().unwrap();
            let s = l.flat.signed_offset().unwrap();
            assert!(l.residual(&a, &b) < 1e-12);
            assert!(w.dot(&l.y_j) - s < 1e-12 && w.dot(&l.y_k) - s < 1e-12);
            if (w.x.abs()) < 1e-12 {
                assert!((s.abs() - 1.0).abs() < 1e-12);
                external += 1;
            } else {
                // internal tangents pass through the origin with normals (-1/2, +-sqrt3/2) up to sign
                assert!(s.abs() < 1e-12);
                assert!((w.x.abs() - 0.5).abs() < 1e-12);
                assert!((w.y.abs() - 3f64.sqrt() / 2.0).abs() < 1e-12);
                internal += 1;
            }
        }
        assert_eq!((external, internal), (2, 2));
    }

    #[test]
    fn ellipses_have_four_common_tangents() {
        let a = ConvexBody::ellipsoid(0, &[-1.5, 0.3], &[1.0, 0.3, 0.3, 2.5]).unwrap();
        let b = ConvexBody::ellipsoid(1, &[1.8, -0.4], &[4.0, -0.5, -0.5, 0.8]).unwrap();
        let lines = common_tangent_hyperplanes(&a, &b, 0).unwrap();
        assert_eq!(lines.len(), 4);
        for l in &lines {
            let w = l.flat.normal().unwrap();
            let s = l.flat.signed_offset().unwrap();
            assert!(l.residual(&a, &b) < 1e-10);
            // both support relations, one per body and sign
            let hj = w.dot(a.center()) - s;
            let hk = w.dot(b.center()) - s;
            assert!((hj.abs() - a.support_radius(&w)).abs() < 1e-8);
            assert!((hk.abs() - b.support_radius(&w)).abs() < 1e-8);
        }
    }

    #[test]
    fn equal_balls_external_planes_are_parallel_to_the_axis() {
        let (a, b) = balls();
        let planes = common_tangent_hyperplanes(&a, &b, 64).unwrap();
        assert_eq!(planes.len(), 128);
        let external: Vec<_> = planes.iter().filter(|p| p.signs == Some((1, 1))).collect();
        assert_eq!(external.len(), 64);
        for p in external {
            let w = p.flat.normal().unwrap();
            assert!(w.x.abs() < 1e-8);
            assert!((p.flat.signed_offset().unwrap().abs() - 1.0).abs() < 1e-8);
        }
        for p in &planes {
            assert!(p.residual(&a, &b) < 1e-8);
        }
    }

    #[test]
    fn overlapping_bodies_are_rejected() {
        let a = ConvexBody::ball(0, &[0.0, 0.0], 1.0).unwrap();
        let b = ConvexBody::ball(1, &[1.0, 0.0], 1.0).unwrap();
        assert!(matches!(common_tangent_hyperplanes(&a, &b, 0), Err(Error::Geometry(_))));
    }

    #[test]
    fn kind_one_flats_land_on_both_loci() {
        let a = ConvexBody::ellipsoid(0, &[-1.5, 0.2, 0.0], &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 1.5]).unwrap();
        let b = ConvexBody::ball(1, &[1.5, 0.0, 0.3], 0.7).unwrap();
        for t in common_tangent_hyperplanes(&a, &b, 64).unwrap() {
            for (y, eta) in [(t.y_j, t.eta_j), (t.y_k, t.eta_k)] {
                let fc = &canonical_forward(&Covector { base: y, dir: eta }, t.flat.kind(), 1).unwrap()[0];
                assert!(tangency_residual(&a, &fc.flat).abs() < 1e-8);
                assert!(tangency_residual(&b, &fc.flat).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn in_plane_line_between_two_balls() {
        let (a, b) = balls();
        let guess = refine_tangent_line(&a, &b, &Point::new(0.0, 1.0, 0.0), &Point::x()).unwrap().unwrap();
        assert!(guess.in_plane);
        assert!(guess.eta_j.cross(&Point::y()).norm() < 1e-8);
        assert!((guess.flat.distance_to(a.center()) - 1.0).abs() < 1e-8);
        assert!((guess.flat.distance_to(b.center()) - 1.0).abs() < 1e-8);
        assert_eq!(guess.allowed_conormals().len(), 1);
    }

    #[test]
    fn skew_tangent_line_from_top_and_side() {
        let (a, b) = balls();
        let top = Point::new(-2.0, 0.0, 1.0);
        let side = Point::new(2.0, 1.0, 0.0);
        let line = refine_tangent_line(&a, &b, &top, &(side - top)).unwrap().unwrap();
        assert!(!line.in_plane);
        assert!((line.flat.distance_to(a.center()) - 1.0).abs() < 1e-8);
        assert!((line.flat.distance_to(b.center()) - 1.0).abs() < 1e-8);
        assert_eq!(line.allowed_conormals().len(), 2);
        for eta in line.allowed_conormals() {
            assert!(eta.dot(&line.flat.frame()[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn seeded_family_of_tangent_lines() {
        let (a, b) = balls();
        let lines = common_tangent_codim2_flats(&a, &b, 40, 7).unwrap();
        assert!(lines.len() >= 10);
        for l in &lines {
            assert!((l.flat.distance_to(a.center()) - 1.0).abs() < 1e-8);
            assert!((l.flat.distance_to(b.center()) - 1.0).abs() < 1e-8);
            assert!((l.eta_j - a.outward_normal(&l.y_j)).norm() < 1e-12);
            assert!(l.eta_j.dot(&l.flat.frame()[0]).abs() < 1e-6);
            assert!(l.eta_k.dot(&l.flat.frame()[0]).abs() < 1e-6);
        }
        assert!(lines.iter().any(|l| !l.in_plane));
        let again = common_tangent_codim2_flats(&a, &b, 40, 7).unwrap();
        assert_eq!(lines, again);
        let planar = ConvexBody::ball(0, &[0.0, 0.0], 1.0).unwrap();
        assert!(common_tangent_codim2_flats(&planar, &planar, 4, 0).is_err());
    }

    #[test]
    fn atlas_export_round_trips_through_toml() {
        let (a, b) = disks();
        let text = atlas_to_toml(&common_tangent_hyperplanes(&a, &b, 0).unwrap()).unwrap();
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(parsed["flats"].as_array().unwrap().len(), 4);
        assert!(text.contains("kind = \"Hyperplane\""));
    }
}
