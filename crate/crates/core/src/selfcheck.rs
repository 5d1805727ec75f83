//! Fast invariant suite behind the `selfcheck` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beam::{metal_term_closed_form, series_coefficients};
use crate::error::Result;
use crate::figure::{analytic_tangents, two_disks};
use crate::grassmannian::{ChartKind, ChartParams, ChartSpec, Flat};
use crate::io::{decode_sinogram, encode_sinogram};
use crate::microlocal::{
    canonical_adjoint, canonical_forward, common_tangent_hyperplanes, intersection_report, tangency_residual, Covector,
};
use crate::probe::{classify_direction, directional_decay, DirectionClass, Field, ProbeSettings, DEFAULT_SMOOTH_THRESHOLD};
use crate::scene::{ConvexBody, Point, Scene};
use crate::transform::{fbp_reconstruct, forward_analytic, forward_quadrature, forward_sinogram, moment_condition_check, ImageGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn ellipse_pair() -> Result<Scene> {
    Scene::new(
        2,
        vec![
            ConvexBody::ellipsoid(0, &[-1.2, 0.3], &[2.0, 0.4, 0.4, 1.0])?,
            ConvexBody::ball(1, &[1.4, -0.2], 0.6)?,
        ],
        vec![],
        0.0,
    )
}

fn quadrature_matches_closed_form() -> Result<(bool, String)> {
    let scene = ellipse_pair()?;
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        let theta = 0.2 + k as f64 * 0.19;
        let flat = Flat::hyperplane(2, &Point::new(theta.cos(), theta.sin(), 0.0), -0.6 + 0.08 * k as f64)?;
        worst = worst.max((forward_analytic(&scene, &flat, false)? - forward_quadrature(&scene, &flat, 1e-4)?).abs());
    }
    Ok((worst < 1e-3, format!("max |analytic - quadrature| = {worst:.2e}")))
}

fn disk_reconstruction() -> Result<(bool, String)> {
    let scene = Scene::new(2, vec![ConvexBody::ball(0, &[0.3, -0.2], 0.8)?], vec![], 0.0)?;
    let chart = ChartSpec::uniform(ChartKind::Line2, 360, 384, 3.0)?;
    let grid = ImageGrid::centered(2, 64, 2.0)?;
    let image = fbp_reconstruct(&forward_sinogram(&scene, &chart, false)?, &grid)?;
    let mut err: f64 = 0.0;
    for idx in 0..image.len() {
        let x = image.point(idx);
        let b = &scene.bodies()[0];
        // stay clear of the boundary, where Gibbs overshoot lives
        if (b.quadratic_form(&x).sqrt() - 1.0).abs() > 0.25 {
            err = err.max((image.values[idx] - scene.indicator(&x)).abs());
        }
    }
    Ok((err < 0.05, format!("max interior/exterior error {err:.3}")))
}

fn range_moments() -> Result<(bool, String)> {
    let scene = ellipse_pair()?;
    let chart = ChartSpec::uniform(ChartKind::Line2, 32, 2048, 3.0)?;
    let sino = forward_sinogram(&scene, &chart, false)?;
    let worst = (0..3).map(|k| moment_condition_check(&sino, k)).collect::<Result<Vec<_>>>()?;
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok((max < 1e-3, format!("max moment residual {max:.1e}")))
}

fn metal_term_series() -> Result<(bool, String)> {
    let series = series_coefficients(6)?;
    let mut worst: f64 = 0.0;
    for k in 1..20 {
        let t = 0.02 * k as f64;
        let exact = metal_term_closed_form(t)?;
        worst = worst.max((exact - series.evaluate(t)).abs() / exact.abs());
    }
    Ok((worst < 1e-8, format!("relative series error {worst:.1e}")))
}

fn canonical_round_trip() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let body = ConvexBody::ellipsoid(0, &[0.2, -0.1, 0.3], &[1.5, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 0.8])?;
    let mut worst: f64 = 0.0;
    for kind in [ChartKind::Line3, ChartKind::Plane3] {
        for _ in 0..100 {
            let w = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
            let (y, n) = body.boundary_point_and_normal(&w)?;
            let scale = rng.gen_range(0.5..3.0);
            let cov = Covector { base: y, dir: n * scale };
            for fc in canonical_forward(&cov, kind, 3)? {
                worst = worst.max(tangency_residual(&body, &fc.flat).abs());
                match canonical_adjoint(&fc) {
                    Some(back) => worst = worst.max((back.base - y).norm()).max((back.dir - cov.dir).norm()),
                    None => worst = f64::INFINITY,
                }
            }
        }
    }
    Ok((worst < 1e-9, format!("max round-trip error {worst:.1e}")))
}

fn figure_lines() -> Result<(bool, String)> {
    let scene = two_disks();
    let lines = common_tangent_hyperplanes(&scene.bodies()[0], &scene.bodies()[1], 0)?;
    let mut worst: f64 = 0.0;
    for (theta, s) in analytic_tangents() {
        let best = lines
            .iter()
            .map(|l| match l.flat.params() {
                ChartParams::Angle { theta: t, s: o } => (t - theta).abs().max((o - s).abs()),
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    Ok((lines.len() == 4 && worst < 1e-8, format!("{} lines, max deviation {worst:.1e}", lines.len())))
}

fn transversality() -> Result<(bool, String)> {
    let a = ConvexBody::ball(0, &[-2.0, 0.0, 0.0], 1.0)?;
    let b = ConvexBody::ball(1, &[2.0, 0.0, 0.0], 1.0)?;
    let mut details = Vec::new();
    let mut ok = true;
    for kind in [ChartKind::Line3, ChartKind::Plane3] {
        let r = intersection_report(&a, &b, &ChartSpec::uniform(kind, 64, 8, 4.0)?)?;
        ok &= r.consistent() && !r.points.is_empty();
        details.push(format!("{}: {} points, min sigma {:.2e}", kind.label(), r.points.len(), r.min_sigma()));
    }
    Ok((ok, details.join("; ")))
}

fn edge_probe() -> Result<(bool, String)> {
    let image = ImageGrid::centered(2, 256, 1.0)?.sample(|x| if x.x > 0.1 { 1.0 } else { 0.0 });
    let field = Field::from_image(&image);
    let s = ProbeSettings::default();
    let p = Point::new(0.1, 0.0, 0.0);
    let across = directional_decay(&field, &p, &Point::x(), &s)?;
    let along = directional_decay(&field, &p, &Point::y(), &s)?;
    let ok = classify_direction(&across, DEFAULT_SMOOTH_THRESHOLD) == DirectionClass::Singular
        && classify_direction(&along, DEFAULT_SMOOTH_THRESHOLD) == DirectionClass::Smooth;
    Ok((ok, format!("slope across {:.2}, along {:.2}", across.slope, along.slope)))
}

fn file_round_trip() -> Result<(bool, String)> {
    let chart = ChartSpec::uniform(ChartKind::Line2, 16, 32, 3.0)?;
    let sino = forward_sinogram(&ellipse_pair()?, &chart, false)?;
    let back = decode_sinogram(&encode_sinogram(&sino, "selfcheck")?)?;
    let same = back.values.iter().zip(&sino.values).all(|(a, b)| a.to_bits() == b.to_bits());
    Ok((same && back.chart == sino.chart, "sinogram file round trip".into()))
}

/// Run every check; errors count as failures.
pub fn run_selfcheck() -> Vec<CheckOutcome> {
    type Check = fn() -> Result<(bool, String)>;
    let checks: [(&str, Check); 9] = [
        ("line integrals: closed form vs quadrature", quadrature_matches_closed_form),
        ("filtered back-projection of a disk", disk_reconstruction),
        ("range moment conditions", range_moments),
        ("metal term series", metal_term_series),
        ("canonical relation round trip", canonical_round_trip),
        ("four common tangents of two disks", figure_lines),
        ("transversal loci in space", transversality),
        ("edge probe directions", edge_probe),
        ("file round trip", file_round_trip),
    ];
    checks
        .iter()
        .map(|(name, check)| {
            let (passed, detail) = check().unwrap_or_else(|e| (false, e.to_string()));
            CheckOutcome {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}
