//! Two unit disks at `(+-2, 0)`: their indicator, its sinogram, the
//! reconstruction, the streak image `FBP((R_1 chi)^2)` and the four lines
//! tangent to both disks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beam::squared_metal_image;
use crate::error::Result;
use crate::grassmannian::{ChartKind, ChartSpec, Flat};
use crate::microlocal::{common_tangent_hyperplanes, TangentFlat};
use crate::probe::streak_contrast;
use crate::scene::{ConvexBody, Point, Scene};
use crate::transform::{fbp_reconstruct, forward_sinogram, ImageGrid, Sinogram};

/// Grid sizes of the reproduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureConfig {
    pub directions: usize,
    pub offsets: usize,
    pub offset_extent: f64,
    pub image_size: usize,
    pub image_extent: f64,
    /// Mask radius around the tangency points, added to the disk radius
    /// around each disk.
    pub margin: f64,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            directions: 2048,
            offsets: 768,
            offset_extent: 4.0,
            image_size: 512,
            image_extent: 4.0,
            margin: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub config: FigureConfig,
    pub scene: Scene,
    pub chi: ImageGrid,
    pub sinogram: Sinogram,
    pub reconstruction: ImageGrid,
    pub streaks: ImageGrid,
    pub tangents: Vec<TangentFlat>,
    /// Streak contrast on each tangent line, in the order of `tangents`.
    pub contrasts: Vec<f64>,
}

pub fn two_disks() -> Scene {
    Scene::new(
        2,
        vec![
            ConvexBody::ball(0, &[-2.0, 0.0], 1.0).expect("unit disk"),
            ConvexBody::ball(1, &[2.0, 0.0], 1.0).expect("unit disk"),
        ],
        vec![],
        0.0,
    )
    .expect("disjoint disks")
}

/// The analytic tangent lines as `(theta, s)`: `y = +-1` and the two lines
/// of slope `+-1/sqrt 3` through the origin.
pub fn analytic_tangents() -> [(f64, f64); 4] {
    use std::f64::consts::PI;
    [(PI / 2.0, 1.0), (PI / 2.0, -1.0), (PI / 3.0, 0.0), (2.0 * PI / 3.0, 0.0)]
}

pub fn reproduce(config: &FigureConfig) -> Result<Figure> {
    let scene = two_disks();
    let chart = ChartSpec::uniform(ChartKind::Line2, config.directions, config.offsets, config.offset_extent)?;
    let grid = ImageGrid::centered(2, config.image_size, config.image_extent)?;
    let chi = grid.clone().sample(|x| scene.indicator(x));
    let sinogram = forward_sinogram(&scene, &chart, false)?;
    let reconstruction = fbp_reconstruct(&sinogram, &grid)?;
    let streaks = squared_metal_image(&sinogram, &grid)?;
    let [a, b] = [&scene.bodies()[0], &scene.bodies()[1]];
    let tangents = common_tangent_hyperplanes(a, b, 0)?;
    let contrasts = tangents
        .iter()
        .map(|t| streak_contrast(&streaks, t, scene.bodies(), config.margin))
        .collect::<Result<Vec<_>>>()?;
    Ok(Figure {
        config: *config,
        scene,
        chi,
        sinogram,
        reconstruction,
        streaks,
        tangents,
        contrasts,
    })
}

/// Random lines at least `min_distance` from both disk centres whose
/// normals differ from every tangent normal by at least `min_angle`.
pub fn control_lines(count: usize, seed: u64, min_distance: f64, min_angle: f64) -> Vec<Flat> {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = two_disks();
    let normals: Vec<f64> = analytic_tangents().iter().map(|t| t.0).collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theta = rng.gen_range(0.0..PI);
        let s = rng.gen_range(-3.0..3.0);
        let angle_gap = normals
            .iter()
            .map(|n| {
                let d = (theta - n).rem_euclid(PI);
                d.min(PI - d)
            })
            .fold(f64::INFINITY, f64::min);
        let flat = Flat::hyperplane(2, &Point::new(theta.cos(), theta.sin(), 0.0), s).expect("unit normal");
        let far = scene.bodies().iter().all(|b| flat.distance_to(b.center()) >= min_distance);
        if angle_gap >= min_angle && far {
            out.push(flat);
        }
    }
    out
}
