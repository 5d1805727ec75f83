//! Numerical wavefront detector: the decay rate of a windowed Fourier
//! transform along one direction, fitted on a geometric ladder of
//! frequencies, together with a line-contrast statistic for streaks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, ChartSpec, Flat};
use crate::microlocal::TangentFlat;
use crate::scene::{ConvexBody, Point};
use crate::transform::{ImageGrid, Sinogram};

/// Slope above which a direction counts as singular.
pub const DEFAULT_SMOOTH_THRESHOLD: f64 = -2.5;
/// Window width in units of the largest grid spacing.
pub const DEFAULT_WINDOW_CELLS: f64 = 12.0;
/// Number of frequencies in the ladder.
pub const DEFAULT_RADII: usize = 8;
/// Lowest frequency in units of `1 / window_width`.
pub const MIN_RADIUS_WINDOWS: f64 = 4.0;
/// Highest frequency as a fraction of the grid Nyquist frequency.
pub const MAX_RADIUS_NYQUIST: f64 = 0.5;
/// Relative noise floor of windowed magnitudes.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Window truncation radius in window widths.
pub const WINDOW_REACH: f64 = 8.0;
/// Fits with `r^2` below this are flagged.
pub const MIN_R2: f64 = 0.9;
/// Control flats per streak measurement.
pub const CONTROL_FLATS: usize = 32;

/// A scalar field on a regular cell-centred grid of dimension 1 to 3.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    dim: usize,
    origin: [f64; 3],
    spacing: [f64; 3],
    shape: [usize; 3],
    values: &'a [f64],
}

impl<'a> Field<'a> {
    /// `origin` is the first cell centre; values are row-major, first axis
    /// slowest, with unused axes of length 1.
    pub fn new(dim: usize, origin: [f64; 3], spacing: [f64; 3], shape: [usize; 3], values: &'a [f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::input("fields have 1 to 3 axes"));
        }
        if shape[dim..].iter().any(|&m| m != 1) || shape[..dim].iter().any(|&m| m < 2) {
            return Err(Error::input("invalid field shape"));
        }
        if spacing[..dim].iter().any(|h| !(*h > 0.0)) {
            return Err(Error::input("field spacing must be positive"));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::input("field values do not match the shape"));
        }
        Ok(Self {
            dim,
            origin,
            spacing,
            shape,
            values,
        })
    }

    pub fn from_image(image: &'a ImageGrid) -> Self {
        Self {
            dim: image.dim,
            origin: [image.origin.x, image.origin.y, image.origin.z],
            spacing: image.spacing,
            shape: image.shape,
            values: &image.values,
        }
    }

    /// Offset profile of one direction sample, as a function of the offset
    /// coordinates.
    pub fn from_sinogram_row(sino: &'a Sinogram, dir: usize) -> Result<Self> {
        if dir >= sino.chart.direction_count {
            return Err(Error::input("direction index out of range"));
        }
        Self::from_chart_row(&sino.chart, sino.row(dir))
    }

    /// Values laid out like one direction row of `chart`.
    pub fn from_chart_row(chart: &ChartSpec, values: &'a [f64]) -> Result<Self> {
        let codim = chart.kind.codim();
        let mut origin = [0.0; 3];
        let mut spacing = [1.0; 3];
        let mut shape = [1; 3];
        for a in 0..codim {
            spacing[a] = chart.offset_spacing(a);
            origin[a] = -chart.offset_extent + 0.5 * spacing[a];
            shape[a] = chart.offset_counts[a];
        }
        Self::new(codim, origin, spacing, shape, values)
    }

    /// A `(2,1)` sinogram as a field of `(theta, s)`.
    pub fn from_angle_sinogram(sino: &'a Sinogram) -> Result<Self> {
        let chart = &sino.chart;
        if chart.kind != ChartKind::Line2 {
            return Err(Error::input("only (2,1) sinograms have an angle axis"));
        }
        let h = chart.offset_spacing(0);
        Self::new(
            2,
            [0.0, -chart.offset_extent + 0.5 * h, 0.0],
            [std::f64::consts::PI / chart.direction_count as f64, h, 1.0],
            [chart.direction_count, chart.offset_counts[0], 1],
            &sino.values,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the sample nearest to `x`, or `None` outside the grid.
    pub fn value_near(&self, x: &Point) -> Option<f64> {
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            let i = ((x[a] - self.origin[a]) / self.spacing[a]).round();
            if !(i >= 0.0 && i < self.shape[a] as f64) {
                return None;
            }
            idx[a] = i as usize;
        }
        Some(self.values[(idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]])
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    /// Distance from `x` to the edge of the grid cells.
    fn inset(&self, x: &Point) -> f64 {
        (0..self.dim)
            .map(|a| {
                let lo = self.origin[a] - 0.5 * self.spacing[a];
                let hi = lo + self.shape[a] as f64 * self.spacing[a];
                (x[a] - lo).min(hi - x[a])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Settings of one decay probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSettings {
    /// Gaussian window standard deviation; `None` uses
    /// [`DEFAULT_WINDOW_CELLS`] grid spacings.
    pub window_width: Option<f64>,
    pub radii: usize,
    pub min_radius_windows: f64,
    pub max_radius_nyquist: f64,
    pub noise_floor: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            window_width: None,
            radii: DEFAULT_RADII,
            min_radius_windows: MIN_RADIUS_WINDOWS,
            max_radius_nyquist: MAX_RADIUS_NYQUIST,
            noise_floor: NOISE_FLOOR,
        }
    }
}

impl ProbeSettings {
    pub fn with_window(width: f64) -> Self {
        Self {
            window_width: Some(width),
            ..Self::default()
        }
    }

    pub fn window_for(&self, field: &Field) -> f64 {
        self.window_width.unwrap_or(DEFAULT_WINDOW_CELLS * field.max_spacing())
    }

    /// Geometric frequency ladder for a field.
    pub fn radii_for(&self, field: &Field) -> Result<Vec<f64>> {
        let w = self.window_for(field);
        let lo = self.min_radius_windows / w;
        let hi = self.max_radius_nyquist * std::f64::consts::PI / field.max_spacing();
        if self.radii < 2 || !(hi > lo) {
            return Err(Error::input(format!(
                "empty frequency ladder [{lo:.3}, {hi:.3}]; widen the window or refine the grid"
            )));
        }
        let ratio = (hi / lo).powf(1.0 / (self.radii - 1) as f64);
        Ok((0..self.radii).map(|i| lo * ratio.powi(i as i32)).collect())
    }
}

/// Fitted decay of a windowed Fourier transform along one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    pub window_width: f64,
    pub radii: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Magnitude below which values are round-off.
    pub floor: f64,
    /// Some magnitude sits below the floor.
    pub below_floor: bool,
    /// The window saw only zeros.
    pub zero_window: bool,
}

impl DecayEstimate {
    pub fn log_magnitudes(&self) -> Vec<f64> {
        self.magnitudes.iter().map(|m| m.max(f64::MIN_POSITIVE).ln()).collect()
    }

    /// Smallest magnitude over the floor.
    pub fn floor_margin(&self) -> f64 {
        let min = self.magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
        if self.floor > 0.0 {
            min / self.floor
        } else {
            f64::INFINITY
        }
    }
}

/// Least-squares line `y = a + b x`, returning `(b, a, r^2)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

fn check_direction(field: &Field, direction: &Point) -> Result<()> {
    if ((direction.norm() - 1.0).abs() > 1e-9) || (field.dim..3).any(|a| direction[a] != 0.0) {
        return Err(Error::input("probe direction must be a unit vector in the field's axes"));
    }
    Ok(())
}

/// Window-weighted samples `(phase coordinate, f g dV)` around `point`,
/// with the window mass.
fn windowed_samples(field: &Field, point: &Point, direction: &Point, w: f64) -> (Vec<(f64, f64)>, f64) {
    let reach = WINDOW_REACH * w;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        if a < field.dim {
            let h = field.spacing[a];
            let first = ((point[a] - reach - field.origin[a]) / h).ceil().max(0.0) as usize;
            let last = ((point[a] + reach - field.origin[a]) / h).floor();
            lo[a] = first;
            hi[a] = if last < 0.0 { 0 } else { (last as usize + 1).min(field.shape[a]) };
        } else {
            hi[a] = 1;
        }
    }
    let cell: f64 = field.spacing[..field.dim].iter().product();
    let inv = 0.5 / (w * w);
    let rows: Vec<(Vec<(f64, f64)>, f64)> = (lo[0]..hi[0].max(lo[0]))
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let mut mass = 0.0;
            for j in lo[1]..hi[1].max(lo[1]) {
                for k in lo[2]..hi[2].max(lo[2]) {
                    let mut y = Point::zeros();
                    for (a, idx) in [i, j, k].into_iter().enumerate().take(field.dim) {
                        y[a] = field.coord(a, idx) - point[a];
                    }
                    let r2 = y.norm_squared();
                    if r2 > reach * reach {
                        continue;
                    }
                    let g = (-r2 * inv).exp() * cell;
                    mass += g;
                    let f = field.values[(i * field.shape[1] + j) * field.shape[2] + k];
                    if f != 0.0 {
                        out.push((y.dot(direction), f * g));
                    }
                }
            }
            (out, mass)
        })
        .collect();
    let mass = rows.iter().map(|r| r.1).sum();
    (rows.into_iter().flat_map(|r| r.0).collect(), mass)
}

/// Windowed Fourier magnitudes `|sum f(x) g(x - p) e^{-i r xi.(x-p)} dV|`
/// on the frequency ladder, and the slope of their log-log fit.
pub fn directional_decay(field: &Field, point: &Point, direction: &Point, settings: &ProbeSettings) -> Result<DecayEstimate> {
    check_direction(field, direction)?;
    let w = settings.window_for(field);
    if field.inset(point) < 2.0 * w {
        return Err(Error::input(format!(
            "probe point lies within two window widths ({:.3}) of the grid edge",
            2.0 * w
        )));
    }
    let radii = settings.radii_for(field)?;
    let (samples, mass) = windowed_samples(field, point, direction, w);
    let floor = settings.noise_floor * field.max_abs() * mass;
    let magnitudes: Vec<f64> = radii
        .par_iter()
        .map(|r| {
            let (mut re, mut im) = (0.0, 0.0);
            for (p, a) in &samples {
                let (s, c) = (r * p).sin_cos();
                re += a * c;
                im -= a * s;
            }
            re.hypot(im)
        })
        .collect();
    let zero_window = samples.is_empty();
    let (slope, intercept, r2) = if zero_window {
        (f64::NAN, f64::NAN, 0.0)
    } else {
        let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = magnitudes.iter().map(|m| m.max(f64::MIN_POSITIVE).ln()).collect();
        fit_line(&lx, &ly)
    };
    Ok(DecayEstimate {
        point: [point.x, point.y, point.z],
        direction: [direction.x, direction.y, direction.z],
        window_width: w,
        below_floor: zero_window || magnitudes.iter().any(|m| *m <= floor),
        radii,
        magnitudes,
        slope,
        intercept,
        r2,
        floor,
        zero_window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionClass {
    Singular,
    Smooth,
}

/// Singular when every magnitude clears the noise floor and the fitted
/// slope exceeds `smooth_threshold`.
pub fn classify_direction(est: &DecayEstimate, smooth_threshold: f64) -> DirectionClass {
    if !est.below_floor && est.slope > smooth_threshold {
        DirectionClass::Singular
    } else {
        DirectionClass::Smooth
    }
}

/// Decay exponent across a singular locus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub estimate: DecayEstimate,
    pub exponent: f64,
    pub poor_fit: bool,
}

/// Fitted exponent of the windowed transform across a locus at `point`
/// in its normal direction: `-1` for a jump, `-3/2` for a square-root
/// fold, `-2` for a kink.
pub fn conormal_order_fit(field: &Field, point: &Point, normal: &Point, settings: &ProbeSettings) -> Result<OrderFit> {
    let estimate = directional_decay(field, point, normal, settings)?;
    Ok(OrderFit {
        exponent: estimate.slope,
        poor_fit: estimate.zero_window || estimate.r2 < MIN_R2,
        estimate,
    })
}

/// One row of a probe batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub point: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    pub slope: f64,
    pub r2: f64,
    pub below_floor: bool,
    pub class: DirectionClass,
}

/// Run independent probes in parallel; each direction is normalised first.
pub fn probe_batch(field: &Field, specs: &[ProbeSpec], settings: &ProbeSettings, threshold: f64) -> Result<Vec<ProbeResult>> {
    specs
        .par_iter()
        .map(|spec| {
            let p = Point::from(spec.point);
            let d = Point::from(spec.direction)
                .try_normalize(0.0)
                .ok_or_else(|| Error::input("zero probe direction"))?;
            let est = directional_decay(field, &p, &d, settings)?;
            Ok(ProbeResult {
                point: spec.point,
                direction: [d.x, d.y, d.z],
                slope: est.slope,
                r2: est.r2,
                below_floor: est.below_floor,
                class: classify_direction(&est, threshold),
            })
        })
        .collect()
}

/// A statistic along a flat against parallel control flats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastReport {
    pub on_flat: f64,
    pub controls: Vec<f64>,
    pub ratio: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pointwise quantity averaged along a flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastStatistic {
    /// `|f|`.
    Value,
    /// Magnitude of the gradient component normal to the flat, by central
    /// differences one cell wide; a jump across the flat shows up as a
    /// ridge on it.
    NormalGradient,
    /// RMS residual of a least-squares quadratic fitted to the profile
    /// across the flat over [`BAND_CELLS`] cells to either side, combined
    /// over the normal axes. Jumps and kinks centred on the flat leave a
    /// residual; smooth trends do not.
    BandResidual,
}

/// Half width, in cells, of the profile used by
/// [`ContrastStatistic::BandResidual`].
pub const BAND_CELLS: usize = 6;

/// Residual projector `I - P` onto the complement of quadratics on the
/// points `-K..=K`.
fn band_projector() -> nalgebra::DMatrix<f64> {
    let n = 2 * BAND_CELLS + 1;
    let a = nalgebra::DMatrix::from_fn(n, 3, |i, j| (i as f64 - BAND_CELLS as f64).powi(j as i32));
    let ata = (a.transpose() * &a).try_inverse().expect("Vandermonde normal matrix is invertible");
    nalgebra::DMatrix::identity(n, n) - &a * ata * a.transpose()
}

fn statistic_at(
    image: &ImageGrid,
    x: &Point,
    normals: &[Point],
    h: f64,
    stat: ContrastStatistic,
    band: Option<&nalgebra::DMatrix<f64>>,
) -> Option<f64> {
    match stat {
        ContrastStatistic::Value => image.interpolate(x).map(f64::abs),
        ContrastStatistic::NormalGradient => {
            let mut g2 = 0.0;
            for n in normals {
                let hi = image.interpolate(&(x + n * h))?;
                let lo = image.interpolate(&(x - n * h))?;
                g2 += ((hi - lo) / (2.0 * h)).powi(2);
            }
            Some(g2.sqrt())
        }
        ContrastStatistic::BandResidual => {
            let n = 2 * BAND_CELLS + 1;
            let mut r2 = 0.0;
            for normal in normals {
                let mut profile = nalgebra::DVector::zeros(n);
                for i in 0..n {
                    let u = (i as f64 - BAND_CELLS as f64) * h;
                    profile[i] = image.interpolate(&(x + normal * u))?;
                }
                r2 += (band.expect("projector built for band statistics") * profile).norm_squared() / n as f64;
            }
            Some(r2.sqrt())
        }
    }
}

/// Sample positions of `flat` covering the image, every half cell along a
/// line and every cell across a plane.
fn flat_samples(image: &ImageGrid, flat: &Flat) -> Vec<Point> {
    let h = image.spacing[..image.dim].iter().copied().fold(f64::INFINITY, f64::min);
    let mut centre = Point::zeros();
    let mut radius2 = 0.0;
    for a in 0..image.dim {
        let half = 0.5 * image.shape[a] as f64 * image.spacing[a];
        centre[a] = image.origin[a] - 0.5 * image.spacing[a] + half;
        radius2 += half * half;
    }
    let base = flat.offset() + crate::grassmannian::project_onto_sigma(flat, &centre);
    let frame = flat.frame();
    match frame.len() {
        1 => {
            let step = 0.5 * h;
            let steps = (radius2.sqrt() / step).ceil() as i64;
            (-steps..=steps).map(|i| base + frame[0] * (i as f64 * step)).collect()
        }
        _ => {
            let steps = (radius2.sqrt() / h).ceil() as i64;
            (-steps..=steps)
                .flat_map(|i| (-steps..=steps).map(move |j| (i, j)))
                .map(|(i, j)| base + frame[0] * (i as f64 * h) + frame[1] * (j as f64 * h))
                .collect()
        }
    }
}

/// Statistic at `x`, or `None` when masked or outside the image.
fn masked_statistic(
    image: &ImageGrid,
    x: &Point,
    normals: &[Point],
    masks: &[(Point, f64)],
    stat: ContrastStatistic,
    band: Option<&nalgebra::DMatrix<f64>>,
) -> Option<f64> {
    if masks.iter().any(|(c, r)| (x - c).norm() < *r) {
        return None;
    }
    let h = image.spacing[..image.dim].iter().copied().fold(f64::INFINITY, f64::min);
    statistic_at(image, x, normals, h, stat, band)
}

/// Minimum number of usable samples on a flat.
const MIN_FLAT_SAMPLES: usize = 16;

/// Contrast of `flat` against [`CONTROL_FLATS`] parallel flats shifted by 3
/// to 10 multiples of `control_step`.
///
/// Each control is compared with the flat only at positions where both the
/// flat sample and its shifted copy are inside the image and outside
/// `masks`; the ratio is the median over controls of the two means.
pub fn flat_contrast(
    image: &ImageGrid,
    flat: &Flat,
    masks: &[(Point, f64)],
    control_step: f64,
    stat: ContrastStatistic,
) -> Result<ContrastReport> {
    if flat.kind().n() != image.dim {
        return Err(Error::input("flat and image disagree on the dimension"));
    }
    let normals = flat.complement();
    let band = (stat == ContrastStatistic::BandResidual).then(band_projector);
    let points = flat_samples(image, flat);
    let on: Vec<Option<f64>> = points
        .iter()
        .map(|x| masked_statistic(image, x, &normals, masks, stat, band.as_ref()))
        .collect();
    let valid: Vec<f64> = on.iter().flatten().copied().collect();
    if valid.len() < MIN_FLAT_SAMPLES {
        return Err(Error::input("flat lies mostly outside the image or inside masks"));
    }
    let on_flat = valid.iter().sum::<f64>() / valid.len() as f64;
    let half = CONTROL_FLATS / 2;
    let shifts: Vec<Point> = match normals.len() {
        1 => (0..CONTROL_FLATS)
            .map(|i| {
                let mag = (3.0 + 7.0 * (i % half) as f64 / (half - 1) as f64) * control_step;
                let sign = if i < half { 1.0 } else { -1.0 };
                normals[0] * (sign * mag)
            })
            .collect(),
        _ => (0..CONTROL_FLATS)
            .map(|i| {
                let mag = (3.0 + 7.0 * i as f64 / (CONTROL_FLATS - 1) as f64) * control_step;
                let a = 2.0 * std::f64::consts::PI * i as f64 / CONTROL_FLATS as f64;
                (normals[0] * a.cos() + normals[1] * a.sin()) * mag
            })
            .collect(),
    };
    let per_control: Vec<(f64, f64)> = shifts
        .par_iter()
        .filter_map(|shift| {
            let (mut main, mut ctrl, mut count) = (0.0, 0.0, 0usize);
            for (x, v) in points.iter().zip(&on) {
                let Some(v) = v else { continue };
                if let Some(c) = masked_statistic(image, &(x + shift), &normals, masks, stat, band.as_ref()) {
                    main += v;
                    ctrl += c;
                    count += 1;
                }
            }
            if count < MIN_FLAT_SAMPLES {
                return None;
            }
            let ratio = if ctrl > 0.0 {
                main / ctrl
            } else if main == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            Some((ctrl / count as f64, ratio))
        })
        .collect();
    if per_control.is_empty() {
        return Err(Error::input("no control flat overlaps the flat inside the image"));
    }
    let controls = per_control.iter().map(|c| c.0).collect();
    let ratio = median(&mut per_control.iter().map(|c| c.1).collect::<Vec<_>>());
    Ok(ContrastReport {
        on_flat,
        controls,
        ratio,
    })
}

/// Masks around each body (bounding radius plus `margin`) and around
/// given points.
pub fn streak_masks(bodies: &[ConvexBody], points: &[Point], margin: f64) -> Vec<(Point, f64)> {
    bodies
        .iter()
        .map(|b| (*b.center(), b.max_radius() + margin))
        .chain(points.iter().map(|p| (*p, margin)))
        .collect()
}

/// Streak contrast along a tangent flat: the band-residual statistic
/// against parallel controls, masking the bodies and the two tangency
/// points by `margin`; controls step by the default probe window.
pub fn streak_contrast(image: &ImageGrid, tangent: &TangentFlat, bodies: &[ConvexBody], margin: f64) -> Result<f64> {
    flat_streak_contrast(image, &tangent.flat, bodies, &[tangent.y_j, tangent.y_k], margin)
}

/// [`streak_contrast`] for any flat, masking the bodies and `points`.
pub fn flat_streak_contrast(image: &ImageGrid, flat: &Flat, bodies: &[ConvexBody], points: &[Point], margin: f64) -> Result<f64> {
    let masks = streak_masks(bodies, points, margin);
    let step = DEFAULT_WINDOW_CELLS * image.spacing[0];
    Ok(flat_contrast(image, flat, &masks, step, ContrastStatistic::BandResidual)?.ratio)
}
