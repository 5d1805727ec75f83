use rayon::prelude::*;

use super::filter::apply_fractional_filter;
use super::{ImageGrid, Sinogram};
use crate::error::{Error, Result};
use crate::scene::Point;

/// Fraction of out-of-grid lookups above which a warning is raised.
pub const OUT_OF_RANGE_WARN_FRACTION: f64 = 0.01;

/// Diagnostics of one back-projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BackprojectReport {
    pub lookups: u64,
    pub out_of_range: u64,
}

impl BackprojectReport {
    pub fn out_of_range_fraction(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.out_of_range as f64 / self.lookups as f64
        }
    }

    pub fn warning(&self) -> Option<String> {
        let frac = self.out_of_range_fraction();
        (frac > OUT_OF_RANGE_WARN_FRACTION).then(|| {
            format!(
                "{:.2}% of back-projection lookups fell outside the offset grid",
                100.0 * frac
            )
        })
    }
}

/// Linear interpolation position on a cell-centred axis; `None` outside
/// `[-extent, extent]`.
fn locate(u: f64, extent: f64, h: f64, m: usize) -> Option<(usize, f64)> {
    if !(u >= -extent && u <= extent) {
        return None;
    }
    let f = ((u + extent) / h - 0.5).clamp(0.0, (m - 1) as f64);
    let i = (f.floor() as usize).min(m - 2);
    Some((i, f - i as f64))
}

/// `R_d^* g`: the weighted average over direction samples of `g` at the flat
/// through each grid point, divided by `C(d,n)`. Offsets are linearly
/// interpolated; lookups outside the offset grid read zero and are counted.
pub fn backproject(sino: &Sinogram, grid: &ImageGrid) -> Result<(ImageGrid, BackprojectReport)> {
    let chart = &sino.chart;
    if chart.n() != grid.dim {
        return Err(Error::config(format!(
            "chart ({}) cannot back-project onto a {}-dimensional image",
            chart.kind.label(),
            grid.dim
        )));
    }
    let dirs = chart.directions();
    let counts = chart.offset_counts.clone();
    let extent = chart.offset_extent;
    let spacing: Vec<f64> = (0..counts.len()).map(|a| chart.offset_spacing(a)).collect();
    let scale = 1.0 / chart.backprojection_constant();
    let pts: Vec<Point> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let results: Vec<(f64, u64)> = pts
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            let mut missed = 0u64;
            for (d, dir) in dirs.iter().enumerate() {
                let row = sino.row(d);
                let value = if counts.len() == 1 {
                    let u = dir.complement[0].dot(x);
                    locate(u, extent, spacing[0], counts[0])
                        .map(|(i, t)| (1.0 - t) * row[i] + t * row[i + 1])
                } else {
                    let u0 = dir.complement[0].dot(x);
                    let u1 = dir.complement[1].dot(x);
                    match (
                        locate(u0, extent, spacing[0], counts[0]),
                        locate(u1, extent, spacing[1], counts[1]),
                    ) {
                        (Some((i, s)), Some((j, t))) => {
                            let m2 = counts[1];
                            let a = (1.0 - t) * row[i * m2 + j] + t * row[i * m2 + j + 1];
                            let b = (1.0 - t) * row[(i + 1) * m2 + j] + t * row[(i + 1) * m2 + j + 1];
                            Some((1.0 - s) * a + s * b)
                        }
                        _ => None,
                    }
                };
                match value {
                    Some(v) => acc += dir.weight * v,
                    None => missed += 1,
                }
            }
            (acc * scale, missed)
        })
        .collect();
    let report = BackprojectReport {
        lookups: (pts.len() * dirs.len()) as u64,
        out_of_range: results.iter().map(|r| r.1).sum(),
    };
    if let Some(w) = report.warning() {
        log::warn!("{w}");
    }
    let image = grid.with_values(results.into_iter().map(|r| r.0).collect());
    Ok((image, report))
}

/// Filtered back-projection `R_d^* (-Delta_{x''})^{d/2} g`.
pub fn fbp_reconstruct(sino: &Sinogram, grid: &ImageGrid) -> Result<ImageGrid> {
    let filtered = apply_fractional_filter(sino)?;
    Ok(backproject(&filtered, grid)?.0)
}
