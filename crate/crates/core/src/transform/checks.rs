use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use super::filter::ROLLOFF_START;
use super::fourier::scene_fourier;
use super::{forward_analytic, Sinogram};
use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, Flat};
use crate::scene::{Point, Scene};

/// Compare the DFT of `R_d f(sigma, .)` over a cell-centred offset grid with
/// `f^` on `sigma^perp`. Returns the largest error normalised by the peak
/// `|f^|` over the requested frequencies.
pub fn fourier_slice_check(
    scene: &Scene,
    flat: &Flat,
    offsets: usize,
    extent: f64,
    frequencies: &[Point],
    include_background: bool,
) -> Result<f64> {
    if offsets < 2 || !(extent > 0.0) {
        return Err(Error::config("fourier slice check needs >= 2 offsets and a positive extent"));
    }
    let h = 2.0 * extent / offsets as f64;
    let basis = flat.complement();
    for xi in frequencies {
        let scale = xi.norm().max(1.0);
        if flat.frame().iter().any(|w| w.dot(xi).abs() > 1e-9 * scale) {
            return Err(Error::input(format!("frequency {xi:?} is not orthogonal to the flat")));
        }
        if basis.iter().any(|e| e.dot(xi).abs() > ROLLOFF_START * PI / h) {
            return Err(Error::input(format!("frequency {xi:?} is above the roll-off")));
        }
    }
    let coords: Vec<f64> = (0..offsets).map(|m| -extent + (m as f64 + 0.5) * h).collect();
    let mut samples: Vec<(Point, f64)> = Vec::new();
    if basis.len() == 1 {
        for u in &coords {
            let x = basis[0] * *u;
            let f = Flat::from_frame(flat.kind(), flat.frame().to_vec(), x)?;
            samples.push((x, forward_analytic(scene, &f, include_background)?));
        }
    } else {
        for a in &coords {
            for b in &coords {
                let x = basis[0] * *a + basis[1] * *b;
                let f = Flat::from_frame(flat.kind(), flat.frame().to_vec(), x)?;
                samples.push((x, forward_analytic(scene, &f, include_background)?));
            }
        }
    }
    let cell = h.powi(basis.len() as i32);
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for xi in frequencies {
        let dft: Complex64 = samples
            .iter()
            .map(|(x, v)| Complex64::from_polar(*v, -x.dot(xi)))
            .sum::<Complex64>()
            * cell;
        let exact = scene_fourier(scene, xi, include_background);
        worst = worst.max((dft - exact).norm());
        peak = peak.max(exact.norm());
    }
    Ok(if peak > 0.0 { worst / peak } else { worst })
}

/// One moment `M_k(sigma, xi'')` with its frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    pub xi: Point,
    pub value: f64,
}

fn check_moment_args(sino: &Sinogram, k: u32) -> Result<()> {
    if k > 2 {
        return Err(Error::config(format!("moment order {k} is unsupported (k <= 2)")));
    }
    sino.chart.validate()
}

/// `M_k(sigma, xi'') = int (xi'' . x'')^k R_d f dx''` on the grid, for the
/// unit normal of each hyperplane or three unit vectors of each line's
/// offset plane.
pub fn moment_samples(sino: &Sinogram, k: u32) -> Result<Vec<MomentSample>> {
    check_moment_args(sino, k)?;
    let chart = &sino.chart;
    let cell = chart.offset_cell();
    let mut out = Vec::new();
    for (d, dir) in chart.directions().iter().enumerate() {
        let row = sino.row(d);
        let xis: Vec<Point> = if chart.kind == ChartKind::Line3 {
            let (e1, e2) = (dir.complement[0], dir.complement[1]);
            vec![e1, e2, (e1 + e2) / 2f64.sqrt()]
        } else {
            vec![dir.complement[0]]
        };
        for xi in xis {
            let value: f64 = row
                .iter()
                .enumerate()
                .map(|(m, v)| v * xi.dot(&chart.offset_vector(dir, m)).powi(k as i32))
                .sum::<f64>()
                * cell;
            out.push(MomentSample { xi, value });
        }
    }
    Ok(out)
}

fn monomials(n: usize, k: u32) -> Vec<Vec<usize>> {
    match k {
        0 => vec![vec![]],
        1 => (0..n).map(|i| vec![i]).collect(),
        _ => (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect(),
    }
}

fn eval_monomial(m: &[usize], xi: &Point) -> f64 {
    m.iter().map(|&i| xi[i]).product()
}

/// Fit one homogeneous degree-`k` polynomial `P_k(xi'')` to the moments of
/// every direction and return the largest residual relative to the largest
/// `|P_k|` on the samples.
pub fn moment_condition_check(sino: &Sinogram, k: u32) -> Result<f64> {
    let samples = moment_samples(sino, k)?;
    let basis = monomials(sino.chart.n(), k);
    let a = DMatrix::from_fn(samples.len(), basis.len(), |r, c| eval_monomial(&basis[c], &samples[r].xi));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.value));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Numerical(format!("moment fit failed: {e}")))?;
    let fitted = &a * &coef;
    let norm = fitted.amax();
    let resid = (&fitted - &b).amax();
    Ok(if norm > 0.0 { resid / norm } else { resid })
}
