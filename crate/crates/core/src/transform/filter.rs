use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Role, Sinogram};
use crate::error::{Error, Result};
use crate::grassmannian::ChartKind;

/// Fraction of the Nyquist frequency where the raised-cosine roll-off
/// starts.
pub const ROLLOFF_START: f64 = 0.8;

/// Raised-cosine taper on `|frequency| / nyquist`.
pub fn rolloff(x: f64) -> f64 {
    if x <= ROLLOFF_START {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (x - ROLLOFF_START) / (1.0 - ROLLOFF_START)).cos())
    }
}

/// Signed angular frequency of DFT bin `k` of length `p` with spacing `h`.
fn frequency(k: usize, p: usize, h: f64) -> f64 {
    let signed = if k <= p / 2 { k as f64 } else { k as f64 - p as f64 };
    2.0 * PI * signed / (p as f64 * h)
}

/// Band-limited ramp kernel sampled at `n h`.
fn ramp_kernel(n: i64, h: f64) -> f64 {
    if n == 0 {
        PI / (2.0 * h * h)
    } else if n % 2 != 0 {
        -2.0 / (PI * (n * n) as f64 * h * h)
    } else {
        0.0
    }
}

/// Real DFT-domain multiplier of the filter on a zero-padded grid with
/// `padded[a]` samples of spacing `spacing[a]` per offset axis (row-major for
/// two axes).
///
/// Lines in the plane use the transform of the band-limited spatial ramp
/// kernel, which is `|sigma|` without the periodisation error of sampling
/// `|sigma|` directly; the other charts sample `sigma^2` and `|xi|`.
pub fn filter_multiplier(kind: ChartKind, padded: &[usize], spacing: &[f64]) -> Vec<f64> {
    match kind {
        ChartKind::Line2 => {
            let (p, h) = (padded[0], spacing[0]);
            let mut buf: Vec<Complex64> = (0..p)
                .map(|i| {
                    let n = if i <= p / 2 { i as i64 } else { i as i64 - p as i64 };
                    Complex64::new(h * ramp_kernel(n, h), 0.0)
                })
                .collect();
            FftPlanner::new().plan_fft_forward(p).process(&mut buf);
            let nyq = PI / h;
            (0..p)
                .map(|k| buf[k].re * rolloff(frequency(k, p, h).abs() / nyq))
                .collect()
        }
        ChartKind::Plane3 => {
            let (p, h) = (padded[0], spacing[0]);
            let nyq = PI / h;
            (0..p)
                .map(|k| {
                    let s = frequency(k, p, h);
                    s * s * rolloff(s.abs() / nyq)
                })
                .collect()
        }
        ChartKind::Line3 => {
            let (p1, p2) = (padded[0], padded[1]);
            let (n1, n2) = (PI / spacing[0], PI / spacing[1]);
            let mut out = Vec::with_capacity(p1 * p2);
            for i in 0..p1 {
                let a = frequency(i, p1, spacing[0]);
                for j in 0..p2 {
                    let b = frequency(j, p2, spacing[1]);
                    let x = ((a / n1).powi(2) + (b / n2).powi(2)).sqrt();
                    out.push((a * a + b * b).sqrt() * rolloff(x));
                }
            }
            out
        }
    }
}

struct Plan {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

fn plan(padded: &[usize]) -> Plan {
    let mut planner = FftPlanner::new();
    Plan {
        forward: padded.iter().map(|&p| planner.plan_fft_forward(p)).collect(),
        inverse: padded.iter().map(|&p| planner.plan_fft_inverse(p)).collect(),
    }
}

fn transform_2d(buf: &mut [Complex64], p1: usize, p2: usize, rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
    for r in buf.chunks_mut(p2) {
        rows.process(r);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); p1];
    for j in 0..p2 {
        for i in 0..p1 {
            col[i] = buf[i * p2 + j];
        }
        cols.process(&mut col);
        for i in 0..p1 {
            buf[i * p2 + j] = col[i];
        }
    }
}

/// Apply `(-Delta_{x''})^{d/2}` to each direction's offset profile.
///
/// Profiles are zero-padded to twice their length, multiplied in the DFT
/// domain by [`filter_multiplier`] and cropped back.
pub fn apply_fractional_filter(sino: &Sinogram) -> Result<Sinogram> {
    if sino.role == Role::Filtered {
        return Err(Error::input("sinogram is already filtered"));
    }
    let chart = &sino.chart;
    chart.validate()?;
    let counts = &chart.offset_counts;
    let padded: Vec<usize> = counts.iter().map(|m| 2 * m).collect();
    let spacing: Vec<f64> = (0..counts.len()).map(|a| chart.offset_spacing(a)).collect();
    let mult = filter_multiplier(chart.kind, &padded, &spacing);
    let plan = plan(&padded);
    let per = chart.offsets_per_direction();
    let total: usize = padded.iter().product();
    let mut values = vec![0.0; sino.values.len()];
    values
        .par_chunks_mut(per)
        .zip(sino.values.par_chunks(per))
        .for_each(|(out, row)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); total];
            if padded.len() == 1 {
                for (b, v) in buf.iter_mut().zip(row) {
                    b.re = *v;
                }
                plan.forward[0].process(&mut buf);
                for (b, m) in buf.iter_mut().zip(&mult) {
                    *b *= *m;
                }
                plan.inverse[0].process(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re / total as f64;
                }
            } else {
                let (m1, m2) = (counts[0], counts[1]);
                let (p1, p2) = (padded[0], padded[1]);
                for i in 0..m1 {
                    for j in 0..m2 {
                        buf[i * p2 + j].re = row[i * m2 + j];
                    }
                }
                transform_2d(&mut buf, p1, p2, &*plan.forward[1], &*plan.forward[0]);
                for (b, m) in buf.iter_mut().zip(&mult) {
                    *b *= *m;
                }
                transform_2d(&mut buf, p1, p2, &*plan.inverse[1], &*plan.inverse[0]);
                for i in 0..m1 {
                    for j in 0..m2 {
                        out[i * m2 + j] = buf[i * p2 + j].re / total as f64;
                    }
                }
            }
        });
    Sinogram::new(chart.clone(), Role::Filtered, values)
}
