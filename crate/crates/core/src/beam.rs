//! Beam hardening for a uniform spectrum on `[E0 - eps, E0 + eps]` and a
//! metal attenuation `f_E0 + alpha (E - E0) chi_D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmannian::ChartSpec;
use crate::scene::Scene;
use crate::transform::{fbp_reconstruct, forward_sinogram, ImageGrid, Role, Sinogram};

/// Largest `|alpha| eps` accepted by [`SpectralModel`].
pub const MAX_ALPHA_EPS: f64 = 0.2;

/// Below this `t` the closed form is evaluated by its three-term series.
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// Largest series truncation supported by [`series_coefficients`].
pub const MAX_SERIES_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

impl SpectralModel {
    pub fn new(e0: f64, epsilon: f64, alpha: f64) -> Result<Self> {
        let m = Self { e0, epsilon, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 > 0.0 && self.epsilon > 0.0) || !self.e0.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::config("E0 and epsilon must be positive"));
        }
        if self.e0 - self.epsilon < 0.0 {
            return Err(Error::config("energy window E0 - epsilon must be >= 0"));
        }
        if !self.alpha.is_finite() || self.alpha.abs() * self.epsilon > MAX_ALPHA_EPS {
            return Err(Error::config(format!(
                "|alpha| epsilon must be <= {MAX_ALPHA_EPS}, got {}",
                self.alpha.abs() * self.epsilon
            )));
        }
        Ok(())
    }

    /// `alpha eps`, the scale of the metal term's argument.
    pub fn strength(&self) -> f64 {
        self.alpha * self.epsilon
    }
}

/// `-log(sinh t / t)`.
pub fn metal_term_closed_form(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::input(format!("metal term needs t >= 0, got {t}")));
    }
    Ok(metal_term_unchecked(t))
}

fn metal_term_unchecked(t: f64) -> f64 {
    if t < SERIES_THRESHOLD {
        short_series(t)
    } else if t < 1.0 {
        log1p_series(t)
    } else if t < 20.0 {
        -(t.sinh() / t).ln()
    } else {
        asymptotic(t)
    }
}

fn short_series(t: f64) -> f64 {
    let u = t * t;
    u * (-1.0 / 6.0 + u * (1.0 / 180.0 - u / 2835.0))
}

/// `-log1p(sinh t / t - 1)` with the inner difference summed as a series.
fn log1p_series(t: f64) -> f64 {
    let u = t * t;
    let mut term = u / 6.0;
    let mut sum = 0.0f64;
    let mut k = 1.0;
    while sum == 0.0 || term > 1e-18 * sum {
        sum += term;
        k += 2.0;
        term *= u / ((k + 1.0) * (k + 2.0));
    }
    -sum.ln_1p()
}

/// `log sinh t = t - log 2 + log1p(-e^{-2t})`.
fn asymptotic(t: f64) -> f64 {
    -(t - std::f64::consts::LN_2 + (-(-2.0 * t).exp()).ln_1p() - t.ln())
}

/// Taylor coefficients of `-log(sinh t / t)` in `t^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSeries {
    pub coefficients: Vec<f64>,
}

impl BeamSeries {
    pub fn terms(&self) -> usize {
        self.coefficients.len()
    }

    /// `sum_l A_l t^{2l}`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let u = t * t;
        self.coefficients.iter().rev().fold(0.0, |acc, a| (acc + a) * u)
    }
}

/// `A_1..A_L` by composing `x = sum_l t^{2l} / (2l+1)!` with
/// `-log(1 + x) = sum_k (-1)^k x^k / k`, truncated at `t^{2L}`.
pub fn series_coefficients(terms: usize) -> Result<BeamSeries> {
    if !(1..=MAX_SERIES_TERMS).contains(&terms) {
        return Err(Error::config(format!(
            "series truncation must be in 1..={MAX_SERIES_TERMS}, got {terms}"
        )));
    }
    // polynomials in u = t^2, index = power
    let mut inner = vec![0.0; terms + 1];
    let mut fact = 1.0;
    for l in 1..=terms {
        fact *= ((2 * l) * (2 * l + 1)) as f64;
        inner[l] = 1.0 / fact;
    }
    let mut power = inner.clone();
    let mut out = vec![0.0; terms + 1];
    for k in 1..=terms {
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        for l in 0..=terms {
            out[l] += sign * power[l] / k as f64;
        }
        let mut next = vec![0.0; terms + 1];
        for (i, a) in power.iter().enumerate() {
            for (j, b) in inner.iter().enumerate() {
                if i + j <= terms {
                    next[i + j] += a * b;
                }
            }
        }
        power = next;
    }
    Ok(BeamSeries {
        coefficients: out[1..].to_vec(),
    })
}

/// Polychromatic measurement `P_d = R_d f_E0 + P_MA` and its metal part
/// `P_MA = -log(sinh t / t)`, `t = |alpha eps| R_d chi_D`.
pub fn synthesize_measurement(scene: &Scene, chart: &ChartSpec, model: &SpectralModel) -> Result<(Sinogram, Sinogram)> {
    model.validate()?;
    let chi = forward_sinogram(&scene.metal_only(), chart, false)?;
    let tissue = forward_sinogram(&scene.background_only(), chart, true)?;
    let scale = model.strength().abs();
    let p_ma = chi.map(Role::MetalTerm, |v| metal_term_unchecked(scale * v.max(0.0)));
    let values = tissue.values.iter().zip(&p_ma.values).map(|(a, b)| a + b).collect();
    let p_d = Sinogram::new(chart.clone(), Role::Measurement, values)?;
    Ok((p_d, p_ma))
}

/// `f_MA`, the filtered back-projection of `P_MA`.
pub fn reconstruct_artifact(p_ma: &Sinogram, grid: &ImageGrid) -> Result<ImageGrid> {
    fbp_reconstruct(p_ma, grid)
}

/// Filtered back-projection of `(R_d chi_D)^2`, the leading-order streak
/// image.
pub fn squared_metal_image(chi: &Sinogram, grid: &ImageGrid) -> Result<ImageGrid> {
    fbp_reconstruct(&chi.map(Role::MetalTerm, |v| v * v), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmannian::{ChartKind, ChartParams, Flat};
    use crate::scene::{ConvexBody, GaussianBump};
    use crate::transform::forward_analytic;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};
    use proptest::prelude::*;

    fn two_disks(background: bool) -> Scene {
        let bg = if background {
            vec![GaussianBump::isotropic(&[0.0, 0.5], 1.5, 0.3).unwrap()]
        } else {
            vec![]
        };
        Scene::new(
            2,
            vec![ConvexBody::ball(0, &[-2.0, 0.0], 1.0).unwrap(), ConvexBody::ball(1, &[2.0, 0.0], 1.0).unwrap()],
            bg,
            0.0,
        )
        .unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Bernoulli numbers by the standard recurrence.
    fn bernoulli(n: usize) -> Vec<BigRational> {
        let mut b = vec![BigRational::one()];
        for m in 1..=n {
            let mut acc = BigRational::zero();
            let mut binom = BigInt::one();
            for k in 0..m {
                acc += BigRational::from(binom.clone()) * &b[k];
                binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
            }
            b.push(-acc / BigRational::from(BigInt::from(m + 1)));
        }
        b
    }

    /// Exact `A_l = -2^{2l} B_{2l} / (2l (2l)!)`, an oracle independent of
    /// the composition used by the library.
    fn exact_coefficient(l: usize, b: &[BigRational]) -> BigRational {
        let mut fact = BigInt::one();
        for i in 1..=2 * l {
            fact *= BigInt::from(i);
        }
        let num = BigRational::from(BigInt::from(2).pow(2 * l as u32)) * &b[2 * l];
        -num / BigRational::from(fact * BigInt::from(2 * l))
    }

    #[test]
    fn coefficients_match_exact_oracle() {
        let b = bernoulli(2 * MAX_SERIES_TERMS);
        assert_eq!(exact_coefficient(1, &b), rat(-1, 6));
        assert_eq!(exact_coefficient(2, &b), rat(1, 180));
        assert_eq!(exact_coefficient(3, &b), rat(-1, 2835));
        let series = series_coefficients(MAX_SERIES_TERMS).unwrap();
        for (l, a) in series.coefficients.iter().enumerate() {
            let exact = exact_coefficient(l + 1, &b);
            let err = (BigRational::from_float(*a).unwrap() - &exact).abs().to_f64().unwrap();
            assert!(err <= 1e-12 * exact.abs().to_f64().unwrap().max(1e-300), "A_{}", l + 1);
        }
        assert!(series_coefficients(0).is_err());
        assert!(series_coefficients(9).is_err());
    }

    #[test]
    fn closed_form_values() {
        // 40-digit reference values
        let cases = [
            (1.0, -0.161_439_361_571_195_63),
            (0.1, -0.001_666_111_463_580_460_5),
            (0.4, -0.026_525_872_125_234_305),
            (0.01, -0.000_016_666_611_111_463_84),
            (3.0, -1.205_758_701_402_985_5),
            (25.0, -21.087_976_994_571_854),
        ];
        for (t, want) in cases {
            let got = metal_term_closed_form(t).unwrap();
            assert!((got - want).abs() <= 4e-16 * want.abs(), "t={t}: {got} vs {want}");
        }
        assert_eq!(metal_term_closed_form(0.0).unwrap(), 0.0);
        assert!(metal_term_closed_form(-1e-3).is_err());
        // three terms: the two-term truncation is off by A_3 t^6 ~ 3.5e-10
        let series = -0.01f64 / 6.0 + 1e-4 / 180.0 - 1e-6 / 2835.0;
        assert!((metal_term_closed_form(0.1).unwrap() - series).abs() < 1e-10);
    }

    #[test]
    fn branches_agree_at_the_seams() {
        let t = SERIES_THRESHOLD;
        assert!((short_series(t) - log1p_series(t)).abs() <= 1e-15 * short_series(t).abs());
        let direct = |t: f64| -(t.sinh() / t).ln();
        assert!((log1p_series(1.0) - direct(1.0)).abs() <= 1e-15);
        assert!((direct(20.0) - asymptotic(20.0)).abs() <= 1e-15 * asymptotic(20.0).abs());
    }

    #[test]
    fn partial_sum_ratio_test() {
        let series = series_coefficients(3).unwrap();
        let resid = |t: f64| (metal_term_closed_form(t).unwrap() - series.evaluate(t)).abs();
        for t in [0.5, 0.3, 0.1] {
            let ratio = resid(t) / resid(t / 2.0);
            assert!((ratio.log2() - 8.0).abs() < 0.1, "t={t}: {ratio}");
        }
        let two = series_coefficients(2).unwrap();
        let r2 = |t: f64| (metal_term_closed_form(t).unwrap() - two.evaluate(t)).abs();
        let exponent = (r2(0.1) / r2(0.05)).log2();
        assert!((exponent - 5.5).abs() <= 0.5, "{exponent}");
    }

    #[test]
    fn two_disk_metal_term() {
        let scene = two_disks(false);
        let flat = Flat::from_params(ChartParams::Angle { theta: std::f64::consts::FRAC_PI_2, s: 0.0 }).unwrap();
        let chord = forward_analytic(&scene, &flat, false).unwrap();
        assert!((chord - 4.0).abs() < 1e-14);
        let value = metal_term_closed_form(0.1 * chord).unwrap();
        assert!((value + 0.026_525_872_125_234_305).abs() < 1e-15);
    }

    #[test]
    fn measurement_limits() {
        let scene = two_disks(true);
        let chart = ChartSpec::uniform(ChartKind::Line2, 24, 64, 4.0).unwrap();
        let tissue = forward_sinogram(&scene.background_only(), &chart, true).unwrap();
        let (p_d, p_ma) = synthesize_measurement(&scene, &chart, &SpectralModel::new(1.0, 0.1, 0.0).unwrap()).unwrap();
        assert!(p_ma.values.iter().all(|v| *v == 0.0));
        assert_eq!(p_d.values, tissue.values);

        let no_metal = scene.background_only();
        let (_, p_ma) = synthesize_measurement(&no_metal, &chart, &SpectralModel::new(1.0, 0.1, 1.0).unwrap()).unwrap();
        assert!(p_ma.values.iter().all(|v| *v == 0.0));

        let model = SpectralModel::new(1.0, 0.1, 1.0).unwrap();
        let (p_d, p_ma) = synthesize_measurement(&scene, &chart, &model).unwrap();
        assert!(p_ma.values.iter().all(|v| *v <= 0.0));
        assert!(p_ma.values.iter().any(|v| *v < 0.0));
        for ((d, m), t) in p_d.values.iter().zip(&p_ma.values).zip(&tissue.values) {
            assert!((d - m - t).abs() < 1e-14);
        }
        let flipped = SpectralModel::new(1.0, 0.1, -1.0).unwrap();
        let (_, p_neg) = synthesize_measurement(&scene, &chart, &flipped).unwrap();
        for (a, b) in p_neg.values.iter().zip(&p_ma.values) {
            assert!((a - b).abs() <= 1e-12);
        }

        // monochromatic limit: P_MA scales like eps^2
        let small = |eps: f64| {
            let (_, p) = synthesize_measurement(&scene, &chart, &SpectralModel::new(1.0, eps, 1.0).unwrap()).unwrap();
            p.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
        };
        let ratio = small(1e-3) / small(1e-2);
        assert!((ratio - 1e-2).abs() < 1e-4, "{ratio}");
    }

    #[test]
    fn model_validation() {
        assert!(SpectralModel::new(1.0, 0.1, 2.0).is_ok());
        assert!(SpectralModel::new(1.0, 0.1, 2.5).is_err());
        assert!(SpectralModel::new(0.05, 0.1, 1.0).is_err());
        assert!(SpectralModel::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn artifact_is_dominated_by_the_leading_term() {
        let scene = two_disks(false);
        let chart = ChartSpec::uniform(ChartKind::Line2, 180, 256, 4.0).unwrap();
        let grid = ImageGrid::centered(2, 64, 3.5).unwrap();
        let chi = forward_sinogram(&scene, &chart, false).unwrap();
        let lead = squared_metal_image(&chi, &grid).unwrap();
        for strength in [0.02, 0.05] {
            let model = SpectralModel::new(1.0, 0.1, strength / 0.1).unwrap();
            let (_, p_ma) = synthesize_measurement(&scene, &chart, &model).unwrap();
            let f_ma = reconstruct_artifact(&p_ma, &grid).unwrap();
            let scale = -strength * strength / 6.0;
            let diff: f64 = f_ma.values.iter().zip(&lead.values).map(|(a, b)| (a - scale * b).abs()).sum();
            let norm: f64 = f_ma.values.iter().map(|a| a.abs()).sum();
            assert!(diff < 0.05 * norm, "{strength}: {}", diff / norm);
        }
        let zero = Sinogram::zeros(chart, Role::MetalTerm);
        assert!(reconstruct_artifact(&zero, &grid).unwrap().values.iter().all(|v| *v == 0.0));
    }

    proptest! {
        #[test]
        fn metal_term_is_nonpositive(t in 0.0f64..50.0) {
            let v = metal_term_closed_form(t).unwrap();
            prop_assert!(v <= 0.0);
            // t^2 underflows below ~1e-154
            if t > 1e-150 {
                prop_assert!(v < 0.0);
            }
        }
    }
}
