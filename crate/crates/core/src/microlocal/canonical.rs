use crate::error::{Error, Result};
use crate::grassmannian::{ChartKind, Flat};
use crate::sampling::stable_frame;
use crate::scene::Point;

/// Collinearity tolerance of the accepted cone.
pub const ACCEPT_TOL: f64 = 1e-8;

/// A point `(y, eta)` of `T^*R^n \ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub base: Point,
    pub dir: Point,
}

/// A cotangent vector `(eta_1..eta_d, xi)` over a flat; every component
/// lies in `sigma^perp`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatCovector {
    pub flat: Flat,
    pub eta: Vec<Point>,
    pub xi: Point,
}

impl FlatCovector {
    /// Components in the flat's offset basis, `(eta_1, .., eta_d, xi)`
    /// concatenated.
    pub fn coordinates(&self) -> Vec<f64> {
        let basis = self.flat.complement();
        self.eta
            .iter()
            .chain(std::iter::once(&self.xi))
            .flat_map(|v| basis.iter().map(move |e| e.dot(v)))
            .collect()
    }
}

/// Image of `(y, eta)` under the canonical relation: the flats through `y`
/// with `sigma` inside `eta^perp`, each with covector
/// `((y . w_1) eta, .., (y . w_d) eta, eta)`.
///
/// For lines in space the flats form a circle of directions in `eta^perp`,
/// sampled at `family_samples` angles in `[0, pi)`; the hyperplane charts
/// have a single flat.
pub fn canonical_forward(cov: &Covector, kind: ChartKind, family_samples: usize) -> Result<Vec<FlatCovector>> {
    let norm = cov.dir.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::input("covector direction must be nonzero"));
    }
    if kind.n() == 2 && (cov.dir.z != 0.0 || cov.base.z != 0.0) {
        return Err(Error::input("planar covector has a z component"));
    }
    let unit = cov.dir / norm;
    let flats = match kind {
        ChartKind::Line2 | ChartKind::Plane3 => {
            vec![Flat::hyperplane(kind.n(), &unit, unit.dot(&cov.base))?]
        }
        ChartKind::Line3 => {
            if family_samples == 0 {
                return Err(Error::input("family_samples must be positive"));
            }
            let (a, b) = stable_frame(&unit);
            (0..family_samples)
                .map(|k| {
                    let phi = k as f64 * std::f64::consts::PI / family_samples as f64;
                    Flat::line3(&cov.base, &(a * phi.cos() + b * phi.sin()))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(flats
        .into_iter()
        .map(|flat| FlatCovector {
            eta: flat.frame().iter().map(|w| cov.dir * cov.base.dot(w)).collect(),
            xi: cov.dir,
            flat,
        })
        .collect())
}

/// Inverse of [`canonical_forward`] on its accepted cone
/// `eta_i = t_i xi`: returns `(x'' + sum t_i w_i, xi)`, or `None` when some
/// `eta_i` is not a multiple of `xi` (or `xi = 0`).
pub fn canonical_adjoint(fc: &FlatCovector) -> Option<Covector> {
    let xx = fc.xi.norm_squared();
    if !(xx > 0.0) {
        return None;
    }
    let scale = fc.xi.norm();
    let mut base = *fc.flat.offset();
    for (eta, w) in fc.eta.iter().zip(fc.flat.frame()) {
        let t = eta.dot(&fc.xi) / xx;
        if (eta - fc.xi * t).norm() > ACCEPT_TOL * scale.max(eta.norm()) {
            return None;
        }
        base += w * t;
    }
    Some(Covector { base, dir: fc.xi })
}
