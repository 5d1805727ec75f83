//! TOML run configuration. The schema, with units, is documented in
//! `docs/config-schema.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beam::SpectralModel;
use crate::error::{Error, Result};
use crate::figure::FigureConfig;
use crate::grassmannian::{ChartKind, ChartSpec};
use crate::io::sha256_hex;
use crate::probe::{ProbeSettings, ProbeSpec, DEFAULT_SMOOTH_THRESHOLD};
use crate::scene::{ConvexBody, GaussianBump, Scene};
use crate::transform::ImageGrid;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` overrides it.
    pub out: Option<PathBuf>,
    /// Input data file for `fbp` (sinogram) and `probe` (image).
    pub input: Option<PathBuf>,
    pub scene: Option<SceneConfig>,
    pub chart: Option<ChartConfig>,
    pub grid: Option<GridConfig>,
    pub spectrum: Option<SpectralModel>,
    pub probe: Option<ProbeConfig>,
    pub atlas: Option<AtlasConfig>,
    /// Grid sizes for `reproduce-fig1`.
    pub figure: Option<FigureConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// Another TOML file holding this table; inline fields are then
    /// ignored.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub dim: usize,
    /// Energy slope of the metal attenuation, 1/(cm keV). Optional here;
    /// when set it must match `[spectrum] alpha`, which drives the model.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub background: Vec<BumpConfig>,
}

/// A ball (`radius`) or ellipsoid (`shape`, row-major `Q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub label: Option<usize>,
    pub center: Vec<f64>,
    pub radius: Option<f64>,
    pub shape: Option<Vec<f64>>,
}

/// A Gaussian bump with isotropic `std` or a row-major `covariance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub std: Option<f64>,
    pub covariance: Option<Vec<f64>>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub kind: ChartKind,
    pub directions: usize,
    /// Offset samples per offset axis.
    pub offsets: usize,
    /// Offsets cover `[-extent, extent]` per axis.
    pub extent: f64,
}

/// A cubic image of `size` cells per axis over `[-extent, extent]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub size: usize,
    pub extent: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_SMOOTH_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub settings: ProbeSettings,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub points: Vec<ProbeSpec>,
}

fn default_samples() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasConfig {
    /// Meridians per sign family for common tangent planes.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Newton starts for tangent lines in space.
    #[serde(default = "default_samples")]
    pub lines: usize,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            lines: default_samples(),
        }
    }
}

impl RunConfig {
    /// Parse TOML; errors carry the line and column. A scene `file` is
    /// resolved against `base` and inlined.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if let Some(scene) = &cfg.scene {
            if let Some(file) = &scene.file {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::config(format!("scene file {}: {e}", path.display())))?;
                let inner: SceneConfig =
                    toml::from_str(&text).map_err(|e| Error::config(format!("scene file {}: {e}", path.display())))?;
                if inner.file.is_some() {
                    return Err(Error::config("scene files cannot reference further files"));
                }
                cfg.scene = Some(inner);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// SHA-256 of the canonical TOML serialisation.
    pub fn hash(&self) -> Result<String> {
        let text = toml::to_string(self).map_err(|e| Error::config(e.to_string()))?;
        Ok(sha256_hex(text.as_bytes()))
    }

    pub fn scene(&self) -> Result<Scene> {
        self.scene.as_ref().ok_or_else(|| Error::config("missing [scene]"))?.build()
    }

    pub fn chart(&self) -> Result<ChartSpec> {
        let c = self.chart.as_ref().ok_or_else(|| Error::config("missing [chart]"))?;
        ChartSpec::uniform(c.kind, c.directions, c.offsets, c.extent)
    }

    pub fn grid(&self, dim: usize) -> Result<ImageGrid> {
        let g = self.grid.as_ref().ok_or_else(|| Error::config("missing [grid]"))?;
        if g.size < 2 {
            return Err(Error::config("grid size must be >= 2"));
        }
        ImageGrid::centered(dim, g.size, g.extent)
    }

    pub fn spectrum(&self) -> Result<SpectralModel> {
        let m = self.spectrum.ok_or_else(|| Error::config("missing [spectrum]"))?;
        m.validate()?;
        let scene_alpha = self.scene.as_ref().map_or(0.0, |s| s.alpha);
        if scene_alpha != 0.0 && scene_alpha != m.alpha {
            return Err(Error::config(format!(
                "scene alpha {scene_alpha} disagrees with spectrum alpha {}",
                m.alpha
            )));
        }
        Ok(m)
    }
}

impl SceneConfig {
    pub fn build(&self) -> Result<Scene> {
        let bodies = self
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let label = b.label.unwrap_or(i);
                match (&b.radius, &b.shape) {
                    (Some(r), None) => ConvexBody::ball(label, &b.center, *r),
                    (None, Some(q)) => ConvexBody::ellipsoid(label, &b.center, q),
                    _ => Err(Error::config(format!("body {label}: give exactly one of radius or shape"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let background = self
            .background
            .iter()
            .map(|g| match (&g.std, &g.covariance) {
                (Some(s), None) => GaussianBump::isotropic(&g.center, *s, g.amplitude),
                (None, Some(c)) => GaussianBump::new(&g.center, c, g.amplitude),
                _ => Err(Error::config("background bump: give exactly one of std or covariance")),
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(self.dim, bodies, background, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7

[scene]
dim = 2
bodies = [
  { center = [-2.0, 0.0], radius = 1.0 },
  { center = [2.0, 0.0], shape = [1.0, 0.0, 0.0, 2.0] },
]
background = [{ center = [0.0, 0.5], std = 1.5, amplitude = 0.3 }]

[chart]
kind = "2,1"
directions = 90
offsets = 128
extent = 4.0

[grid]
size = 64
extent = 4.0

[spectrum]
E0 = 70.0
epsilon = 0.5
alpha = 0.4

[probe]
points = [{ point = [0.0, 1.0, 0.0], direction = [0.0, 1.0, 0.0] }]
"#;

    #[test]
    fn example_parses_and_builds() {
        let cfg = RunConfig::from_toml(EXAMPLE, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 7);
        let scene = cfg.scene().unwrap();
        assert_eq!(scene.bodies().len(), 2);
        assert_eq!(scene.bodies()[1].label(), 1);
        assert_eq!(cfg.chart().unwrap().len(), 90 * 128);
        assert_eq!(cfg.grid(2).unwrap().len(), 64 * 64);
        assert_eq!(cfg.probe.as_ref().unwrap().threshold, DEFAULT_SMOOTH_THRESHOLD);
        let again = RunConfig::from_toml(&toml::to_string(&cfg).unwrap(), Path::new(".")).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::from_toml("seed = 1\n[chart]\nkind = \"4,1\"\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = RunConfig::from_toml("sed = 1\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn overlapping_bodies_are_rejected() {
        let text = "[scene]\ndim = 2\nbodies = [{ center = [0.0, 0.0], radius = 1.0 }, { center = [1.5, 0.0], radius = 1.0 }]\n";
        let cfg = RunConfig::from_toml(text, Path::new(".")).unwrap();
        let err = cfg.scene().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("assumption (A) violated"));
    }

    #[test]
    fn scene_files_are_inlined() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.toml"), "dim = 3\nbodies = [{ center = [0.0, 0.0, 0.0], radius = 0.5 }]\n").unwrap();
        let cfg = RunConfig::from_toml("[scene]\nfile = \"s.toml\"\n", dir.path()).unwrap();
        assert_eq!(cfg.scene().unwrap().dim(), 3);
        assert!(RunConfig::from_toml("[scene]\nfile = \"missing.toml\"\n", dir.path()).is_err());
    }
}
