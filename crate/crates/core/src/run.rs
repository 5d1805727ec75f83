//! Pipelines behind the command-line subcommands. Every run writes its
//! outputs, a `manifest.toml` (config hash, version, output hashes,
//! quicklook windows) and a separate `timings.toml`, so that manifests of
//! identical runs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::beam::{reconstruct_artifact, synthesize_measurement};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::figure::{control_lines, reproduce, FigureConfig};
use crate::grassmannian::{ChartKind, Flat};
use crate::io::{encode_pgm, read_image, read_sinogram, sha256_hex, write_bytes, write_image, write_sinogram, Raster};
use crate::microlocal::{atlas_to_toml, common_tangent_codim2_flats, common_tangent_hyperplanes, intersection_report, TangentFlat};
use crate::probe::{flat_streak_contrast, probe_batch, Field, ProbeSettings, DEFAULT_SMOOTH_THRESHOLD};
use crate::product::{cross_product_probe, self_product_order, ProductProbeReport};
use crate::scene::Point;
use crate::selfcheck::run_selfcheck;
use crate::transform::{fbp_reconstruct, forward_sinogram, ImageGrid, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    Fbp,
    Beamharden,
    Atlas,
    Probe,
    ProductCheck,
    ReproduceFig1,
    Selfcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Fbp => "fbp",
            Command::Beamharden => "beamharden",
            Command::Atlas => "atlas",
            Command::Probe => "probe",
            Command::ProductCheck => "product-check",
            Command::ReproduceFig1 => "reproduce-fig1",
            Command::Selfcheck => "selfcheck",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    /// Hash of the value payload for data files, of the whole file
    /// otherwise.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuicklookEntry {
    pub path: String,
    pub source: String,
    pub sha256: String,
    /// Values mapped to black and white.
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Whether every check the command makes passed.
    pub passed: bool,
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub quicklooks: Vec<QuicklookEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Timing {
    step: String,
    seconds: f64,
}

#[derive(Serialize)]
struct Timings<'a> {
    steps: &'a [Timing],
}

/// Accumulates outputs of one run.
struct Run {
    out: PathBuf,
    provenance: String,
    quicklook: bool,
    manifest: Manifest,
    timings: Vec<Timing>,
}

impl Run {
    fn time<T>(&mut self, step: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings.push(Timing {
            step: step.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn record(&mut self, name: &str, sha256: String) {
        self.manifest.files.push(FileEntry {
            path: name.to_string(),
            sha256,
        });
    }

    fn sinogram(&mut self, name: &str, sino: &Sinogram) -> Result<()> {
        let hash = write_sinogram(&self.out.join(format!("{name}.bin")), sino, &self.provenance)?;
        self.record(&format!("{name}.bin"), hash);
        if self.quicklook {
            self.pgm(name, &Raster::from_sinogram(sino), &[])?;
        }
        Ok(())
    }

    fn image(&mut self, name: &str, image: &ImageGrid) -> Result<()> {
        let hash = write_image(&self.out.join(format!("{name}.bin")), image, &self.provenance)?;
        self.record(&format!("{name}.bin"), hash);
        if self.quicklook {
            self.pgm(name, &Raster::from_image(image), &[])?;
        }
        Ok(())
    }

    fn pgm(&mut self, name: &str, raster: &Raster, marks: &[usize]) -> Result<()> {
        let window = quicklook_window(raster);
        let path = format!("{name}.pgm");
        let bytes = encode_pgm(raster, window, marks);
        write_bytes(&self.out.join(&path), &bytes)?;
        self.manifest.quicklooks.push(QuicklookEntry {
            path,
            source: name.to_string(),
            sha256: sha256_hex(&bytes),
            window: [window.0, window.1],
        });
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        write_bytes(&self.out.join(name), text.as_bytes())?;
        self.record(name, sha256_hex(text.as_bytes()));
        Ok(())
    }

    fn toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = toml::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
        self.text(name, &text)
    }

    fn finish(self) -> Result<Manifest> {
        let text = toml::to_string(&self.manifest).map_err(|e| Error::Format(e.to_string()))?;
        write_bytes(&self.out.join("manifest.toml"), text.as_bytes())?;
        let timings = toml::to_string(&Timings { steps: &self.timings }).map_err(|e| Error::Format(e.to_string()))?;
        write_bytes(&self.out.join("timings.toml"), timings.as_bytes())?;
        Ok(self.manifest)
    }
}

/// 0.5 and 99.5 percentiles, widened when flat.
fn quicklook_window(raster: &Raster) -> (f64, f64) {
    let mut v = raster.values.clone();
    if v.is_empty() {
        return (0.0, 1.0);
    }
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    let (lo, hi) = (at(0.005), at(0.995));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Raster cells crossed by `flat` in an image rendered by
/// [`Raster::from_image`].
fn line_marks(image: &ImageGrid, flat: &Flat) -> Vec<usize> {
    let (nx, ny) = (image.shape[0], image.shape[1]);
    let h = image.spacing[0].min(image.spacing[1]);
    let half = 0.5 * (nx as f64 * image.spacing[0]).hypot(ny as f64 * image.spacing[1]);
    let centre = image.origin + Point::new(0.5 * (nx - 1) as f64 * image.spacing[0], 0.5 * (ny - 1) as f64 * image.spacing[1], 0.0);
    let base = flat.offset() + crate::grassmannian::project_onto_sigma(flat, &centre);
    let w = flat.frame()[0];
    let steps = (half / (0.5 * h)).ceil() as i64;
    let mut marks: Vec<usize> = (-steps..=steps)
        .filter_map(|k| {
            let x = base + w * (k as f64 * 0.5 * h);
            let i = ((x.x - image.origin.x) / image.spacing[0]).round();
            let j = ((x.y - image.origin.y) / image.spacing[1]).round();
            (i >= 0.0 && j >= 0.0 && (i as usize) < nx && (j as usize) < ny).then(|| (ny - 1 - j as usize) * nx + i as usize)
        })
        .collect();
    marks.sort_unstable();
    marks.dedup();
    marks
}

fn figure_report(fig: &crate::figure::Figure, seed: u64) -> Result<FigureReport> {
    let controls = control_lines(20, seed, 1.5, 0.2)
        .iter()
        .map(|l| flat_streak_contrast(&fig.streaks, l, fig.scene.bodies(), &[], fig.config.margin))
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureReport {
        config: fig.config,
        tangent_contrast: fig.contrasts.clone(),
        control_contrast: controls,
    })
}

#[derive(Serialize)]
struct FigureReport {
    config: FigureConfig,
    tangent_contrast: Vec<f64>,
    control_contrast: Vec<f64>,
}

#[derive(Serialize)]
struct PairSummary {
    pair: [usize; 2],
    chart: String,
    points: usize,
    type1: usize,
    type2: usize,
    min_sigma: f64,
    consistent: bool,
}

#[derive(Serialize)]
struct ProductDoc<'a> {
    reports: &'a [ProductProbeReport],
}

#[derive(Serialize)]
struct ProbeDoc<'a> {
    probes: &'a [crate::probe::ProbeResult],
}

#[derive(Serialize)]
struct SelfcheckDoc<'a> {
    checks: &'a [crate::selfcheck::CheckOutcome],
}

fn tangents_for_pairs(cfg: &RunConfig, kind: ChartKind) -> Result<Vec<TangentFlat>> {
    let scene = cfg.scene()?;
    let atlas = cfg.atlas.clone().unwrap_or_default();
    let bodies = scene.bodies();
    let mut flats = Vec::new();
    for j in 0..bodies.len() {
        for k in j + 1..bodies.len() {
            flats.extend(common_tangent_hyperplanes(&bodies[j], &bodies[k], atlas.samples)?);
            if kind == ChartKind::Line3 {
                flats.extend(common_tangent_codim2_flats(&bodies[j], &bodies[k], atlas.lines, cfg.seed)?);
            }
        }
    }
    Ok(flats)
}

/// Run `command` with outputs in `out`. Returns the manifest; failed checks
/// set `passed = false` rather than erroring.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path, quicklook: bool) -> Result<Manifest> {
    fs::create_dir_all(out)?;
    let config_sha256 = cfg.hash()?;
    let mut run = Run {
        out: out.to_path_buf(),
        provenance: config_sha256.clone(),
        quicklook,
        manifest: Manifest {
            command: command.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            seed: cfg.seed,
            passed: true,
            files: Vec::new(),
            quicklooks: Vec::new(),
        },
        timings: Vec::new(),
    };
    match command {
        Command::Forward => {
            let scene = cfg.scene()?;
            let chart = cfg.chart()?;
            let sino = run.time("forward", || forward_sinogram(&scene, &chart, true))?;
            run.sinogram("sinogram", &sino)?;
        }
        Command::Fbp => {
            let sino = match &cfg.input {
                Some(path) => read_sinogram(path)?,
                None => {
                    let (scene, chart) = (cfg.scene()?, cfg.chart()?);
                    run.time("forward", || forward_sinogram(&scene, &chart, true))?
                }
            };
            let grid = cfg.grid(sino.chart.n())?;
            let image = run.time("fbp", || fbp_reconstruct(&sino, &grid))?;
            run.image("reconstruction", &image)?;
        }
        Command::Beamharden => {
            let (scene, chart, model) = (cfg.scene()?, cfg.chart()?, cfg.spectrum()?);
            let grid = cfg.grid(chart.n())?;
            let (p_d, p_ma) = run.time("measurement", || synthesize_measurement(&scene, &chart, &model))?;
            let artifact = run.time("fbp", || reconstruct_artifact(&p_ma, &grid))?;
            run.sinogram("measurement", &p_d)?;
            run.sinogram("metal_term", &p_ma)?;
            run.image("artifact", &artifact)?;
        }
        Command::Atlas => {
            let chart = cfg.chart()?;
            let scene = cfg.scene()?;
            let flats = run.time("tangents", || tangents_for_pairs(cfg, chart.kind))?;
            run.text("atlas.toml", &atlas_to_toml(&flats)?)?;
            let bodies = scene.bodies();
            let mut pairs = Vec::new();
            for j in 0..bodies.len() {
                for k in j + 1..bodies.len() {
                    let r = run.time("intersections", || intersection_report(&bodies[j], &bodies[k], &chart))?;
                    run.manifest.passed &= r.consistent();
                    pairs.push(PairSummary {
                        pair: [bodies[j].label(), bodies[k].label()],
                        chart: chart.kind.label().to_string(),
                        points: r.points.len(),
                        type1: r.count(crate::microlocal::IntersectionClass::Type1),
                        type2: r.count(crate::microlocal::IntersectionClass::Type2),
                        min_sigma: if r.points.is_empty() { 0.0 } else { r.min_sigma() },
                        consistent: r.consistent(),
                    });
                }
            }
            #[derive(Serialize)]
            struct Doc {
                pairs: Vec<PairSummary>,
            }
            run.toml("intersections.toml", &Doc { pairs })?;
        }
        Command::Probe => {
            let probe = cfg.probe.clone().ok_or_else(|| Error::config("missing [probe]"))?;
            let image = match &cfg.input {
                Some(path) => read_image(path)?,
                None => {
                    let (scene, chart, model) = (cfg.scene()?, cfg.chart()?, cfg.spectrum()?);
                    let grid = cfg.grid(chart.n())?;
                    let (_, p_ma) = run.time("measurement", || synthesize_measurement(&scene, &chart, &model))?;
                    let artifact = run.time("fbp", || reconstruct_artifact(&p_ma, &grid))?;
                    run.image("artifact", &artifact)?;
                    artifact
                }
            };
            let field = Field::from_image(&image);
            let results = run.time("probes", || probe_batch(&field, &probe.points, &probe.settings, probe.threshold))?;
            run.toml("probes.toml", &ProbeDoc { probes: &results })?;
        }
        Command::ProductCheck => {
            let (scene, chart) = (cfg.scene()?, cfg.chart()?);
            let settings = cfg.probe.as_ref().map(|p| p.settings).unwrap_or_default();
            let bodies = scene.bodies();
            let singles = bodies
                .iter()
                .map(|b| {
                    let s = crate::scene::Scene::new(scene.dim(), vec![b.clone()], vec![], 0.0)?;
                    forward_sinogram(&s, &chart, false)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut reports = Vec::new();
            for (b, s) in bodies.iter().zip(&singles) {
                reports.push(run.time("self products", || self_product_order(s, b, &settings))?);
            }
            if chart.kind == ChartKind::Line2 {
                for j in 0..bodies.len() {
                    for k in j + 1..bodies.len() {
                        let r = run.time("cross products", || {
                            cross_product_probe(&singles[j], &singles[k], &bodies[j], &bodies[k], &settings)
                        })?;
                        run.manifest.passed &= r.passed();
                        reports.push(r);
                    }
                }
            }
            run.toml("product.toml", &ProductDoc { reports: &reports })?;
        }
        Command::ReproduceFig1 => {
            let fig_cfg = cfg.figure.unwrap_or_default();
            let fig = run.time("figure", || reproduce(&fig_cfg))?;
            run.image("chi", &fig.chi)?;
            run.sinogram("sinogram", &fig.sinogram)?;
            run.image("reconstruction", &fig.reconstruction)?;
            run.image("streaks", &fig.streaks)?;
            run.pgm("panel1_chi", &Raster::from_image(&fig.chi), &[])?;
            run.pgm("panel2_sinogram", &Raster::from_sinogram(&fig.sinogram), &[])?;
            run.pgm("panel3_reconstruction", &Raster::from_image(&fig.reconstruction), &[])?;
            let marks: Vec<usize> = fig.tangents.iter().flat_map(|t| line_marks(&fig.streaks, &t.flat)).collect();
            run.pgm("panel4_streaks", &Raster::from_image(&fig.streaks), &marks)?;
            run.text("atlas.toml", &atlas_to_toml(&fig.tangents)?)?;
            let report = run.time("controls", || figure_report(&fig, cfg.seed))?;
            run.manifest.passed = fig.tangents.len() == 4;
            run.toml("fig1.toml", &report)?;
        }
        Command::Selfcheck => {
            let checks = run.time("selfcheck", || Ok(run_selfcheck()))?;
            run.manifest.passed = checks.iter().all(|c| c.passed);
            run.toml("selfcheck.toml", &SelfcheckDoc { checks: &checks })?;
        }
    }
    run.finish()
}

/// Default probe settings for callers without a `[probe]` table.
pub fn default_probe() -> (ProbeSettings, f64) {
    (ProbeSettings::default(), DEFAULT_SMOOTH_THRESHOLD)
}
