//! Self-describing binary files for sinograms and images, 16-bit PGM
//! quicklooks and SHA-256 hashing.
//!
//! A data file is the 8-byte magic `DPLTOMO1`, a little-endian `u64` header
//! length, a TOML header, and the values as little-endian `f64` in row-major
//! order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grassmannian::ChartSpec;
use crate::scene::Point;
use crate::transform::{ImageGrid, Role, Sinogram};

pub const MAGIC: &[u8; 8] = b"DPLTOMO1";

/// Header of a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Header {
    Sinogram {
        role: Role,
        chart: ChartSpec,
        count: usize,
        payload_sha256: String,
        provenance: String,
    },
    Image {
        dim: usize,
        origin: [f64; 3],
        spacing: [f64; 3],
        shape: [usize; 3],
        count: usize,
        payload_sha256: String,
        provenance: String,
    },
}

impl Header {
    pub fn payload_sha256(&self) -> &str {
        match self {
            Header::Sinogram { payload_sha256, .. } | Header::Image { payload_sha256, .. } => payload_sha256,
        }
    }

    pub fn provenance(&self) -> &str {
        match self {
            Header::Sinogram { provenance, .. } | Header::Image { provenance, .. } => provenance,
        }
    }

    fn count(&self) -> usize {
        match self {
            Header::Sinogram { count, .. } | Header::Image { count, .. } => *count,
        }
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn payload_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn encode(header: &Header, payload: &[u8]) -> Result<Vec<u8>> {
    let text = toml::to_string(header).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + text.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(text.len() as u64).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn encode_sinogram(sino: &Sinogram, provenance: &str) -> Result<Vec<u8>> {
    let payload = payload_bytes(&sino.values);
    let header = Header::Sinogram {
        role: sino.role,
        chart: sino.chart.clone(),
        count: sino.values.len(),
        payload_sha256: sha256_hex(&payload),
        provenance: provenance.to_string(),
    };
    encode(&header, &payload)
}

pub fn encode_image(image: &ImageGrid, provenance: &str) -> Result<Vec<u8>> {
    let payload = payload_bytes(&image.values);
    let header = Header::Image {
        dim: image.dim,
        origin: [image.origin.x, image.origin.y, image.origin.z],
        spacing: image.spacing,
        shape: image.shape,
        count: image.values.len(),
        payload_sha256: sha256_hex(&payload),
        provenance: provenance.to_string(),
    };
    encode(&header, &payload)
}

/// Split a file into its header and values, checking the magic, lengths
/// and payload hash.
pub fn decode(bytes: &[u8]) -> Result<(Header, Vec<f64>)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format("missing DPLTOMO1 magic".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if len > body.len() {
        return Err(Error::Format("header length exceeds file size".into()));
    }
    let text = std::str::from_utf8(&body[..len]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let header: Header = toml::from_str(text).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let payload = &body[len..];
    if payload.len() != 8 * header.count() {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header declares {} values",
            payload.len(),
            header.count()
        )));
    }
    if sha256_hex(payload) != header.payload_sha256() {
        return Err(Error::Format("payload hash mismatch".into()));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

pub fn decode_sinogram(bytes: &[u8]) -> Result<Sinogram> {
    match decode(bytes)? {
        (Header::Sinogram { role, chart, count, .. }, values) => {
            if chart.validate().is_err() || chart.len() != count {
                return Err(Error::Format(format!(
                    "chart needs {} values, header declares {count}",
                    chart.len()
                )));
            }
            Sinogram::new(chart, role, values).map_err(|e| Error::Format(e.to_string()))
        }
        _ => Err(Error::Format("file holds an image, not a sinogram".into())),
    }
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageGrid> {
    match decode(bytes)? {
        (Header::Image { dim, origin, spacing, shape, count, .. }, values) => {
            if shape.iter().product::<usize>() != count {
                return Err(Error::Format("image shape does not match the value count".into()));
            }
            let grid = ImageGrid::new(dim, Point::from(origin), spacing, shape).map_err(|e| Error::Format(e.to_string()))?;
            Ok(grid.with_values(values))
        }
        _ => Err(Error::Format("file holds a sinogram, not an image".into())),
    }
}

pub fn write_sinogram(path: &Path, sino: &Sinogram, provenance: &str) -> Result<String> {
    write_bytes(path, &encode_sinogram(sino, provenance)?)?;
    Ok(sha256_hex(&payload_bytes(&sino.values)))
}

pub fn write_image(path: &Path, image: &ImageGrid, provenance: &str) -> Result<String> {
    write_bytes(path, &encode_image(image, provenance)?)?;
    Ok(sha256_hex(&payload_bytes(&image.values)))
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    decode_sinogram(&fs::read(path)?)
}

pub fn read_image(path: &Path) -> Result<ImageGrid> {
    decode_image(&fs::read(path)?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// A 2D array of values for a quicklook, first index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Raster {
    /// Image rows follow the second axis so that `y` points up; 3D images
    /// use the middle slice along the third axis.
    pub fn from_image(image: &ImageGrid) -> Self {
        let (nx, ny) = (image.shape[0], image.shape[1]);
        let k = image.shape[2] / 2;
        let mut values = Vec::with_capacity(nx * ny);
        for r in 0..ny {
            let j = ny - 1 - r;
            for i in 0..nx {
                values.push(image.values[image.index(i, j, k)]);
            }
        }
        Self { rows: ny, cols: nx, values }
    }

    /// One row per direction; for lines in space, the middle slice along the
    /// second offset axis.
    pub fn from_sinogram(sino: &Sinogram) -> Self {
        let rows = sino.chart.direction_count;
        let cols = sino.chart.offset_counts[0];
        let per = sino.chart.offsets_per_direction();
        let stride = per / cols;
        let mid = stride / 2;
        let values = (0..rows)
            .flat_map(|d| (0..cols).map(move |m| (d, m)))
            .map(|(d, m)| sino.values[d * per + m * stride + mid])
            .collect();
        Self { rows, cols, values }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }
}

/// Binary 16-bit PGM mapping `[lo, hi]` linearly onto `0..=65535`, with
/// `marks` (row-major cell indices) drawn at full intensity.
pub fn encode_pgm(raster: &Raster, window: (f64, f64), marks: &[usize]) -> Vec<u8> {
    let (lo, hi) = window;
    let scale = if hi > lo { 65535.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P5\n{} {}\n65535\n", raster.cols, raster.rows).into_bytes();
    let mut levels: Vec<u16> = raster
        .values
        .iter()
        .map(|v| ((v - lo) * scale).round().clamp(0.0, 65535.0) as u16)
        .collect();
    for &m in marks {
        if m < levels.len() {
            levels[m] = u16::MAX;
        }
    }
    for l in levels {
        out.extend_from_slice(&l.to_be_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmannian::ChartKind;
    use proptest::prelude::*;

    fn sinogram(values: Vec<f64>) -> Sinogram {
        let chart = ChartSpec::uniform(ChartKind::Line2, 4, 8, 2.0).unwrap();
        Sinogram::new(chart, Role::Transform, values).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sinogram_round_trip_is_bit_identical(values in proptest::collection::vec(-1e300f64..1e300, 32)) {
            let s = sinogram(values);
            let back = decode_sinogram(&encode_sinogram(&s, "abc").unwrap()).unwrap();
            prop_assert_eq!(&back, &s);
            for (a, b) in back.values.iter().zip(&s.values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn image_round_trip_keeps_geometry() {
        let img = ImageGrid::centered(3, 5, 1.5).unwrap().sample(|x| x.x - 2.0 * x.z);
        let bytes = encode_image(&img, "p").unwrap();
        let (header, _) = decode(&bytes).unwrap();
        assert_eq!(header.provenance(), "p");
        assert_eq!(decode_image(&bytes).unwrap(), img);
        assert!(decode_sinogram(&bytes).is_err());
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let s = sinogram((0..32).map(f64::from).collect());
        let bytes = encode_sinogram(&s, "").unwrap();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::Format(_))));
        assert!(matches!(decode(&bytes[..bytes.len() - 8]), Err(Error::Format(_))));
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(decode(&flipped), Err(Error::Format(_))));

        // header claims a larger chart than the payload holds
        let (header, _) = decode(&bytes).unwrap();
        let Header::Sinogram { role, payload_sha256, provenance, .. } = header else { unreachable!() };
        let lying = Header::Sinogram {
            role,
            chart: ChartSpec::uniform(ChartKind::Line2, 8, 8, 2.0).unwrap(),
            count: 32,
            payload_sha256,
            provenance,
        };
        let forged = encode(&lying, &payload_bytes(&s.values)).unwrap();
        assert!(matches!(decode_sinogram(&forged), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_header_and_levels() {
        let raster = Raster { rows: 2, cols: 3, values: vec![0.0, 0.5, 1.0, 2.0, -1.0, 1.0] };
        let pgm = encode_pgm(&raster, (0.0, 1.0), &[4]);
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&pgm[..header.len()], header);
        let levels: Vec<u16> = pgm[header.len()..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(levels, vec![0, 32768, 65535, 65535, 65535, 65535]);
    }
}
