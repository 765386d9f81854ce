//! MNIST ingestion (IDX, optionally gzipped) and image-to-field encoding.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sin_turn, FieldProtocol};
use crate::error::{Error, Result};

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;

/// Environment variable naming the dataset root (holding `mnist/`).
pub const DATA_DIR_ENV: &str = "SKYRC_DATA_DIR";
/// Test-set file names inside `<root>/mnist/`.
pub const MNIST_TEST_FILES: (&str, &str) = ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz");

/// Image and label paths of the test set under `root`.
pub fn mnist_test_paths(root: &Path) -> (PathBuf, PathBuf) {
    let dir = root.join("mnist");
    (dir.join(MNIST_TEST_FILES.0), dir.join(MNIST_TEST_FILES.1))
}

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq)]
pub struct MnistImage {
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: u8,
}

impl MnistImage {
    pub fn new(pixels: Vec<f64>, label: u8) -> Result<Self> {
        if pixels.len() != MNIST_PIXELS {
            return Err(Error::DimensionMismatch { expected: MNIST_PIXELS, got: pixels.len() });
        }
        if label > 9 {
            return Err(Error::InvalidParams(format!("digit label {label} outside 0..=9")));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParams("pixel intensity outside [0, 1]".into()));
        }
        Ok(Self { pixels, label })
    }

    pub fn from_bytes(bytes: &[u8], label: u8) -> Result<Self> {
        Self::new(bytes.iter().map(|&b| b as f64 / 255.0).collect(), label)
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * MNIST_SIDE + col]
    }

    /// Intensities multiplied by `factor` (not range-checked).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { pixels: self.pixels.iter().map(|p| p * factor).collect(), label: self.label }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlattenOrder {
    RowMajor,
    ColumnMajor,
}

/// Crop window (inclusive bounds), flatten order and modulation length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistLayout {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub flatten: FlattenOrder,
    /// Drive samples per sine cycle (one cycle per pixel).
    pub cycle_samples: usize,
}

impl Default for MnistLayout {
    fn default() -> Self {
        Self { row_start: 3, row_end: 24, col_start: 4, col_end: 23, flatten: FlattenOrder::RowMajor, cycle_samples: 20 }
    }
}

impl MnistLayout {
    pub fn rows(&self) -> usize {
        self.row_end + 1 - self.row_start
    }

    pub fn cols(&self) -> usize {
        self.col_end + 1 - self.col_start
    }

    pub fn pixels(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.row_start > self.row_end || self.col_start > self.col_end {
            return Err(Error::InvalidParams("empty MNIST crop window".into()));
        }
        if self.row_end >= MNIST_SIDE || self.col_end >= MNIST_SIDE {
            return Err(Error::InvalidParams("MNIST crop window exceeds 28x28".into()));
        }
        if self.cycle_samples < 4 {
            return Err(Error::InvalidParams("cycle_samples must be >= 4".into()));
        }
        Ok(())
    }

    /// Source `(row, col)` of each flattened position.
    fn order(&self) -> Vec<(usize, usize)> {
        let rows = self.row_start..=self.row_end;
        let cols = self.col_start..=self.col_end;
        match self.flatten {
            FlattenOrder::RowMajor => rows.flat_map(|r| cols.clone().map(move |c| (r, c))).collect(),
            FlattenOrder::ColumnMajor => cols.flat_map(|c| rows.clone().map(move |r| (r, c))).collect(),
        }
    }
}

/// Cropped, flattened intensities.
pub fn crop(image: &MnistImage, layout: &MnistLayout) -> Vec<f64> {
    layout.order().into_iter().map(|(r, c)| image.pixel(r, c)).collect()
}

/// Inverse of [`crop`]: places a flattened block back into a zero 28×28 frame.
pub fn uncrop(block: &[f64], label: u8, layout: &MnistLayout) -> Result<MnistImage> {
    if block.len() != layout.pixels() {
        return Err(Error::DimensionMismatch { expected: layout.pixels(), got: block.len() });
    }
    let mut pixels = vec![0.0; MNIST_PIXELS];
    for (&v, (r, c)) in block.iter().zip(layout.order()) {
        pixels[r * MNIST_SIDE + c] = v;
    }
    MnistImage::new(pixels, label)
}

/// Default-layout encoding: one `cycle_samples`-point sine cycle per pixel,
/// scaled by intensity and `amplitude`, one cycle per `1 / drive_frequency`
/// seconds.
pub fn preprocess_mnist(image: &MnistImage, drive_frequency: f64, amplitude: f64) -> Result<FieldProtocol> {
    preprocess_mnist_with(image, &MnistLayout::default(), drive_frequency, amplitude)
}

pub fn preprocess_mnist_with(
    image: &MnistImage,
    layout: &MnistLayout,
    drive_frequency: f64,
    amplitude: f64,
) -> Result<FieldProtocol> {
    layout.validate()?;
    if !(drive_frequency > 0.0 && drive_frequency.is_finite()) {
        return Err(Error::InvalidProtocol(format!("drive frequency {drive_frequency} must be positive")));
    }
    let n = layout.cycle_samples;
    let carrier: Vec<f64> = (0..n).map(|k| amplitude * sin_turn(k, n)).collect();
    let values = crop(image, layout)
        .into_iter()
        .flat_map(|p| carrier.iter().map(move |s| p * s))
        .collect();
    FieldProtocol::new(1.0 / (n as f64 * drive_frequency), values)?.with_nominal_amplitude(amplitude)
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(path, "truncated header"))
}

/// Parses an IDX image/label pair into normalised images.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Vec<MnistImage>> {
    let images = read_maybe_gz(images_path)?;
    let labels = read_maybe_gz(labels_path)?;

    let magic = be_u32(&images, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(images_path, format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(&images, 4, images_path)? as usize;
    let (rows, cols) = (be_u32(&images, 8, images_path)?, be_u32(&images, 12, images_path)?);
    if (rows, cols) != (MNIST_SIDE as u32, MNIST_SIDE as u32) {
        return Err(Error::format(images_path, format!("image shape {rows}x{cols}, expected 28x28")));
    }
    let body = &images[16..];
    if body.len() != count * MNIST_PIXELS {
        return Err(Error::format(
            images_path,
            format!("{} pixel bytes for {count} images (expected {})", body.len(), count * MNIST_PIXELS),
        ));
    }

    let magic = be_u32(&labels, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(labels_path, format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    let label_body = &labels[8..];
    if label_body.len() != label_count {
        return Err(Error::format(labels_path, format!("{} label bytes for {label_count} labels", label_body.len())));
    }
    if label_count != count {
        return Err(Error::format(labels_path, format!("{label_count} labels but {count} images")));
    }

    body.chunks_exact(MNIST_PIXELS)
        .zip(label_body)
        .enumerate()
        .map(|(i, (px, &label))| {
            if label > 9 {
                return Err(Error::format(labels_path, format!("label {label} at item {i}")));
            }
            MnistImage::from_bytes(px, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank() -> MnistImage {
        MnistImage::new(vec![0.0; MNIST_PIXELS], 0).unwrap()
    }

    #[test]
    fn protocol_length_and_span() {
        let p = preprocess_mnist(&blank(), 200.0, 64.0).unwrap();
        assert_eq!(p.len(), 8800);
        assert!((p.duration() - 2.2).abs() < 1e-12);
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_is_local() {
        let layout = MnistLayout::default();
        let mut block = vec![0.0; layout.pixels()];
        block[7] = 1.0;
        let image = uncrop(&block, 3, &layout).unwrap();
        let p = preprocess_mnist(&image, 200.0, 70.0).unwrap();
        for (j, &v) in p.values().iter().enumerate() {
            if (140..160).contains(&j) {
                assert_eq!(v, 70.0 * sin_turn(j - 140, 20));
            } else {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(p.values()[145], 70.0);
    }

    #[test]
    fn crop_is_idempotent_and_orders_differ() {
        let pixels: Vec<f64> = (0..MNIST_PIXELS).map(|i| (i % 255) as f64 / 255.0).collect();
        let image = MnistImage::new(pixels, 4).unwrap();
        let layout = MnistLayout::default();
        let block = crop(&image, &layout);
        assert_eq!(block.len(), 440);
        assert_eq!(block[0], image.pixel(3, 4));
        assert_eq!(block[1], image.pixel(3, 5));
        assert_eq!(crop(&uncrop(&block, 4, &layout).unwrap(), &layout), block);
        let cm = MnistLayout { flatten: FlattenOrder::ColumnMajor, ..layout };
        assert_eq!(crop(&image, &cm)[1], image.pixel(4, 4));
    }

    #[test]
    fn rejects_bad_images() {
        assert!(MnistImage::new(vec![0.0; 10], 0).is_err());
        assert!(MnistImage::new(vec![0.0; MNIST_PIXELS], 10).is_err());
        assert!(MnistImage::new(vec![1.5; MNIST_PIXELS], 1).is_err());
    }
}
