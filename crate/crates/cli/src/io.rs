//! MNIST IDX and CIFAR-10 binary formats.
//!
//! Parsers work on byte slices and check every header-declared size against
//! the bytes actually present before allocating.

use std::fs;
use std::path::{Path, PathBuf};

use szlab_core::Dataset;

use crate::error::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

pub const MNIST_CLASSES: usize = 10;

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR_RECORD: usize = 1 + 3 * CIFAR_PLANE;
pub const CIFAR_CLASSES: usize = 10;

pub const MNIST_TRAIN: (&str, &str) = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte");
pub const MNIST_TEST: (&str, &str) = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
pub const CIFAR_TRAIN: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const CIFAR_TEST: &str = "test_batch.bin";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated: header declares {declared} bytes, file has {available}")]
    Truncated { declared: u64, available: u64 },
    #[error("{extra} unexpected bytes after the declared data")]
    TrailingBytes { extra: usize },
    #[error("image dimensions must be positive")]
    EmptyDimensions,
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("length {len} is not a multiple of the {record}-byte record size")]
    RecordLength { len: usize, record: usize },
    #[error("label {label} out of range")]
    LabelOutOfRange { label: u8 },
}

/// Decoded IDX image file: `count` images of `rows × cols` bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, FormatError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(FormatError::Truncated {
            declared: (at + 4) as u64,
            available: bytes.len() as u64,
        })
}

fn check_body(bytes: &[u8], header: usize, body: u64) -> Result<(), FormatError> {
    let declared = body.saturating_add(header as u64);
    let available = bytes.len() as u64;
    if available < declared {
        return Err(FormatError::Truncated { declared, available });
    }
    if available > declared {
        return Err(FormatError::TrailingBytes {
            extra: (available - declared) as usize,
        });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, FormatError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(FormatError::BadMagic {
            expected: IDX_IMAGE_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)?;
    let rows = be_u32(bytes, 8)?;
    let cols = be_u32(bytes, 12)?;
    if rows == 0 || cols == 0 {
        return Err(FormatError::EmptyDimensions);
    }
    let body = u64::from(count)
        .saturating_mul(u64::from(rows))
        .saturating_mul(u64::from(cols));
    check_body(bytes, 16, body)?;
    Ok(IdxImages {
        count: count as usize,
        rows: rows as usize,
        cols: cols as usize,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, FormatError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(FormatError::BadMagic {
            expected: IDX_LABEL_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)?;
    check_body(bytes, 8, u64::from(count))?;
    Ok(bytes[8..].to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IDX_IMAGE_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> Error + '_ {
    move |source| Error::Format {
        path: path.to_path_buf(),
        source,
    }
}

fn scale_pixels(bytes: &[u8]) -> Vec<f32> {
    bytes.iter().map(|&p| f32::from(p) / 255.0).collect()
}

fn unscale_pixels(values: &[f32]) -> Vec<u8> {
    values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Loads an IDX image/label pair into `rows × cols × 1` images scaled by 1/255.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = parse_idx_images(&read(images_path)?).map_err(format_err(images_path))?;
    let labels = parse_idx_labels(&read(labels_path)?).map_err(format_err(labels_path))?;
    if images.count != labels.len() {
        return Err(Error::Format {
            path: labels_path.to_path_buf(),
            source: FormatError::CountMismatch {
                images: images.count,
                labels: labels.len(),
            },
        });
    }
    Ok(Dataset::new(
        [images.rows, images.cols, 1],
        scale_pixels(&images.pixels),
        labels,
        MNIST_CLASSES,
    )?)
}

/// Writes a single-channel dataset as an IDX pair (pixels `round(255·v)`).
pub fn write_mnist_idx(data: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let [rows, cols, channels] = data.shape();
    if channels != 1 {
        return Err(Error::Invalid("IDX images must have one channel".into()));
    }
    let images = IdxImages {
        count: data.len(),
        rows,
        cols,
        pixels: unscale_pixels(data.images()),
    };
    write(images_path, &encode_idx_images(&images))?;
    write(labels_path, &encode_idx_labels(data.labels()))
}

/// Decodes CIFAR-10 records into HWC pixels (scaled by 1/255) and labels.
pub fn parse_cifar10(bytes: &[u8]) -> Result<(Vec<f32>, Vec<u8>), FormatError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(FormatError::RecordLength {
            len: bytes.len(),
            record: CIFAR_RECORD,
        });
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut pixels = Vec::with_capacity(n * 3 * CIFAR_PLANE);
    let mut labels = Vec::with_capacity(n);
    for record in bytes.chunks_exact(CIFAR_RECORD) {
        let label = record[0];
        if usize::from(label) >= CIFAR_CLASSES {
            return Err(FormatError::LabelOutOfRange { label });
        }
        labels.push(label);
        let planes = &record[1..];
        for p in 0..CIFAR_PLANE {
            for c in 0..3 {
                pixels.push(f32::from(planes[c * CIFAR_PLANE + p]) / 255.0);
            }
        }
    }
    Ok((pixels, labels))
}

/// Encodes a `32 × 32 × 3` dataset as CIFAR-10 records.
pub fn encode_cifar10(data: &Dataset) -> Result<Vec<u8>> {
    if data.shape() != [CIFAR_SIDE, CIFAR_SIDE, 3] {
        return Err(Error::Invalid("CIFAR-10 records hold 32x32x3 images".into()));
    }
    let mut out = Vec::with_capacity(data.len() * CIFAR_RECORD);
    for i in 0..data.len() {
        out.push(data.labels()[i]);
        let hwc = unscale_pixels(data.image(i));
        for c in 0..3 {
            out.extend((0..CIFAR_PLANE).map(|p| hwc[p * 3 + c]));
        }
    }
    Ok(out)
}

pub fn load_cifar10_bin<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let (p, l) = parse_cifar10(&read(path)?).map_err(format_err(path))?;
        pixels.extend(p);
        labels.extend(l);
    }
    Ok(Dataset::new(
        [CIFAR_SIDE, CIFAR_SIDE, 3],
        pixels,
        labels,
        CIFAR_CLASSES,
    )?)
}

pub fn write_cifar10_bin(data: &Dataset, path: &Path) -> Result<()> {
    write(path, &encode_cifar10(data)?)
}

/// First of `dir/sub` and `dir` that contains `probe`.
fn locate(dir: &Path, sub: &str, probe: &str) -> Result<PathBuf> {
    [dir.join(sub), dir.to_path_buf()]
        .into_iter()
        .find(|d| d.join(probe).is_file())
        .ok_or_else(|| {
            Error::Invalid(format!(
                "{probe} not found under {} or {}/{sub}",
                dir.display(),
                dir.display()
            ))
        })
}

/// Train and test MNIST splits from `dir/mnist` (or `dir`), canonical file names.
pub fn load_mnist_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let root = locate(dir, "mnist", MNIST_TRAIN.0)?;
    let train = load_mnist_idx(&root.join(MNIST_TRAIN.0), &root.join(MNIST_TRAIN.1))?;
    let test = load_mnist_idx(&root.join(MNIST_TEST.0), &root.join(MNIST_TEST.1))?;
    Ok((train, test))
}

/// Train and test CIFAR-10 splits from `dir/cifar-10-batches-bin` (or `dir`).
pub fn load_cifar10_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let root = locate(dir, "cifar-10-batches-bin", CIFAR_TEST)?;
    let train: Vec<PathBuf> = CIFAR_TRAIN.iter().map(|f| root.join(f)).collect();
    Ok((load_cifar10_bin(&train)?, load_cifar10_bin(&[root.join(CIFAR_TEST)])?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image_fixture() {
        let images = encode_idx_images(&IdxImages {
            count: 1,
            rows: 28,
            cols: 28,
            pixels: vec![0; 784],
        });
        let parsed = parse_idx_images(&images).unwrap();
        assert_eq!((parsed.count, parsed.rows, parsed.cols), (1, 28, 28));
        assert!(parsed.pixels.iter().all(|&p| p == 0));
        assert_eq!(parse_idx_labels(&encode_idx_labels(&[7])).unwrap(), vec![7]);
    }

    #[test]
    fn idx_errors() {
        let mut images = encode_idx_images(&IdxImages {
            count: 2,
            rows: 2,
            cols: 2,
            pixels: vec![1; 8],
        });
        assert!(matches!(
            parse_idx_images(&encode_idx_labels(&[1])),
            Err(FormatError::BadMagic { .. })
        ));
        images.pop();
        assert!(matches!(parse_idx_images(&images), Err(FormatError::Truncated { .. })));
        assert!(matches!(
            parse_idx_images(&images[..10]),
            Err(FormatError::Truncated { .. })
        ));
        images.extend([0, 0]);
        assert!(matches!(
            parse_idx_images(&images),
            Err(FormatError::TrailingBytes { extra: 1 })
        ));
    }

    #[test]
    fn huge_declared_count_is_rejected() {
        let mut bytes = IDX_IMAGE_MAGIC.to_be_bytes().to_vec();
        for v in [u32::MAX, u32::MAX, u32::MAX] {
            bytes.extend(v.to_be_bytes());
        }
        bytes.extend([0u8; 64]);
        assert!(matches!(parse_idx_images(&bytes), Err(FormatError::Truncated { .. })));
        let mut labels = IDX_LABEL_MAGIC.to_be_bytes().to_vec();
        labels.extend(u32::MAX.to_be_bytes());
        assert!(matches!(parse_idx_labels(&labels), Err(FormatError::Truncated { .. })));
    }

    #[test]
    fn cifar_fixture() {
        let mut record = vec![3u8];
        record.extend(vec![255u8; 3 * CIFAR_PLANE]);
        let (pixels, labels) = parse_cifar10(&record).unwrap();
        assert_eq!(labels, vec![3]);
        assert_eq!(pixels.len(), 3072);
        assert!(pixels.iter().all(|&v| v == 1.0));
        assert!(matches!(
            parse_cifar10(&record[..3000]),
            Err(FormatError::RecordLength { .. })
        ));
        record[0] = 10;
        assert!(matches!(
            parse_cifar10(&record),
            Err(FormatError::LabelOutOfRange { label: 10 })
        ));
    }

    #[test]
    fn cifar_planes_become_hwc() {
        let mut record = vec![1u8];
        for c in 0..3u8 {
            record.extend((0..CIFAR_PLANE).map(|p| if p == 33 { 10 * (c + 1) } else { 0 }));
        }
        let (pixels, _) = parse_cifar10(&record).unwrap();
        // pixel (1, 1) holds R, G, B = 10, 20, 30
        let at = 33 * 3;
        assert_eq!(&pixels[at..at + 3], &[10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]);
    }
}
