//! Reader for the big-endian IDX container used by the MNIST distribution.
//!
//! Layout: a 4-byte magic (`0x00000803` for rank-3 unsigned-byte image
//! tensors, `0x00000801` for rank-1 label vectors), one 4-byte big-endian
//! size per dimension, then the raw bytes in row-major order.

use std::path::Path;

use thiserror::Error;

use super::ClassificationDataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: bad magic number: expected {expected:#010x}, found {actual:#010x}")]
    BadMagic { path: String, expected: u32, actual: u32 },

    #[error("{path}: truncated file: header declares {expected} bytes of payload, found {actual}")]
    Truncated { path: String, expected: usize, actual: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: label {label} at index {index} is outside 0..=9")]
    LabelRange { path: String, index: usize, label: u8 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn read_u32(bytes: &[u8], offset: usize, path: &str) -> Result<u32, IdxError> {
    bytes.get(offset..offset + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]])).ok_or_else(|| IdxError::Truncated {
        path: path.to_string(),
        expected: offset + 4,
        actual: bytes.len(),
    })
}

/// Parsed image tensor: `count` images of `rows x cols` bytes.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

pub fn parse_images(bytes: &[u8], path: &str) -> Result<IdxImages, IdxError> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(IdxError::BadMagic { path: path.to_string(), expected: IMAGES_MAGIC, actual: magic });
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let payload = &bytes[16..];
    let expected = count * rows * cols;
    if payload.len() < expected {
        return Err(IdxError::Truncated { path: path.to_string(), expected, actual: payload.len() });
    }
    Ok(IdxImages { count, rows, cols, pixels: payload[..expected].to_vec() })
}

pub fn parse_labels(bytes: &[u8], path: &str) -> Result<Vec<u8>, IdxError> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(IdxError::BadMagic { path: path.to_string(), expected: LABELS_MAGIC, actual: magic });
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(IdxError::Truncated { path: path.to_string(), expected: count, actual: payload.len() });
    }
    Ok(payload[..count].to_vec())
}

fn read_file(path: &Path) -> Result<Vec<u8>, IdxError> {
    std::fs::read(path).map_err(|source| IdxError::Io { path: path.display().to_string(), source })
}

/// Loads an MNIST image/label pair. Pixels are scaled to `[0, 1]`.
pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<ClassificationDataset, IdxError> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images_name = images_path.display().to_string();
    let labels_name = labels_path.display().to_string();
    let images = parse_images(&read_file(images_path)?, &images_name)?;
    let labels = parse_labels(&read_file(labels_path)?, &labels_name)?;
    if images.count != labels.len() {
        return Err(IdxError::CountMismatch { images: images.count, labels: labels.len() });
    }
    let dim = images.rows * images.cols;
    let mut items = Vec::with_capacity(images.count);
    for (index, (chunk, &label)) in images.pixels.chunks_exact(dim.max(1)).zip(&labels).enumerate() {
        if label > 9 {
            return Err(IdxError::LabelRange { path: labels_name, index, label });
        }
        let features = chunk.iter().map(|&p| f64::from(p) / 255.0).collect();
        items.push((features, label as usize));
    }
    Ok(ClassificationDataset::from_parts(items, 10, dim))
}
