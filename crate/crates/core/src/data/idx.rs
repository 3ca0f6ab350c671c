//! IDX (MNIST) reader. Big-endian magic and dimension sizes, unsigned-byte payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::Dataset;

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Maps a byte in `[0, 255]` affinely onto `[−1, 1]`.
pub fn pixel_to_unit(p: u8) -> f64 {
    p as f64 / 127.5 - 1.0
}

/// Inverse of [`pixel_to_unit`], clamping out-of-range values.
pub fn unit_to_pixel(v: f64) -> u8 {
    ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            message: "header ends early".into(),
        })
}

fn read_header(path: &Path, expected_magic: u32, dims: usize) -> Result<(Vec<u8>, Vec<usize>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != expected_magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: expected_magic,
            found: magic,
        });
    }
    let sizes = (0..dims)
        .map(|i| be_u32(&bytes, 4 + 4 * i, path).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * dims;
    let expected: usize = sizes.iter().product();
    let payload = bytes.len() - header.min(bytes.len());
    if payload < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: format!("expected {expected} payload bytes, found {payload}"),
        });
    }
    Ok((bytes[header..header + expected].to_vec(), sizes))
}

/// Loads an IDX image file (and optionally its label file). Pixels are
/// flattened row-major and scaled to `[−1, 1]`.
pub fn load_idx(images_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let (pixels, sizes) = read_header(images_path, IDX_IMAGE_MAGIC, 3)?;
    let (count, height, width) = (sizes[0], sizes[1], sizes[2]);
    let samples = Tensor::matrix(
        count,
        height * width,
        pixels.into_iter().map(pixel_to_unit).collect(),
    )?;

    let labels = match labels_path {
        None => None,
        Some(path) => {
            let (raw, sizes) = read_header(path, IDX_LABEL_MAGIC, 1)?;
            if sizes[0] != count {
                return Err(Error::CountMismatch {
                    images: images_path.to_path_buf(),
                    labels: path.to_path_buf(),
                    image_count: count,
                    label_count: sizes[0],
                });
            }
            Some(raw.into_iter().map(usize::from).collect())
        }
    };
    let name = images_path
        .file_name()
        .map_or_else(|| "idx".into(), |s| s.to_string_lossy().into_owned());
    let mut dataset = Dataset::new(name, samples, labels)?;
    dataset.image_shape = Some((height, width));
    Ok(dataset)
}
