//! Image grids as binary PGM and point clouds as CSV.

use std::fs;
use std::path::Path;

use crate::data::unit_to_pixel;
use crate::error::{Error, Result};
use crate::metrics::format_sig9;
use crate::numerics::Tensor;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(path, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// An 8-bit grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_pgm())
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |m: &str| Error::Format {
            path: path.to_path_buf(),
            message: m.to_string(),
        };
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated PGM header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("expected a P5 image with maxval 255"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
        let pixels = bytes.get(pos + 1..).unwrap_or_default().to_vec();
        if pixels.len() != width * height {
            return Err(bad("pixel count does not match header"));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

/// Tiles the rows of `images` (each an `h × w` image in `[−1, 1]`) into a
/// `grid_rows × grid_cols` mosaic, row-major. Unused cells stay black.
pub fn image_grid(
    images: &Tensor,
    (h, w): (usize, usize),
    grid_rows: usize,
    grid_cols: usize,
) -> Result<GrayImage> {
    if images.cols() != h * w {
        return Err(Error::Shape {
            op: "image_grid",
            left: images.shape().to_vec(),
            right: vec![h * w],
        });
    }
    let (width, height) = (grid_cols * w, grid_rows * h);
    let mut pixels = vec![0u8; width * height];
    for (i, img) in images.iter_rows().take(grid_rows * grid_cols).enumerate() {
        let (gy, gx) = (i / grid_cols, i % grid_cols);
        for y in 0..h {
            for x in 0..w {
                pixels[(gy * h + y) * width + gx * w + x] = unit_to_pixel(img[y * w + x]);
            }
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

/// CSV with the given header and one row per tensor row.
pub fn points_csv(header: &str, points: &Tensor) -> String {
    let mut out = format!("{header}\n");
    for row in points.iter_rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout_and_round_trip() {
        // three 2×2 images: all black, all white, and a gradient
        let images =
            Tensor::from_rows(&[vec![-1.0; 4], vec![1.0; 4], vec![-1.0, 0.0, 0.5, 1.0]]).unwrap();
        let grid = image_grid(&images, (2, 2), 2, 2).unwrap();
        assert_eq!((grid.width, grid.height), (4, 4));
        assert_eq!(&grid.pixels[0..4], &[0, 0, 255, 255]);
        assert_eq!(grid.pixels[2 * 4], unit_to_pixel(-1.0));
        assert_eq!(grid.pixels[2 * 4 + 1], unit_to_pixel(0.0));
        assert_eq!(&grid.pixels[2 * 4 + 2..2 * 4 + 4], &[0, 0]);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        grid.write_pgm(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n4 4\n255\n"));
        assert_eq!(GrayImage::read_pgm(&path).unwrap(), grid);
    }

    #[test]
    fn wrong_image_size_is_rejected() {
        assert!(image_grid(&Tensor::zeros(&[1, 5]), (2, 2), 1, 1).is_err());
    }

    #[test]
    fn points_csv_layout() {
        let p = Tensor::from_rows(&[vec![1.0, -0.5], vec![0.25, 2.0]]).unwrap();
        assert_eq!(points_csv("x,y", &p), "x,y\n1,-0.5\n0.25,2\n");
    }
}
