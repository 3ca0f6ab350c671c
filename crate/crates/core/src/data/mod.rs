//! Datasets: synthetic 2-D mixtures, IDX (MNIST) images, flat f64 matrices,
//! plus deterministic batching and subsetting.

mod idx;
mod mixture;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub use idx::{load_idx, pixel_to_unit, unit_to_pixel, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
pub use mixture::{sample_mixture, GaussianMixtureSpec, Mode};

/// Number of points in the synthetic 4-mode dataset.
pub const SYNTHETIC_SIZE: usize = 10_000;
/// Fixed seed for the synthetic dataset so every run sees the same target points.
pub const SYNTHETIC_SEED: u64 = 0x5eed_0004;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `[N × data_dim]`
    pub samples: Tensor,
    pub labels: Option<Vec<usize>>,
    pub num_classes: usize,
    /// `(height, width)` for image data.
    pub image_shape: Option<(usize, usize)>,
    /// The mixture the samples were drawn from, when known.
    pub mixture: Option<GaussianMixtureSpec>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        samples: Tensor,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if samples.shape().len() != 2 {
            return Err(Error::InvalidArgument(
                "dataset samples must be a matrix".into(),
            ));
        }
        let num_classes = match &labels {
            Some(l) => {
                if l.len() != samples.rows() {
                    return Err(Error::InvalidArgument(format!(
                        "{} labels for {} samples",
                        l.len(),
                        samples.rows()
                    )));
                }
                l.iter().max().map_or(0, |m| m + 1)
            }
            None => 0,
        };
        Ok(Self {
            name: name.into(),
            samples,
            labels,
            num_classes,
            image_shape: None,
            mixture: None,
        })
    }

    /// The 4-mode synthetic target: [`SYNTHETIC_SIZE`] points from
    /// [`GaussianMixtureSpec::synthetic_target`].
    pub fn synthetic4() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(SYNTHETIC_SEED);
        let samples = sample_mixture(
            &GaussianMixtureSpec::synthetic_target(),
            SYNTHETIC_SIZE,
            &mut rng,
        );
        let mut d = Self::new("synthetic4", samples, None).expect("matrix");
        d.mixture = Some(GaussianMixtureSpec::synthetic_target());
        d
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data_dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn is_image(&self) -> bool {
        self.image_shape.is_some()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            samples: self.samples.select_rows(indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            num_classes: self.num_classes,
            image_shape: self.image_shape,
            mixture: self.mixture.clone(),
        }
    }

    /// Splits into the first `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.select(&head), self.select(&tail))
    }
}

/// One minibatch.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub samples: Tensor,
    pub labels: Option<Vec<usize>>,
}

fn epoch_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

/// Batch index lists for one epoch: a shuffle keyed by `(seed, epoch)` cut
/// into full batches; the trailing partial batch is dropped.
pub fn epoch_batches(
    n: usize,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 || batch_size > n {
        return Err(Error::InvalidArgument(format!(
            "batch size {batch_size} must be in 1..={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut epoch_rng(seed, epoch));
    Ok(order
        .chunks_exact(batch_size)
        .map(<[usize]>::to_vec)
        .collect())
}

/// The batches of one epoch, in order.
pub fn batch_iter(
    dataset: &Dataset,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<impl Iterator<Item = Batch> + '_> {
    let batches = epoch_batches(dataset.len(), batch_size, seed, epoch)?;
    Ok(batches.into_iter().map(move |idx| {
        let d = dataset.select(&idx);
        Batch {
            samples: d.samples,
            labels: d.labels,
        }
    }))
}

/// Endless batch stream that walks epoch after epoch.
pub struct BatchStream<'a> {
    dataset: &'a Dataset,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    pending: std::vec::IntoIter<Vec<usize>>,
}

impl<'a> BatchStream<'a> {
    pub fn new(dataset: &'a Dataset, batch_size: usize, seed: u64) -> Result<Self> {
        let pending = epoch_batches(dataset.len(), batch_size, seed, 0)?.into_iter();
        Ok(Self {
            dataset,
            batch_size,
            seed,
            epoch: 0,
            pending,
        })
    }

    pub fn next_batch(&mut self) -> Batch {
        loop {
            if let Some(idx) = self.pending.next() {
                let d = self.dataset.select(&idx);
                return Batch {
                    samples: d.samples,
                    labels: d.labels,
                };
            }
            self.epoch += 1;
            self.pending =
                epoch_batches(self.dataset.len(), self.batch_size, self.seed, self.epoch)
                    .expect("validated in new")
                    .into_iter();
        }
    }
}

/// Deterministic sample of `n` rows without replacement. With labels the
/// draw is stratified: each class gets its proportional share, remainders
/// going to the largest fractional parts.
pub fn subset(dataset: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let total = dataset.len();
    if n > total {
        return Err(Error::InvalidArgument(format!(
            "subset of {n} requested from {total} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = match &dataset.labels {
        None => {
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut rng);
            order.truncate(n);
            order
        }
        Some(labels) => {
            let classes = dataset.num_classes;
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
            for (i, &y) in labels.iter().enumerate() {
                by_class[y].push(i);
            }
            let mut quotas: Vec<usize> = by_class.iter().map(|c| c.len() * n / total).collect();
            let mut leftover = n - quotas.iter().sum::<usize>();
            let mut order: Vec<usize> = (0..classes).collect();
            // largest fractional remainder first; ties by class index
            order.sort_by_key(|&c| std::cmp::Reverse((by_class[c].len() * n) % total));
            for c in order {
                if leftover == 0 {
                    break;
                }
                if quotas[c] < by_class[c].len() {
                    quotas[c] += 1;
                    leftover -= 1;
                }
            }
            let mut picked = Vec::with_capacity(n);
            for (members, quota) in by_class.iter_mut().zip(&quotas) {
                members.shuffle(&mut rng);
                picked.extend_from_slice(&members[..*quota]);
            }
            picked.shuffle(&mut rng);
            picked
        }
    };
    chosen.shrink_to_fit();
    Ok(dataset.select(&chosen))
}

pub const FLAT_MAGIC: [u8; 4] = *b"ACLF";

/// Writes a flat f64 matrix: `b"ACLF" | rows: u32 | cols: u32 | f64 × rows·cols`,
/// all little-endian.
pub fn write_flat(path: &Path, samples: &Tensor) -> Result<()> {
    let mut bytes = Vec::with_capacity(12 + 8 * samples.len());
    bytes.extend_from_slice(&FLAT_MAGIC);
    bytes.extend_from_slice(&(samples.rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(samples.cols() as u32).to_le_bytes());
    for v in samples.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_flat(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: "missing header".into(),
        });
    }
    if bytes[..4] != FLAT_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: u32::from_be_bytes(FLAT_MAGIC),
            found: u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let payload = &bytes[12..];
    if payload.len() != rows * cols * 8 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: format!(
                "expected {} values, found {} bytes",
                rows * cols,
                payload.len()
            ),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let name = path
        .file_stem()
        .map_or_else(|| "flat".into(), |s| s.to_string_lossy().into_owned());
    Dataset::new(name, Tensor::matrix(rows, cols, data)?, None)
}
