use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// One isotropic 2-D Gaussian component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub mean: [f64; 2],
    pub stddev: f64,
}

/// Weighted mixture of isotropic 2-D Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixtureSpec {
    pub modes: Vec<Mode>,
    pub weights: Vec<f64>,
}

impl GaussianMixtureSpec {
    pub fn new(modes: Vec<Mode>, weights: Vec<f64>) -> Result<Self> {
        let spec = Self { modes, weights };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal-weight modes at `(±offset, ±offset)`.
    pub fn four_corners(offset: f64, stddev: f64) -> Self {
        let modes = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .iter()
            .map(|&(sx, sy)| Mode {
                mean: [sx * offset, sy * offset],
                stddev,
            })
            .collect();
        Self {
            modes,
            weights: vec![0.25; 4],
        }
    }

    /// Target distribution of the synthetic experiments: modes at (±2, ±2), σ = 0.1.
    pub fn synthetic_target() -> Self {
        Self::four_corners(2.0, 0.1)
    }

    /// Four-mode prior sharing the target's layout with σ = 0.5.
    pub fn four_mode_prior() -> Self {
        Self::four_corners(2.0, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument(
                "mixture needs at least one mode".into(),
            ));
        }
        if self.modes.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "mixture has {} modes but {} weights",
                self.modes.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::InvalidArgument(
                "mixture weights must be nonnegative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        if self
            .modes
            .iter()
            .any(|m| m.stddev.is_nan() || m.stddev <= 0.0)
        {
            return Err(Error::InvalidArgument(
                "mode stddev must be positive".into(),
            ));
        }
        Ok(())
    }

    fn pick_mode<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// Draws `n` points and the index of the mode each came from.
    pub fn sample_labeled<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Tensor, Vec<usize>) {
        let mut data = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let k = self.pick_mode(rng);
            let mode = &self.modes[k];
            for axis in 0..2 {
                let z: f64 = StandardNormal.sample(rng);
                data.push(mode.mean[axis] + mode.stddev * z);
            }
            labels.push(k);
        }
        (Tensor::matrix(n, 2, data).expect("2 columns"), labels)
    }
}

/// `n` i.i.d. draws from `spec` as an `[n × 2]` matrix.
pub fn sample_mixture<R: Rng + ?Sized>(
    spec: &GaussianMixtureSpec,
    n: usize,
    rng: &mut R,
) -> Tensor {
    spec.sample_labeled(n, rng).0
}
