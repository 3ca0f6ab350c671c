//! Evaluation: Gaussian fits, Fréchet distance, mode coverage, PCA features.
//!
//! Image populations are compared in a PCA feature space fitted once on the
//! real data ("desk-FID"); 2-D synthetic populations are compared on raw
//! coordinates.

mod coverage;
mod eigen;
mod gaussian;
mod pca;
mod record;

pub use coverage::{mode_coverage, Coverage, DEFAULT_RADIUS_SIGMAS};
pub use eigen::{jacobi_eigen, SymmetricEigen, MAX_SWEEPS};
pub use gaussian::{fit_gaussian, frechet_distance, GaussianFit, COVARIANCE_REGULARIZER};
pub use pca::{pca_features, PcaBasis, POWER_ITERATIONS, POWER_TOLERANCE};
pub use record::{format_sig9, metrics_csv, MetricsRecord, METRICS_HEADER};

use crate::data::{subset, Dataset, GaussianMixtureSpec};
use crate::error::Result;
use crate::numerics::Tensor;

/// Number of PCA features used for image data.
pub const PCA_FEATURES: usize = 32;
/// Default number of generated samples per evaluation.
pub const DEFAULT_N_GEN: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub frechet: f64,
    pub coverage: Option<Coverage>,
}

/// Scores generated samples against a fixed real population.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pca: Option<PcaBasis>,
    reference: GaussianFit,
    mixture: Option<GaussianMixtureSpec>,
}

impl Evaluator {
    /// Image datasets get a PCA basis with [`PCA_FEATURES`] components;
    /// others are compared on raw coordinates. A dataset with a known
    /// mixture also gets mode coverage.
    pub fn new(real: &Dataset) -> Result<Self> {
        let pca = if real.is_image() {
            Some(PcaBasis::fit(
                &real.samples,
                PCA_FEATURES.min(real.data_dim()),
            )?)
        } else {
            None
        };
        let mut evaluator = Self {
            pca,
            reference: GaussianFit::new(vec![], vec![])?,
            mixture: real.mixture.clone(),
        };
        evaluator.reference = fit_gaussian(&evaluator.features(&real.samples)?)?;
        Ok(evaluator)
    }

    pub fn pca(&self) -> Option<&PcaBasis> {
        self.pca.as_ref()
    }

    pub fn features(&self, samples: &Tensor) -> Result<Tensor> {
        match &self.pca {
            Some(basis) => basis.project(samples),
            None => Ok(samples.clone()),
        }
    }

    /// Fréchet distance between `samples` and the real reference population.
    pub fn frechet(&self, samples: &Tensor) -> Result<f64> {
        let fit = fit_gaussian(&self.features(samples)?)?;
        frechet_distance(&fit, &self.reference)
    }

    pub fn evaluate(&self, generated: &Tensor) -> Result<Evaluation> {
        let frechet = self.frechet(generated)?;
        let coverage = match &self.mixture {
            Some(spec) if generated.cols() == 2 => {
                Some(mode_coverage(generated, spec, DEFAULT_RADIUS_SIGMAS))
            }
            _ => None,
        };
        Ok(Evaluation { frechet, coverage })
    }

    /// Fréchet distance between two disjoint halves of a fixed shuffle of
    /// `real`, in this evaluator's feature space.
    pub fn split_baseline(&self, real: &Dataset) -> Result<f64> {
        let shuffled = subset(real, real.len(), 0)?;
        let (a, b) = shuffled.split_at(real.len() / 2);
        let fa = fit_gaussian(&self.features(&a.samples)?)?;
        let fb = fit_gaussian(&self.features(&b.samples)?)?;
        frechet_distance(&fa, &fb)
    }
}
