use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{gemm, Tensor};

pub const POWER_ITERATIONS: usize = 200;
pub const POWER_TOLERANCE: f64 = 1e-9;

/// Top-`k` principal directions of a reference population.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `[k × data_dim]`, orthonormal rows.
    pub components: Tensor,
    /// Variance captured by each component.
    pub variances: Vec<f64>,
    /// Total variance of the reference data.
    pub total_variance: f64,
}

impl PcaBasis {
    /// Power iteration with deflation on the sample covariance.
    pub fn fit(samples: &Tensor, k: usize) -> Result<Self> {
        let (n, d) = (samples.rows(), samples.cols());
        if k > d {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds data dimension {d}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(
                "PCA needs at least 2 samples".into(),
            ));
        }
        let mut mean = vec![0.0; d];
        for row in samples.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut centered = samples.clone();
        for r in 0..n {
            centered
                .row_mut(r)
                .iter_mut()
                .zip(&mean)
                .for_each(|(v, m)| *v -= m);
        }
        let mut cov = vec![0.0; d * d];
        gemm(
            d,
            n,
            d,
            centered.data(),
            true,
            centered.data(),
            false,
            &mut cov,
            0.0,
        );
        cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
        let total_variance = (0..d).map(|i| cov[i * d + i]).sum();

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        for _ in 0..k {
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            orthonormalize(&mut v, &components);
            let mut eigenvalue = 0.0;
            for _ in 0..POWER_ITERATIONS {
                let mut w = vec![0.0; d];
                gemm(d, d, 1, &cov, false, &v, false, &mut w, 0.0);
                eigenvalue = dot(&w, &v);
                orthonormalize(&mut w, &components);
                let delta = w
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                v = w;
                if delta < POWER_TOLERANCE {
                    break;
                }
            }
            // deflate
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] -= eigenvalue * v[i] * v[j];
                }
            }
            variances.push(eigenvalue.max(0.0));
            components.push(v);
        }
        let flat: Vec<f64> = components.into_iter().flatten().collect();
        Ok(Self {
            mean,
            components: Tensor::matrix(k, d, flat)?,
            variances,
            total_variance,
        })
    }

    pub fn k(&self) -> usize {
        self.components.rows()
    }

    /// Centered projection onto the basis: `[N × k]`.
    pub fn project(&self, samples: &Tensor) -> Result<Tensor> {
        let d = self.mean.len();
        if samples.cols() != d {
            return Err(Error::Shape {
                op: "pca_project",
                left: samples.shape().to_vec(),
                right: vec![d],
            });
        }
        let n = samples.rows();
        let mut centered = samples.clone();
        for r in 0..n {
            centered
                .row_mut(r)
                .iter_mut()
                .zip(&self.mean)
                .for_each(|(v, m)| *v -= m);
        }
        let k = self.k();
        let mut out = vec![0.0; n * k];
        gemm(
            n,
            d,
            k,
            centered.data(),
            false,
            self.components.data(),
            true,
            &mut out,
            0.0,
        );
        Tensor::matrix(n, k, out)
    }

    /// Maps features back to data space.
    pub fn reconstruct(&self, features: &Tensor) -> Result<Tensor> {
        let n = features.rows();
        let d = self.mean.len();
        let mut out = features.matmul(&self.components)?;
        for r in 0..n {
            out.row_mut(r)
                .iter_mut()
                .zip(&self.mean)
                .for_each(|(v, m)| *v += m);
        }
        Tensor::matrix(n, d, out.into_data())
    }

    pub fn explained_variance_ratio(&self) -> f64 {
        if self.total_variance == 0.0 {
            return 1.0;
        }
        self.variances.iter().sum::<f64>() / self.total_variance
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt against `basis`, then normalizes. A vector that vanishes is
/// left as zero.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Features of `query` in the top-`k` PCA basis of `reference`.
pub fn pca_features(reference: &Tensor, query: &Tensor, k: usize) -> Result<Tensor> {
    PcaBasis::fit(reference, k)?.project(query)
}
