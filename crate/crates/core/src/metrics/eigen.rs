//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Row-major `n × n`; column `j` is the eigenvector for `values[j]`.
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymmetricEigen {
    /// `V · diag(f(λ)) · Vᵀ`, row-major.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let scaled: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..n)
                    .map(|k| self.vectors[i * n + k] * scaled[k] * self.vectors[j * n + k])
                    .sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }
}

/// Diagonalizes the symmetric `n × n` row-major matrix `a`.
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    assert_eq!(a.len(), n * n, "matrix must be n × n");
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 2 || scale == 0.0 {
        return Ok(SymmetricEigen {
            values: (0..n).map(|i| m[i * n + i]).collect(),
            vectors: v,
            n,
        });
    }
    // Rounding floors the off-diagonal norm near ε·‖A‖ per row.
    let tol = n as f64 * f64::EPSILON * scale;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            return Ok(SymmetricEigen {
                values: (0..n).map(|i| m[i * n + i]).collect(),
                vectors: v,
                n,
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::EigenNonConvergence { sweeps: MAX_SWEEPS })
}
