use crate::data::GaussianMixtureSpec;
use crate::numerics::Tensor;

pub const DEFAULT_RADIUS_SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub modes_covered: usize,
    /// Fraction of samples within the radius of any mode.
    pub high_quality_fraction: f64,
}

/// Counts modes of `spec` that attract at least `max(20, N/100)` samples
/// within `radius_sigmas · σ` of their mean.
pub fn mode_coverage(samples: &Tensor, spec: &GaussianMixtureSpec, radius_sigmas: f64) -> Coverage {
    let n = samples.rows();
    if n == 0 {
        return Coverage {
            modes_covered: 0,
            high_quality_fraction: 0.0,
        };
    }
    let mut hits = vec![0usize; spec.modes.len()];
    let mut good = 0usize;
    for row in samples.iter_rows() {
        let mut any = false;
        for (mode, hit) in spec.modes.iter().zip(hits.iter_mut()) {
            let dx = row[0] - mode.mean[0];
            let dy = row[1] - mode.mean[1];
            let r = radius_sigmas * mode.stddev;
            if dx * dx + dy * dy <= r * r {
                *hit += 1;
                any = true;
            }
        }
        if any {
            good += 1;
        }
    }
    let threshold = (n as f64 / 100.0).max(20.0);
    Coverage {
        modes_covered: hits.iter().filter(|&&h| h as f64 >= threshold).count(),
        high_quality_fraction: good as f64 / n as f64,
    }
}
