use rand::Rng;
use rand_distr::StandardNormal;

use super::cholesky::PivotedCholesky;
use super::sym::SymMatrix;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Draws from `N(mean, cov)` through a pivoted Cholesky factor, so
/// singular covariances are accepted.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: Vec<f64>,
    factor: PivotedCholesky,
}

impl MvnSampler {
    pub fn new(mean: Vec<f64>, cov: &SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("mean vector has non-finite entries"));
        }
        Ok(Self {
            mean,
            factor: PivotedCholesky::new(cov)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `n` independent rows drawn from the start of `stream`.
    pub fn sample(&self, n: usize, stream: &RngStream) -> Result<Dataset> {
        let mut rng = stream.rng();
        let p = self.dim();
        let rank = self.factor.rank();
        let mut z = vec![0.0; rank];
        let mut rows = Vec::with_capacity(n * p);
        for _ in 0..n {
            for zk in z.iter_mut() {
                *zk = rng.sample(StandardNormal);
            }
            for i in 0..p {
                let dot: f64 = self.factor.row(i).iter().zip(&z).map(|(a, b)| a * b).sum();
                rows.push(self.mean[i] + dot);
            }
        }
        Dataset::new(n, p, rows)
    }
}

/// `n` i.i.d. draws from `N(mean, cov)`.
pub fn sample_mvn(mean: &[f64], cov: &SymMatrix, n: usize, stream: &RngStream) -> Result<Dataset> {
    MvnSampler::new(mean.to_vec(), cov)?.sample(n, stream)
}
