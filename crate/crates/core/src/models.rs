//! Covariance models for the simulation study.
//!
//! * Model 1: unit diagonal, `sigma_ij = rho |i-j|^-(alpha+1)` off it.
//! * Model 2: `sigma_ij = rho^|i-j|`.
//! * Model 3: Model 1 truncated to `|i-j| <= 6`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{clip_to_psd, eigenvalues, MvnSampler, SymMatrix};
use crate::rng::RngStream;

/// Bandwidth of the truncation in Model 3.
pub const MODEL3_BANDWIDTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: u8,
    pub rho: f64,
    /// Decay exponent offset; ignored by Model 2.
    pub alpha: f64,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(id: u8, rho: f64, alpha: f64, p: usize) -> Result<Self> {
        let spec = Self { id, rho, alpha, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::domain("model dimension must be positive"));
        }
        if !self.rho.is_finite() || !self.alpha.is_finite() {
            return Err(Error::domain("model parameters must be finite"));
        }
        match self.id {
            1 | 3 => Ok(()),
            2 if self.rho.abs() < 1.0 => Ok(()),
            2 => Err(Error::domain(format!("Model 2 needs |rho| < 1, got {}", self.rho))),
            other => Err(Error::domain(format!("unknown model id {other}; expected 1, 2 or 3"))),
        }
    }

    /// Whether the parameters are among the study's reference settings
    /// (rho = 0.6 with alpha in {0.1, 0.5} for Models 1 and 3).
    pub fn is_paper_setting(&self) -> bool {
        match self.id {
            1 | 3 => self.rho == 0.6 && (self.alpha == 0.1 || self.alpha == 0.5),
            2 => self.rho.abs() < 1.0,
            _ => false,
        }
    }

    /// Exact covariance matrix of the model, before any PSD repair.
    pub fn build_sigma(&self) -> Result<SymMatrix> {
        self.validate()?;
        let (rho, alpha) = (self.rho, self.alpha);
        let decay = |d: usize| rho * (d as f64).powf(-(alpha + 1.0));
        Ok(match self.id {
            1 => SymMatrix::from_fn(self.p, |i, j| if i == j { 1.0 } else { decay(i - j) }),
            2 => SymMatrix::from_fn(self.p, |i, j| rho.powi((i - j) as i32)),
            _ => SymMatrix::from_fn(self.p, |i, j| match i - j {
                0 => 1.0,
                d if d <= MODEL3_BANDWIDTH => decay(d),
                _ => 0.0,
            }),
        })
    }

    pub fn label(&self) -> String {
        format!("model{}(rho={}, alpha={}, p={})", self.id, self.rho, self.alpha, self.p)
    }
}

/// A model ready for repeated sampling: the (possibly clipped) truth and a
/// factored sampler.
#[derive(Debug, Clone)]
pub struct TrialSource {
    pub model: ModelSpec,
    pub sigma: SymMatrix,
    pub clipped_mass: f64,
    sampler: MvnSampler,
}

impl TrialSource {
    /// Builds the truth, clipping negative eigenvalues when the formula is
    /// indefinite, and factors it once.
    pub fn new(model: ModelSpec) -> Result<Self> {
        if !model.is_paper_setting() {
            warn!("{} is outside the reference parameter settings", model.label());
        }
        let raw = model.build_sigma()?;
        let smallest = eigenvalues(&raw)?.last().copied().unwrap_or(0.0);
        let (sigma, clipped_mass) = if smallest < 0.0 {
            let (clipped, mass) = clip_to_psd(&raw)?;
            warn!(
                "{} is indefinite (smallest eigenvalue {smallest:.3e}); clipped {mass:.3e} of negative mass",
                model.label()
            );
            (clipped, mass)
        } else {
            (raw, 0.0)
        };
        let sampler = MvnSampler::new(vec![0.0; model.p], &sigma)?;
        Ok(Self {
            model,
            sigma,
            clipped_mass,
            sampler,
        })
    }

    /// `n` draws from `N(0, sigma)`.
    pub fn draw(&self, n: usize, rng: &RngStream) -> Result<Dataset> {
        self.sampler.sample(n, rng)
    }
}

/// One dataset from `model` together with the truth that generated it.
pub fn generate_trial(model: &ModelSpec, n: usize, rng: &RngStream) -> Result<(Dataset, SymMatrix)> {
    let source = TrialSource::new(*model)?;
    Ok((source.draw(n, rng)?, source.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{band, empirical_cov};
    use crate::linalg::PivotedCholesky;

    #[test]
    fn closed_forms() {
        let m1 = ModelSpec::new(1, 0.6, 0.1, 10).unwrap().build_sigma().unwrap();
        assert_eq!(m1.get(0, 1), 0.6);
        assert_eq!(m1.get(3, 3), 1.0);
        assert!((m1.get(0, 3) - 0.6 * 3f64.powf(-1.1)).abs() < 1e-15);
        let m2 = ModelSpec::new(2, 0.5, 0.0, 10).unwrap().build_sigma().unwrap();
        assert_eq!(m2.get(0, 2), 0.25);
        assert_eq!(m2.get(4, 4), 1.0);
    }

    #[test]
    fn model3_is_banded_model1() {
        for alpha in [0.1, 0.5] {
            let m1 = ModelSpec::new(1, 0.6, alpha, 20).unwrap().build_sigma().unwrap();
            let m3 = ModelSpec::new(3, 0.6, alpha, 20).unwrap().build_sigma().unwrap();
            assert_eq!(m3, band(&m1, MODEL3_BANDWIDTH).unwrap());
            assert_eq!(m3.get(10, 3), 0.0);
        }
    }

    #[test]
    fn model2_is_positive_definite() {
        for rho in [-0.9, 0.0, 0.5, 0.95] {
            let s = ModelSpec::new(2, rho, 0.0, 50).unwrap().build_sigma().unwrap();
            assert_eq!(PivotedCholesky::new(&s).unwrap().rank(), 50);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(ModelSpec::new(2, 1.0, 0.0, 5).is_err());
        assert!(ModelSpec::new(4, 0.5, 0.0, 5).is_err());
        assert!(ModelSpec::new(1, 0.6, 0.1, 0).is_err());
        assert!(!ModelSpec::new(1, 0.7, 0.1, 5).unwrap().is_paper_setting());
        assert!(ModelSpec::new(3, 0.6, 0.5, 5).unwrap().is_paper_setting());
    }

    #[test]
    fn reproducible_draws() {
        let model = ModelSpec::new(1, 0.6, 0.1, 8).unwrap();
        let a = generate_trial(&model, 20, &RngStream::new(5, 1)).unwrap();
        let b = generate_trial(&model, 20, &RngStream::new(5, 1)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn large_sample_consistency() {
        let model = ModelSpec::new(2, 0.9, 0.0, 5).unwrap();
        let n = 100_000;
        let (data, sigma) = generate_trial(&model, n, &RngStream::new(17, 0)).unwrap();
        let s = empirical_cov(&data);
        for (i, j, v) in s.iter_lower() {
            assert!((v - sigma.get(i, j)).abs() < 0.05, "({i},{j}) {v}");
        }
        let bound = 4.0 / (n as f64).sqrt();
        assert!(data.mean().iter().all(|m| m.abs() < bound));
    }

    #[test]
    fn indefinite_truth_is_clipped() {
        // strong slow decay makes Model 1 indefinite
        let model = ModelSpec::new(1, 0.95, 0.0, 40).unwrap();
        let source = TrialSource::new(model).unwrap();
        assert!(source.clipped_mass > 0.0);
        assert!(eigenvalues(&source.sigma).unwrap().last().unwrap() > &-1e-10);
    }
}
