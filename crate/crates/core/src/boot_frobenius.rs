//! Frobenius risk estimation by covariance penalty.
//!
//! The risk of `Sigma_hat(lambda)` splits into the apparent error against the
//! sample covariance, twice the summed covariances between estimate and sample
//! covariance entries, and a constant that does not depend on `lambda`. The
//! bootstrap rule estimates the covariance term from Gaussian resamples; SURE
//! evaluates it in closed form for the linear (banding/tapering) families.

use log::debug;

use crate::dataset::Dataset;
use crate::error::{Error, Method, Result};
use crate::estimators::{apply, as_bandwidth, linear_weights, sample_cov, EstimatorSpec};
use crate::linalg::{clip_to_psd, frobenius_distance_sq, MvnSampler, SymMatrix};
use crate::rng::RngStream;
use crate::selection::{argmin, SelectionResult, SelectionRule};

/// Which covariance the parametric bootstrap draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootKind {
    /// `N(xbar, S)` with the sample covariance `S`.
    Ultimate,
    /// `N(xbar, Sigma_hat(lambda0))` with a pre-tuned estimate.
    Intermediate,
}

/// A Gaussian bootstrap model.
#[derive(Debug, Clone)]
pub struct BootModel {
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    pub kind: BootKind,
    /// Negative eigenvalue mass removed to make `cov` PSD.
    pub clipped_mass: f64,
}

impl BootModel {
    pub fn ultimate(data: &Dataset) -> Result<Self> {
        Ok(Self {
            mean: data.mean(),
            cov: sample_cov(data)?,
            kind: BootKind::Ultimate,
            clipped_mass: 0.0,
        })
    }

    /// Model centred at the data mean with covariance `apply(spec, S, lambda0)`,
    /// clipped to the PSD cone.
    pub fn intermediate(spec: &EstimatorSpec, data: &Dataset, lambda0: f64) -> Result<Self> {
        let estimate = apply(spec, &sample_cov(data)?, lambda0)?;
        let (cov, clipped_mass) = clip_to_psd(&estimate)?;
        if clipped_mass > 0.0 {
            debug!(
                "intermediate bootstrap model at lambda {lambda0}: clipped {clipped_mass:.3e} of negative eigenvalue mass"
            );
        }
        Ok(Self {
            mean: data.mean(),
            cov,
            kind: BootKind::Intermediate,
            clipped_mass,
        })
    }

    pub fn sampler(&self) -> Result<MvnSampler> {
        MvnSampler::new(self.mean.clone(), &self.cov)
    }
}

/// Per-candidate pieces of the Frobenius risk estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub lambdas: Vec<f64>,
    /// `||Sigma_hat(lambda) - S||_F^2`.
    pub apparent: Vec<f64>,
    pub penalty: Vec<f64>,
}

impl RiskCurve {
    /// `apparent + penalty`, the risk up to a `lambda`-free constant.
    pub fn total(&self) -> Vec<f64> {
        self.apparent.iter().zip(&self.penalty).map(|(a, p)| a + p).collect()
    }

    /// Adds the constant `sum_ij Var(s_ij)` back, giving a full risk estimate.
    pub fn with_constant(&self, constant: f64) -> Vec<f64> {
        self.total().into_iter().map(|t| t - constant).collect()
    }
}

/// Bootstrap estimate of `2 sum_ij Cov(sigma_hat_ij(lambda), s_ij)` for every
/// grid point, using `resamples` samples of size `n` from `model`.
///
/// Resample `b` is drawn from `rng.child(b)`; the sample covariance across
/// resamples uses divisor `resamples - 1`.
pub fn boot_penalty(
    spec: &EstimatorSpec,
    n: usize,
    model: &BootModel,
    resamples: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    if resamples < 2 {
        return Err(Error::domain(format!(
            "bootstrap needs at least 2 resamples, got {resamples}"
        )));
    }
    let p = model.cov.dim();
    spec.check_dim(p)?;
    let sampler = model.sampler()?;
    let grid = spec.grid();
    let len = model.cov.packed().len();
    let weight = off_diagonal_weights(p);

    // Covariances are shift invariant, so centre the sample covariance at the
    // model covariance for a stable one-pass sum.
    let mut cross = vec![0.0; grid.len()];
    let mut sum_est = vec![vec![0.0; len]; grid.len()];
    let mut sum_dev = vec![0.0; len];
    for b in 0..resamples {
        let sample = sampler.sample(n, &rng.child(b as u64))?;
        let s = sample_cov(&sample)?;
        let dev: Vec<f64> = s.packed().iter().zip(model.cov.packed()).map(|(x, m)| x - m).collect();
        for (acc, d) in sum_dev.iter_mut().zip(&dev) {
            *acc += d;
        }
        for (g, &lambda) in grid.iter().enumerate() {
            let est = apply(spec, &s, lambda)?;
            let mut c = 0.0;
            for (((a, d), m), acc) in est.packed().iter().zip(&dev).zip(&weight).zip(sum_est[g].iter_mut()) {
                c += m * a * d;
                *acc += a;
            }
            cross[g] += c;
        }
    }
    let bf = resamples as f64;
    Ok(cross
        .iter()
        .zip(&sum_est)
        .map(|(c, a)| {
            let mean_term: f64 = a.iter().zip(&sum_dev).zip(&weight).map(|((a, d), m)| m * a * d).sum();
            2.0 * (c - mean_term / bf) / (bf - 1.0)
        })
        .collect())
}

/// Multiplicity of each packed entry in the full double sum: 1 on the
/// diagonal, 2 off it.
fn off_diagonal_weights(p: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in 0..=i {
            w.push(if i == j { 1.0 } else { 2.0 });
        }
    }
    w
}

/// Apparent error plus bootstrap penalty under `model`.
pub fn risk_curve(
    spec: &EstimatorSpec,
    data: &Dataset,
    model: &BootModel,
    resamples: usize,
    rng: &RngStream,
) -> Result<RiskCurve> {
    let s = sample_cov(data)?;
    let apparent = apparent_errors(spec, &s)?;
    let penalty = boot_penalty(spec, data.n(), model, resamples, rng)?;
    Ok(RiskCurve {
        lambdas: spec.grid().to_vec(),
        apparent,
        penalty,
    })
}

fn apparent_errors(spec: &EstimatorSpec, s: &SymMatrix) -> Result<Vec<f64>> {
    spec.grid()
        .iter()
        .map(|&l| Ok(frobenius_distance_sq(&apply(spec, s, l)?, s)))
        .collect()
}

/// First stage of the two-stage bootstrap: argmin of the risk curve under
/// the ultimate model, drawn from `rng.child(1)`.
pub fn ultimate_stage_lambda(spec: &EstimatorSpec, data: &Dataset, resamples: usize, rng: &RngStream) -> Result<f64> {
    let model = BootModel::ultimate(data)?;
    let curve = risk_curve(spec, data, &model, resamples, &rng.child(1))?;
    Ok(spec.grid()[argmin(&curve.total())?])
}

/// Two-stage bootstrap selection: `lambda0` from the ultimate model, then the
/// final choice from the intermediate model built at `lambda0`
/// (resamples from `rng.child(2)`).
pub fn boot_frobenius_select(
    spec: &EstimatorSpec,
    data: &Dataset,
    resamples: usize,
    rng: &RngStream,
) -> Result<SelectionResult> {
    let rule = SelectionRule::boot_frobenius(resamples)?;
    let lambda0 = ultimate_stage_lambda(spec, data, resamples, rng)?;
    let model = BootModel::intermediate(spec, data, lambda0)?;
    let curve = risk_curve(spec, data, &model, resamples, &rng.child(2))?;
    let mut result = SelectionResult::from_scores(rule, spec.grid(), curve.total())?;
    result.stage_one_lambda = Some(lambda0);
    result.psd_clip_mass = Some(model.clipped_mass);
    Ok(result)
}

/// How `Var(s_ij)` is estimated from the sample covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceEstimator {
    /// Unbiased under Gaussian data; needs `n >= 3`.
    Unbiased,
    /// `(s_ii s_jj + s_ij^2) / (n - 1)`; biased upward by `O(1/n)`.
    PlugIn,
}

/// Estimates of `Var(s_ij) = (sigma_ii sigma_jj + sigma_ij^2) / (n - 1)`.
///
/// With `nu = n - 1` degrees of freedom the Wishart moments give
/// `E[s_ii s_jj] = sigma_ii sigma_jj + 2 sigma_ij^2 / nu` and
/// `E[s_ij^2] = sigma_ij^2 (1 + 1/nu) + sigma_ii sigma_jj / nu`; solving for
/// the target yields the unbiased combination below.
pub fn wishart_variances(s: &SymMatrix, n: usize, estimator: VarianceEstimator) -> Result<SymMatrix> {
    let (c1, c2, nu) = match estimator {
        VarianceEstimator::Unbiased => {
            if n < 3 {
                return Err(Error::domain(format!(
                    "unbiased Wishart variance needs n >= 3, got {n}"
                )));
            }
            let nu = (n - 1) as f64;
            let den = (nu + 2.0) * (nu - 1.0);
            (nu * nu / den, nu * (nu - 2.0) / den, nu)
        }
        VarianceEstimator::PlugIn => {
            if n < 2 {
                return Err(Error::domain(format!("variance estimate needs n >= 2, got {n}")));
            }
            (1.0, 1.0, (n - 1) as f64)
        }
    };
    Ok(s.map(|i, j, v| (c1 * s.get(i, i) * s.get(j, j) + c2 * v * v) / nu))
}

fn linear_family_check(spec: &EstimatorSpec, method: Method) -> Result<()> {
    if spec.family().is_linear() {
        Ok(())
    } else {
        Err(Error::UnsupportedFamily {
            family: spec.family(),
            method,
        })
    }
}

/// Closed-form penalty `2 sum_ij w_ij Var_hat(s_ij)` for banding/tapering.
pub fn sure_penalty(spec: &EstimatorSpec, data: &Dataset) -> Result<Vec<f64>> {
    linear_family_check(spec, Method::Sure)?;
    spec.check_dim(data.p())?;
    let v = wishart_variances(&sample_cov(data)?, data.n(), VarianceEstimator::Unbiased)?;
    spec.grid()
        .iter()
        .map(|&l| {
            let w = linear_weights(spec.family(), data.p(), as_bandwidth(l)?).expect("linear family has weights");
            Ok(2.0 * weighted_double_sum(&w, &v))
        })
        .collect()
}

/// `sum_ij a_ij b_ij` over the full matrix.
fn weighted_double_sum(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let p = a.dim();
    let mut total = 0.0;
    let mut k = 0;
    let (a, b) = (a.packed(), b.packed());
    for i in 0..p {
        for j in 0..=i {
            let t = a[k] * b[k];
            total += if i == j { t } else { 2.0 * t };
            k += 1;
        }
    }
    total
}

/// SURE selection: argmin of apparent error plus the closed-form penalty.
pub fn sure_select(spec: &EstimatorSpec, data: &Dataset) -> Result<SelectionResult> {
    let penalty = sure_penalty(spec, data)?;
    let apparent = apparent_errors(spec, &sample_cov(data)?)?;
    let scores = apparent.iter().zip(&penalty).map(|(a, p)| a + p).collect();
    SelectionResult::from_scores(SelectionRule::sure(), spec.grid(), scores)
}

/// Estimate of the `lambda`-free term `sum_ij Var(s_ij)` of the risk.
pub fn frobenius_constant(data: &Dataset) -> Result<f64> {
    let v = wishart_variances(&sample_cov(data)?, data.n(), VarianceEstimator::Unbiased)?;
    Ok(full_sum(&v))
}

/// `sum_ij m_ij` over the full matrix.
fn full_sum(m: &SymMatrix) -> f64 {
    m.iter_lower().map(|(i, j, v)| if i == j { v } else { 2.0 * v }).sum()
}
