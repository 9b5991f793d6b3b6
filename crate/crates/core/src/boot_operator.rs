//! Operator-norm risk approximation for banding and tapering.
//!
//! The operator risk is `E l_max(Gamma)` with
//! `Gamma = (Sigma_hat - Sigma)(Sigma_hat - Sigma)^T`. Expanding the leading
//! eigenvalue of `Gamma = Gamma* + Delta` around its mean `Gamma*` to second
//! order gives
//!
//! ```text
//! E l_max(Gamma) ~ l1* + E[b1*^T Delta Pi Delta b1*],
//! Pi = sum_{j>=2} b_j* b_j*^T / (l1* - l_j*)
//! ```
//!
//! `Gamma*` is estimated without bias from the data, and the correction is
//! averaged over parametric bootstrap samples.

use crate::boot_frobenius::{ultimate_stage_lambda, BootModel};
use crate::dataset::Dataset;
use crate::error::{Error, Method, Result};
use crate::estimators::{apply, as_bandwidth, linear_weights, sample_cov, EstimatorSpec};
use crate::linalg::{eigen_decompose, eigenvalues, EigenSystem, SymMatrix};
use crate::rng::RngStream;
use crate::selection::{SelectionResult, SelectionRule};

fn centered(data: &Dataset) -> Vec<f64> {
    let mean = data.mean();
    let mut c = Vec::with_capacity(data.n() * data.p());
    for row in data.rows() {
        c.extend(row.iter().zip(&mean).map(|(x, m)| x - m));
    }
    c
}

/// Leave-one-out estimate of the product `sigma_kl sigma_k'l'`:
///
/// ```text
/// 1/(n-1) sum_i (X_ik - Xbar_k)(X_il - Xbar_l) S^(-i)_k'l'
/// ```
///
/// where `S^(-i)` is the sample covariance of the other `n - 1` rows. With
/// `c` the data centred at the full mean and `C = c^T c`, removing row `i`
/// downdates the centred Gram matrix by `n/(n-1) c_i c_i^T`, so the sum
/// collapses to
///
/// ```text
/// [C_kl C_k'l' - n/(n-1) sum_i c_ik c_il c_ik' c_il'] / ((n-1)(n-2)).
/// ```
pub fn product_moment_estimate(data: &Dataset, k: usize, l: usize, k2: usize, l2: usize) -> Result<f64> {
    let (n, p) = (data.n(), data.p());
    if n < 3 {
        return Err(Error::domain(format!("product moment estimate needs n >= 3, got {n}")));
    }
    if let Some(&bad) = [k, l, k2, l2].iter().find(|&&i| i >= p) {
        return Err(Error::domain(format!("index {bad} out of range for p = {p}")));
    }
    let c = centered(data);
    let (mut ckl, mut ck2l2, mut fourth) = (0.0, 0.0, 0.0);
    for row in c.chunks_exact(p) {
        let a = row[k] * row[l];
        let b = row[k2] * row[l2];
        ckl += a;
        ck2l2 += b;
        fourth += a * b;
    }
    let nf = n as f64;
    Ok((ckl * ck2l2 - nf / (nf - 1.0) * fourth) / ((nf - 1.0) * (nf - 2.0)))
}

/// Sufficient statistics for every product estimate the `Gamma*` formula
/// needs: the centred Gram matrix and, for each `j`, the packed matrix
/// `T_j[k][l] = sum_i c_ij^2 c_ik c_il`.
#[derive(Debug, Clone)]
pub struct ProductMoments {
    n: usize,
    p: usize,
    gram: SymMatrix,
    fourth: Vec<SymMatrix>,
}

impl ProductMoments {
    pub fn new(data: &Dataset) -> Result<Self> {
        let (n, p) = (data.n(), data.p());
        if n < 3 {
            return Err(Error::domain(format!("product moment estimate needs n >= 3, got {n}")));
        }
        let c = centered(data);
        let len = p * (p + 1) / 2;
        // packed outer products of each centred row
        let mut outer = vec![0.0; n * len];
        for (row, o) in c.chunks_exact(p).zip(outer.chunks_exact_mut(len)) {
            let mut t = 0;
            for k in 0..p {
                for l in 0..=k {
                    o[t] = row[k] * row[l];
                    t += 1;
                }
            }
        }
        let mut gram = vec![0.0; len];
        for o in outer.chunks_exact(len) {
            for (g, v) in gram.iter_mut().zip(o) {
                *g += v;
            }
        }
        let fourth = (0..p)
            .map(|j| {
                let mut t = vec![0.0; len];
                for (row, o) in c.chunks_exact(p).zip(outer.chunks_exact(len)) {
                    let a = row[j] * row[j];
                    for (ti, v) in t.iter_mut().zip(o) {
                        *ti += a * v;
                    }
                }
                SymMatrix::from_packed(p, t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            p,
            gram: SymMatrix::from_packed(p, gram)?,
            fourth,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Estimate of `sigma_jj sigma_kl`.
    #[inline]
    pub fn diag_product(&self, j: usize, k: usize, l: usize) -> f64 {
        self.combine(self.gram.get(j, j) * self.gram.get(k, l), self.fourth[j].get(k, l))
    }

    /// Estimate of `sigma_kj sigma_lj`.
    #[inline]
    pub fn column_product(&self, j: usize, k: usize, l: usize) -> f64 {
        self.combine(self.gram.get(k, j) * self.gram.get(l, j), self.fourth[j].get(k, l))
    }

    #[inline]
    fn combine(&self, gram_product: f64, fourth: f64) -> f64 {
        let n = self.n as f64;
        (gram_product - n / (n - 1.0) * fourth) / ((n - 1.0) * (n - 2.0))
    }
}

/// Estimate of `Gamma* = E[(Sigma_hat - Sigma)(Sigma_hat - Sigma)^T]` at one bandwidth.
#[derive(Debug, Clone)]
pub struct GammaStar {
    pub matrix: SymMatrix,
    pub eigen: EigenSystem,
    pub lambda: f64,
    /// Largest `|g_kl - g_lk|` of the assembled matrix before symmetrizing.
    pub asymmetry: f64,
}

fn require_linear(spec: &EstimatorSpec, method: Method) -> Result<()> {
    if spec.family().is_linear() {
        Ok(())
    } else {
        Err(Error::UnsupportedFamily {
            family: spec.family(),
            method,
        })
    }
}

/// Unbiased estimate of `Gamma*` for `Sigma_hat = W o S` with `S` the sample
/// covariance:
///
/// ```text
/// Gamma*_kl = sum_j w_kj w_lj (sigma_jj sigma_kl + sigma_kj sigma_lj) / (n-1)
///           + (w_kj - 1)(w_lj - 1) sigma_kj sigma_lj
/// ```
///
/// with each product of two `sigma` entries replaced by its leave-one-out
/// estimate.
pub fn gamma_star_estimate(spec: &EstimatorSpec, data: &Dataset, lambda: f64) -> Result<GammaStar> {
    require_linear(spec, Method::GammaStar)?;
    let moments = ProductMoments::new(data)?;
    gamma_star_from_moments(spec, &moments, lambda)
}

pub fn gamma_star_from_moments(spec: &EstimatorSpec, moments: &ProductMoments, lambda: f64) -> Result<GammaStar> {
    require_linear(spec, Method::GammaStar)?;
    let p = moments.dim();
    let bandwidth = as_bandwidth(lambda)?;
    if bandwidth > p - 1 {
        return Err(Error::domain(format!(
            "bandwidth {bandwidth} out of range [0, {}]",
            p - 1
        )));
    }
    let w = linear_weights(spec.family(), p, bandwidth).expect("linear family has weights");
    let nu = (moments.n - 1) as f64;
    let mut dense = vec![0.0; p * p];
    for k in 0..p {
        for l in 0..p {
            let mut g = 0.0;
            for j in 0..p {
                let (wk, wl) = (w.get(k, j), w.get(l, j));
                let col = moments.column_product(j, k, l);
                if wk != 0.0 && wl != 0.0 {
                    g += wk * wl * (moments.diag_product(j, k, l) + col) / nu;
                }
                g += (wk - 1.0) * (wl - 1.0) * col;
            }
            dense[k * p + l] = g;
        }
    }
    let mut asymmetry: f64 = 0.0;
    for k in 0..p {
        for l in 0..k {
            asymmetry = asymmetry.max((dense[k * p + l] - dense[l * p + k]).abs());
        }
    }
    let matrix = SymMatrix::symmetrize(p, &dense);
    let eigen = eigen_decompose(&matrix)?;
    Ok(GammaStar {
        matrix,
        eigen,
        lambda,
        asymmetry,
    })
}

/// `Pi = sum_{j>=2} b_j b_j^T / max(l_1 - l_j, eps)` with
/// `eps = 1e-6 max(l_1, 1)`.
#[derive(Debug, Clone)]
pub struct SpectralProjector {
    pub matrix: SymMatrix,
    pub leading_value: f64,
    pub leading_vector: Vec<f64>,
    /// Smallest gap `l_1 - l_2` before flooring.
    pub gap: f64,
}

/// Floor applied to eigenvalue gaps in the projector.
pub fn gap_floor(leading: f64) -> f64 {
    1e-6 * leading.max(1.0)
}

impl SpectralProjector {
    pub fn new(eigen: &EigenSystem) -> Self {
        let p = eigen.dim();
        let l1 = eigen.values[0];
        let floor = gap_floor(l1);
        let mut matrix = SymMatrix::zeros(p);
        {
            let data = matrix.packed_mut();
            for (l, v) in eigen.values.iter().zip(&eigen.vectors).skip(1) {
                let w = 1.0 / (l1 - l).max(floor);
                let mut t = 0;
                for i in 0..p {
                    let wi = w * v[i];
                    for vj in &v[..=i] {
                        data[t] += wi * vj;
                        t += 1;
                    }
                }
            }
        }
        Self {
            matrix,
            leading_value: l1,
            leading_vector: eigen.vectors[0].clone(),
            gap: if p > 1 { l1 - eigen.values[1] } else { f64::INFINITY },
        }
    }
}

/// One point of the operator risk curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorRiskPoint {
    pub lambda: f64,
    /// Leading eigenvalue of the estimated `Gamma*`.
    pub leading: f64,
    /// Bootstrap mean of `b1^T Delta Pi Delta b1`.
    pub correction: f64,
}

impl OperatorRiskPoint {
    pub fn risk(&self) -> f64 {
        self.leading + self.correction
    }
}

/// Operator risk estimates for every grid point.
///
/// `Gamma*`, its leading eigenpair and `Pi` come from `data`; each bootstrap
/// sample `b` (from `rng.child(b)`, shared across the grid) contributes
/// `u^T Pi u` with `u = D (D b1) - Gamma* b1` and
/// `D = Sigma_hat^b(lambda) - model.cov`.
pub fn operator_risk_curve(
    spec: &EstimatorSpec,
    data: &Dataset,
    resamples: usize,
    model: &BootModel,
    rng: &RngStream,
) -> Result<Vec<OperatorRiskPoint>> {
    require_linear(spec, Method::OperatorBootstrap)?;
    if resamples < 2 {
        return Err(Error::domain(format!(
            "bootstrap needs at least 2 resamples, got {resamples}"
        )));
    }
    spec.check_dim(data.p())?;
    if model.cov.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: model.cov.dim(),
        });
    }
    let moments = ProductMoments::new(data)?;
    let parts = spec
        .grid()
        .iter()
        .map(|&l| {
            let gamma = gamma_star_from_moments(spec, &moments, l)?;
            let projector = SpectralProjector::new(&gamma.eigen);
            let g_b1 = gamma.matrix.mul_vec(&projector.leading_vector);
            Ok((projector, g_b1))
        })
        .collect::<Result<Vec<_>>>()?;

    let sampler = model.sampler()?;
    let mut sums = vec![0.0; parts.len()];
    for b in 0..resamples {
        let s = sample_cov(&sampler.sample(data.n(), &rng.child(b as u64))?)?;
        for ((projector, g_b1), (sum, &lambda)) in parts.iter().zip(sums.iter_mut().zip(spec.grid())) {
            let d = apply(spec, &s, lambda)?.sub(&model.cov)?;
            let mut u = d.mul_vec(&d.mul_vec(&projector.leading_vector));
            for (ui, gi) in u.iter_mut().zip(g_b1) {
                *ui -= gi;
            }
            *sum += projector.matrix.quadratic_form(&u);
        }
    }
    Ok(parts
        .iter()
        .zip(spec.grid())
        .zip(sums)
        .map(|(((projector, _), &lambda), sum)| OperatorRiskPoint {
            lambda,
            leading: projector.leading_value,
            correction: sum / resamples as f64,
        })
        .collect())
}

/// Operator risk estimate at a single `lambda`.
pub fn operator_risk_estimate(
    spec: &EstimatorSpec,
    data: &Dataset,
    lambda: f64,
    resamples: usize,
    model: &BootModel,
    rng: &RngStream,
) -> Result<f64> {
    let single = spec.with_grid(vec![lambda])?;
    Ok(operator_risk_curve(&single, data, resamples, model, rng)?[0].risk())
}

/// Operator-norm bootstrap selection. The bootstrap model is the intermediate
/// model at the Frobenius ultimate-model choice `lambda0`; the correction
/// term is averaged over resamples drawn from `rng.child(2)`.
pub fn boot_operator_select(
    spec: &EstimatorSpec,
    data: &Dataset,
    resamples: usize,
    rng: &RngStream,
) -> Result<SelectionResult> {
    require_linear(spec, Method::OperatorBootstrap)?;
    let rule = SelectionRule::boot_operator(resamples)?;
    let lambda0 = ultimate_stage_lambda(spec, data, resamples, rng)?;
    let model = BootModel::intermediate(spec, data, lambda0)?;
    let curve = operator_risk_curve(spec, data, resamples, &model, &rng.child(2))?;
    let scores = curve.iter().map(OperatorRiskPoint::risk).collect();
    let mut result = SelectionResult::from_scores(rule, spec.grid(), scores)?;
    result.stage_one_lambda = Some(lambda0);
    result.psd_clip_mass = Some(model.clipped_mass);
    Ok(result)
}

/// Comparison of `l_max(Gamma + t Delta)` with its second-order expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondVariationReport {
    pub gap: f64,
    /// Set when `l_1 - l_2` is at or below the gap floor; no entries then.
    pub degenerate: bool,
    pub entries: Vec<ExpansionError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionError {
    pub perturbation: usize,
    pub t: f64,
    pub exact: f64,
    pub expansion: f64,
}

impl ExpansionError {
    pub fn error(&self) -> f64 {
        (self.exact - self.expansion).abs()
    }
}

impl SecondVariationReport {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(ExpansionError::error).fold(0.0, f64::max)
    }
}

/// Evaluates `l_1 + t b1^T Delta b1 + t^2 b1^T Delta Pi Delta b1` against the
/// exact leading eigenvalue for every perturbation and scale.
pub fn second_variation_check(
    gamma: &SymMatrix,
    perturbations: &[SymMatrix],
    scales: &[f64],
) -> Result<SecondVariationReport> {
    let eigen = eigen_decompose(gamma)?;
    let projector = SpectralProjector::new(&eigen);
    let gap = projector.gap;
    if gap <= gap_floor(projector.leading_value) {
        return Ok(SecondVariationReport {
            gap,
            degenerate: true,
            entries: Vec::new(),
        });
    }
    let b1 = &projector.leading_vector;
    let mut entries = Vec::new();
    for (idx, delta) in perturbations.iter().enumerate() {
        delta.check_same_dim(gamma)?;
        let db1 = delta.mul_vec(b1);
        let first: f64 = b1.iter().zip(&db1).map(|(a, b)| a * b).sum();
        let second = projector.matrix.quadratic_form(&db1);
        for &t in scales {
            let exact = eigenvalues(&gamma.add_scaled(delta, t)?)?[0];
            entries.push(ExpansionError {
                perturbation: idx,
                t,
                exact,
                expansion: projector.leading_value + t * first + t * t * second,
            });
        }
    }
    Ok(SecondVariationReport {
        gap,
        degenerate: false,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{Family, GridOptions};
    use crate::linalg::sample_mvn;

    fn gaussian(p: usize, n: usize, seed: u64) -> Dataset {
        let cov = SymMatrix::from_fn(p, |i, j| 0.5f64.powi((i - j) as i32));
        sample_mvn(&vec![0.0; p], &cov, n, &RngStream::new(seed, 0)).unwrap()
    }

    // Direct transcription of the per-row leave-one-out formula.
    fn naive_product(data: &Dataset, k: usize, l: usize, k2: usize, l2: usize) -> f64 {
        let n = data.n();
        let mean = data.mean();
        let mut total = 0.0;
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let mut m = [0.0; 2];
            for &r in &others {
                m[0] += data.row(r)[k2];
                m[1] += data.row(r)[l2];
            }
            m[0] /= (n - 1) as f64;
            m[1] /= (n - 1) as f64;
            let loo: f64 = others
                .iter()
                .map(|&r| (data.row(r)[k2] - m[0]) * (data.row(r)[l2] - m[1]))
                .sum::<f64>()
                / (n - 2) as f64;
            total += (data.row(i)[k] - mean[k]) * (data.row(i)[l] - mean[l]) * loo;
        }
        total / (n - 1) as f64
    }

    #[test]
    fn closed_form_matches_per_row_sum() {
        let data = gaussian(4, 9, 2);
        for (k, l, k2, l2) in [(0, 0, 0, 0), (0, 1, 2, 3), (3, 3, 1, 2), (2, 0, 2, 0)] {
            let fast = product_moment_estimate(&data, k, l, k2, l2).unwrap();
            let slow = naive_product(&data, k, l, k2, l2);
            assert!((fast - slow).abs() < 1e-12 * slow.abs().max(1.0), "{fast} vs {slow}");
        }
    }

    #[test]
    fn product_estimate_basics() {
        let flat = Dataset::from_rows(&vec![vec![2.0, 3.0]; 5]).unwrap();
        assert_eq!(product_moment_estimate(&flat, 0, 1, 1, 1).unwrap(), 0.0);
        let data = gaussian(3, 7, 1);
        let a = product_moment_estimate(&data, 0, 2, 1, 1).unwrap();
        let b = product_moment_estimate(&data, 2, 0, 1, 1).unwrap();
        assert_eq!(a, b);
        let two = Dataset::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(product_moment_estimate(&two, 0, 0, 0, 0).is_err());
    }

    #[test]
    fn moments_match_single_estimates() {
        let data = gaussian(4, 8, 5);
        let m = ProductMoments::new(&data).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let a = product_moment_estimate(&data, j, j, k, l).unwrap();
                    let b = product_moment_estimate(&data, k, j, l, j).unwrap();
                    assert!((m.diag_product(j, k, l) - a).abs() < 1e-12);
                    assert!((m.column_product(j, k, l) - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_band_reduces_to_variance_term() {
        let data = gaussian(4, 12, 8);
        let spec = EstimatorSpec::new(Family::Band, vec![3.0]).unwrap();
        let g = gamma_star_estimate(&spec, &data, 3.0).unwrap();
        let nu = 11.0;
        for k in 0..4 {
            for l in 0..4 {
                let mut expected = 0.0;
                for j in 0..4 {
                    expected += (product_moment_estimate(&data, j, j, k, l).unwrap()
                        + product_moment_estimate(&data, k, j, l, j).unwrap())
                        / nu;
                }
                assert!((g.matrix.get(k, l) - expected).abs() < 1e-12 * expected.abs().max(1.0));
            }
        }
        assert!(g.asymmetry <= 1e-10 * g.matrix.max_abs());
    }

    #[test]
    fn gamma_star_is_homogeneous_of_degree_four() {
        let data = gaussian(5, 15, 3);
        let spec = EstimatorSpec::new(Family::Taper, vec![2.0]).unwrap();
        let g = gamma_star_estimate(&spec, &data, 2.0).unwrap().matrix;
        let g3 = gamma_star_estimate(&spec, &data.scaled(3.0), 2.0).unwrap().matrix;
        let diff = g.scale(81.0).sub(&g3).unwrap().max_abs();
        assert!(diff < 1e-10 * g3.max_abs(), "{diff}");
    }

    #[test]
    fn thresholding_is_unsupported() {
        let data = gaussian(3, 10, 0);
        let spec = EstimatorSpec::new(Family::Soft, vec![0.0]).unwrap();
        assert!(matches!(
            gamma_star_estimate(&spec, &data, 0.0),
            Err(Error::UnsupportedFamily {
                method: Method::GammaStar,
                ..
            })
        ));
        assert!(matches!(
            boot_operator_select(&spec, &data, 5, &RngStream::new(0, 0)),
            Err(Error::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn projector_annihilates_leading_vector_and_inverts_gaps() {
        let data = gaussian(6, 20, 4);
        let spec = EstimatorSpec::new(Family::Band, vec![2.0]).unwrap();
        let g = gamma_star_estimate(&spec, &data, 2.0).unwrap();
        let pi = SpectralProjector::new(&g.eigen);
        let zero = pi.matrix.mul_vec(&pi.leading_vector);
        assert!(zero.iter().all(|z| z.abs() < 1e-8 * pi.matrix.max_abs().max(1.0)));
        let l1 = g.eigen.values[0];
        for j in 1..6 {
            let bj = &g.eigen.vectors[j];
            let lhs = pi.matrix.mul_vec(&g.matrix.mul_vec(bj));
            let c = g.eigen.values[j] / (l1 - g.eigen.values[j]);
            for (a, b) in lhs.iter().zip(bj) {
                assert!((a - c * b).abs() < 1e-6 * c.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_model_on_constant_data_gives_leading_value() {
        let data = Dataset::from_rows(&vec![vec![1.0, 2.0, 3.0]; 6]).unwrap();
        let spec = EstimatorSpec::new(Family::Band, vec![0.0, 1.0, 2.0]).unwrap();
        let model = BootModel::ultimate(&data).unwrap();
        let curve = operator_risk_curve(&spec, &data, 3, &model, &RngStream::new(1, 0)).unwrap();
        for pt in &curve {
            assert_eq!(pt.correction, 0.0);
            assert_eq!(pt.risk(), pt.leading);
        }
        let r = boot_operator_select(&spec, &data, 3, &RngStream::new(1, 0)).unwrap();
        assert_eq!(r.lambda, 0.0);
    }

    #[test]
    fn two_resamples_finite_and_deterministic() {
        let data = gaussian(5, 20, 6);
        let spec = EstimatorSpec::new(Family::Band, vec![1.0]).unwrap();
        let model = BootModel::ultimate(&data).unwrap();
        let rng = RngStream::new(4, 2);
        let a = operator_risk_estimate(&spec, &data, 1.0, 2, &model, &rng).unwrap();
        let b = operator_risk_estimate(&spec, &data, 1.0, 2, &model, &rng).unwrap();
        assert!(a.is_finite());
        assert_eq!(a, b);
        assert!(operator_risk_estimate(&spec, &data, 1.0, 1, &model, &rng).is_err());
    }

    #[test]
    fn single_point_matches_curve() {
        let data = gaussian(5, 20, 7);
        let spec = EstimatorSpec::default_for(Family::Taper, &data, &GridOptions::default()).unwrap();
        let model = BootModel::ultimate(&data).unwrap();
        let rng = RngStream::new(1, 1);
        let curve = operator_risk_curve(&spec, &data, 10, &model, &rng).unwrap();
        let one = operator_risk_estimate(&spec, &data, 2.0, 10, &model, &rng).unwrap();
        assert_eq!(curve[2].risk(), one);
    }

    #[test]
    fn one_point_grid_is_returned() {
        let data = gaussian(4, 15, 3);
        let spec = EstimatorSpec::new(Family::Taper, vec![2.0]).unwrap();
        let r = boot_operator_select(&spec, &data, 5, &RngStream::new(0, 0)).unwrap();
        assert_eq!(r.lambda, 2.0);
    }

    #[test]
    fn two_by_two_expansion() {
        let gamma = SymMatrix::from_diagonal(&[2.0, 1.0]);
        let delta = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = second_variation_check(&gamma, &[delta], &[0.1]).unwrap();
        let e = r.entries[0];
        assert!((e.expansion - 2.01).abs() < 1e-14);
        let exact = (3.0 + 1.04f64.sqrt()) / 2.0;
        assert!((e.exact - exact).abs() < 1e-13);
        assert!(e.error() > 5e-5 && e.error() < 2e-4);
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let gamma = SymMatrix::from_diagonal(&[3.0, 1.0, 0.5]);
        let r = second_variation_check(&gamma, &[SymMatrix::zeros(3)], &[0.5, 0.1]).unwrap();
        assert_eq!(r.max_error(), 0.0);
    }

    #[test]
    fn degenerate_gap_is_flagged() {
        let r = second_variation_check(&SymMatrix::identity(3), &[SymMatrix::identity(3)], &[0.1]).unwrap();
        assert!(r.degenerate);
        assert!(r.entries.is_empty());
    }
}
