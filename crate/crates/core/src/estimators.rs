//! Covariance estimators: the empirical and sample covariance, and the
//! hard-threshold, soft-threshold, banding and tapering regularizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{mean_of_rows, Dataset};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(alias = "hard-threshold")]
    Hard,
    #[serde(alias = "soft-threshold")]
    Soft,
    #[serde(alias = "banding")]
    Band,
    #[serde(alias = "tapering")]
    Taper,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Hard, Family::Soft, Family::Band, Family::Taper];

    /// Banding and tapering act through fixed weights `w_ij` on the input.
    pub fn is_linear(self) -> bool {
        matches!(self, Family::Band | Family::Taper)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Hard => "hard",
            Family::Soft => "soft",
            Family::Band => "band",
            Family::Taper => "taper",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" | "hard-threshold" => Ok(Family::Hard),
            "soft" | "soft-threshold" => Ok(Family::Soft),
            "band" | "banding" => Ok(Family::Band),
            "taper" | "tapering" => Ok(Family::Taper),
            other => Err(Error::domain(format!("unknown estimator family '{other}'"))),
        }
    }
}

/// An estimator family together with its candidate tuning values.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    family: Family,
    grid: Vec<f64>,
    preserve_diagonal: bool,
}

/// Controls the default tuning grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Number of equally spaced thresholds for hard/soft.
    pub threshold_points: usize,
    /// Largest bandwidth for banding/tapering; defaults to `min(p - 1, n)`.
    pub max_bandwidth: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            threshold_points: 50,
            max_bandwidth: None,
        }
    }
}

impl EstimatorSpec {
    /// The grid must be non-empty, finite, non-negative and strictly
    /// increasing; banding/tapering grids must hold integers.
    pub fn new(family: Family, grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::domain("tuning grid is empty"));
        }
        if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::domain("tuning grid values must be finite and non-negative"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("tuning grid must be strictly increasing"));
        }
        if family.is_linear() && grid.iter().any(|l| l.fract() != 0.0) {
            return Err(Error::domain(format!("{family} grid must contain integer bandwidths")));
        }
        Ok(Self {
            family,
            grid,
            preserve_diagonal: false,
        })
    }

    /// Default grid for `family` on `data`: `threshold_points` equally spaced
    /// thresholds from 0 to the largest off-diagonal sample covariance
    /// magnitude, or every bandwidth `0..=min(p - 1, n)`.
    pub fn default_for(family: Family, data: &Dataset, options: &GridOptions) -> Result<Self> {
        let grid = match family {
            Family::Hard | Family::Soft => {
                let top = if data.n() >= 2 {
                    sample_cov(data)?.max_abs_off_diagonal()
                } else {
                    0.0
                };
                let points = options.threshold_points.max(2);
                if top > 0.0 {
                    (0..points).map(|k| top * k as f64 / (points - 1) as f64).collect()
                } else {
                    vec![0.0]
                }
            }
            Family::Band | Family::Taper => {
                let mut top = (data.p() - 1).min(data.n());
                if let Some(cap) = options.max_bandwidth {
                    top = top.min(cap);
                }
                (0..=top).map(|k| k as f64).collect()
            }
        };
        Self::new(family, grid)
    }

    /// Keep the diagonal untouched under hard/soft thresholding.
    pub fn with_preserve_diagonal(mut self, preserve: bool) -> Self {
        self.preserve_diagonal = preserve;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn preserve_diagonal(&self) -> bool {
        self.preserve_diagonal
    }

    /// Same family and options, different grid.
    pub fn with_grid(&self, grid: Vec<f64>) -> Result<Self> {
        Ok(Self::new(self.family, grid)?.with_preserve_diagonal(self.preserve_diagonal))
    }

    /// Errors if the grid holds bandwidths outside `[0, p - 1]`.
    pub fn check_dim(&self, p: usize) -> Result<()> {
        if self.family.is_linear() {
            if let Some(&top) = self.grid.last() {
                if top > (p - 1) as f64 {
                    return Err(Error::domain(format!("bandwidth {top} exceeds p - 1 = {}", p - 1)));
                }
            }
        }
        Ok(())
    }
}

/// Trapezoidal tapering weights for bandwidth `lambda`:
/// 1 on `|i-j| <= lambda/2`, `2 - 2|i-j|/lambda` up to `|i-j| < lambda`, 0 beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaperWeights {
    pub p: usize,
    pub lambda: usize,
}

impl TaperWeights {
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        taper_weight(self.lambda, i.abs_diff(j))
    }

    pub fn matrix(&self) -> SymMatrix {
        SymMatrix::from_fn(self.p, |i, j| self.weight(i, j))
    }
}

#[inline]
fn taper_weight(lambda: usize, offset: usize) -> f64 {
    let (l, d) = (lambda as f64, offset as f64);
    if d <= l / 2.0 {
        1.0
    } else if d < l {
        // d < l implies l > 0
        2.0 - 2.0 * d / l
    } else {
        0.0
    }
}

#[inline]
fn band_weight(lambda: usize, offset: usize) -> f64 {
    if offset <= lambda {
        1.0
    } else {
        0.0
    }
}

/// Weight matrix `W` with `estimate = W o input` for banding/tapering, `None` otherwise.
pub fn linear_weights(family: Family, p: usize, lambda: usize) -> Option<SymMatrix> {
    match family {
        Family::Band => Some(SymMatrix::from_fn(p, |i, j| band_weight(lambda, i - j))),
        Family::Taper => Some(TaperWeights { p, lambda }.matrix()),
        Family::Hard | Family::Soft => None,
    }
}

/// Empirical covariance with divisor `n`.
pub fn empirical_cov(data: &Dataset) -> SymMatrix {
    let rows: Vec<usize> = (0..data.n()).collect();
    let (gram, n) = centered_gram(data, &rows);
    gram.scale(1.0 / n as f64)
}

/// Empirical covariance (divisor = number of rows) of a subset of rows.
pub fn empirical_cov_of(data: &Dataset, rows: &[usize]) -> Result<SymMatrix> {
    if rows.is_empty() {
        return Err(Error::domain("empirical covariance of zero rows"));
    }
    let (gram, n) = centered_gram(data, rows);
    Ok(gram.scale(1.0 / n as f64))
}

/// Sample covariance with divisor `n - 1`.
pub fn sample_cov(data: &Dataset) -> Result<SymMatrix> {
    let n = data.n();
    if n < 2 {
        return Err(Error::domain(format!("sample covariance needs n >= 2, got {n}")));
    }
    let rows: Vec<usize> = (0..n).collect();
    let (gram, _) = centered_gram(data, &rows);
    Ok(gram.scale(1.0 / (n - 1) as f64))
}

/// `sum_r (x_r - xbar)(x_r - xbar)^T` over `rows`, with the mean taken over `rows`.
pub(crate) fn centered_gram(data: &Dataset, rows: &[usize]) -> (SymMatrix, usize) {
    let p = data.p();
    let mean = mean_of_rows(data, rows.iter().copied());
    let mut gram = SymMatrix::zeros(p);
    let acc = gram.packed_mut();
    let mut c = vec![0.0; p];
    for &r in rows {
        for ((ci, x), m) in c.iter_mut().zip(data.row(r)).zip(&mean) {
            *ci = x - m;
        }
        let mut k = 0;
        for i in 0..p {
            let ci = c[i];
            let slot = &mut acc[k..k + i + 1];
            for (a, cj) in slot.iter_mut().zip(&c[..=i]) {
                *a += ci * cj;
            }
            k += i + 1;
        }
    }
    (gram, rows.len())
}

/// `s_ij 1(|s_ij| >= lambda)` on every entry, diagonal included.
pub fn hard_threshold(s: &SymMatrix, lambda: f64) -> SymMatrix {
    s.map(|_, _, v| if v.abs() >= lambda { v } else { 0.0 })
}

/// `sign(s_ij) (|s_ij| - lambda)_+` on every entry, diagonal included.
pub fn soft_threshold(s: &SymMatrix, lambda: f64) -> SymMatrix {
    s.map(|_, _, v| v.signum() * (v.abs() - lambda).max(0.0))
}

/// `s_ij 1(|i - j| <= lambda)`.
pub fn band(s: &SymMatrix, lambda: usize) -> Result<SymMatrix> {
    check_bandwidth(s.dim(), lambda)?;
    Ok(s.map(|i, j, v| v * band_weight(lambda, i - j)))
}

/// `w_ij s_ij` with trapezoidal weights.
pub fn taper(s: &SymMatrix, lambda: usize) -> Result<SymMatrix> {
    check_bandwidth(s.dim(), lambda)?;
    Ok(s.map(|i, j, v| v * taper_weight(lambda, i - j)))
}

fn check_bandwidth(p: usize, lambda: usize) -> Result<()> {
    if lambda > p - 1 {
        return Err(Error::domain(format!("bandwidth {lambda} out of range [0, {}]", p - 1)));
    }
    Ok(())
}

/// Bandwidth from a real-valued tuning parameter.
pub(crate) fn as_bandwidth(lambda: f64) -> Result<usize> {
    if lambda < 0.0 || lambda.fract() != 0.0 || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "bandwidth must be a non-negative integer, got {lambda}"
        )));
    }
    Ok(lambda as usize)
}

/// Applies the family of `spec` to `s` at `lambda`.
pub fn apply(spec: &EstimatorSpec, s: &SymMatrix, lambda: f64) -> Result<SymMatrix> {
    match spec.family {
        Family::Hard | Family::Soft => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::domain(format!(
                    "threshold must be finite and >= 0, got {lambda}"
                )));
            }
            let f = if spec.family == Family::Hard {
                hard_threshold
            } else {
                soft_threshold
            };
            let mut out = f(s, lambda);
            if spec.preserve_diagonal {
                for i in 0..s.dim() {
                    out.set(i, i, s.get(i, i));
                }
            }
            Ok(out)
        }
        Family::Band => band(s, as_bandwidth(lambda)?),
        Family::Taper => taper(s, as_bandwidth(lambda)?),
    }
}
