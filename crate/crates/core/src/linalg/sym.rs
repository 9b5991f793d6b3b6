use std::fmt;

use crate::error::{Error, Result};

/// Dense symmetric matrix stored as its packed lower triangle.
///
/// Reads of `(i, j)` and `(j, i)` hit the same storage slot, so symmetry
/// holds exactly.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        assert!(p >= 1, "matrix dimension must be positive");
        Self {
            p,
            data: vec![0.0; p * (p + 1) / 2],
        }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_diagonal(&vec![1.0; p])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(p >= 1, "matrix dimension must be positive");
        let mut data = Vec::with_capacity(p * (p + 1) / 2);
        for i in 0..p {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { p, data }
    }

    /// Wraps a packed lower triangle (row by row, `(0,0), (1,0), (1,1), ...`).
    pub fn from_packed(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 || data.len() != p * (p + 1) / 2 {
            return Err(Error::domain(format!(
                "packed storage of length {} does not describe a {p}x{p} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite entry at packed index {bad}")));
        }
        Ok(Self { p, data })
    }

    /// From row vectors; the input must be square, finite and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::domain("empty matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::domain(format!(
                    "row {} has {} entries, expected {p}",
                    i + 1,
                    row.len()
                )));
            }
        }
        Self::from_dense(p, &rows.concat())
    }

    /// From a row-major `p x p` buffer; the input must be finite and exactly symmetric.
    pub fn from_dense(p: usize, dense: &[f64]) -> Result<Self> {
        if p == 0 || dense.len() != p * p {
            return Err(Error::domain(format!(
                "dense buffer of length {} is not {p}x{p}",
                dense.len()
            )));
        }
        for i in 0..p {
            for j in 0..i {
                let (a, b) = (dense[i * p + j], dense[j * p + i]);
                if a != b {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({}, {}): {a} vs {b}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(bad) = dense.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at ({}, {})",
                bad / p + 1,
                bad % p + 1
            )));
        }
        Ok(Self::from_fn(p, |i, j| dense[i * p + j]))
    }

    /// Symmetrizes a row-major buffer as `(A + A^T) / 2`.
    pub fn symmetrize(p: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), p * p);
        Self::from_fn(p, |i, j| 0.5 * (dense[i * p + j] + dense[j * p + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[packed(i, j)] = value;
    }

    /// The packed lower triangle.
    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, i)).collect()
    }

    /// `(i, j, value)` over the lower triangle, row by row.
    pub fn iter_lower(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.p)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .zip(self.data.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    /// Entry-wise map over the lower triangle.
    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let data = self.iter_lower().map(|(i, j, v)| f(i, j, v)).collect();
        Self { p: self.p, data }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for (i, j, v) in self.iter_lower() {
            out[i * p + j] = v;
            out[j * p + i] = v;
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: other.p,
            });
        }
        Ok(())
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { p: self.p, data })
    }

    pub fn add_scaled(&self, other: &SymMatrix, t: f64) -> Result<SymMatrix> {
        self.check_same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + t * b).collect();
        Ok(Self { p: self.p, data })
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        Self {
            p: self.p,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.p);
        let mut y = vec![0.0; self.p];
        for (i, j, v) in self.iter_lower() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|m_ij|` with `i != j`, zero for `p = 1`.
    pub fn max_abs_off_diagonal(&self) -> f64 {
        self.iter_lower()
            .filter(|&(i, j, _)| i != j)
            .fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    /// Entries with `(i, j)` and `(j, i)` counted separately, as in the full double sum.
    pub fn sum_squares(&self) -> f64 {
        self.iter_lower()
            .map(|(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix")
            .field("p", &self.p)
            .field("rows", &self.to_rows())
            .finish()
    }
}

/// Squared Frobenius distance `||a - b||_F^2` without materializing the difference.
pub fn frobenius_distance_sq(a: &SymMatrix, b: &SymMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    let p = a.dim();
    let (mut diag, mut off) = (0.0, 0.0);
    let (da, db) = (a.packed(), b.packed());
    let mut k = 0;
    for i in 0..p {
        for _ in 0..i {
            let d = da[k] - db[k];
            off += d * d;
            k += 1;
        }
        let d = da[k] - db[k];
        diag += d * d;
        k += 1;
    }
    diag + 2.0 * off
}

/// `sqrt(sum_i sum_j m_ij^2)`.
pub fn frobenius_norm(m: &SymMatrix) -> f64 {
    m.sum_squares().sqrt()
}
