use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `n` observations of a `p`-dimensional variable, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::domain(format!("dataset must be non-empty, got {n}x{p}")));
        }
        if values.len() != n * p {
            return Err(Error::domain(format!(
                "expected {} values for {n}x{p} dataset, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value in row {}, column {}",
                bad / p + 1,
                bad % p + 1
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::domain(format!(
                "row {} has {} values, expected {p}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn mean(&self) -> Vec<f64> {
        mean_of_rows(self, 0..self.n)
    }

    /// Rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Dataset::new(idx.len(), self.p, values)
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> Dataset {
        Dataset {
            n: self.n,
            p: self.p,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Short hex digest of the exact bit pattern of the data.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update((self.p as u64).to_le_bytes());
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn mean_of_rows(data: &Dataset, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut mean = vec![0.0; data.p()];
    let mut count = 0usize;
    for i in rows {
        for (m, v) in mean.iter_mut().zip(data.row(i)) {
            *m += v;
        }
        count += 1;
    }
    let inv = 1.0 / count as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}
