use super::sym::SymMatrix;
use crate::error::{Error, Result};

/// Relative tolerance for accepting tiny negative or zero pivots as rank deficiency.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Rank-revealing factor `M ~= F F^T` of a positive semi-definite matrix.
///
/// `F` is `p x rank`, row-major, rows in the original variable order.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    p: usize,
    rank: usize,
    factor: Vec<f64>,
}

impl PivotedCholesky {
    /// Factors `m` with diagonal pivoting. Pivots below
    /// `-PSD_TOLERANCE * max_i m_ii` make the matrix indefinite; once the
    /// largest remaining pivot is within that tolerance of zero the
    /// remaining Schur complement is treated as zero.
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let p = m.dim();
        let max_diag = m.diagonal().into_iter().fold(0.0, f64::max);
        let tol = PSD_TOLERANCE * max_diag;
        let mut a = m.to_dense();
        let mut perm: Vec<usize> = (0..p).collect();
        // columns of the permuted lower factor
        let mut cols: Vec<Vec<f64>> = Vec::new();

        for k in 0..p {
            let (q, &piv) = (k..p)
                .map(|i| (i, &a[i * p + i]))
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("non-empty range");
            if piv <= tol {
                // every remaining diagonal entry is at most `tol`
                for i in k..p {
                    let v = a[i * p + i];
                    if v < -tol {
                        return Err(Error::NotPositiveSemidefinite {
                            pivot: perm[i],
                            value: v,
                        });
                    }
                }
                // a PSD remainder has |a_ij| <= sqrt(a_ii a_jj) <= tol
                for i in k..p {
                    for j in k..i {
                        let v = a[i * p + j];
                        if v.abs() > 2.0 * tol {
                            return Err(Error::NotPositiveSemidefinite {
                                pivot: perm[i],
                                value: -v.abs(),
                            });
                        }
                    }
                }
                break;
            }
            if q != k {
                swap_sym(&mut a, p, k, q);
                perm.swap(k, q);
                for c in &mut cols {
                    c.swap(k, q);
                }
            }
            let root = piv.sqrt();
            let mut col = vec![0.0; p];
            col[k] = root;
            for i in k + 1..p {
                col[i] = a[i * p + k] / root;
            }
            for i in k + 1..p {
                let ci = col[i];
                if ci == 0.0 {
                    continue;
                }
                for j in k + 1..=i {
                    a[i * p + j] -= ci * col[j];
                }
            }
            // keep the upper triangle of the trailing block in sync
            for i in k + 1..p {
                for j in k + 1..i {
                    a[j * p + i] = a[i * p + j];
                }
            }
            cols.push(col);
        }

        let rank = cols.len();
        let mut factor = vec![0.0; p * rank];
        for (c, col) in cols.iter().enumerate() {
            for (row, &v) in col.iter().enumerate() {
                factor[perm[row] * rank + c] = v;
            }
        }
        Ok(Self { p, rank, factor })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Row `i` of the factor.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.factor[i * self.rank..(i + 1) * self.rank]
    }

    /// `F F^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.p, |i, j| {
            self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum()
        })
    }
}

fn swap_sym(a: &mut [f64], p: usize, k: usize, q: usize) {
    for c in 0..p {
        a.swap(k * p + c, q * p + c);
    }
    for r in 0..p {
        a.swap(r * p + k, r * p + q);
    }
}
