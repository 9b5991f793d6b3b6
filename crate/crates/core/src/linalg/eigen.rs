//! Dense symmetric eigen-solver.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration (the classical `tred2`/`tql2` pair, restated for row-major
//! storage). The values-only path skips accumulating the orthogonal factor
//! and is what the operator norm uses.

use super::sym::SymMatrix;
use crate::error::{Error, Result};

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// `vectors[j]` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `sum_j l_j b_j b_j^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    /// `sum_j f(l_j) b_j b_j^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let p = self.dim();
        let mut out = SymMatrix::zeros(p);
        for (l, v) in self.values.iter().zip(&self.vectors) {
            let w = f(*l);
            if w == 0.0 {
                continue;
            }
            let data = out.packed_mut();
            let mut k = 0;
            for i in 0..p {
                let wi = w * v[i];
                for vj in &v[..=i] {
                    data[k] += wi * vj;
                    k += 1;
                }
            }
        }
        out
    }
}

/// Full eigen-decomposition, eigenvalues sorted descending.
pub fn eigen_decompose(m: &SymMatrix) -> Result<EigenSystem> {
    let p = m.dim();
    let mut a = m.to_dense();
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; p];
    let mut q = tridiagonalize(&mut a, p, &mut d, &mut e, true);
    // rows of `q` become eigenvectors
    transpose_in_place(&mut q, p);
    tql(&mut d, &mut e, Some(&mut q), p)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = order.iter().map(|&j| q[j * p..(j + 1) * p].to_vec()).collect();
    Ok(EigenSystem { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let p = m.dim();
    let mut a = m.to_dense();
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; p];
    tridiagonalize(&mut a, p, &mut d, &mut e, false);
    tql(&mut d, &mut e, None, p)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Spectral norm `max_j |l_j|`.
pub fn operator_norm(m: &SymMatrix) -> Result<f64> {
    let values = eigenvalues(m)?;
    Ok(values[0].abs().max(values[values.len() - 1].abs()))
}

/// Projects onto the PSD cone by zeroing negative eigenvalues.
///
/// Returns the repaired matrix and the clipped mass `sum_j max(-l_j, 0)`.
/// Matrices that are already PSD are returned unchanged.
pub fn clip_to_psd(m: &SymMatrix) -> Result<(SymMatrix, f64)> {
    let eig = eigen_decompose(m)?;
    let clipped: f64 = eig.values.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    if clipped == 0.0 {
        return Ok((m.clone(), 0.0));
    }
    Ok((eig.reconstruct_with(|l| l.max(0.0)), clipped))
}

fn transpose_in_place(a: &mut [f64], p: usize) {
    for i in 0..p {
        for j in 0..i {
            a.swap(i * p + j, j * p + i);
        }
    }
}

/// Householder tridiagonalization of the row-major symmetric `a` (destroyed).
///
/// On return `d` holds the diagonal and `e[k]` couples `k` and `k + 1`
/// (`e[p-1] = 0`). With `want_q` the orthogonal `Q` with `A = Q T Q^T` is
/// returned row-major, otherwise an empty vector.
fn tridiagonalize(a: &mut [f64], p: usize, d: &mut [f64], e: &mut [f64], want_q: bool) -> Vec<f64> {
    let mut reflectors: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    let mut v = vec![0.0; p];
    let mut w = vec![0.0; p];

    for k in 0..p.saturating_sub(2) {
        let m = p - k - 1;
        let x = &a[k * p + k + 1..(k + 1) * p];
        let scale: f64 = x.iter().map(|t| t.abs()).sum();
        d[k] = a[k * p + k];
        if scale == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let v = &mut v[..m];
        for (vi, xi) in v.iter_mut().zip(x) {
            *vi = xi / scale;
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        e[k] = alpha * scale;
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv == 0.0 {
            continue;
        }
        let tau = 2.0 / vtv;

        // w = tau * B v over the trailing block B = a[k+1.., k+1..]
        let w = &mut w[..m];
        let off = (k + 1) * p + k + 1;
        for (r, wr) in w.iter_mut().enumerate() {
            let row = &a[off + r * p..off + r * p + m];
            *wr = tau * dot(row, v);
        }
        let kappa = 0.5 * tau * dot(w, v);
        for (wr, vr) in w.iter_mut().zip(v.iter()) {
            *wr -= kappa * vr;
        }
        // B -= v w^T + w v^T
        for r in 0..m {
            let (vr, wr) = (v[r], w[r]);
            let row = &mut a[off + r * p..off + r * p + m];
            for ((bc, vc), wc) in row.iter_mut().zip(v.iter()).zip(w.iter()) {
                *bc -= vr * wc + wr * vc;
            }
        }
        if want_q {
            reflectors.push((k, tau, v.to_vec()));
        }
    }
    if p >= 2 {
        d[p - 2] = a[(p - 2) * p + p - 2];
        e[p - 2] = a[(p - 2) * p + p - 1];
    }
    d[p - 1] = a[(p - 1) * p + p - 1];
    e[p - 1] = 0.0;

    if !want_q {
        return Vec::new();
    }
    let mut q = vec![0.0; p * p];
    for i in 0..p {
        q[i * p + i] = 1.0;
    }
    // backward accumulation: Q = H_0 (H_1 (... H_last))
    let mut r = vec![0.0; p];
    for (k, tau, v) in reflectors.iter().rev() {
        let lo = k + 1;
        let m = p - lo;
        let r = &mut r[..m];
        r.iter_mut().for_each(|t| *t = 0.0);
        for (i, vi) in v.iter().enumerate() {
            let row = &q[(lo + i) * p + lo..(lo + i + 1) * p];
            for (rc, qc) in r.iter_mut().zip(row) {
                *rc += vi * qc;
            }
        }
        for (i, vi) in v.iter().enumerate() {
            let s = tau * vi;
            let row = &mut q[(lo + i) * p + lo..(lo + i + 1) * p];
            for (qc, rc) in row.iter_mut().zip(r.iter()) {
                *qc -= s * rc;
            }
        }
    }
    q
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for t in 0..4 {
            acc[t] += a[4 * c + t] * b[4 * c + t];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for t in 4 * chunks..a.len() {
        s += a[t] * b[t];
    }
    s
}

/// Implicit-shift QL on the tridiagonal `(d, e)`. When `z` is given, its
/// rows are rotated alongside so that row `j` ends as the eigenvector of `d[j]`.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, p: usize) -> Result<()> {
    let max_iter = 50 * p.max(1);
    let eps = f64::EPSILON;
    let mut iterations = 0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;

    for l in 0..p {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < p - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::NoConvergence { iterations });
                }
                let g = d[l];
                let mut pp = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = pp.hypot(1.0);
                if pp < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (pp + r);
                d[l + 1] = e[l] * (pp + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                pp = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * pp;
                    r = pp.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = pp / r;
                    pp = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * p);
                        let zi = &mut head[i * p..];
                        let zi1 = &mut tail[..p];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                pp = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * pp;
                d[l] = c * pp;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
