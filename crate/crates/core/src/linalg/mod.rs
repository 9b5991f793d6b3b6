//! Symmetric matrices, norms, eigen-decomposition and Gaussian sampling.

mod cholesky;
mod eigen;
mod mvn;
mod sym;

pub use cholesky::{PivotedCholesky, PSD_TOLERANCE};
pub use eigen::{clip_to_psd, eigen_decompose, eigenvalues, operator_norm, EigenSystem};
pub use mvn::{sample_mvn, MvnSampler};
pub use sym::{frobenius_distance_sq, frobenius_norm, SymMatrix};
