//! Regularized covariance estimation with data-driven tuning.
//!
//! Four estimator families (hard and soft thresholding, banding, tapering)
//! are tuned by an oracle, V-fold / reverse / repeated cross-validation, a
//! two-stage parametric bootstrap of the Frobenius risk, a closed-form SURE
//! penalty, or a bootstrap approximation of the operator-norm risk. The
//! [`study`] module runs all of them side by side on simulated data.
//!
//! ```
//! use covtune::{select, Dataset, EstimatorSpec, Family, GridOptions, RngStream, SelectionRule};
//!
//! let data = Dataset::from_rows(&[
//!     vec![0.3, 1.2, -0.4],
//!     vec![1.1, 0.2, 0.9],
//!     vec![-0.8, -0.5, 0.1],
//!     vec![0.4, 0.7, -1.3],
//!     vec![0.0, -1.1, 0.6],
//!     vec![1.5, 0.3, 0.2],
//! ])?;
//! let spec = EstimatorSpec::default_for(Family::Band, &data, &GridOptions::default())?;
//! let rule = SelectionRule::parse("CV3", 0)?;
//! let result = select(&rule, &spec, &data, None, &RngStream::new(1, 0))?;
//! assert!(spec.grid().contains(&result.lambda));
//! # Ok::<(), covtune::Error>(())
//! ```

pub mod boot_frobenius;
pub mod boot_operator;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod selection;
pub mod study;

pub use boot_frobenius::{
    boot_frobenius_select, boot_penalty, frobenius_constant, sure_penalty, sure_select, BootKind, BootModel, RiskCurve,
};
pub use boot_operator::{
    boot_operator_select, gamma_star_estimate, operator_risk_estimate, product_moment_estimate, second_variation_check,
    GammaStar, SpectralProjector,
};
pub use dataset::Dataset;
pub use error::{Error, Method, Result};
pub use estimators::{apply, empirical_cov, sample_cov, EstimatorSpec, Family, GridOptions, TaperWeights};
pub use linalg::{eigen_decompose, frobenius_norm, operator_norm, sample_mvn, EigenSystem, SymMatrix};
pub use models::{generate_trial, ModelSpec};
pub use rng::RngStream;
pub use selection::{select, FoldPlan, Norm, RuleKind, SelectionResult, SelectionRule};
pub use study::{run_study, StudyConfig, TrialRecord};
