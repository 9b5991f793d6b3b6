use super::folds::{make_folds, FoldPlan};
use super::{Norm, SelectionResult, SelectionRule};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{apply, empirical_cov_of, EstimatorSpec};
use crate::rng::RngStream;

/// Fold-averaged squared loss for every grid point under a fixed plan.
///
/// Forward (`reverse = false`): estimate on all folds but `v`, compare with
/// the empirical covariance of fold `v`. Reverse: estimate on fold `v`,
/// compare with the empirical covariance of the remaining rows. Both sides
/// use the divisor-`n` empirical covariance of their own rows.
pub fn plan_scores(
    spec: &EstimatorSpec,
    data: &Dataset,
    plan: &FoldPlan,
    norm: Norm,
    reverse: bool,
) -> Result<Vec<f64>> {
    if plan.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: plan.n(),
        });
    }
    spec.check_dim(data.p())?;
    let sizes = plan.sizes();
    if let Some(v) = sizes.iter().position(|&s| s < 2) {
        return Err(Error::domain(format!(
            "fold {} has {} row(s); every fold needs at least 2",
            v + 1,
            sizes[v]
        )));
    }

    let grid = spec.grid();
    let mut totals = vec![0.0; grid.len()];
    for v in 0..plan.folds() {
        let inside = plan.fold_rows(v);
        let outside = plan.complement_rows(v);
        let (train, valid) = if reverse {
            (&inside, &outside)
        } else {
            (&outside, &inside)
        };
        let train_cov = empirical_cov_of(data, train)?;
        let valid_cov = empirical_cov_of(data, valid)?;
        for (total, &lambda) in totals.iter_mut().zip(grid) {
            let estimate = apply(spec, &train_cov, lambda)?;
            *total += norm.squared_distance(&estimate, &valid_cov)?;
        }
    }
    let v = plan.folds() as f64;
    Ok(totals.into_iter().map(|t| t / v).collect())
}

/// V-fold cross-validation on a fresh random plan drawn from `rng`.
pub fn cv_select(
    spec: &EstimatorSpec,
    data: &Dataset,
    folds: usize,
    norm: Norm,
    rng: &RngStream,
) -> Result<SelectionResult> {
    let rule = SelectionRule::cv(folds, norm)?;
    let plan = make_folds(data.n(), folds, rng)?;
    let scores = plan_scores(spec, data, &plan, norm, false)?;
    SelectionResult::from_scores(rule, spec.grid(), scores)
}

/// Reverse V-fold cross-validation: small training folds, large validation sets.
pub fn reverse_cv_select(
    spec: &EstimatorSpec,
    data: &Dataset,
    folds: usize,
    norm: Norm,
    rng: &RngStream,
) -> Result<SelectionResult> {
    let rule = SelectionRule::reverse_cv(folds, norm)?;
    let plan = make_folds(data.n(), folds, rng)?;
    let scores = plan_scores(spec, data, &plan, norm, true)?;
    SelectionResult::from_scores(rule, spec.grid(), scores)
}

/// Mean of `splits` V-fold curves, split `s` drawing its plan from `rng.child(s)`.
pub fn repeated_cv_select(
    spec: &EstimatorSpec,
    data: &Dataset,
    folds: usize,
    splits: usize,
    norm: Norm,
    rng: &RngStream,
) -> Result<SelectionResult> {
    let rule = SelectionRule::repeated_cv(folds, splits, norm)?;
    let mut totals = vec![0.0; spec.grid().len()];
    for s in 0..splits {
        let plan = make_folds(data.n(), folds, &rng.child(s as u64))?;
        for (t, x) in totals.iter_mut().zip(plan_scores(spec, data, &plan, norm, false)?) {
            *t += x;
        }
    }
    let scores = totals.into_iter().map(|t| t / splits as f64).collect();
    SelectionResult::from_scores(rule, spec.grid(), scores)
}
