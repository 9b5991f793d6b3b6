//! Tuning-parameter selection.
//!
//! Every rule scores each candidate in the estimator's grid and returns the
//! argmin. Ties go to the smallest candidate, which is the sparser model for
//! banding/tapering (narrower band) and the first grid point for thresholds.

mod cv;
mod folds;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{cv_select, plan_scores, repeated_cv_select, reverse_cv_select};
pub use folds::{make_folds, FoldPlan};
pub use oracle::oracle_select;

use crate::boot_frobenius::{boot_frobenius_select, sure_select};
use crate::boot_operator::boot_operator_select;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{empirical_cov, EstimatorSpec, Family};
use crate::linalg::{frobenius_distance_sq, operator_norm, SymMatrix};
use crate::rng::RngStream;

/// Loss used to compare a covariance estimate with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Norm {
    Frobenius,
    Operator,
}

impl Norm {
    /// `||a - b||^2` in this norm.
    pub fn squared_distance(self, a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
        a.check_same_dim(b)?;
        match self {
            Norm::Frobenius => Ok(frobenius_distance_sq(a, b)),
            Norm::Operator => {
                let d = operator_norm(&a.sub(b)?)?;
                Ok(d * d)
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Norm::Frobenius => "F",
            Norm::Operator => "op",
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "fro" | "frobenius" => Ok(Norm::Frobenius),
            "op" | "operator" | "spectral" => Ok(Norm::Operator),
            other => Err(Error::domain(format!("unknown norm '{other}'"))),
        }
    }
}

/// How a rule estimates the risk curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Argmin of the true loss; needs the true covariance.
    Oracle,
    /// Train on all folds but one, validate on the held-out fold.
    Cv { folds: usize },
    /// Train on one fold, validate on the rest.
    ReverseCv { folds: usize },
    /// Average of `splits` independent V-fold curves.
    RepeatedCv { folds: usize, splits: usize },
    /// Parametric-bootstrap covariance penalty (Frobenius only).
    BootFrobenius { resamples: usize },
    /// Closed-form covariance penalty for banding/tapering (Frobenius only).
    Sure,
    /// Second-variation operator risk approximation for banding/tapering.
    BootOperator { resamples: usize },
}

/// A selection rule together with the norm it targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SelectionRule {
    kind: RuleKind,
    norm: Norm,
}

impl SelectionRule {
    pub fn new(kind: RuleKind, norm: Norm) -> Result<Self> {
        match kind {
            RuleKind::Cv { folds } | RuleKind::ReverseCv { folds } if folds < 2 => {
                return Err(Error::domain(format!("fold count must be >= 2, got {folds}")))
            }
            RuleKind::RepeatedCv { folds, splits } if folds < 2 || splits < 1 => {
                return Err(Error::domain(format!(
                    "repeated CV needs folds >= 2 and splits >= 1, got {folds} and {splits}"
                )))
            }
            RuleKind::BootFrobenius { resamples } | RuleKind::BootOperator { resamples } if resamples < 2 => {
                return Err(Error::domain(format!(
                    "bootstrap needs at least 2 resamples, got {resamples}"
                )))
            }
            RuleKind::BootFrobenius { .. } | RuleKind::Sure if norm != Norm::Frobenius => {
                return Err(Error::domain("Frobenius-penalty rules only target the Frobenius norm"))
            }
            RuleKind::BootOperator { .. } if norm != Norm::Operator => {
                return Err(Error::domain("operator bootstrap only targets the operator norm"))
            }
            _ => {}
        }
        Ok(Self { kind, norm })
    }

    pub fn oracle(norm: Norm) -> Self {
        Self {
            kind: RuleKind::Oracle,
            norm,
        }
    }

    pub fn cv(folds: usize, norm: Norm) -> Result<Self> {
        Self::new(RuleKind::Cv { folds }, norm)
    }

    pub fn reverse_cv(folds: usize, norm: Norm) -> Result<Self> {
        Self::new(RuleKind::ReverseCv { folds }, norm)
    }

    pub fn repeated_cv(folds: usize, splits: usize, norm: Norm) -> Result<Self> {
        Self::new(RuleKind::RepeatedCv { folds, splits }, norm)
    }

    pub fn boot_frobenius(resamples: usize) -> Result<Self> {
        Self::new(RuleKind::BootFrobenius { resamples }, Norm::Frobenius)
    }

    pub fn sure() -> Self {
        Self {
            kind: RuleKind::Sure,
            norm: Norm::Frobenius,
        }
    }

    pub fn boot_operator(resamples: usize) -> Result<Self> {
        Self::new(RuleKind::BootOperator { resamples }, Norm::Operator)
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Whether the rule can tune estimators of `family`.
    pub fn admits(&self, family: Family) -> bool {
        match self.kind {
            RuleKind::Sure | RuleKind::BootOperator { .. } => family.is_linear(),
            _ => true,
        }
    }

    /// Parses names such as `CV10`, `reCV3:op`, `RCV2`, `RCV2x20:op`,
    /// `oracle:op`, `boot`, `boot:op` or `SURE`. The norm suffix defaults to
    /// Frobenius; `resamples` is used by the bootstrap rules.
    pub fn parse(name: &str, resamples: usize) -> Result<Self> {
        let (kind, norm) = match name.split_once(':') {
            Some((k, n)) => (k, n.parse::<Norm>()?),
            None => (name, Norm::Frobenius),
        };
        let lower = kind.trim().to_ascii_lowercase();
        let number = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::domain(format!("bad count '{s}' in rule name '{name}'")))
        };
        let kind = if lower == "oracle" {
            RuleKind::Oracle
        } else if lower == "sure" {
            RuleKind::Sure
        } else if lower == "boot" || lower == "bootstrap" {
            match norm {
                Norm::Frobenius => RuleKind::BootFrobenius { resamples },
                Norm::Operator => RuleKind::BootOperator { resamples },
            }
        } else if let Some(rest) = lower.strip_prefix("recv") {
            RuleKind::ReverseCv { folds: number(rest)? }
        } else if let Some(rest) = lower.strip_prefix("rcv") {
            match rest.split_once('x') {
                Some((v, s)) => RuleKind::RepeatedCv {
                    folds: number(v)?,
                    splits: number(s)?,
                },
                None => RuleKind::RepeatedCv {
                    folds: number(rest)?,
                    splits: DEFAULT_SPLITS,
                },
            }
        } else if let Some(rest) = lower.strip_prefix("cv") {
            RuleKind::Cv { folds: number(rest)? }
        } else {
            return Err(Error::domain(format!("unknown selection rule '{name}'")));
        };
        Self::new(kind, norm)
    }
}

/// Splits used by `RCVV` when no `xS` suffix is given.
pub const DEFAULT_SPLITS: usize = 50;

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RuleKind::Oracle => write!(f, "oracle"),
            RuleKind::Cv { folds } => write!(f, "CV{folds}"),
            RuleKind::ReverseCv { folds } => write!(f, "reCV{folds}"),
            RuleKind::RepeatedCv { folds, splits } if splits == DEFAULT_SPLITS => {
                write!(f, "RCV{folds}")
            }
            RuleKind::RepeatedCv { folds, splits } => write!(f, "RCV{folds}x{splits}"),
            RuleKind::BootFrobenius { .. } | RuleKind::BootOperator { .. } => write!(f, "boot"),
            RuleKind::Sure => write!(f, "SURE"),
        }?;
        write!(f, ":{}", self.norm.tag())
    }
}

/// One point of a score curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub score: f64,
}

/// Outcome of a selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub lambda: f64,
    pub curve: Vec<CurvePoint>,
    pub rule: SelectionRule,
    /// First-stage choice that defined the bootstrap model, if any.
    pub stage_one_lambda: Option<f64>,
    /// Negative eigenvalue mass removed from the bootstrap covariance, if any.
    pub psd_clip_mass: Option<f64>,
}

impl SelectionResult {
    pub(crate) fn from_scores(rule: SelectionRule, grid: &[f64], scores: Vec<f64>) -> Result<Self> {
        let best = argmin(&scores)?;
        let curve = grid
            .iter()
            .zip(scores)
            .map(|(&lambda, score)| CurvePoint { lambda, score })
            .collect();
        Ok(Self {
            lambda: grid[best],
            curve,
            rule,
            stage_one_lambda: None,
            psd_clip_mass: None,
        })
    }

    pub fn scores(&self) -> Vec<f64> {
        self.curve.iter().map(|c| c.score).collect()
    }
}

/// Index of the smallest score; the first one wins ties.
pub(crate) fn argmin(scores: &[f64]) -> Result<usize> {
    if let Some(bad) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::domain(format!("score curve has NaN at grid index {bad}")));
    }
    scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &s)| match best {
            Some((_, b)) if s >= b => best,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::domain("empty score curve"))
}

/// Runs `rule` on `data`. The oracle compares estimates built from the
/// empirical covariance of `data` against `truth`.
pub fn select(
    rule: &SelectionRule,
    spec: &EstimatorSpec,
    data: &Dataset,
    truth: Option<&SymMatrix>,
    rng: &RngStream,
) -> Result<SelectionResult> {
    if !rule.admits(spec.family()) {
        return Err(Error::domain(format!(
            "rule {rule} cannot tune the {} estimator",
            spec.family()
        )));
    }
    let norm = rule.norm;
    match rule.kind {
        RuleKind::Oracle => {
            let truth = truth.ok_or_else(|| Error::domain("the oracle rule needs the true covariance"))?;
            oracle_select(spec, &empirical_cov(data), truth, norm)
        }
        RuleKind::Cv { folds } => cv_select(spec, data, folds, norm, rng),
        RuleKind::ReverseCv { folds } => reverse_cv_select(spec, data, folds, norm, rng),
        RuleKind::RepeatedCv { folds, splits } => repeated_cv_select(spec, data, folds, splits, norm, rng),
        RuleKind::BootFrobenius { resamples } => boot_frobenius_select(spec, data, resamples, rng),
        RuleKind::Sure => sure_select(spec, data),
        RuleKind::BootOperator { resamples } => boot_operator_select(spec, data, resamples, rng),
    }
}
