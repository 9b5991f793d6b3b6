//! The simulation study: every rule and estimator family on the same
//! datasets, replicated, with squared Frobenius and operator errors against
//! the generating covariance.

mod config;
mod records;
mod summary;

use std::collections::HashMap;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

pub use config::{resolve_threads, EstimatorConfig, ModelEntry, RuleConfig, SizeEntry, StudyConfig, DEFAULT_BOOTSTRAP};
pub use records::{read_records, write_records, write_timings, TrialRecord, STATUS_OK};
pub use summary::{
    check_oracle_dominance, check_pairing, paired_bootstrap_se, rank_rows, summarize, write_ranks, write_summary,
    RankRow, SummaryRow, SUMMARY_HEADER,
};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{apply, empirical_cov, EstimatorSpec};
use crate::linalg::SymMatrix;
use crate::models::TrialSource;
use crate::rng::RngStream;
use crate::selection::{select, Norm, SelectionRule};

/// Records of a finished study, in (model, size, replication, family, rule) order.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub records: Vec<TrialRecord>,
}

impl StudyOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }
}

struct Cell {
    model_index: usize,
    size_index: usize,
    n: usize,
    source: TrialSource,
}

/// Runs the study on a pool of `threads` workers. Replications are the unit
/// of work; results are collected in a fixed order, so the output does not
/// depend on the thread count.
pub fn run_study(config: &StudyConfig, threads: usize) -> Result<StudyOutput> {
    let rules = config.validate()?;
    let mut cells = Vec::new();
    for (si, size) in config.sizes.iter().enumerate() {
        for (mi, model) in config.models.iter().enumerate() {
            cells.push(Cell {
                model_index: mi,
                size_index: si,
                n: size.n,
                source: TrialSource::new(model.spec(size.p)?)?,
            });
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();
    info!(
        "study: {} cells x {} replications, {} families, {} rules, {threads} threads",
        cells.len(),
        config.replications,
        config.estimators.families.len(),
        rules.len()
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let base = RngStream::new(config.seed, 0);
    let batches: Vec<Vec<TrialRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let stream = base.derive(&[cell.model_index as u64, cell.size_index as u64, r as u64]);
                run_replication(config, &rules, cell, r, &stream)
            })
            .collect()
    });
    let output = StudyOutput {
        records: batches.into_iter().flatten().collect(),
    };
    if output.failures() > 0 {
        warn!("{} of {} trials failed", output.failures(), output.records.len());
    }
    Ok(output)
}

fn run_replication(
    config: &StudyConfig,
    rules: &[SelectionRule],
    cell: &Cell,
    replication: usize,
    stream: &RngStream,
) -> Vec<TrialRecord> {
    let model = cell.source.model;
    let template = TrialRecord {
        model: model.id,
        rho: model.rho,
        alpha: model.alpha,
        n: cell.n,
        p: model.p,
        estimator: String::new(),
        rule: String::new(),
        replication,
        lambda: f64::NAN,
        frobenius_error: f64::NAN,
        operator_error: f64::NAN,
        stage_one_lambda: None,
        data_digest: String::new(),
        status: STATUS_OK.to_string(),
        wall_time_ms: 0.0,
    };
    let data = match cell.source.draw(cell.n, &stream.child(0)) {
        Ok(d) => d,
        Err(e) => {
            return config
                .estimators
                .families
                .iter()
                .flat_map(|f| rules.iter().map(move |r| (f, r)))
                .map(|(f, r)| TrialRecord {
                    estimator: f.name().to_string(),
                    rule: r.to_string(),
                    status: format!("failed: {e}"),
                    ..template.clone()
                })
                .collect();
        }
    };
    let digest = data.digest();
    let empirical = empirical_cov(&data);
    let truth = &cell.source.sigma;
    let mut out = Vec::with_capacity(config.estimators.families.len() * rules.len());
    for &family in &config.estimators.families {
        let spec = EstimatorSpec::default_for(family, &data, &config.estimators.grid_options())
            .map(|s| s.with_preserve_diagonal(config.estimators.preserve_diagonal));
        let mut errors = ErrorCache::default();
        for (ri, rule) in rules.iter().enumerate() {
            let start = Instant::now();
            let outcome = spec.as_ref().map_err(clone_error).and_then(|spec| {
                let result = select(rule, spec, &data, Some(truth), &stream.derive(&[1, ri as u64]))?;
                let (f, op) = errors.get(spec, &empirical, truth, result.lambda)?;
                Ok((result, f, op))
            });
            let mut record = TrialRecord {
                estimator: family.name().to_string(),
                rule: rule.to_string(),
                data_digest: digest.clone(),
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                ..template.clone()
            };
            match outcome {
                Ok((result, f, op)) => {
                    record.lambda = result.lambda;
                    record.stage_one_lambda = result.stage_one_lambda;
                    record.frobenius_error = f;
                    record.operator_error = op;
                }
                Err(e) => {
                    warn!(
                        "{} n={} {family} {rule} replication {replication}: {e}",
                        model.label(),
                        cell.n
                    );
                    record.status = format!("failed: {e}");
                }
            }
            out.push(record);
        }
    }
    out
}

fn clone_error(e: &Error) -> Error {
    Error::Domain(e.to_string())
}

/// Errors of the final estimate `apply(spec, empirical, lambda)`, memoized per
/// `lambda` because many rules land on the same grid point.
#[derive(Default)]
struct ErrorCache {
    seen: HashMap<u64, (f64, f64)>,
}

impl ErrorCache {
    fn get(
        &mut self,
        spec: &EstimatorSpec,
        empirical: &SymMatrix,
        truth: &SymMatrix,
        lambda: f64,
    ) -> Result<(f64, f64)> {
        if let Some(&hit) = self.seen.get(&lambda.to_bits()) {
            return Ok(hit);
        }
        let estimate = apply(spec, empirical, lambda)?;
        let errors = (
            Norm::Frobenius.squared_distance(&estimate, truth)?,
            Norm::Operator.squared_distance(&estimate, truth)?,
        );
        self.seen.insert(lambda.to_bits(), errors);
        Ok(errors)
    }
}

/// Tunes `spec` on `data` with `rule` and returns the final estimate, built
/// from the empirical covariance, together with the selection.
pub fn tuned_estimate(
    rule: &SelectionRule,
    spec: &EstimatorSpec,
    data: &Dataset,
    truth: Option<&SymMatrix>,
    rng: &RngStream,
) -> Result<(SymMatrix, crate::selection::SelectionResult)> {
    let result = select(rule, spec, data, truth, rng)?;
    Ok((apply(spec, &empirical_cov(data), result.lambda)?, result))
}
