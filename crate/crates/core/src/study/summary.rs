use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use super::records::TrialRecord;
use crate::error::Result;
use crate::rng::RngStream;

pub const SUMMARY_HEADER: [&str; 13] = [
    "model",
    "rho",
    "alpha",
    "n",
    "p",
    "estimator",
    "rule",
    "K",
    "mse_frobenius",
    "se_frobenius",
    "mse_operator",
    "se_operator",
    "mean_lambda",
];

/// Mean squared errors of one (cell, estimator, rule) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: u8,
    pub rho: f64,
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub estimator: String,
    pub rule: String,
    pub k: usize,
    pub mse_frobenius: f64,
    /// `None` when `k = 1`.
    pub se_frobenius: Option<f64>,
    pub mse_operator: f64,
    pub se_operator: Option<f64>,
    pub mean_lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct GroupKey {
    model: u8,
    rho: f64,
    alpha: f64,
    n: usize,
    p: usize,
    estimator: String,
    rule: String,
}

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, o: &Self) -> Ordering {
        self.model
            .cmp(&o.model)
            .then(self.rho.total_cmp(&o.rho))
            .then(self.alpha.total_cmp(&o.alpha))
            .then(self.n.cmp(&o.n))
            .then(self.p.cmp(&o.p))
            .then(self.estimator.cmp(&o.estimator))
            .then(self.rule.cmp(&o.rule))
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn key(r: &TrialRecord) -> GroupKey {
    GroupKey {
        model: r.model,
        rho: r.rho,
        alpha: r.alpha,
        n: r.n,
        p: r.p,
        estimator: r.estimator.clone(),
        rule: r.rule.clone(),
    }
}

fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, Some((var / k).sqrt()))
}

/// Groups successful records by (model, rho, alpha, n, p, estimator, rule).
///
/// Groups come out sorted by key and values are summed in replication
/// order, so the summary does not depend on the order of `records`. Groups
/// whose Frobenius or operator MSE exceeds `max_mse` are dropped.
pub fn summarize(records: &[TrialRecord], max_mse: Option<f64>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        groups.entry(key(r)).or_default().push(r);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (key, mut members) in groups {
        members.sort_by(|a, b| {
            a.replication
                .cmp(&b.replication)
                .then(a.lambda.total_cmp(&b.lambda))
                .then(a.frobenius_error.total_cmp(&b.frobenius_error))
                .then(a.operator_error.total_cmp(&b.operator_error))
        });
        let pick = |f: fn(&TrialRecord) -> f64| members.iter().map(|r| f(r)).collect::<Vec<_>>();
        let (mse_frobenius, se_frobenius) = mean_se(&pick(|r| r.frobenius_error));
        let (mse_operator, se_operator) = mean_se(&pick(|r| r.operator_error));
        let (mean_lambda, _) = mean_se(&pick(|r| r.lambda));
        if let Some(cap) = max_mse {
            if mse_frobenius > cap || mse_operator > cap {
                continue;
            }
        }
        rows.push(SummaryRow {
            model: key.model,
            rho: key.rho,
            alpha: key.alpha,
            n: key.n,
            p: key.p,
            estimator: key.estimator,
            rule: key.rule,
            k: members.len(),
            mse_frobenius,
            se_frobenius,
            mse_operator,
            se_operator,
            mean_lambda,
        });
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_summary(out: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.rho.to_string(),
            r.alpha.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.estimator.clone(),
            r.rule.clone(),
            r.k.to_string(),
            r.mse_frobenius.to_string(),
            opt(r.se_frobenius),
            r.mse_operator.to_string(),
            opt(r.se_operator),
            r.mean_lambda.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Position of a rule within its (model, size, estimator) cell; ties share
/// the smallest rank (1, 2, 2, 4).
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub model: u8,
    pub rho: f64,
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub estimator: String,
    pub rule: String,
    pub rank_frobenius: usize,
    pub rank_operator: usize,
}

fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| w.total_cmp(v) == Ordering::Less).count())
        .collect()
}

pub fn rank_rows(rows: &[SummaryRow]) -> Vec<RankRow> {
    let mut out = Vec::with_capacity(rows.len());
    let same_cell = |a: &SummaryRow, b: &SummaryRow| {
        a.model == b.model
            && a.rho.to_bits() == b.rho.to_bits()
            && a.alpha.to_bits() == b.alpha.to_bits()
            && a.n == b.n
            && a.p == b.p
            && a.estimator == b.estimator
    };
    let mut start = 0;
    while start < rows.len() {
        let mut end = start + 1;
        while end < rows.len() && same_cell(&rows[start], &rows[end]) {
            end += 1;
        }
        let cell = &rows[start..end];
        let f = competition_ranks(&cell.iter().map(|r| r.mse_frobenius).collect::<Vec<_>>());
        let op = competition_ranks(&cell.iter().map(|r| r.mse_operator).collect::<Vec<_>>());
        for ((r, rf), rop) in cell.iter().zip(f).zip(op) {
            out.push(RankRow {
                model: r.model,
                rho: r.rho,
                alpha: r.alpha,
                n: r.n,
                p: r.p,
                estimator: r.estimator.clone(),
                rule: r.rule.clone(),
                rank_frobenius: rf,
                rank_operator: rop,
            });
        }
        start = end;
    }
    out
}

pub fn write_ranks(out: impl Write, rows: &[RankRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "rho",
        "alpha",
        "n",
        "p",
        "estimator",
        "rule",
        "rank_frobenius",
        "rank_operator",
    ])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.rho.to_string(),
            r.alpha.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.estimator.clone(),
            r.rule.clone(),
            r.rank_frobenius.to_string(),
            r.rank_operator.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Bootstrap standard error of `mean(a - b)`, resampling replications
/// jointly so the pairing is kept.
pub fn paired_bootstrap_se(a: &[f64], b: &[f64], resamples: usize, rng: &RngStream) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    assert!(resamples >= 2, "need at least 2 resamples");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let k = d.len();
    if k == 0 {
        return f64::NAN;
    }
    let mut g = rng.rng();
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..k).map(|_| d[g.random_range(0..k)]).sum::<f64>() / k as f64)
        .collect();
    let m = means.iter().sum::<f64>() / resamples as f64;
    (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt()
}

type TrialKey = (u8, u64, u64, usize, usize, usize);
/// Oracle Frobenius and operator errors for one trial and estimator.
type OracleErrors = (Option<f64>, Option<f64>);

fn trial_cell(r: &TrialRecord) -> TrialKey {
    (r.model, r.rho.to_bits(), r.alpha.to_bits(), r.n, r.p, r.replication)
}

/// Checks that every rule whose record is ok did no better than the oracle
/// of the matching norm on the same replication. Returns the violations.
pub fn check_oracle_dominance(records: &[TrialRecord]) -> std::result::Result<usize, Vec<String>> {
    let mut oracle: BTreeMap<(TrialKey, &str), OracleErrors> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let entry = oracle.entry((trial_cell(r), r.estimator.as_str())).or_default();
        match r.rule.as_str() {
            "oracle:F" => entry.0 = Some(r.frobenius_error),
            "oracle:op" => entry.1 = Some(r.operator_error),
            _ => {}
        }
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    for r in records.iter().filter(|r| r.is_ok()) {
        let rep = r.replication;
        let Some(&(f, op)) = oracle.get(&(trial_cell(r), r.estimator.as_str())) else {
            continue;
        };
        if let Some(f) = f {
            checked += 1;
            if r.frobenius_error < f {
                violations.push(format!(
                    "{} {} replication {rep}: Frobenius error {} below oracle {f}",
                    r.estimator, r.rule, r.frobenius_error
                ));
            }
        }
        if let Some(op) = op {
            checked += 1;
            if r.operator_error < op {
                violations.push(format!(
                    "{} {} replication {rep}: operator error {} below oracle {op}",
                    r.estimator, r.rule, r.operator_error
                ));
            }
        }
    }
    if violations.is_empty() {
        Ok(checked)
    } else {
        Err(violations)
    }
}

/// Checks that all records of a replication share one dataset digest.
pub fn check_pairing(records: &[TrialRecord]) -> std::result::Result<usize, Vec<String>> {
    let mut seen: BTreeMap<(u8, u64, u64, usize, usize, usize), &str> = BTreeMap::new();
    let mut violations = Vec::new();
    for r in records.iter().filter(|r| !r.data_digest.is_empty()) {
        let cell = trial_cell(r);
        match seen.get(&cell) {
            Some(&d) if d != r.data_digest => violations.push(format!(
                "replication {} of model {} (n={}, p={}): {} saw data {} instead of {d}",
                r.replication, r.model, r.n, r.p, r.rule, r.data_digest
            )),
            Some(_) => {}
            None => {
                seen.insert(cell, &r.data_digest);
            }
        }
    }
    if violations.is_empty() {
        Ok(seen.len())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::records::STATUS_OK;

    fn rec(rule: &str, rep: usize, f: f64, op: f64, lambda: f64) -> TrialRecord {
        TrialRecord {
            model: 2,
            rho: 0.5,
            alpha: 0.0,
            n: 10,
            p: 4,
            estimator: "band".into(),
            rule: rule.into(),
            replication: rep,
            lambda,
            frobenius_error: f,
            operator_error: op,
            stage_one_lambda: None,
            data_digest: format!("d{rep}"),
            status: STATUS_OK.into(),
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn single_record_has_na_se() {
        let rows = summarize(&[rec("CV2:F", 0, 2.0, 1.0, 3.0)], None);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mse_frobenius, 2.0);
        assert_eq!(rows[0].se_frobenius, None);
        let mut buf = Vec::new();
        write_summary(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "2,0.5,0,10,4,band,CV2:F,1,2,NA,1,NA,3");
    }

    #[test]
    fn hand_arithmetic() {
        let records = vec![
            rec("CV2:F", 0, 1.0, 4.0, 1.0),
            rec("CV2:F", 1, 3.0, 2.0, 2.0),
            rec("CV5:F", 0, 2.0, 2.0, 1.0),
            rec("CV5:F", 1, 6.0, 2.0, 1.0),
        ];
        let rows = summarize(&records, None);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].rule, "CV2:F");
        assert_eq!(rows[0].mse_frobenius, 2.0);
        assert_eq!(rows[0].se_frobenius, Some(1.0));
        assert_eq!(rows[0].mse_operator, 3.0);
        assert_eq!(rows[0].mean_lambda, 1.5);
        assert_eq!(rows[1].mse_frobenius, 4.0);
        assert_eq!(rows[1].se_frobenius, Some(2.0));
        assert_eq!(rows[1].se_operator, Some(0.0));
        let ranks = rank_rows(&rows);
        assert_eq!((ranks[0].rank_frobenius, ranks[0].rank_operator), (1, 2));
        assert_eq!((ranks[1].rank_frobenius, ranks[1].rank_operator), (2, 1));
    }

    #[test]
    fn ties_share_rank_and_empty_input() {
        let records = vec![
            rec("CV2:F", 0, 1.0, 1.0, 0.0),
            rec("CV3:F", 0, 1.0, 1.0, 0.0),
            rec("CV5:F", 0, 2.0, 0.5, 0.0),
        ];
        let ranks = rank_rows(&summarize(&records, None));
        let f: Vec<usize> = ranks.iter().map(|r| r.rank_frobenius).collect();
        assert_eq!(f, vec![1, 1, 3]);
        assert!(summarize(&[], None).is_empty());
        let mut buf = Vec::new();
        write_summary(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), SUMMARY_HEADER.join(","));
    }

    #[test]
    fn failed_records_and_trim() {
        let mut bad = rec("CV2:F", 2, f64::NAN, f64::NAN, f64::NAN);
        bad.status = "failed: x".into();
        let records = vec![rec("CV2:F", 0, 1.0, 1.0, 0.0), bad, rec("CV3:F", 0, 100.0, 1.0, 0.0)];
        let rows = summarize(&records, None);
        assert_eq!(rows[0].k, 1);
        assert_eq!(summarize(&records, Some(50.0)).len(), 1);
    }

    #[test]
    fn permutation_invariance() {
        let mut records: Vec<TrialRecord> = (0..20)
            .map(|i| {
                rec(
                    if i % 2 == 0 { "CV2:F" } else { "CV3:F" },
                    i / 2,
                    0.1 * i as f64 + 1e-3,
                    1.0 / (i + 1) as f64,
                    1.0,
                )
            })
            .collect();
        let a = summarize(&records, None);
        records.reverse();
        records.swap(3, 11);
        assert_eq!(a, summarize(&records, None));
    }

    #[test]
    fn oracle_dominance_and_pairing_checks() {
        let good = vec![rec("oracle:F", 0, 1.0, 5.0, 1.0), rec("CV2:F", 0, 1.5, 0.5, 2.0)];
        assert_eq!(check_oracle_dominance(&good).unwrap(), 2);
        let bad = vec![rec("oracle:F", 0, 1.0, 5.0, 1.0), rec("CV2:F", 0, 0.5, 0.5, 2.0)];
        assert_eq!(check_oracle_dominance(&bad).unwrap_err().len(), 1);
        let mut other = rec("CV2:F", 0, 1.0, 1.0, 1.0);
        assert!(check_pairing(&[rec("oracle:F", 0, 1.0, 1.0, 1.0), other.clone()]).is_ok());
        other.data_digest = "zz".into();
        assert!(check_pairing(&[rec("oracle:F", 0, 1.0, 1.0, 1.0), other]).is_err());
    }

    #[test]
    fn paired_se_matches_analytic_scale() {
        let a: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x * 0.5).collect();
        let se = paired_bootstrap_se(&a, &b, 2000, &RngStream::new(1, 0));
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let (_, analytic) = mean_se(&d);
        let analytic = analytic.unwrap();
        assert!((se / analytic - 1.0).abs() < 0.1, "{se} vs {analytic}");
        assert_eq!(paired_bootstrap_se(&a, &a, 10, &RngStream::new(1, 0)), 0.0);
    }
}
