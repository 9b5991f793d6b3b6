use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Family, GridOptions};
use crate::models::ModelSpec;
use crate::selection::SelectionRule;

/// Resamples used by the bootstrap rules when the config does not say.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// A simulation study, as read from TOML.
///
/// ```toml
/// seed = 20240601
/// replications = 100
/// bootstrap = 200
///
/// [[models]]
/// id = 2
/// rho = 0.5
///
/// [[sizes]]
/// n = 100
/// p = 100
///
/// [estimators]
/// families = ["band", "taper"]
///
/// [rules]
/// names = ["oracle:F", "CV10", "RCV2", "reCV3:op"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub seed: u64,
    pub replications: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub models: Vec<ModelEntry>,
    pub sizes: Vec<SizeEntry>,
    pub estimators: EstimatorConfig,
    pub rules: RuleConfig,
}

fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub id: u8,
    pub rho: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl ModelEntry {
    pub fn spec(&self, p: usize) -> Result<ModelSpec> {
        ModelSpec::new(self.id, self.rho, self.alpha, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeEntry {
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub families: Vec<Family>,
    #[serde(default = "default_points")]
    pub threshold_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bandwidth: Option<usize>,
    #[serde(default)]
    pub preserve_diagonal: bool,
}

fn default_points() -> usize {
    GridOptions::default().threshold_points
}

impl EstimatorConfig {
    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            threshold_points: self.threshold_points,
            max_bandwidth: self.max_bandwidth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub names: Vec<String>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the config and parses its rule names.
    pub fn validate(&self) -> Result<Vec<SelectionRule>> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        if self.models.is_empty() || self.sizes.is_empty() {
            return fail("at least one model and one size are required".into());
        }
        if self.estimators.families.is_empty() || self.rules.names.is_empty() {
            return fail("at least one estimator family and one rule are required".into());
        }
        if self.estimators.threshold_points < 2 {
            return fail("threshold_points must be at least 2".into());
        }
        for size in &self.sizes {
            if size.n < 2 || size.p < 1 {
                return fail(format!("size n = {}, p = {} needs n >= 2 and p >= 1", size.n, size.p));
            }
            for model in &self.models {
                model.spec(size.p).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        let mut rules = Vec::with_capacity(self.rules.names.len());
        for name in &self.rules.names {
            let rule =
                SelectionRule::parse(name, self.bootstrap).map_err(|e| Error::Config(format!("rule '{name}': {e}")))?;
            if rules.contains(&rule) {
                return fail(format!("rule '{name}' is listed twice"));
            }
            for &family in &self.estimators.families {
                if !rule.admits(family) {
                    return fail(format!("rule {rule} cannot tune the {family} estimator"));
                }
            }
            rules.push(rule);
        }
        let mut families = self.estimators.families.clone();
        families.sort();
        families.dedup();
        if families.len() != self.estimators.families.len() {
            return fail("estimator families must be distinct".into());
        }
        Ok(rules)
    }
}

/// Worker threads: command-line flag, then config, then the
/// `COVTUNE_THREADS` variable, then the machine's parallelism.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>, env: Option<&str>) -> Result<usize> {
    if let Some(t) = flag.or(config) {
        return if t == 0 {
            Err(Error::Config("thread count must be at least 1".into()))
        } else {
            Ok(t)
        };
    }
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::Config(format!(
                "COVTUNE_THREADS='{v}' is not a positive integer"
            ))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}
