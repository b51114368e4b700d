//! Run configuration, read from TOML or (for `.json` paths) JSON.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use vinerisk::bicop::FitOptions;
use vinerisk::dvine::{Criterion, DVineFitOptions};
use vinerisk::margins::MarginalFamilyTag;
use vinerisk::FamilyTag;

pub const RESPONSE: &str = "th80";
pub const COVARIATES: [&str; 11] = ["hws", "temp", "refAP", "asd", "trd", "tsd", "lm", "tbs", "bd", "td", "ea"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretePolicy {
    #[default]
    Reject,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeOver {
    #[default]
    Risky,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrConfig {
    /// Grid levels for inversion and crossing checks.
    pub levels: Vec<f64>,
    /// Levels shown in the coefficient table.
    pub report_levels: Vec<f64>,
    pub bootstrap_replicates: usize,
}

impl Default for LqrConfig {
    fn default() -> Self {
        let mut levels = vec![0.001, 0.005];
        levels.extend((1..100).map(|k| k as f64 / 100.0));
        levels.extend([0.995, 0.999]);
        LqrConfig { levels, report_levels: vec![0.5, 0.9], bootstrap_replicates: vinerisk::lqr::DEFAULT_REPLICATES }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Ground-truth model JSON; the built-in reference model when absent.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub response: String,
    pub covariates: Vec<String>,
    /// Candidate margin families for every column without an override.
    pub margin_families: Vec<String>,
    /// Per-column margin candidates.
    pub margins: BTreeMap<String, Vec<String>>,
    pub copula_families: Vec<String>,
    pub criterion: Criterion,
    pub max_covariates: Option<usize>,
    pub thresholds: Vec<f64>,
    pub p_threshold: f64,
    pub floor: f64,
    pub seed: u64,
    /// Variable name to CSV header.
    pub rename: BTreeMap<String, String>,
    /// Discrete system columns that are never modelled.
    pub discrete: Vec<String>,
    pub discrete_policy: DiscretePolicy,
    pub standardize_over: StandardizeOver,
    pub lqr: LqrConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            response: RESPONSE.to_string(),
            covariates: COVARIATES.iter().map(|s| s.to_string()).collect(),
            margin_families: ["normal", "lognormal", "skew_normal", "skew_t", "gev", "gamma", "normal_mixture"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            margins: BTreeMap::new(),
            copula_families: FamilyTag::ALL.iter().map(|f| f.name().to_string()).collect(),
            criterion: Criterion::CllAic,
            max_covariates: None,
            thresholds: vec![2200.0, 2400.0, 2500.0],
            p_threshold: 1e-3,
            floor: vinerisk::risk::DEFAULT_FLOOR,
            seed: 2021,
            rename: BTreeMap::new(),
            discrete: Vec::new(),
            discrete_policy: DiscretePolicy::Reject,
            standardize_over: StandardizeOver::Risky,
            lqr: LqrConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.thresholds.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(CliError::input("thresholds must be positive"));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(CliError::input("p_threshold must lie in (0, 1)"));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(CliError::input("floor must lie in (0, 1)"));
        }
        if self.covariates.iter().any(|c| *c == self.response) {
            return Err(CliError::input("the response cannot also be a covariate"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.covariates.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(CliError::input(format!("covariate '{dup}' listed twice")));
        }
        check_levels(&self.lqr.levels)?;
        self.copula_options()?;
        for name in std::iter::once(&self.response).chain(&self.covariates) {
            self.margin_candidates(name)?;
        }
        Ok(())
    }

    pub fn copula_options(&self) -> CliResult<FitOptions> {
        let families = self
            .copula_families
            .iter()
            .map(|s| s.parse::<FamilyTag>())
            .collect::<Result<Vec<_>, _>>()?;
        if families.is_empty() {
            return Err(CliError::input("copula_families is empty"));
        }
        Ok(FitOptions::new(&families))
    }

    pub fn vine_options(&self, bicop: FitOptions) -> DVineFitOptions {
        DVineFitOptions { bicop, criterion: self.criterion, max_covariates: self.max_covariates }
    }

    pub fn margin_candidates(&self, variable: &str) -> CliResult<Vec<MarginalFamilyTag>> {
        let names = self.margins.get(variable).unwrap_or(&self.margin_families);
        let tags = names.iter().map(|s| s.parse::<MarginalFamilyTag>()).collect::<Result<Vec<_>, _>>()?;
        if tags.is_empty() {
            return Err(CliError::input(format!("no margin candidates for '{variable}'")));
        }
        Ok(tags)
    }

    /// CSV header holding `variable`.
    pub fn column_name<'a>(&'a self, variable: &'a str) -> &'a str {
        self.rename.get(variable).map_or(variable, String::as_str)
    }
}

pub fn check_levels(levels: &[f64]) -> CliResult<()> {
    if levels.len() < 2 {
        return Err(CliError::input("at least two quantile levels required"));
    }
    if levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::input("quantile levels must be strictly increasing in (0, 1)"));
    }
    Ok(())
}

/// Parses a comma-separated list of levels.
pub fn parse_levels(text: &str) -> CliResult<Vec<f64>> {
    let levels = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad level '{s}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    check_levels(&levels)?;
    Ok(levels)
}
