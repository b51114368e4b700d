mod assess;
mod benchmark;
mod fit;
mod rank;
mod simulate;

pub use assess::{cmd_assess, AssessArgs, AssessOutput};
pub use benchmark::{cmd_benchmark_lqr, BenchmarkArgs};
pub use fit::{cmd_fit, FitArgs};
pub use rank::{cmd_rank, RankArgs};
pub use simulate::{cmd_simulate, SimulateArgs};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;
use vinerisk::bicop::FitOptions;
use vinerisk::dvine::{fit_dvine_regression, DVineRegressionModel, SelectionTrace, Variable, VariableSpec};
use vinerisk::margins::{select_margin, Selection};

/// Response plus covariates with margins selected by BIC.
pub(crate) struct Prepared {
    pub response: Variable,
    pub covariates: Vec<Variable>,
    pub margin_report: String,
}

/// Smallest sample the fitting commands accept.
pub const MIN_ROWS: usize = 30;

pub(crate) fn prepare(cfg: &RunConfig, y: Vec<f64>, covs: Vec<(String, Vec<f64>)>) -> CliResult<Prepared> {
    if y.len() < MIN_ROWS {
        return Err(CliError::InsufficientData(format!("need at least {MIN_ROWS} rows, got {}", y.len())));
    }
    let mut columns = vec![(cfg.response.clone(), y)];
    columns.extend(covs);
    let selections: Vec<Selection> = columns
        .par_iter()
        .map(|(name, values)| {
            let candidates = cfg.margin_candidates(name)?;
            select_margin(values, &candidates).map_err(|e| match e {
                vinerisk::Error::InsufficientData(m) => CliError::InsufficientData(format!("{name}: {m}")),
                other => CliError::Numerical(format!("margin of '{name}': {other}")),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut report = String::from("variable,family,parameters,loglik,aic,bic\n");
    let mut vars: Vec<Variable> = Vec::with_capacity(columns.len());
    for ((name, values), sel) in columns.into_iter().zip(selections) {
        let m = &sel.best;
        let params: Vec<String> = m.model.params().iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            report,
            "{name},{},{},{},{},{}",
            m.model.family(),
            params.join(" "),
            m.loglik,
            m.aic(),
            m.bic()
        );
        vars.push(Variable { name, values, margin: m.model.clone() });
    }
    let response = vars.remove(0);
    Ok(Prepared { response, covariates: vars, margin_report: report })
}

pub(crate) fn fit_vine(
    cfg: &RunConfig,
    prepared: &Prepared,
    bicop: FitOptions,
) -> CliResult<(DVineRegressionModel, Option<SelectionTrace>)> {
    if prepared.covariates.is_empty() {
        eprintln!("warning: no covariates configured; fitting the marginal model only");
        let r = &prepared.response;
        return Ok((DVineRegressionModel::marginal(VariableSpec { name: r.name.clone(), margin: r.margin.clone() }), None));
    }
    let (model, trace) = fit_dvine_regression(&prepared.response, &prepared.covariates, &cfg.vine_options(bicop))
        .map_err(|e| match e {
            vinerisk::Error::InsufficientData(m) => CliError::InsufficientData(m),
            vinerisk::Error::Usage(m) => CliError::Input(m),
            other => CliError::Numerical(format!("vine fit: {other}")),
        })?;
    Ok((model, Some(trace)))
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn load_model(path: &Path) -> CliResult<DVineRegressionModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read model {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub(crate) fn pct(count: usize, n: usize) -> f64 {
    if n == 0 { 0.0 } else { 100.0 * count as f64 / n as f64 }
}
