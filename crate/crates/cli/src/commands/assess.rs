use super::{ensure_dir, load_model, pct, write_json, write_text};
use crate::config::RunConfig;
use crate::data::{rows_in_order, Table};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;
use vinerisk::risk::{identify_risky, RiskReport};

#[derive(Debug, Clone)]
pub struct AssessArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    /// Overrides the configured thresholds when nonempty.
    pub thresholds: Vec<f64>,
    pub p_threshold: Option<f64>,
    pub out: PathBuf,
}

/// One threshold's report together with the covariate order it was computed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessOutput {
    pub response: String,
    pub covariates: Vec<String>,
    pub report: RiskReport,
}

/// Writes `risk_<c>.csv` and `risk_<c>.json` per threshold plus `counts.csv`.
pub fn cmd_assess(args: &AssessArgs) -> CliResult<Vec<AssessOutput>> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let model = load_model(&args.model)?;
    let table = Table::read(&args.data)?;
    let thresholds = if args.thresholds.is_empty() { cfg.thresholds.clone() } else { args.thresholds.clone() };
    if thresholds.iter().any(|c| !c.is_finite()) {
        return Err(CliError::input("thresholds must be finite"));
    }
    let p_threshold = args.p_threshold.unwrap_or(cfg.p_threshold);
    if !(p_threshold > 0.0 && p_threshold < 1.0) {
        return Err(CliError::input("p-threshold must lie in (0, 1)"));
    }
    let order = model.covariate_names();
    let rows = rows_in_order(&table, &order, &cfg.rename)?;
    ensure_dir(&args.out)?;
    let mut counts = String::from("threshold,n,risky,risky_pct,above_floor,above_floor_pct,max_alpha\n");
    let mut outputs = Vec::with_capacity(thresholds.len());
    for &c in &thresholds {
        let report = identify_risky(&model, &rows, c, p_threshold, cfg.floor)?;
        let n = report.records.len();
        let _ = writeln!(
            counts,
            "{c},{n},{},{:.2},{},{:.2},{:e}",
            report.n_risky,
            pct(report.n_risky, n),
            report.n_above_floor,
            pct(report.n_above_floor, n),
            report.max_alpha()
        );
        write_text(&args.out.join(format!("risk_{c}.csv")), &report.to_csv())?;
        let output = AssessOutput {
            response: model.response().name.clone(),
            covariates: order.iter().map(|s| s.to_string()).collect(),
            report,
        };
        write_json(&args.out.join(format!("risk_{c}.json")), &output)?;
        outputs.push(output);
    }
    write_text(&args.out.join("counts.csv"), &counts)?;
    print!("{counts}");
    Ok(outputs)
}
