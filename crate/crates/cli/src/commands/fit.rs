use super::{ensure_dir, fit_vine, prepare, write_json, write_text};
use crate::config::RunConfig;
use crate::data::Table;
use crate::error::CliResult;
use std::path::PathBuf;
use vinerisk::dvine::DVineRegressionModel;

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

/// Fits margins and the D-vine regression, then writes `model.json`,
/// `summary.txt`, `edges.txt`, `margins.csv` and `selection.json` to `out`.
pub fn cmd_fit(args: &FitArgs) -> CliResult<DVineRegressionModel> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let table = Table::read(&args.data)?;
    let (y, covs) = table.variables(&cfg)?;
    let prepared = prepare(&cfg, y, covs)?;
    let (model, trace) = fit_vine(&cfg, &prepared, cfg.copula_options()?)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("model.json"), &model)?;
    let summary = model.summary_table();
    write_text(&args.out.join("summary.txt"), &summary)?;
    write_text(&args.out.join("edges.txt"), &model.edge_table())?;
    write_text(&args.out.join("margins.csv"), &prepared.margin_report)?;
    if let Some(trace) = &trace {
        write_json(&args.out.join("selection.json"), trace)?;
        let unused: Vec<&str> = prepared
            .covariates
            .iter()
            .map(|c| c.name.as_str())
            .filter(|n| !model.covariate_names().contains(n))
            .collect();
        if !unused.is_empty() {
            eprintln!("not selected: {}", unused.join(", "));
        }
    }
    print!("{summary}");
    Ok(model)
}
