use super::load_model;
use crate::config::RunConfig;
use crate::data::write_columns;
use crate::error::{CliError, CliResult};
use crate::reference::reference_model;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub n: usize,
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

/// Draws `n` rows from the configured ground-truth model, or the built-in
/// reference model, and writes them as CSV with configured column names.
pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.n == 0 {
        return Err(CliError::input("n must be positive"));
    }
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let model = match &cfg.simulate.model {
        Some(path) => load_model(path)?,
        None => reference_model()?,
    };
    let (y, x) = model.simulate(args.n, args.seed);
    let mut names = vec![cfg.column_name(&model.response().name).to_string()];
    names.extend(model.covariate_names().iter().map(|n| cfg.column_name(n).to_string()));
    let mut cols = vec![y];
    cols.extend(x);
    write_columns(&args.out, &names, &cols)?;
    eprintln!("wrote {} rows to {}", args.n, args.out.display());
    Ok(())
}
