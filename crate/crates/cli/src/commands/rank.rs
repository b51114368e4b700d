use super::{write_json, write_text};
use crate::commands::AssessOutput;
use crate::config::{RunConfig, StandardizeOver};
use crate::data::Table;
use crate::error::{CliError, CliResult};
use std::path::PathBuf;
use vinerisk::risk::{ols_rank, standardize, RankingResult};

#[derive(Debug, Clone)]
pub struct RankArgs {
    pub report: PathBuf,
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    /// Refit on the `top` highest-ranked factors.
    pub top: Option<usize>,
    /// Standardize over the full sample instead of the risky subgroup.
    pub full_sample: bool,
    pub out: PathBuf,
}

fn standardized(cols: &[Vec<f64>], names: &[String]) -> CliResult<Vec<Vec<f64>>> {
    standardize(cols, names).map_err(|e| match e {
        vinerisk::Error::InsufficientData(m) => CliError::InsufficientData(m),
        other => CliError::Input(other.to_string()),
    })
}

fn rank_on(
    eta: &[f64],
    rows: &[usize],
    data: &[Vec<f64>],
    names: &[String],
    over: StandardizeOver,
) -> CliResult<RankingResult> {
    if rows.len() < names.len() + 2 {
        return Err(CliError::InsufficientData(format!(
            "{} risky rows cannot support a regression on {} factors",
            rows.len(),
            names.len()
        )));
    }
    let z = match over {
        StandardizeOver::Risky => {
            let sub: Vec<Vec<f64>> = data.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect();
            standardized(&sub, names)?
        }
        StandardizeOver::Full => {
            let full = standardized(data, names)?;
            full.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect()
        }
    };
    Ok(ols_rank(eta, &z, names)?)
}

/// Regresses the log-odds of the risky records' probabilities on their
/// standardized factors. Writes the table to `out` and the results to
/// `out` with a `.json` extension.
pub fn cmd_rank(args: &RankArgs) -> CliResult<Vec<RankingResult>> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| CliError::input(format!("cannot read report {}: {e}", args.report.display())))?;
    let assessed: AssessOutput = serde_json::from_str(&text)?;
    let table = Table::read(&args.data)?;
    if table.n_rows() != assessed.report.records.len() {
        return Err(CliError::input(format!(
            "report has {} records but data has {} rows",
            assessed.report.records.len(),
            table.n_rows()
        )));
    }
    let names = assessed.covariates.clone();
    let headers: Vec<&str> = names.iter().map(|n| cfg.column_name(n)).collect();
    let data = table.require(&headers)?;
    let (rows, eta): (Vec<usize>, Vec<f64>) =
        assessed.report.records.iter().filter(|r| r.risky).filter_map(|r| r.logit.map(|l| (r.row, l))).unzip();
    let over = if args.full_sample { StandardizeOver::Full } else { cfg.standardize_over };
    let full = rank_on(&eta, &rows, &data, &names, over)?;
    let mut text = format!("risky records: {}\n\n{}", rows.len(), full.table());
    let mut results = vec![full];
    if let Some(k) = args.top.filter(|&k| k > 0 && k < names.len()) {
        let top: Vec<String> = results[0].ranking[..k].to_vec();
        let cols: Vec<Vec<f64>> = top.iter().map(|t| data[names.iter().position(|n| n == t).expect("ranked")].clone()).collect();
        let reduced = rank_on(&eta, &rows, &cols, &top, over)?;
        text.push_str(&format!("\ntop {k} factors\n{}", reduced.table()));
        results.push(reduced);
    }
    write_text(&args.out, &text)?;
    write_json(&args.out.with_extension("json"), &results)?;
    print!("{text}");
    Ok(results)
}
