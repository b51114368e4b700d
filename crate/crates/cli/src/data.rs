//! Numeric CSV tables with a header row.

use crate::config::{DiscretePolicy, RunConfig};
use crate::error::{CliError, CliResult};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
            return Err(CliError::input(format!("duplicate column '{dup}'")));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, field) in record.iter().enumerate() {
                columns[c].push(field.parse::<f64>().map_err(|_| {
                    CliError::input(format!("row {}, column '{}': '{field}' is not a number", r + 1, headers[c]))
                })?);
            }
        }
        Ok(Table { headers, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|k| self.columns[k].as_slice())
    }

    /// Looks up every column, reporting all missing names at once.
    pub fn require(&self, names: &[&str]) -> CliResult<Vec<Vec<f64>>> {
        let missing: Vec<&str> = names.iter().copied().filter(|n| self.get(n).is_none()).collect();
        if !missing.is_empty() {
            return Err(CliError::input(format!(
                "missing columns: {}; available: {}",
                missing.join(", "),
                self.headers.join(", ")
            )));
        }
        Ok(names.iter().map(|n| self.get(n).expect("checked").to_vec()).collect())
    }

    /// Response and covariate columns named by the configuration, after the
    /// discrete-column policy has been applied.
    pub fn variables(&self, cfg: &RunConfig) -> CliResult<(Vec<f64>, Vec<(String, Vec<f64>)>)> {
        let mut warnings = Vec::new();
        for name in &cfg.discrete {
            if let Some(col) = self.get(cfg.column_name(name)) {
                let constant = col.iter().all(|v| *v == col[0]);
                if !constant && cfg.discrete_policy == DiscretePolicy::Reject {
                    return Err(CliError::input(format!(
                        "discrete column '{name}' is not constant; set discrete_policy = \"ignore\" to skip it"
                    )));
                }
                if !constant {
                    warnings.push(format!("ignoring non-constant discrete column '{name}'"));
                }
            }
        }
        for w in warnings {
            eprintln!("warning: {w}");
        }
        let used: Vec<&String> = cfg.covariates.iter().filter(|c| !cfg.discrete.contains(c)).collect();
        let mut names = vec![cfg.column_name(&cfg.response)];
        names.extend(used.iter().map(|c| cfg.column_name(c)));
        let mut cols = self.require(&names)?;
        if cols[0].is_empty() {
            return Err(CliError::InsufficientData("data file has no rows".into()));
        }
        let y = cols.remove(0);
        Ok((y, used.into_iter().cloned().zip(cols).collect()))
    }
}

/// Writes named columns as CSV with shortest round-trip float formatting.
pub fn write_columns(path: &Path, names: &[String], columns: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    let n = columns.first().map_or(0, Vec::len);
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Covariate rows in `order`, read through the configured renaming.
pub fn rows_in_order(table: &Table, order: &[&str], rename: &BTreeMap<String, String>) -> CliResult<Vec<Vec<f64>>> {
    let names: Vec<&str> = order.iter().map(|n| rename.get(*n).map_or(*n, String::as_str)).collect();
    let cols = table.require(&names)?;
    Ok((0..table.n_rows()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_missing_columns() {
        let t = Table::from_reader("th80, lm\n1700,300\n1800.5,310\n".as_bytes()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.get("th80").unwrap(), &[1700.0, 1800.5]);
        let err = t.require(&["th80", "td", "ea"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("td, ea"));
    }

    #[test]
    fn rejects_bad_cells_and_duplicates() {
        assert!(Table::from_reader("a,b\n1,x\n".as_bytes()).is_err());
        assert!(Table::from_reader("a,a\n1,2\n".as_bytes()).is_err());
        assert!(Table::from_reader("a,b\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn discrete_policy() {
        let text = "th80,lm,flaps\n1,2,3\n2,3,4\n";
        let t = Table::from_reader(text.as_bytes()).unwrap();
        let mut cfg = RunConfig { covariates: vec!["lm".into(), "flaps".into()], ..Default::default() };
        cfg.discrete = vec!["flaps".into()];
        assert!(t.variables(&cfg).is_err());
        cfg.discrete_policy = DiscretePolicy::Ignore;
        let (_, covs) = t.variables(&cfg).unwrap();
        assert_eq!(covs.len(), 1);
        let renamed = RunConfig {
            covariates: vec!["landing_mass".into()],
            rename: [("landing_mass".to_string(), "lm".to_string())].into(),
            ..Default::default()
        };
        let (_, covs) = t.variables(&renamed).unwrap();
        assert_eq!(covs[0].0, "landing_mass");
        assert_eq!(covs[0].1, vec![2.0, 3.0]);
    }
}
