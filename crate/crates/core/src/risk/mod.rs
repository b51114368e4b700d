//! Critical-event probabilities and the downstream ranking of risk factors.

use crate::dvine::DVineRegressionModel;
use crate::error::{domain, usage, Error, Result};
use crate::numeric::linalg::ensure_full_rank;
use crate::numeric::special::t_cdf;
use crate::numeric::stats::{mean, sample_sd};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub use crate::numeric::stats::kendall_tau as empirical_kendall_tau;

/// Default reporting cutoff below which an estimate counts as zero.
pub const DEFAULT_FLOOR: f64 = 1e-13;

/// `P(Y > c | X = x)`, with `x` in the model's covariate order.
pub fn critical_event_probability(model: &DVineRegressionModel, c: f64, x: &[f64]) -> Result<f64> {
    if !c.is_finite() {
        return domain("threshold must be finite");
    }
    model.exceedance(c, x)
}

pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("logit needs p in (0, 1), got {p}"));
    }
    Ok(p.ln() - (-p).ln_1p())
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub row: usize,
    pub alpha: f64,
    /// Log-odds of `alpha`; absent when `alpha` is 0 or 1.
    pub logit: Option<f64>,
    pub risky: bool,
    /// `alpha` is at least the reporting floor; otherwise only `[0, floor)` is claimed.
    pub above_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub threshold: f64,
    pub p_threshold: f64,
    pub floor: f64,
    pub records: Vec<RiskRecord>,
    pub n_risky: usize,
    pub n_above_floor: usize,
}

impl RiskReport {
    pub fn max_alpha(&self) -> f64 {
        self.records.iter().map(|r| r.alpha).fold(0.0, f64::max)
    }

    pub fn risky_rows(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.risky).map(|r| r.row).collect()
    }

    /// CSV with header `row,alpha,logit,risky`; sub-floor estimates print as `<floor`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,alpha,logit,risky\n");
        for r in &self.records {
            let alpha = if r.above_floor { format!("{:e}", r.alpha) } else { format!("<{:e}", self.floor) };
            let logit = r.logit.map_or(String::new(), |l| format!("{l}"));
            let _ = writeln!(out, "{},{},{},{}", r.row, alpha, logit, r.risky);
        }
        out
    }
}

/// Evaluates every record against threshold `c`. Rows are covariate vectors
/// in the model's order; results keep the input row order.
pub fn identify_risky(
    model: &DVineRegressionModel,
    rows: &[Vec<f64>],
    c: f64,
    p_threshold: f64,
    floor: f64,
) -> Result<RiskReport> {
    if !(p_threshold > 0.0 && p_threshold <= 1.0) {
        return domain(format!("p_threshold must lie in (0, 1], got {p_threshold}"));
    }
    let alphas: Vec<Result<f64>> = rows.par_iter().map(|x| critical_event_probability(model, c, x)).collect();
    let mut records = Vec::with_capacity(rows.len());
    for (row, a) in alphas.into_iter().enumerate() {
        let alpha = a?;
        records.push(RiskRecord {
            row,
            alpha,
            logit: logit(alpha).ok(),
            risky: alpha > p_threshold,
            above_floor: alpha >= floor,
        });
    }
    Ok(RiskReport {
        threshold: c,
        p_threshold,
        floor,
        n_risky: records.iter().filter(|r| r.risky).count(),
        n_above_floor: records.iter().filter(|r| r.above_floor).count(),
        records,
    })
}

/// Centres each column and scales it to unit sample standard deviation (`n − 1`).
pub fn standardize(columns: &[Vec<f64>], names: &[String]) -> Result<Vec<Vec<f64>>> {
    if columns.len() != names.len() {
        return usage("one name per column required");
    }
    columns
        .iter()
        .zip(names)
        .map(|(col, name)| {
            if col.len() < 2 {
                return Err(Error::InsufficientData(format!("column '{name}' needs at least two values")));
            }
            let m = mean(col);
            let sd = sample_sd(col);
            if !(sd > 0.0) {
                return domain(format!("column '{name}' is constant"));
            }
            Ok(col.iter().map(|v| (v - m) / sd).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    /// Intercept first.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_se: f64,
    pub df_residual: usize,
    pub residuals: Vec<f64>,
    /// Factor names by decreasing absolute coefficient.
    pub ranking: Vec<String>,
}

/// Significance stars: `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

impl RankingResult {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>10} {:>10} {:>9} {:>10}", "", "Estimate", "Std.Error", "t value", "Pr(>|t|)");
        for c in &self.coefficients {
            let _ = writeln!(
                out,
                "{:<14} {:>10.2} {:>10.2} {:>9.2} {:>10.3e} {}",
                c.name,
                c.estimate,
                c.std_error,
                c.t_value,
                c.p_value,
                stars(c.p_value)
            );
        }
        let _ = writeln!(
            out,
            "Residual standard error: {:.3} on {} degrees of freedom",
            self.residual_se, self.df_residual
        );
        let _ = writeln!(out, "R-squared: {:.4}, adjusted R-squared: {:.4}", self.r_squared, self.adj_r_squared);
        let _ = writeln!(out, "Note: *** p<0.01, ** p<0.05, * p<0.1");
        out
    }
}

/// Least-squares fit of `eta` on an intercept plus the columns of `z`.
pub fn ols_rank(eta: &[f64], z: &[Vec<f64>], names: &[String]) -> Result<RankingResult> {
    let n = eta.len();
    let k = z.len();
    if names.len() != k {
        return usage("one name per column required");
    }
    if z.iter().any(|c| c.len() != n) {
        return usage("design columns and response differ in length");
    }
    if n <= k + 1 {
        return Err(Error::InsufficientData(format!("{k} factors need more than {} rows, got {n}", k + 1)));
    }
    let mut cols = vec![vec![1.0; n]];
    cols.extend(z.iter().cloned());
    let mut all_names = vec!["(Intercept)".to_string()];
    all_names.extend(names.iter().cloned());
    ensure_full_rank(&cols, &all_names)?;
    let p = k + 1;
    let x = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    let y = DVector::from_column_slice(eta);
    let qr = x.clone().qr();
    let r = qr.r();
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let beta = &r_inv * (qr.q().transpose() * &y);
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let xtx_inv = &r_inv * r_inv.transpose();
    let y_mean = mean(eta);
    let tss: f64 = eta.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df as f64;
    let coefficients: Vec<Coefficient> = (0..p)
        .map(|j| {
            let se = (sigma2 * xtx_inv[(j, j)]).sqrt();
            let t = beta[j] / se;
            let p_value = if se > 0.0 { 2.0 * t_cdf(-t.abs(), df as f64) } else { 0.0 };
            Coefficient { name: all_names[j].clone(), estimate: beta[j], std_error: se, t_value: t, p_value }
        })
        .collect();
    let mut ranking: Vec<&Coefficient> = coefficients[1..].iter().collect();
    ranking.sort_by(|a, b| b.estimate.abs().total_cmp(&a.estimate.abs()));
    Ok(RankingResult {
        ranking: ranking.into_iter().map(|c| c.name.clone()).collect(),
        coefficients,
        r_squared,
        adj_r_squared,
        residual_se: sigma2.sqrt(),
        df_residual: df,
        residuals: resid.iter().copied().collect(),
    })
}
