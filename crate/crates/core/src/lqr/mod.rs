//! Linear quantile regression: check-loss fits, bootstrap standard errors,
//! quantile grids with bisection inversion, and quantile-crossing checks.

mod grid;
mod solver;

pub use grid::{
    detect_quantile_crossing, invert_lqr_bisection, BisectionOptions, CrossingReport, Inversion, InversionHit,
    InversionMiss, QuantileGrid, RowCrossing,
};

use crate::error::{domain, usage, Error, Result};
use crate::numeric::linalg::ensure_full_rank;
use crate::numeric::special::t_cdf;
use crate::numeric::stats::sample_sd;
use crate::risk::stars;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub const DEFAULT_REPLICATES: usize = 500;
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 2021;

/// Asymmetric absolute loss `ρ_α(r)`.
pub fn check_loss(residual: f64, alpha: f64) -> f64 {
    if residual >= 0.0 { alpha * residual } else { (alpha - 1.0) * residual }
}

/// Response and design for quantile regression. The design carries an
/// implicit leading intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrData {
    y: Vec<f64>,
    rows: Vec<f64>,
    p: usize,
    names: Vec<String>,
}

impl LqrData {
    pub fn new(y: &[f64], columns: &[Vec<f64>], names: &[String]) -> Result<Self> {
        let n = y.len();
        let d = columns.len();
        if names.len() != d {
            return usage("one name per covariate column required");
        }
        if columns.iter().any(|c| c.len() != n) {
            return usage("covariate columns and response differ in length");
        }
        if n <= d + 1 {
            return Err(Error::InsufficientData(format!("{d} covariates need more than {} rows, got {n}", d + 1)));
        }
        if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return domain("quantile regression data must be finite");
        }
        let mut all = vec![vec![1.0; n]];
        all.extend(columns.iter().cloned());
        let mut all_names = vec!["(Intercept)".to_string()];
        all_names.extend(names.iter().cloned());
        ensure_full_rank(&all, &all_names)?;
        let p = d + 1;
        let mut rows = Vec::with_capacity(n * p);
        for i in 0..n {
            rows.extend(all.iter().map(|c| c[i]));
        }
        Ok(Self { y: y.to_vec(), rows, p, names: names.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of coefficients, intercept included.
    pub fn n_coefficients(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }

    pub(crate) fn fitted(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }

    /// Empirical check loss of `beta` at level `alpha`.
    pub fn loss(&self, beta: &[f64], alpha: f64) -> f64 {
        (0..self.n()).map(|i| check_loss(self.y[i] - self.fitted(i, beta), alpha)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub replicates: usize,
    pub failed: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRegressionFit {
    pub alpha: f64,
    pub names: Vec<String>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub bootstrap: Option<BootstrapInfo>,
    pub n: usize,
    pub loss: f64,
    /// Simplex pivots taken after the warm start.
    pub pivots: usize,
}

impl QuantileRegressionFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.coefficients.len() {
            return usage(format!("expected {} covariates, got {}", self.coefficients.len() - 1, x.len()));
        }
        Ok(self.intercept() + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    /// Two-sided p-values from `estimate / std_error` against Student t with `n − p` df.
    pub fn p_values(&self) -> Option<Vec<f64>> {
        let se = self.std_errors.as_ref()?;
        let df = (self.n - self.coefficients.len()) as f64;
        Some(
            self.coefficients
                .iter()
                .zip(se)
                .map(|(b, s)| if *s > 0.0 { 2.0 * t_cdf(-(b / s).abs(), df) } else { f64::NAN })
                .collect(),
        )
    }

    pub fn table(&self) -> String {
        coefficient_table(&[self])
    }
}

/// Minimizes the empirical check loss at level `alpha`.
pub fn fit_lqr(data: &LqrData, alpha: f64) -> Result<QuantileRegressionFit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {alpha}"));
    }
    let idx: Vec<usize> = (0..data.n()).collect();
    let weights = vec![1.0; data.n()];
    let (beta, pivots) = solver::solve(data, &idx, &weights, alpha)?;
    Ok(QuantileRegressionFit {
        alpha,
        names: data.names.clone(),
        loss: data.loss(&beta, alpha),
        coefficients: beta,
        std_errors: None,
        bootstrap: None,
        n: data.n(),
        pivots,
    })
}

/// Fit plus case-resampling bootstrap standard errors.
pub fn fit_lqr_bootstrap(data: &LqrData, alpha: f64, replicates: usize, seed: u64) -> Result<QuantileRegressionFit> {
    let mut fit = fit_lqr(data, alpha)?;
    if replicates < 2 {
        return usage("bootstrap needs at least two replicates");
    }
    let n = data.n();
    let draws: Vec<Option<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let idx: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
            let w: Vec<f64> = idx.iter().map(|&i| counts[i] as f64).collect();
            solver::solve(data, &idx, &w, alpha).ok().map(|(beta, _)| beta)
        })
        .collect();
    let ok: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::Numerical("too few successful bootstrap replicates".into()));
    }
    let se = (0..data.p)
        .map(|j| sample_sd(&ok.iter().map(|b| b[j]).collect::<Vec<_>>()))
        .collect();
    fit.std_errors = Some(se);
    fit.bootstrap = Some(BootstrapInfo { replicates, failed: replicates - ok.len(), seed });
    Ok(fit)
}

/// Side-by-side coefficient table, one block of columns per fit.
pub fn coefficient_table(fits: &[&QuantileRegressionFit]) -> String {
    let mut out = String::new();
    let Some(first) = fits.first() else {
        return out;
    };
    let mut names = vec!["(Intercept)".to_string()];
    names.extend(first.names.iter().cloned());
    let _ = write!(out, "{:<14}", "");
    for f in fits {
        let _ = write!(out, " {:^32}", format!("alpha = {}", f.alpha));
    }
    out.push('\n');
    let _ = write!(out, "{:<14}", "Variable");
    for _ in fits {
        let _ = write!(out, " {:>12} {:>12} {:<6}", "Value", "Std.Error", "");
    }
    out.push('\n');
    let p_values: Vec<Option<Vec<f64>>> = fits.iter().map(|f| f.p_values()).collect();
    for (j, name) in names.iter().enumerate() {
        let _ = write!(out, "{name:<14}");
        for (f, p) in fits.iter().zip(&p_values) {
            let se = f.std_errors.as_ref().map_or("-".to_string(), |s| format!("{:.2}", s[j]));
            let star = p.as_ref().map_or("", |p| if j == 0 { "" } else { stars(p[j]) });
            let _ = write!(out, " {:>12.2} {:>12} {:<6}", f.coefficients[j], se, star);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{:<14} {}", "Observations", first.n);
    let _ = writeln!(out, "Note: * p<0.1; ** p<0.05; *** p<0.01");
    out
}
