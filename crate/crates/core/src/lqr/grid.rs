use super::{fit_lqr, LqrData, QuantileRegressionFit};
use crate::error::{domain, usage, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

type Coefficients = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Data(Arc<LqrData>),
    Analytic(Coefficients),
}

/// Quantile regression fits on strictly increasing levels. Levels off the
/// grid are fitted on demand and cached.
pub struct QuantileGrid {
    levels: Vec<f64>,
    fits: Vec<QuantileRegressionFit>,
    source: Source,
    extra: Mutex<BTreeMap<u64, Arc<Vec<f64>>>>,
}

impl fmt::Debug for QuantileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileGrid").field("levels", &self.levels).finish_non_exhaustive()
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return usage("quantile grid needs at least one level");
    }
    if levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return domain("quantile levels must lie in (0, 1)");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return domain("quantile levels must be strictly increasing");
    }
    Ok(())
}

impl QuantileGrid {
    /// Fits every level on `data`, in parallel.
    pub fn fit(data: LqrData, levels: &[f64]) -> Result<Self> {
        check_levels(levels)?;
        let fits = levels.par_iter().map(|&a| fit_lqr(&data, a)).collect::<Result<Vec<_>>>()?;
        Ok(Self { levels: levels.to_vec(), fits, source: Source::Data(Arc::new(data)), extra: Mutex::default() })
    }

    /// Grid whose coefficients at level `α` are `coefficients(α)`, intercept first.
    pub fn analytic<F>(levels: &[f64], names: &[String], coefficients: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        check_levels(levels)?;
        let fits = levels
            .iter()
            .map(|&alpha| {
                let beta = coefficients(alpha);
                if beta.len() != names.len() + 1 {
                    return usage("coefficient function returned the wrong length");
                }
                Ok(QuantileRegressionFit {
                    alpha,
                    names: names.to_vec(),
                    coefficients: beta,
                    std_errors: None,
                    bootstrap: None,
                    n: 0,
                    loss: f64::NAN,
                    pivots: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels: levels.to_vec(),
            fits,
            source: Source::Analytic(Arc::new(coefficients)),
            extra: Mutex::default(),
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn fits(&self) -> &[QuantileRegressionFit] {
        &self.fits
    }

    pub fn fit_at(&self, alpha: f64) -> Option<&QuantileRegressionFit> {
        self.levels.iter().position(|&a| a == alpha).map(|k| &self.fits[k])
    }

    /// Coefficients at any level in `(0, 1)`.
    pub fn coefficients_at(&self, alpha: f64) -> Result<Arc<Vec<f64>>> {
        if let Some(f) = self.fit_at(alpha) {
            return Ok(Arc::new(f.coefficients.clone()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {alpha}"));
        }
        if let Some(b) = self.extra.lock().expect("cache poisoned").get(&alpha.to_bits()) {
            return Ok(b.clone());
        }
        let beta = Arc::new(match &self.source {
            Source::Data(d) => fit_lqr(d, alpha)?.coefficients,
            Source::Analytic(f) => f(alpha),
        });
        self.extra.lock().expect("cache poisoned").insert(alpha.to_bits(), beta.clone());
        Ok(beta)
    }

    pub fn predict_at_level(&self, alpha: f64, x: &[f64]) -> Result<f64> {
        let beta = self.coefficients_at(alpha)?;
        if x.len() + 1 != beta.len() {
            return usage(format!("expected {} covariates, got {}", beta.len() - 1, x.len()));
        }
        Ok(beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    /// Predictions at every grid level.
    pub fn grid_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.fits.iter().map(|f| f.predict(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    /// Initial lower level.
    pub a: f64,
    /// Initial upper level.
    pub b: f64,
    /// Step as a fraction of the current bracket width.
    pub delta: f64,
    /// Target bracket width on the level scale.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self { a: 0.01, b: 0.99, delta: 0.5, tol: 1e-6, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionHit {
    pub alpha: f64,
    /// Quantile prediction at `alpha`.
    pub prediction: f64,
    /// `prediction − c`.
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InversionMiss {
    /// `c` exceeds every grid prediction.
    AboveSpan { max_prediction: f64 },
    /// `c` lies below every grid prediction.
    BelowSpan { min_prediction: f64 },
    /// Crossing quantile lines reach `c` on several disjoint level intervals.
    MultipleSolutions { brackets: Vec<(f64, f64)> },
    /// Predictions decrease across the current bracket.
    NonMonotone { bracket: (f64, f64) },
    MaxIterations { bracket: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Inversion {
    Found(InversionHit),
    NotFound(InversionMiss),
}

impl Inversion {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Inversion::Found(h) => Some(h.alpha),
            Inversion::NotFound(_) => None,
        }
    }
}

/// Level intervals on which the grid predictions reach `c`.
fn solution_brackets(levels: &[f64], preds: &[f64], c: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if out.last().is_none_or(|&(_, h)| h < lo) {
            out.push((lo, hi));
        }
    };
    for k in 0..levels.len() {
        if preds[k] == c {
            push(levels[k], levels[k]);
        }
        if k + 1 < levels.len() && (preds[k] - c) * (preds[k + 1] - c) < 0.0 {
            push(levels[k], levels[k + 1]);
        }
    }
    out
}

/// Finds the level `α` with `q_α(x) = c` by expanding and contracting a
/// bracket `(a, b)` within the grid span.
pub fn invert_lqr_bisection(grid: &QuantileGrid, c: f64, x: &[f64], opts: &BisectionOptions) -> Result<Inversion> {
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return domain("delta must lie in (0, 1)");
    }
    if !(opts.tol > 0.0) || !(opts.a < opts.b) {
        return domain("bisection needs tol > 0 and a < b");
    }
    let levels = grid.levels();
    let preds = grid.grid_predictions(x)?;
    let max_prediction = preds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_prediction = preds.iter().copied().fold(f64::INFINITY, f64::min);
    if c > max_prediction {
        return Ok(Inversion::NotFound(InversionMiss::AboveSpan { max_prediction }));
    }
    if c < min_prediction {
        return Ok(Inversion::NotFound(InversionMiss::BelowSpan { min_prediction }));
    }
    let brackets = solution_brackets(levels, &preds, c);
    if brackets.len() > 1 {
        return Ok(Inversion::NotFound(InversionMiss::MultipleSolutions { brackets }));
    }
    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
    let mut a = opts.a.clamp(lo, hi);
    let mut b = opts.b.clamp(lo, hi);
    let hit = |alpha: f64, q: f64, bracket, iterations| {
        Inversion::Found(InversionHit { alpha, prediction: q, residual: q - c, bracket, iterations })
    };
    for it in 0..opts.max_iter {
        let qa = grid.predict_at_level(a, x)?;
        let qb = grid.predict_at_level(b, x)?;
        if qa == c {
            return Ok(hit(a, qa, (a, b), it));
        }
        if qb == c {
            return Ok(hit(b, qb, (a, b), it));
        }
        if qa > qb {
            return Ok(Inversion::NotFound(InversionMiss::NonMonotone { bracket: (a, b) }));
        }
        if qa < c && c < qb {
            if b - a <= opts.tol {
                let m = 0.5 * (a + b);
                return Ok(hit(m, grid.predict_at_level(m, x)?, (a, b), it));
            }
            let m = a + opts.delta * (b - a);
            if grid.predict_at_level(m, x)? < c {
                a = m;
            } else {
                b = m;
            }
        } else {
            if a <= lo && b >= hi {
                return Ok(Inversion::NotFound(InversionMiss::NonMonotone { bracket: (a, b) }));
            }
            let step = opts.delta * (b - a);
            a = (a - step).max(lo);
            b = (b + step).min(hi);
        }
    }
    Ok(Inversion::NotFound(InversionMiss::MaxIterations { bracket: (a, b) }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCrossing {
    pub row: usize,
    /// Level pairs `(α₁, α₂)`, `α₁ < α₂`, whose predictions are inverted.
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub rows_checked: usize,
    pub crossings: Vec<RowCrossing>,
    pub n_pairs: usize,
}

impl CrossingReport {
    pub fn n_rows_crossing(&self) -> usize {
        self.crossings.len()
    }
}

/// Flags every covariate vector at which a lower level predicts above a higher one.
pub fn detect_quantile_crossing(grid: &QuantileGrid, xs: &[Vec<f64>]) -> Result<CrossingReport> {
    if grid.levels().len() < 2 {
        return usage("crossing detection needs at least two levels");
    }
    let levels = grid.levels();
    let per_row = xs
        .par_iter()
        .map(|x| {
            let preds = grid.grid_predictions(x)?;
            let mut pairs = Vec::new();
            for i in 0..preds.len() {
                for j in i + 1..preds.len() {
                    if preds[i] > preds[j] {
                        pairs.push((levels[i], levels[j]));
                    }
                }
            }
            Ok(pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    let crossings: Vec<RowCrossing> = per_row
        .into_iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(row, pairs)| RowCrossing { row, pairs })
        .collect();
    Ok(CrossingReport {
        rows_checked: xs.len(),
        n_pairs: crossings.iter().map(|c| c.pairs.len()).sum(),
        crossings,
    })
}
