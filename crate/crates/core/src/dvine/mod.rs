//! D-vine regression of a response on an ordered set of covariates.
//!
//! Variables are laid out on a path `V – U_{k₁} – … – U_{k_m}` with the
//! response at position 0. Tree `t` (1-based) holds `m + 1 − t` edges; edge
//! `a` of tree `t` couples positions `a` and `a + t` given everything
//! strictly between them, with position `a` as the copula's first argument.

mod select;
mod summary;

pub use select::{
    fit_dvine_regression, CandidateScore, Criterion, DVineFitOptions, SelectionStep, SelectionTrace, StopReason,
    Variable,
};

use crate::bicop::{clamp_pit, BivariateCopula, FamilyTag, Rotation};
use crate::error::{domain, usage, Error, Result};
use crate::margins::MarginalModel;
use crate::numeric::special::chi2_sf;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Name and margin of one modelled variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub margin: MarginalModel,
}

/// Per-step summary of a forward selection, one row per selected covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub name: String,
    /// Column index of the covariate in the input data.
    pub column: usize,
    /// Conditioning covariates, most recently added first.
    pub conditioning: Vec<String>,
    pub copula: BivariateCopula,
    pub tau: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub n: usize,
    pub steps: Vec<StepStats>,
    /// Pair log-likelihood of every edge, indexed like the trees.
    pub edge_loglik: Vec<Vec<f64>>,
    pub cll: f64,
    pub cll_aic: f64,
    pub cll_bic: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    response: VariableSpec,
    covariates: Vec<VariableSpec>,
    trees: Vec<Vec<BivariateCopula>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit_stats: Option<FitStats>,
}

/// A fitted (or hand-built) D-vine regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct DVineRegressionModel {
    response: VariableSpec,
    covariates: Vec<VariableSpec>,
    trees: Vec<Vec<BivariateCopula>>,
    /// Response edges with the first argument reflected, for survival chains.
    reflected: Vec<BivariateCopula>,
    fit_stats: Option<FitStats>,
}

impl TryFrom<ModelRepr> for DVineRegressionModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let mut m = DVineRegressionModel::new(r.response, r.covariates, r.trees)?;
        m.fit_stats = r.fit_stats;
        Ok(m)
    }
}

impl From<DVineRegressionModel> for ModelRepr {
    fn from(m: DVineRegressionModel) -> Self {
        ModelRepr { response: m.response, covariates: m.covariates, trees: m.trees, fit_stats: m.fit_stats }
    }
}

/// Result of a likelihood-ratio comparison of nested models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl DVineRegressionModel {
    /// `trees[t][a]` couples positions `a` and `a + t + 1`.
    pub fn new(response: VariableSpec, covariates: Vec<VariableSpec>, trees: Vec<Vec<BivariateCopula>>) -> Result<Self> {
        let m = covariates.len();
        if trees.len() != m {
            return domain(format!("{m} covariates need {m} trees, got {}", trees.len()));
        }
        for (t, tree) in trees.iter().enumerate() {
            if tree.len() != m - t {
                return domain(format!("tree {} must have {} edges, got {}", t + 1, m - t, tree.len()));
            }
        }
        let reflected = trees.iter().map(|tree| tree[0].reflect_first()).collect();
        Ok(DVineRegressionModel { response, covariates, trees, reflected, fit_stats: None })
    }

    /// Model without covariates: predicts the response margin.
    pub fn marginal(response: VariableSpec) -> Self {
        DVineRegressionModel { response, covariates: vec![], trees: vec![], reflected: vec![], fit_stats: None }
    }

    pub(crate) fn with_stats(mut self, stats: FitStats) -> Self {
        self.fit_stats = Some(stats);
        self
    }

    pub fn response(&self) -> &VariableSpec {
        &self.response
    }

    /// Covariates in vine order `k₁, …, k_m`.
    pub fn covariates(&self) -> &[VariableSpec] {
        &self.covariates
    }

    pub fn covariate_names(&self) -> Vec<&str> {
        self.covariates.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.covariates.len()
    }

    pub fn trees(&self) -> &[Vec<BivariateCopula>] {
        &self.trees
    }

    pub fn fit_stats(&self) -> Option<&FitStats> {
        self.fit_stats.as_ref()
    }

    /// Total number of copula parameters.
    pub fn n_params(&self) -> usize {
        self.trees.iter().flatten().map(|c| c.n_params()).sum()
    }

    /// The sub-model on the first `j` covariates.
    pub fn truncated(&self, j: usize) -> Result<Self> {
        if j > self.dim() {
            return usage(format!("cannot keep {j} of {} covariates", self.dim()));
        }
        let trees = self.trees[..j].iter().enumerate().map(|(t, tree)| tree[..j - t].to_vec()).collect();
        let mut out = DVineRegressionModel::new(self.response.clone(), self.covariates[..j].to_vec(), trees)?;
        if let Some(stats) = &self.fit_stats {
            let steps: Vec<StepStats> = stats.steps[..j].to_vec();
            let cll: f64 = steps.iter().map(|s| s.loglik).sum();
            let k = out.n_params() as f64;
            let edge_loglik =
                stats.edge_loglik[..j].iter().enumerate().map(|(t, row)| row[..j - t].to_vec()).collect();
            out.fit_stats = Some(FitStats {
                n: stats.n,
                steps,
                edge_loglik,
                cll,
                cll_aic: -2.0 * cll + 2.0 * k,
                cll_bic: -2.0 * cll + (stats.n as f64).ln() * k,
            });
        }
        Ok(out)
    }

    /// Precomputes the covariate-side conditioning values for one record.
    ///
    /// `x` holds the covariates on their original scale, in vine order.
    pub fn condition(&self, x: &[f64]) -> Result<ConditionedVine<'_>> {
        if x.len() != self.dim() {
            return usage(format!("expected {} covariate values, got {}", self.dim(), x.len()));
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return usage(format!("covariate '{}' is missing", self.covariates[i].name));
        }
        let u: Vec<f64> = x.iter().zip(&self.covariates).map(|(&xi, c)| clamp_pit(c.margin.cdf(xi))).collect();
        Ok(ConditionedVine { model: self, cond: self.conditioning_from_pit(&u) })
    }

    /// Like [`condition`](Self::condition) with covariates already on the copula scale.
    pub fn condition_pit(&self, u: &[f64]) -> Result<ConditionedVine<'_>> {
        if u.len() != self.dim() {
            return usage(format!("expected {} covariate values, got {}", self.dim(), u.len()));
        }
        let u: Vec<f64> = u.iter().map(|&v| clamp_pit(v)).collect();
        Ok(ConditionedVine { model: self, cond: self.conditioning_from_pit(&u) })
    }

    /// `F(U_{k_b} | U_{k_1}, …, U_{k_{b−1}})` for `b = 1..m`, from covariate PITs.
    pub fn conditioning_from_pit(&self, u: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let mut out = Vec::with_capacity(m);
        // lefts[a] = F(a | a+1..b−1) for covariate positions 1 ≤ a < b.
        let mut lefts = vec![0.0; m + 1];
        for b in 1..=m {
            let mut r = u[b - 1];
            for t in 1..b {
                let a = b - t;
                let edge = &self.trees[t - 1][a];
                let xa = lefts[a];
                lefts[a] = edge.h1_2(xa, r);
                r = edge.h2_1(xa, r);
            }
            lefts[b] = u[b - 1];
            out.push(r);
        }
        out
    }

    /// Conditional CDF of the response at `y` given covariates `x`.
    pub fn conditional_cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        Ok(self.condition(x)?.cdf(y))
    }

    pub fn conditional_quantile(&self, alpha: f64, x: &[f64]) -> Result<f64> {
        Ok(self.condition(x)?.quantile(alpha))
    }

    /// `P(Y > c | x)`, accurate far into the upper tail.
    pub fn exceedance(&self, c: f64, x: &[f64]) -> Result<f64> {
        Ok(self.condition(x)?.exceedance(c))
    }

    fn check_columns(&self, y: &[f64], x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.dim() {
            return usage(format!("expected {} covariate columns, got {}", self.dim(), x.len()));
        }
        if x.iter().any(|c| c.len() != y.len()) {
            return usage("covariate columns and response differ in length");
        }
        Ok(())
    }

    /// Conditional log-likelihood `Σᵢ ln c_{V|U}(v̂ᵢ | ûᵢ)`.
    ///
    /// `x` holds covariate columns in vine order.
    pub fn cll(&self, y: &[f64], x: &[Vec<f64>]) -> Result<f64> {
        self.check_columns(y, x)?;
        let mut total = 0.0;
        let mut row = vec![0.0; self.dim()];
        for i in 0..y.len() {
            for (j, col) in x.iter().enumerate() {
                row[j] = col[i];
            }
            total += self.condition(&row)?.ln_density_pit(clamp_pit(self.response.margin.cdf(y[i])));
        }
        Ok(total)
    }

    pub fn cll_aic(&self, y: &[f64], x: &[Vec<f64>]) -> Result<f64> {
        Ok(-2.0 * self.cll(y, x)? + 2.0 * self.n_params() as f64)
    }

    pub fn cll_bic(&self, y: &[f64], x: &[Vec<f64>]) -> Result<f64> {
        Ok(-2.0 * self.cll(y, x)? + (y.len() as f64).ln() * self.n_params() as f64)
    }

    /// Whether `self` is `bigger` with its last covariate removed.
    fn is_prefix_of(&self, bigger: &DVineRegressionModel) -> bool {
        let m = self.dim();
        bigger.dim() == m + 1
            && self.response == bigger.response
            && self.covariates[..] == bigger.covariates[..m]
            && self.trees.iter().zip(&bigger.trees).all(|(a, b)| a[..] == b[..a.len()])
    }

    /// Likelihood-ratio test of `smaller` against `bigger`, which adds one covariate.
    pub fn lr_test(smaller: &Self, bigger: &Self, y: &[f64], x_bigger: &[Vec<f64>]) -> Result<LrTest> {
        if !smaller.is_prefix_of(bigger) {
            return usage("likelihood-ratio test needs nested models differing by the last covariate");
        }
        let m = smaller.dim();
        let statistic = 2.0 * (bigger.cll(y, x_bigger)? - smaller.cll(y, &x_bigger[..m])?);
        let df = bigger.trees[m][0].n_params();
        Ok(LrTest { statistic, df, p_value: lr_p_value(statistic, df) })
    }

    /// Draws `n` records; returns the response and the covariate columns in vine order.
    pub fn simulate(&self, n: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let pits = self.simulate_pit(n, seed);
        let y = pits[0].iter().map(|&u| self.response.margin.quantile(u)).collect();
        let x = self
            .covariates
            .iter()
            .zip(&pits[1..])
            .map(|(c, col)| col.iter().map(|&u| c.margin.quantile(u)).collect())
            .collect();
        (y, x)
    }

    /// Draws `n` records on the copula scale: `m + 1` columns, response first.
    pub fn simulate_pit(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::with_capacity(n); m + 1];
        let mut lefts = vec![0.0; m + 1];
        let mut chain = vec![0.0; m + 1];
        for _ in 0..n {
            lefts[0] = crate::bicop::open_uniform(&mut rng);
            cols[0].push(lefts[0]);
            for b in 1..=m {
                // chain[t] = F(b | b−t..b−1); the draw fixes chain[b].
                chain[b] = crate::bicop::open_uniform(&mut rng);
                for t in (1..=b).rev() {
                    let a = b - t;
                    chain[t - 1] = self.trees[t - 1][a].hinv2_1(chain[t], lefts[a]);
                }
                for t in 1..=b {
                    let a = b - t;
                    lefts[a] = self.trees[t - 1][a].h1_2(lefts[a], chain[t - 1]);
                }
                lefts[b] = chain[0];
                cols[b].push(chain[0]);
            }
        }
        cols
    }

    /// Fixed-width table of the forward-selection steps.
    pub fn summary_table(&self) -> String {
        summary::selection_table(self)
    }

    /// Fixed-width listing of every edge of the vine.
    pub fn edge_table(&self) -> String {
        summary::edge_table(self)
    }
}

/// Gaussian D-vine trees whose joint law has correlation matrix `corr`,
/// given in path order (response first).
pub fn gaussian_trees(corr: &[Vec<f64>]) -> Result<Vec<Vec<BivariateCopula>>> {
    let d = corr.len();
    if corr.iter().any(|r| r.len() != d) {
        return domain("correlation matrix must be square");
    }
    let mut trees = Vec::with_capacity(d.saturating_sub(1));
    for t in 1..d {
        let mut tree = Vec::with_capacity(d - t);
        for a in 0..d - t {
            let b = a + t;
            let idx: Vec<usize> = [a, b].into_iter().chain(a + 1..b).collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| corr[idx[i]][idx[j]]);
            let prec = sub
                .try_inverse()
                .ok_or_else(|| Error::Domain("correlation matrix is singular".into()))?;
            let rho = -prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt();
            tree.push(BivariateCopula::new(FamilyTag::Gaussian, Rotation::R0, &[rho])?);
        }
        trees.push(tree);
    }
    Ok(trees)
}

pub(crate) fn lr_p_value(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        1.0
    } else {
        chi2_sf(statistic.max(0.0), df as f64)
    }
}

/// A model with its conditioning values fixed for one covariate record.
#[derive(Debug, Clone)]
pub struct ConditionedVine<'a> {
    model: &'a DVineRegressionModel,
    cond: Vec<f64>,
}

impl ConditionedVine<'_> {
    pub fn conditioning_values(&self) -> &[f64] {
        &self.cond
    }

    /// `C_{V|U}(v | u)` on the copula scale.
    pub fn cdf_pit(&self, v: f64) -> f64 {
        self.model.trees.iter().zip(&self.cond).fold(v, |w, (tree, &z)| tree[0].h1_2(w, z))
    }

    /// `1 − C_{V|U}(1 − s | u)` computed through the reflected chain.
    pub fn survival_pit(&self, s: f64) -> f64 {
        self.model.reflected.iter().zip(&self.cond).fold(s, |w, (cop, &z)| cop.h1_2(w, z))
    }

    pub fn quantile_pit(&self, alpha: f64) -> f64 {
        self.model.trees.iter().zip(&self.cond).rev().fold(alpha, |w, (tree, &z)| tree[0].hinv1_2(w, z))
    }

    /// Log conditional density of the response PIT.
    pub fn ln_density_pit(&self, v: f64) -> f64 {
        let mut w = v;
        let mut total = 0.0;
        for (tree, &z) in self.model.trees.iter().zip(&self.cond) {
            total += tree[0].ln_pdf(w, z);
            w = tree[0].h1_2(w, z);
        }
        total
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let v = self.model.response.margin.cdf(y);
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        self.cdf_pit(v)
    }

    /// `P(Y > c | x)`.
    pub fn exceedance(&self, c: f64) -> f64 {
        let s = self.model.response.margin.sf(c);
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        self.survival_pit(s)
    }

    /// Conditional quantile; `alpha` outside `(0, 1)` is clamped.
    pub fn quantile(&self, alpha: f64) -> f64 {
        self.quantile_checked(alpha).0
    }

    /// Conditional quantile plus a flag telling whether `alpha` was clamped.
    pub fn quantile_checked(&self, alpha: f64) -> (f64, bool) {
        let clamped = !(alpha > 0.0 && alpha < 1.0);
        let a = if alpha.is_nan() { 0.5 } else { alpha.clamp(1e-300, 1.0 - 1e-16) };
        (self.model.response.margin.quantile(self.quantile_pit(a)), clamped)
    }
}
