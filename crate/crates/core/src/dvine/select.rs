use super::{lr_p_value, DVineRegressionModel, FitStats, StepStats, VariableSpec};
use crate::bicop::{clamp_pit, fit_bicop, BivariateCopula, FitOptions, PseudoObservations};
use crate::error::{usage, Result};
use crate::margins::MarginalModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Model-selection score used by the forward search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Cll,
    #[default]
    CllAic,
    CllBic,
}

impl Criterion {
    /// Penalized deviance; smaller is better.
    pub fn score(self, cll: f64, n_params: usize, n: usize) -> f64 {
        let k = n_params as f64;
        match self {
            Criterion::Cll => -2.0 * cll,
            Criterion::CllAic => -2.0 * cll + 2.0 * k,
            Criterion::CllBic => -2.0 * cll + (n as f64).ln() * k,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Cll => "cll",
            Criterion::CllAic => "cll_aic",
            Criterion::CllBic => "cll_bic",
        })
    }
}

impl FromStr for Criterion {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cll" => Ok(Criterion::Cll),
            "cll_aic" | "aic" => Ok(Criterion::CllAic),
            "cll_bic" | "bic" => Ok(Criterion::CllBic),
            other => usage(format!("unknown selection criterion '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DVineFitOptions {
    pub bicop: FitOptions,
    pub criterion: Criterion,
    /// Stop after this many covariates.
    pub max_covariates: Option<usize>,
}

impl Default for DVineFitOptions {
    fn default() -> Self {
        DVineFitOptions { bicop: FitOptions::full_catalog(), criterion: Criterion::CllAic, max_covariates: None }
    }
}

/// A data column with its fitted margin.
#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub values: Vec<f64>,
    pub margin: MarginalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub column: usize,
    pub name: String,
    /// Conditional log-likelihood of the model extended by this candidate.
    pub cll: f64,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Criterion of the model before this step.
    pub current: f64,
    pub candidates: Vec<CandidateScore>,
    /// Column index of the covariate added, if any.
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoImprovement,
    AllSelected,
    LimitReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub criterion: Criterion,
    pub steps: Vec<SelectionStep>,
    pub stop: StopReason,
}

/// Per-observation state of a partly built vine.
struct State {
    /// `tail[a] = F(a | a+1..m)` for every position `a`, response at 0.
    tail: Vec<Vec<f64>>,
    trees: Vec<Vec<BivariateCopula>>,
    edge_loglik: Vec<Vec<f64>>,
    cll: f64,
    n_params: usize,
}

struct Candidate {
    column: usize,
    /// New edges, tree 1 first.
    edges: Vec<BivariateCopula>,
    logliks: Vec<f64>,
    new_tail: Vec<Vec<f64>>,
}

fn extend(state: &State, column: usize, pit: &[f64], opts: &FitOptions) -> Result<Candidate> {
    let b = state.tail.len();
    let n = pit.len();
    let mut right = pit.to_vec();
    let mut new_tail: Vec<Vec<f64>> = vec![Vec::new(); b + 1];
    let mut edges = Vec::with_capacity(b);
    let mut logliks = Vec::with_capacity(b);
    for t in 1..=b {
        let a = b - t;
        let left = &state.tail[a];
        let obs = PseudoObservations::new(left.clone(), right.clone())?;
        let fit = fit_bicop(&obs, opts)?;
        let cop = fit.copula;
        let mut next_right = Vec::with_capacity(n);
        let mut next_left = Vec::with_capacity(n);
        for i in 0..n {
            next_left.push(cop.h1_2(left[i], right[i]));
            next_right.push(cop.h2_1(left[i], right[i]));
        }
        new_tail[a] = next_left;
        right = next_right;
        logliks.push(fit.loglik);
        edges.push(cop);
    }
    new_tail[b] = pit.to_vec();
    Ok(Candidate { column, edges, logliks, new_tail })
}

/// Forward covariate selection for a D-vine regression.
///
/// Each step appends every unused covariate at the end of the path, fits
/// its new edges with earlier edges held fixed, and keeps the candidate
/// with the best criterion. The search stops when no candidate improves
/// the current model strictly. Ties go to the lowest column index.
pub fn fit_dvine_regression(
    response: &Variable,
    covariates: &[Variable],
    opts: &DVineFitOptions,
) -> Result<(DVineRegressionModel, SelectionTrace)> {
    let n = response.values.len();
    if n < 30 {
        return usage(format!("D-vine regression needs n >= 30, got {n}"));
    }
    if covariates.is_empty() {
        return usage("no covariates supplied");
    }
    if let Some(c) = covariates.iter().find(|c| c.values.len() != n) {
        return usage(format!("column '{}' has {} rows, response has {n}", c.name, c.values.len()));
    }
    let pit = |v: &Variable| -> Vec<f64> { v.values.iter().map(|&x| clamp_pit(v.margin.cdf(x))).collect() };
    let pits: Vec<Vec<f64>> = covariates.par_iter().map(pit).collect();
    let mut state = State { tail: vec![pit(response)], trees: vec![], edge_loglik: vec![], cll: 0.0, n_params: 0 };
    let mut unused: Vec<usize> = (0..covariates.len()).collect();
    let mut order: Vec<usize> = vec![];
    let mut steps_stats: Vec<StepStats> = vec![];
    let mut trace = SelectionTrace { criterion: opts.criterion, steps: vec![], stop: StopReason::AllSelected };
    let limit = opts.max_covariates.unwrap_or(covariates.len());
    while !unused.is_empty() {
        if order.len() >= limit {
            trace.stop = StopReason::LimitReached;
            break;
        }
        let current = opts.criterion.score(state.cll, state.n_params, n);
        let results: Vec<Result<Candidate>> =
            unused.par_iter().map(|&k| extend(&state, k, &pits[k], &opts.bicop)).collect();
        let mut candidates = Vec::with_capacity(results.len());
        for r in results {
            candidates.push(r?);
        }
        let mut scores = Vec::with_capacity(candidates.len());
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            let cll = state.cll + c.logliks.last().copied().unwrap_or(0.0);
            let k = state.n_params + c.edges.iter().map(|e| e.n_params()).sum::<usize>();
            let crit = opts.criterion.score(cll, k, n);
            scores.push(CandidateScore { column: c.column, name: covariates[c.column].name.clone(), cll, criterion: crit });
            // `unused` is sorted, so strict comparison keeps the lowest column on ties.
            if best.map_or(true, |(_, b)| crit < b) {
                best = Some((i, crit));
            }
        }
        let (i, crit) = best.expect("at least one candidate");
        if !(crit < current) {
            trace.steps.push(SelectionStep { current, candidates: scores, chosen: None });
            trace.stop = StopReason::NoImprovement;
            break;
        }
        let chosen = candidates.swap_remove(i);
        trace.steps.push(SelectionStep { current, candidates: scores, chosen: Some(chosen.column) });
        let t_new = chosen.edges.len();
        for (t, (edge, ll)) in chosen.edges.iter().zip(&chosen.logliks).enumerate() {
            if t == state.trees.len() {
                state.trees.push(vec![]);
                state.edge_loglik.push(vec![]);
            }
            state.trees[t].push(edge.clone());
            state.edge_loglik[t].push(*ll);
        }
        let v_edge = chosen.edges[t_new - 1].clone();
        let ll = chosen.logliks[t_new - 1];
        let p = v_edge.n_params();
        steps_stats.push(StepStats {
            name: covariates[chosen.column].name.clone(),
            column: chosen.column,
            conditioning: order.iter().rev().map(|&k| covariates[k].name.clone()).collect(),
            tau: v_edge.tau(),
            loglik: ll,
            aic: -2.0 * ll + 2.0 * p as f64,
            bic: -2.0 * ll + (n as f64).ln() * p as f64,
            p_value: lr_p_value(2.0 * ll, p),
            copula: v_edge,
        });
        state.cll += ll;
        state.n_params += chosen.edges.iter().map(|e| e.n_params()).sum::<usize>();
        state.tail = chosen.new_tail;
        order.push(chosen.column);
        unused.retain(|&k| k != chosen.column);
    }
    // Step j adds the edge at position j − t of every tree t ≤ j, so the
    // trees are already in path order.
    let trees = state.trees;
    let specs = |k: usize| VariableSpec { name: covariates[k].name.clone(), margin: covariates[k].margin.clone() };
    let response_spec = VariableSpec { name: response.name.clone(), margin: response.margin.clone() };
    let stats = FitStats {
        n,
        steps: steps_stats,
        edge_loglik: state.edge_loglik,
        cll: state.cll,
        cll_aic: Criterion::CllAic.score(state.cll, state.n_params, n),
        cll_bic: Criterion::CllBic.score(state.cll, state.n_params, n),
    };
    let model = if order.is_empty() {
        DVineRegressionModel::marginal(response_spec)
    } else {
        DVineRegressionModel::new(response_spec, order.iter().map(|&k| specs(k)).collect(), trees)?
    };
    Ok((model.with_stats(stats), trace))
}
