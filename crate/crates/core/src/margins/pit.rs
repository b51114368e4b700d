use super::MarginalModel;
use crate::bicop::clamp_pit;
use crate::error::{domain, usage, Result};
use crate::numeric::stats::{ks_uniform, KsResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probability integral transform of several columns.
#[derive(Debug, Clone)]
pub struct PitResult {
    /// One vector of clamped `F̂(x)` values per input column.
    pub columns: Vec<Vec<f64>>,
    /// Kolmogorov–Smirnov distance to the uniform law, per column.
    pub ks: Vec<KsResult>,
}

pub fn pit_transform(columns: &[Vec<f64>], margins: &[MarginalModel]) -> Result<PitResult> {
    if columns.len() != margins.len() {
        return usage(format!("{} columns but {} margins", columns.len(), margins.len()));
    }
    let mut out = PitResult { columns: Vec::with_capacity(columns.len()), ks: Vec::with_capacity(columns.len()) };
    for (j, (col, m)) in columns.iter().zip(margins).enumerate() {
        if col.is_empty() {
            return domain(format!("column {j} is empty"));
        }
        if col.iter().all(|&x| x == col[0]) {
            return domain(format!("column {j} is constant (zero variance)"));
        }
        let u: Vec<f64> = col.iter().map(|&x| clamp_pit(m.cdf(x))).collect();
        out.ks.push(ks_uniform(&u));
        out.columns.push(u);
    }
    Ok(out)
}

/// Breaks ties by adding uniform noise of half the smallest gap between
/// distinct values.
pub fn jitter_ties(x: &[f64], seed: u64) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let gap = s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let half = if gap.is_finite() { 0.5 * gap } else { 0.5 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter().map(|&v| v + half * (2.0 * rng.random::<f64>() - 1.0)).collect()
}
