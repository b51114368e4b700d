//! Rank checks for regression designs.

use crate::error::{Error, Result};

/// Fails with the names of columns that are (numerically) linear
/// combinations of the columns before them.
///
/// Uses modified Gram–Schmidt; a column is dependent when its residual norm
/// falls below `1e-10` of its original norm.
pub fn ensure_full_rank(columns: &[Vec<f64>], names: &[String]) -> Result<()> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = col.clone();
        for q in &basis {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= dot * qi;
            }
        }
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            bad.push(names[j].clone());
        } else {
            basis.push(r.into_iter().map(|v| v / norm).collect());
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Collinear(bad))
    }
}
