//! Weighted check-loss minimization: reweighted least squares for a warm
//! start, then simplex pivots along the edges of the loss polytope until no
//! edge direction descends.

use super::{check_loss, LqrData};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

const WARM_START_ITERATIONS: usize = 30;

/// Minimizes `Σ w_k ρ_α(y_k − x_k'β)` over the rows `idx`.
/// Returns the coefficients and the number of pivots taken.
pub(super) fn solve(data: &LqrData, idx: &[usize], w: &[f64], alpha: f64) -> Result<(Vec<f64>, usize)> {
    let p = data.n_coefficients();
    let warm = warm_start(data, idx, w, alpha)?;
    let resid: Vec<f64> = idx.iter().map(|&i| data.y[i] - data.fitted(i, &warm)).collect();
    let mut basis = initial_basis(data, idx, &resid)?;
    let m = idx.len();
    let y_scale = 1.0 + idx.iter().map(|&i| data.y[i].abs()).fold(0.0, f64::max);
    let zero_tol = 1e-12 * y_scale;
    let max_pivots = 20 * m + 200;
    let mut in_basis = vec![false; m];
    let mut r = vec![0.0; m];
    let mut c = vec![0.0; m * p];
    let mut beta = warm;
    for pivot in 0..max_pivots {
        in_basis.iter_mut().for_each(|b| *b = false);
        basis.iter().for_each(|&k| in_basis[k] = true);
        let xh = DMatrix::from_fn(p, p, |a, b| data.row(idx[basis[a]])[b]);
        let yh = DVector::from_iterator(p, basis.iter().map(|&k| data.y[idx[k]]));
        let d = xh
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        let b = &d * yh;
        beta = b.iter().copied().collect();
        for k in 0..m {
            let row = data.row(idx[k]);
            r[k] = if in_basis[k] { 0.0 } else { data.y[idx[k]] - data.fitted(idx[k], &beta) };
            for j in 0..p {
                c[k * p + j] = (0..p).map(|a| row[a] * d[(a, j)]).sum();
            }
        }
        // steepest descending edge over all (basis slot, direction) pairs
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..p {
            let mut grad = 0.0;
            let mut scale = w[basis[j]];
            for k in (0..m).filter(|&k| !in_basis[k]) {
                let ck = c[k * p + j];
                scale += w[k] * ck.abs();
                if r[k] > zero_tol {
                    grad += w[k] * alpha * ck;
                } else if r[k] < -zero_tol {
                    grad += w[k] * (alpha - 1.0) * ck;
                }
            }
            for s in [1.0, -1.0] {
                let mut slope = s * grad + w[basis[j]] * if s > 0.0 { alpha } else { 1.0 - alpha };
                for k in (0..m).filter(|&k| !in_basis[k] && r[k].abs() <= zero_tol) {
                    let a = s * c[k * p + j];
                    slope += w[k] * if a > 0.0 { alpha * a } else { (alpha - 1.0) * a };
                }
                if slope < -1e-12 * scale && best.is_none_or(|(bs, _, _)| slope < bs) {
                    best = Some((slope, j, s));
                }
            }
        }
        let Some((slope0, j, s)) = best else {
            return Ok((beta, pivot));
        };
        let mut breaks: Vec<(f64, f64, usize)> = (0..m)
            .filter(|&k| !in_basis[k] && r[k].abs() > zero_tol)
            .filter_map(|k| {
                let a = s * c[k * p + j];
                (r[k] * a < 0.0).then(|| (-r[k] / a, w[k] * a.abs(), k))
            })
            .collect();
        breaks.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));
        let mut slope = slope0;
        let mut entering = None;
        for (_, jump, k) in breaks {
            slope += jump;
            if slope >= 0.0 {
                entering = Some(k);
                break;
            }
        }
        match entering {
            Some(k) => basis[j] = k,
            None => return Err(Error::Numerical("check loss unbounded along a simplex edge".into())),
        }
    }
    Err(Error::Convergence { message: format!("no optimal vertex after {max_pivots} pivots"), best: beta })
}

fn weighted_loss(data: &LqrData, idx: &[usize], w: &[f64], beta: &[f64], alpha: f64) -> f64 {
    idx.iter().zip(w).map(|(&i, wk)| wk * check_loss(data.y[i] - data.fitted(i, beta), alpha)).sum()
}

fn warm_start(data: &LqrData, idx: &[usize], w: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let p = data.n_coefficients();
    let mut beta: Option<Vec<f64>> = None;
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..WARM_START_ITERATIONS {
        let resid: Option<Vec<f64>> =
            beta.as_ref().map(|b| idx.iter().map(|&i| data.y[i] - data.fitted(i, b)).collect());
        let eps = resid.as_ref().map_or(1.0, |r| {
            let total: f64 = w.iter().sum();
            let mad = r.iter().zip(w).map(|(v, wk)| wk * v.abs()).sum::<f64>() / total;
            (1e-6 * mad).max(1e-300)
        });
        let mut a = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        for (k, &i) in idx.iter().enumerate() {
            let x = data.row(i);
            let (weight, shift) = match &resid {
                Some(r) => (w[k] / (eps + r[k].abs()), w[k] * (2.0 * alpha - 1.0)),
                None => (w[k], 0.0),
            };
            for u in 0..p {
                rhs[u] += x[u] * (weight * data.y[i] + shift);
                for v in 0..=u {
                    a[(u, v)] += weight * x[u] * x[v];
                }
            }
        }
        a.fill_upper_triangle_with_lower_triangle();
        let Some(chol) = a.cholesky() else { break };
        let next: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        let loss = weighted_loss(data, idx, w, &next, alpha);
        if loss < best.0 {
            best = (loss, next.clone());
        }
        beta = Some(next);
    }
    if best.1.is_empty() {
        return Err(Error::Numerical("rank-deficient design in warm start".into()));
    }
    Ok(best.1)
}

/// Greedily picks `p` linearly independent rows with the smallest residuals.
fn initial_basis(data: &LqrData, idx: &[usize], resid: &[f64]) -> Result<Vec<usize>> {
    let p = data.n_coefficients();
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by(|&a, &b| resid[a].abs().total_cmp(&resid[b].abs()).then(a.cmp(&b)));
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut basis = Vec::with_capacity(p);
    for k in order {
        let x = data.row(idx[k]);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        for q in &ortho {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vn > 1e-8 * norm.max(1e-300) {
            v.iter_mut().for_each(|a| *a /= vn);
            ortho.push(v);
            basis.push(k);
            if basis.len() == p {
                return Ok(basis);
            }
        }
    }
    Err(Error::Numerical("design rows do not span the coefficient space".into()))
}
