use super::fit::MarginFit;
use super::{MarginalFamilyTag, MarginalModel};
use crate::error::{domain, Error, Result};
use crate::numeric::special::LN_SQRT_2PI;
use crate::numeric::stats::{mean, sample_sd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Progress record of an EM run.
#[derive(Debug, Clone, Default)]
pub struct EmTrace {
    /// Observed-data log-likelihood after each iteration.
    pub logliks: Vec<f64>,
    pub converged: bool,
    /// Index of the start that produced the returned fit.
    pub start: usize,
    /// Starts abandoned because a component collapsed.
    pub degenerate_starts: usize,
}

const MAX_ITER: usize = 5000;
const LL_TOL: f64 = 1e-8;
const STARTS: usize = 10;
const SHORT_ITER: usize = 40;

#[derive(Clone)]
struct Components {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    weight: Vec<f64>,
}

enum Outcome {
    Done(Components, EmTrace),
    Degenerate,
}

/// Maximum-likelihood fit of an `s`-component normal mixture by EM.
pub fn fit_mixture_normal(data: &[f64], s: usize) -> Result<MarginFit> {
    if s == 0 {
        return domain("mixture needs at least one component");
    }
    if data.len() < 10 * s {
        return Err(Error::InsufficientData(format!(
            "{s}-component mixture needs n >= {}, got {}",
            10 * s,
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return domain("data contain non-finite values");
    }
    let sd = sample_sd(data);
    if !(sd > 0.0) {
        return domain("data have zero variance");
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut candidates: Vec<(Components, EmTrace)> = Vec::new();
    let mut degenerate = 0;
    let starts = if s == 1 { 1 } else { STARTS };
    for start in 0..starts {
        match run_em(data, initial(&sorted, s, start, sd), sd, SHORT_ITER) {
            Outcome::Done(c, mut trace) => {
                trace.start = start;
                candidates.push((c, trace));
            }
            Outcome::Degenerate => degenerate += 1,
        }
    }
    candidates.sort_by(|a, b| final_ll(&b.1).total_cmp(&final_ll(&a.1)));
    let mut chosen = None;
    for (c, mut trace) in candidates {
        if trace.converged {
            chosen = Some((c, trace));
            break;
        }
        match run_em(data, c, sd, MAX_ITER) {
            Outcome::Done(c, rest) => {
                trace.logliks.extend(rest.logliks);
                trace.converged = rest.converged;
                chosen = Some((c, trace));
                break;
            }
            Outcome::Degenerate => degenerate += 1,
        }
    }
    let Some((c, mut trace)) = chosen else {
        return Err(Error::Numerical(format!("{s}-component mixture collapsed from all {starts} starts")));
    };
    trace.degenerate_starts = degenerate;
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| c.mu[a].total_cmp(&c.mu[b]));
    let mut params: Vec<f64> = order.iter().map(|&i| c.mu[i]).collect();
    params.extend(order.iter().map(|&i| c.sigma[i]));
    params.extend(order.iter().map(|&i| c.weight[i]));
    let model = MarginalModel::new(MarginalFamilyTag::NormalMixture(s), &params)?;
    Ok(MarginFit::new(model, data, Some(trace)))
}

fn final_ll(trace: &EmTrace) -> f64 {
    trace.logliks.last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Splits the sorted data into contiguous blocks and seeds one component per
/// block. The first attempt uses equal blocks, later ones random break points.
fn initial(sorted: &[f64], s: usize, attempt: usize, sd: f64) -> Components {
    let n = sorted.len();
    let mut cuts: Vec<usize> = if attempt == 0 {
        (1..s).map(|k| k * n / s).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt as u64);
        let min_block = (n / (4 * s)).max(2);
        let span = n - s * min_block;
        let mut u: Vec<usize> = (1..s).map(|_| rng.random_range(0..=span)).collect();
        u.sort_unstable();
        u.iter().enumerate().map(|(k, &v)| v + (k + 1) * min_block).collect()
    };
    cuts.insert(0, 0);
    cuts.push(n);
    let mut c = Components { mu: vec![], sigma: vec![], weight: vec![] };
    for w in cuts.windows(2) {
        let block = &sorted[w[0]..w[1]];
        c.mu.push(mean(block));
        let bsd = if block.len() > 1 { sample_sd(block) } else { 0.0 };
        c.sigma.push(if bsd > 0.0 { bsd } else { sd / s as f64 });
        c.weight.push(block.len() as f64 / n as f64);
    }
    c
}

/// Log-likelihood at `c` and the EM update from it, or `None` when a
/// component collapses.
fn em_step(data: &[f64], c: &Components, sd: f64, resp: &mut [f64]) -> Option<(f64, Components)> {
    let s = c.mu.len();
    let offset: Vec<f64> = (0..s).map(|k| c.weight[k].ln() - c.sigma[k].ln() - LN_SQRT_2PI).collect();
    let inv_sigma: Vec<f64> = c.sigma.iter().map(|v| 1.0 / v).collect();
    let mut ll = 0.0;
    let mut nk = vec![0.0; s];
    let mut sx = vec![0.0; s];
    for (row, &x) in resp.chunks_exact_mut(s).zip(data) {
        let mut tot = 0.0;
        for k in 0..s {
            let z = (x - c.mu[k]) * inv_sigma[k];
            row[k] = (offset[k] - 0.5 * z * z).exp();
            tot += row[k];
        }
        let ln_tot = if tot > 1e-280 {
            tot.ln()
        } else {
            // Far from every component: normalize in log space.
            let logs: Vec<f64> = (0..s)
                .map(|k| {
                    let z = (x - c.mu[k]) * inv_sigma[k];
                    offset[k] - 0.5 * z * z
                })
                .collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            tot = 0.0;
            for (r, l) in row.iter_mut().zip(&logs) {
                *r = (l - m).exp();
                tot += *r;
            }
            m + tot.ln()
        };
        let scale = 1.0 / tot;
        for k in 0..s {
            row[k] *= scale;
            nk[k] += row[k];
            sx[k] += row[k] * x;
        }
        ll += ln_tot;
    }
    if !ll.is_finite() || nk.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let mu: Vec<f64> = (0..s).map(|k| sx[k] / nk[k]).collect();
    let mut ss = vec![0.0; s];
    for (row, &x) in resp.chunks_exact(s).zip(data) {
        for k in 0..s {
            ss[k] += row[k] * (x - mu[k]) * (x - mu[k]);
        }
    }
    let sigma: Vec<f64> = (0..s).map(|k| (ss[k] / nk[k]).sqrt()).collect();
    if sigma.iter().any(|v| !(*v >= 1e-8 * sd)) {
        return None;
    }
    let total: f64 = nk.iter().sum();
    let weight = nk.iter().map(|v| v / total).collect();
    Some((ll, Components { mu, sigma, weight }))
}

/// Unconstrained coordinates used for extrapolation.
fn to_free(c: &Components) -> Vec<f64> {
    c.mu.iter().copied().chain(c.sigma.iter().map(|v| v.ln())).chain(c.weight.iter().map(|v| v.ln())).collect()
}

fn from_free(theta: &[f64], s: usize) -> Option<Components> {
    let mu = theta[..s].to_vec();
    let sigma: Vec<f64> = theta[s..2 * s].iter().map(|v| v.exp()).collect();
    let raw: Vec<f64> = theta[2 * s..].iter().map(|v| v.exp()).collect();
    let total: f64 = raw.iter().sum();
    let weight: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let ok = mu.iter().chain(&sigma).chain(&weight).all(|v| v.is_finite()) && weight.iter().all(|w| *w > 0.0);
    ok.then_some(Components { mu, sigma, weight })
}

/// EM accelerated by squared extrapolation. An extrapolated point is kept
/// only when it does not lower the likelihood, so the recorded
/// log-likelihoods never decrease; convergence is judged on plain EM steps.
/// `max_iter` bounds likelihood evaluations, including rejected extrapolations.
fn run_em(data: &[f64], mut c: Components, sd: f64, max_iter: usize) -> Outcome {
    let s = c.mu.len();
    let mut resp = vec![0.0; data.len() * s];
    let mut trace = EmTrace::default();
    let mut prev = f64::NEG_INFINITY;
    let mut evals = 0;
    let record = |trace: &mut EmTrace, prev: &mut f64, ll: f64| -> bool {
        debug_assert!(ll >= *prev - 1e-9 * ll.abs().max(1.0), "EM decreased the likelihood: {prev} -> {ll}");
        trace.logliks.push(ll);
        let done = (ll - *prev).abs() < LL_TOL;
        *prev = ll;
        done
    };
    while evals < max_iter {
        evals += 2;
        let Some((ll0, c1)) = em_step(data, &c, sd, &mut resp) else { return Outcome::Degenerate };
        if record(&mut trace, &mut prev, ll0) {
            trace.converged = true;
            return Outcome::Done(c, trace);
        }
        if evals > max_iter {
            return Outcome::Done(c1, trace);
        }
        let Some((ll1, c2)) = em_step(data, &c1, sd, &mut resp) else { return Outcome::Degenerate };
        if record(&mut trace, &mut prev, ll1) {
            trace.converged = true;
            return Outcome::Done(c1, trace);
        }
        let (t0, t1, t2) = (to_free(&c), to_free(&c1), to_free(&c2));
        let r: Vec<f64> = t1.iter().zip(&t0).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = (0..t0.len()).map(|i| t2[i] - 2.0 * t1[i] + t0[i]).collect();
        let (rr, vv) = (r.iter().map(|x| x * x).sum::<f64>(), v.iter().map(|x| x * x).sum::<f64>());
        let step = if vv > 0.0 { -(rr / vv).sqrt() } else { -1.0 };
        if step < -1.0 && evals < max_iter {
            evals += 1;
            let theta: Vec<f64> = (0..t0.len()).map(|i| t0[i] - 2.0 * step * r[i] + step * step * v[i]).collect();
            if let Some(cx) = from_free(&theta, s) {
                if let Some((llx, next)) = em_step(data, &cx, sd, &mut resp).filter(|(llx, _)| *llx >= ll1) {
                    record(&mut trace, &mut prev, llx);
                    c = next;
                    continue;
                }
            }
        }
        c = c2;
    }
    Outcome::Done(c, trace)
}
