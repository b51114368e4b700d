use super::{tau_to_param, BivariateCopula, FamilyTag, PseudoObservations, Rotation};
use crate::error::{usage, Error, Result};
use crate::numeric::optim::{brent_minimize, nelder_mead, BoxTransform};
use crate::numeric::special::t_quantile;
use crate::numeric::stats::kendall_tau;
use super::family::{student_t_ln_const, student_t_ln_pdf_scores};

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Admissible (family, rotation) pairs.
    pub allowed: Vec<(FamilyTag, Rotation)>,
    /// Select Independence outright when the τ-based test does not reject it.
    pub independence_test: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl FitOptions {
    /// All admissible rotations of the given families.
    pub fn new(families: &[FamilyTag]) -> Self {
        FitOptions { allowed: FamilyTag::catalog(families), independence_test: true, max_iter: 200, tol: 1e-6 }
    }

    pub fn full_catalog() -> Self {
        Self::new(&FamilyTag::ALL)
    }
}

#[derive(Debug, Clone)]
pub struct BicopFit {
    pub copula: BivariateCopula,
    pub loglik: f64,
    pub aic: f64,
    /// Empirical Kendall's τ of the sample.
    pub tau_hat: f64,
    /// The optimizer did not converge and the τ-inversion estimate was kept.
    pub fallback: bool,
}

/// Critical value of the asymptotic τ test below which a pair is declared independent.
const INDEPENDENCE_Z: f64 = 1.645;

pub fn independence_statistic(tau_hat: f64, n: usize) -> f64 {
    let n = n as f64;
    tau_hat.abs() * (9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0))).sqrt()
}

fn bounds(family: FamilyTag) -> &'static [(f64, f64)] {
    match family {
        FamilyTag::Independence => &[],
        FamilyTag::Gaussian => &[(-0.9999, 0.9999)],
        FamilyTag::StudentT => &[(-0.9999, 0.9999), (2.0, 30.0)],
        FamilyTag::Clayton => &[(1e-4, 28.0)],
        FamilyTag::Gumbel => &[(1.0, 17.0)],
        FamilyTag::Frank => &[(-35.0, 35.0)],
        FamilyTag::Joe => &[(1.0, 30.0)],
        FamilyTag::BB1 => &[(1e-4, 7.0), (1.0, 7.0)],
        FamilyTag::BB8 => &[(1.0, 8.0), (1e-4, 1.0)],
    }
}

/// Fits every allowed (family, rotation) by maximum likelihood and returns
/// the one with the smallest AIC.
pub fn fit_bicop(obs: &PseudoObservations, opts: &FitOptions) -> Result<BicopFit> {
    if opts.allowed.is_empty() {
        return usage("no copula families allowed");
    }
    let n = obs.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("pair copula fit needs n >= 10, got {n}")));
    }
    let tau_hat = kendall_tau(&obs.u, &obs.v).unwrap_or(0.0);
    let mut allowed = opts.allowed.clone();
    allowed.sort();
    allowed.dedup();
    let has_indep = allowed.iter().any(|c| c.0 == FamilyTag::Independence);
    if has_indep && opts.independence_test && independence_statistic(tau_hat, n) < INDEPENDENCE_Z {
        return Ok(BicopFit {
            copula: BivariateCopula::independence(),
            loglik: 0.0,
            aic: 0.0,
            tau_hat,
            fallback: false,
        });
    }
    let sign_ok = |&(f, r): &(FamilyTag, Rotation)| {
        if matches!(f, FamilyTag::Independence | FamilyTag::Gaussian | FamilyTag::StudentT | FamilyTag::Frank)
            || tau_hat == 0.0
        {
            return true;
        }
        r.is_negative() == (tau_hat < 0.0)
    };
    let mut candidates: Vec<_> = allowed.iter().copied().filter(sign_ok).collect();
    if candidates.is_empty() {
        candidates = allowed.clone();
    }
    let mut best: Option<BicopFit> = None;
    for (family, rotation) in candidates {
        let Some(fit) = fit_candidate(family, rotation, obs, tau_hat, opts) else { continue };
        if best.as_ref().map_or(true, |b| fit.aic < b.aic) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Numerical("no copula candidate produced a finite likelihood".into()))
}

fn fit_candidate(
    family: FamilyTag,
    rotation: Rotation,
    obs: &PseudoObservations,
    tau_hat: f64,
    opts: &FitOptions,
) -> Option<BicopFit> {
    let finish = |copula: BivariateCopula, fallback: bool| {
        let loglik = copula.loglik(&obs.u, &obs.v);
        loglik.is_finite().then(|| BicopFit {
            aic: -2.0 * loglik + 2.0 * copula.n_params() as f64,
            copula,
            loglik,
            tau_hat,
            fallback,
        })
    };
    if family == FamilyTag::Independence {
        return finish(BivariateCopula::independence(), false);
    }
    let nll = |p: &[f64]| match BivariateCopula::new(family, rotation, p) {
        Ok(c) => {
            let ll = c.loglik(&obs.u, &obs.v);
            if ll.is_finite() { -ll } else { f64::INFINITY }
        }
        Err(_) => f64::INFINITY,
    };
    let mut b: Vec<(f64, f64)> = bounds(family).to_vec();
    if family == FamilyTag::Frank {
        b[0] = if tau_hat >= 0.0 { (1e-4, 35.0) } else { (-35.0, -1e-4) };
    }
    let start = start_values(family, rotation, tau_hat, &b);
    if family.n_params() == 1 {
        let m = brent_minimize(|t| nll(&[t]), b[0].0, b[0].1, opts.tol, opts.max_iter);
        let start_nll = nll(&start);
        let (p, fallback) = if !m.converged {
            (start, true)
        } else if m.fx <= start_nll {
            (vec![m.x], false)
        } else {
            (start, false)
        };
        return finish(BivariateCopula::new(family, rotation, &p).ok()?, fallback);
    }
    if family == FamilyTag::StudentT {
        let (p, converged) = fit_student_t(obs, &b, opts);
        if !converged {
            return finish(BivariateCopula::new(family, rotation, &start).ok()?, true);
        }
        if p[1] >= b[1].1 - 1e-3 {
            // Tails too light to identify ν: the Gaussian limit.
            return fit_candidate(FamilyTag::Gaussian, Rotation::R0, obs, tau_hat, opts);
        }
        return finish(BivariateCopula::new(family, rotation, &p).ok()?, false);
    }
    // Other two-parameter families: simplex search in logistic coordinates, with
    // interior margins so the transform stays invertible at the bounds.
    let tr: Vec<BoxTransform> = b
        .iter()
        .map(|&(lo, hi)| {
            let pad = 1e-9 * (hi - lo);
            BoxTransform { lo: lo - pad, hi: hi + pad }
        })
        .collect();
    let to_params = |z: &[f64]| -> Vec<f64> {
        z.iter().zip(&tr).zip(&b).map(|((&zi, t), &(lo, hi))| t.to_bounded(zi).clamp(lo, hi)).collect()
    };
    let z0: Vec<f64> = start.iter().zip(&tr).map(|(&p, t)| t.to_free(p)).collect();
    let m = nelder_mead(|z| nll(&to_params(z)), &z0, &[0.6, 0.6], opts.tol, opts.tol, opts.max_iter);
    let fitted = to_params(&m.x);
    if !m.converged || !m.fx.is_finite() {
        return finish(BivariateCopula::new(family, rotation, &start).ok()?, true);
    }
    finish(BivariateCopula::new(family, rotation, &fitted).ok()?, false)
}

/// Profile likelihood of the t copula. The t-scores depend on ν alone, so
/// they are computed once per ν while ρ is optimized.
fn fit_student_t(obs: &PseudoObservations, b: &[(f64, f64)], opts: &FitOptions) -> (Vec<f64>, bool) {
    let profile = |nu: f64| {
        let x: Vec<f64> = obs.u.iter().map(|&u| t_quantile(u, nu)).collect();
        let y: Vec<f64> = obs.v.iter().map(|&v| t_quantile(v, nu)).collect();
        let nll = |rho: f64| {
            let ln_const = student_t_ln_const(rho, nu);
            let ll: f64 = x.iter().zip(&y).map(|(&a, &b)| student_t_ln_pdf_scores(rho, nu, ln_const, a, b)).sum();
            if ll.is_finite() { -ll } else { f64::INFINITY }
        };
        brent_minimize(nll, b[0].0, b[0].1, opts.tol, opts.max_iter)
    };
    let outer = brent_minimize(|nu| profile(nu).fx, b[1].0, b[1].1, opts.tol, opts.max_iter);
    let inner = profile(outer.x);
    (vec![inner.x, outer.x], outer.converged && inner.converged && inner.fx.is_finite())
}

fn start_values(family: FamilyTag, rotation: Rotation, tau_hat: f64, b: &[(f64, f64)]) -> Vec<f64> {
    let tau = match family {
        FamilyTag::Gaussian | FamilyTag::StudentT => tau_hat.clamp(-0.95, 0.95),
        FamilyTag::Frank => tau_hat.abs().clamp(0.01, 0.95).copysign(tau_hat),
        _ => {
            let t = tau_hat.abs().clamp(0.02, 0.9);
            if rotation.is_negative() { -t } else { t }
        }
    };
    let mut p = tau_to_param(family, rotation, tau)
        .unwrap_or_else(|_| b.iter().map(|r| 0.5 * (r.0 + r.1)).collect());
    match family {
        FamilyTag::BB8 => p[1] = 0.9,
        FamilyTag::BB1 => {
            p[1] = 1.2;
            p[0] = (2.0 / (p[1] * (1.0 - tau.abs())) - 2.0).max(0.05);
        }
        _ => {}
    }
    p.iter().zip(b).map(|(&x, &(lo, hi))| x.clamp(lo, hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_shortcut() {
        let cop = BivariateCopula::independence();
        let obs = cop.simulate(2000, 7);
        let fit = fit_bicop(&obs, &FitOptions::full_catalog()).unwrap();
        assert!(independence_statistic(fit.tau_hat, 2000) >= 1.645 || fit.copula.is_independence());
    }

    #[test]
    fn clayton_recovered() {
        let cop = BivariateCopula::new(FamilyTag::Clayton, Rotation::R0, &[2.0]).unwrap();
        let obs = cop.simulate(2000, 11);
        let fit = fit_bicop(&obs, &FitOptions::full_catalog()).unwrap();
        assert_eq!(fit.copula.family(), FamilyTag::Clayton);
        let theta = fit.copula.params()[0];
        assert!((1.7..=2.3).contains(&theta), "theta {theta}");
    }

    #[test]
    fn gaussian_negative_recovered() {
        let cop = BivariateCopula::new(FamilyTag::Gaussian, Rotation::R0, &[-0.5]).unwrap();
        let obs = cop.simulate(2000, 3);
        let opts = FitOptions::new(&[FamilyTag::Independence, FamilyTag::Gaussian]);
        let fit = fit_bicop(&obs, &opts).unwrap();
        let rho = fit.copula.params()[0];
        assert!((-0.56..=-0.44).contains(&rho), "rho {rho}");
    }

    #[test]
    fn empty_allowed_is_usage_error() {
        let obs = BivariateCopula::independence().simulate(20, 1);
        let opts = FitOptions { allowed: vec![], independence_test: true, max_iter: 200, tol: 1e-6 };
        assert!(matches!(fit_bicop(&obs, &opts), Err(Error::Usage(_))));
    }

    #[test]
    fn too_few_observations() {
        let obs = BivariateCopula::independence().simulate(5, 1);
        assert!(matches!(fit_bicop(&obs, &FitOptions::full_catalog()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rotated_clayton_recovered() {
        let cop = BivariateCopula::new(FamilyTag::Clayton, Rotation::R90, &[3.0]).unwrap();
        let obs = cop.simulate(1500, 5);
        let opts = FitOptions::new(&[FamilyTag::Clayton, FamilyTag::Gumbel]);
        let fit = fit_bicop(&obs, &opts).unwrap();
        assert_eq!((fit.copula.family(), fit.copula.rotation()), (FamilyTag::Clayton, Rotation::R90));
    }
}
