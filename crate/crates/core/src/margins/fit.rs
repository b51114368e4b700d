use super::mixture::{fit_mixture_normal, EmTrace};
use super::{MarginalFamilyTag, MarginalModel};
use crate::error::{domain, usage, Error, Result};
use crate::numeric::optim::{bisect_increasing, nelder_mead};
use crate::numeric::stats::{mean, sample_sd};
use statrs::function::gamma::digamma;

/// A fitted margin with its likelihood summary.
#[derive(Debug, Clone)]
pub struct MarginFit {
    pub model: MarginalModel,
    pub loglik: f64,
    pub n: usize,
    /// Present for normal mixtures.
    pub em: Option<EmTrace>,
}

impl MarginFit {
    pub(crate) fn new(model: MarginalModel, data: &[f64], em: Option<EmTrace>) -> Self {
        MarginFit { loglik: model.loglik(data), n: data.len(), model, em }
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.model.n_free_params() as f64
    }

    pub fn bic(&self) -> f64 {
        -2.0 * self.loglik + (self.n as f64).ln() * self.model.n_free_params() as f64
    }
}

const MIN_N: usize = 20;

fn check_data(data: &[f64], family: MarginalFamilyTag) -> Result<()> {
    if data.len() < MIN_N {
        return Err(Error::InsufficientData(format!("{family} fit needs n >= {MIN_N}, got {}", data.len())));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return domain("data contain non-finite values");
    }
    if matches!(family, MarginalFamilyTag::LogNormal | MarginalFamilyTag::Gamma) && data.iter().any(|&x| x <= 0.0) {
        return domain(format!("{family} requires strictly positive data"));
    }
    let sd = sample_sd(data);
    if !(sd > 0.0) {
        return domain("data have zero variance");
    }
    Ok(())
}

/// Maximum-likelihood fit of one family.
pub fn fit_parametric(data: &[f64], family: MarginalFamilyTag) -> Result<MarginFit> {
    check_data(data, family)?;
    let model = match family {
        MarginalFamilyTag::Normal => {
            let (m, s) = mle_normal(data);
            MarginalModel::new(family, &[m, s])?
        }
        MarginalFamilyTag::LogNormal => {
            let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
            let (m, s) = mle_normal(&logs);
            MarginalModel::new(family, &[m, s])?
        }
        MarginalFamilyTag::Gamma => fit_gamma(data)?,
        MarginalFamilyTag::Gev => fit_gev(data)?,
        MarginalFamilyTag::SkewNormal => fit_skew_normal(data)?,
        MarginalFamilyTag::SkewStudentT => fit_skew_t(data)?,
        MarginalFamilyTag::NormalMixture(s) => return fit_mixture_normal(data, s),
    };
    Ok(MarginFit::new(model, data, None))
}

fn mle_normal(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
    (m, var.sqrt())
}

fn fit_gamma(data: &[f64]) -> Result<MarginalModel> {
    let m = mean(data);
    let s = m.ln() - data.iter().map(|x| x.ln()).sum::<f64>() / data.len() as f64;
    if !(s > 0.0) {
        return domain("gamma fit degenerate: log-mean equals mean-log");
    }
    // ln α − ψ(α) decreases from ∞ to 0, so the residual below increases in ln α.
    let ln_shape = bisect_increasing(|la: f64| s - (la - digamma(la.exp())), -25.0, 40.0, 1e-14, 200);
    let shape = ln_shape.exp();
    MarginalModel::new(MarginalFamilyTag::Gamma, &[shape, shape / m])
}

/// Nelder–Mead with restarts from the incumbent until it settles.
fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64]) -> (Vec<f64>, f64, bool) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut converged = false;
    let small: Vec<f64> = step.iter().map(|s| 0.1 * s).collect();
    for _ in 0..6 {
        let m = nelder_mead(&f, &x, &small, 1e-6, 1e-9, 4000);
        let improved = fx - m.fx;
        if m.fx <= fx {
            x = m.x;
            fx = m.fx;
        }
        if m.converged && improved.abs() < 1e-6 {
            converged = true;
            break;
        }
    }
    (x, fx, converged)
}

fn best_of(
    family: MarginalFamilyTag,
    starts: &[Vec<f64>],
    step: &[f64],
    nll: impl Fn(&[f64]) -> f64,
    to_params: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<MarginalModel> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if !nll(s).is_finite() {
            continue;
        }
        let m = nelder_mead(&nll, s, step, 1e-3, 1e-5, 4000);
        if best.as_ref().map_or(true, |b| m.fx < b.1) {
            best = Some((m.x, m.fx));
        }
    }
    let (z0, _) = best.ok_or_else(|| Error::Numerical(format!("{family}: no feasible start value")))?;
    let (z, fz, converged) = minimize(&nll, &z0, step);
    let params = to_params(&z);
    if !converged || !fz.is_finite() {
        return Err(Error::Convergence { message: format!("{family} likelihood search did not settle"), best: params });
    }
    MarginalModel::new(family, &params)
}

fn raw_nll(family: MarginalFamilyTag, params: Vec<f64>, data: &[f64]) -> f64 {
    let m = MarginalModel { family, params, split_mass: (0.5, 0.5) };
    let ll = m.loglik(data);
    if ll.is_finite() { -ll } else { f64::INFINITY }
}

fn fit_gev(data: &[f64]) -> Result<MarginalModel> {
    let sd = sample_sd(data);
    let sigma0 = sd * 6f64.sqrt() / std::f64::consts::PI;
    let mu0 = mean(data) - 0.577_215_664_901_532_9 * sigma0;
    let to_params = |z: &[f64]| vec![z[0], z[1].exp(), z[2]];
    let nll = |z: &[f64]| raw_nll(MarginalFamilyTag::Gev, to_params(z), data);
    let starts: Vec<Vec<f64>> =
        [0.0, 0.1, -0.1].iter().map(|&k| vec![mu0, sigma0.ln(), k]).collect();
    best_of(MarginalFamilyTag::Gev, &starts, &[0.2 * sd, 0.2, 0.05], nll, to_params)
}

/// Method-of-moments start for the skew-normal (ξ, ω, α).
fn skew_normal_moments(data: &[f64]) -> [f64; 3] {
    let m = mean(data);
    let sd = sample_sd(data);
    let n = data.len() as f64;
    let skew = data.iter().map(|x| ((x - m) / sd).powi(3)).sum::<f64>() / n;
    let g = skew.abs().min(0.99 * 0.995_271_746_431_156).powf(2.0 / 3.0);
    let k = ((4.0 - std::f64::consts::PI) / 2.0).powf(2.0 / 3.0);
    let delta = (std::f64::consts::FRAC_PI_2 * g / (g + k)).sqrt().copysign(skew);
    let alpha = delta / (1.0 - delta * delta).sqrt();
    let omega = sd / (1.0 - 2.0 * delta * delta / std::f64::consts::PI).sqrt();
    let xi = m - omega * delta * (2.0 / std::f64::consts::PI).sqrt();
    [xi, omega, alpha]
}

fn fit_skew_normal(data: &[f64]) -> Result<MarginalModel> {
    let [xi, omega, alpha] = skew_normal_moments(data);
    let to_params = |z: &[f64]| vec![z[0], z[1].exp(), z[2]];
    let nll = |z: &[f64]| raw_nll(MarginalFamilyTag::SkewNormal, to_params(z), data);
    let sd = sample_sd(data);
    let starts = vec![vec![xi, omega.ln(), alpha], vec![mean(data), sd.ln(), 0.0]];
    best_of(MarginalFamilyTag::SkewNormal, &starts, &[0.2 * sd, 0.2, 0.5], nll, to_params)
}

const SKEW_T_MAX_NU: f64 = 1e3;

fn fit_skew_t(data: &[f64]) -> Result<MarginalModel> {
    let sn = fit_skew_normal(data)?;
    let p = sn.params();
    let to_params = |z: &[f64]| vec![z[0], z[1].exp(), z[2], z[3].exp().clamp(0.2, SKEW_T_MAX_NU)];
    let nll = |z: &[f64]| raw_nll(MarginalFamilyTag::SkewStudentT, to_params(z), data);
    let starts: Vec<Vec<f64>> = [4.0f64, 15.0].iter().map(|nu| vec![p[0], p[1].ln(), p[2], nu.ln()]).collect();
    best_of(MarginalFamilyTag::SkewStudentT, &starts, &[0.2 * p[1], 0.2, 0.5, 0.5], nll, to_params)
}

/// Outcome of a margin family selection.
#[derive(Debug, Clone)]
pub struct Selection {
    pub best: MarginFit,
    /// Every family tried, with its BIC or the reason it was skipped.
    pub tried: Vec<(MarginalFamilyTag, std::result::Result<f64, String>)>,
}

/// Picks the candidate with the lowest BIC. A `NormalMixture` candidate is
/// expanded to sizes 2, 3 and 4.
pub fn select_margin(data: &[f64], candidates: &[MarginalFamilyTag]) -> Result<Selection> {
    if candidates.is_empty() {
        return usage("no margin families to choose from");
    }
    let mut expanded: Vec<MarginalFamilyTag> = Vec::new();
    for &c in candidates {
        let items: Vec<MarginalFamilyTag> = match c {
            MarginalFamilyTag::NormalMixture(_) => (2..=4).map(MarginalFamilyTag::NormalMixture).collect(),
            other => vec![other],
        };
        for f in items {
            if !expanded.contains(&f) {
                expanded.push(f);
            }
        }
    }
    let mut best: Option<MarginFit> = None;
    let mut tried = Vec::new();
    for family in expanded {
        match fit_parametric(data, family) {
            Ok(fit) => {
                let bic = fit.bic();
                tried.push((family, Ok(bic)));
                if bic.is_finite() && best.as_ref().map_or(true, |b| bic < b.bic()) {
                    best = Some(fit);
                }
            }
            Err(e) => tried.push((family, Err(e.to_string()))),
        }
    }
    match best {
        Some(best) => Ok(Selection { best, tried }),
        None => {
            let reasons: Vec<String> = tried
                .iter()
                .map(|(f, r)| format!("{f}: {}", r.as_ref().err().cloned().unwrap_or_default()))
                .collect();
            domain(format!("no margin family could be fitted ({})", reasons.join("; ")))
        }
    }
}
