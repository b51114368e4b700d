//! Univariate margins: parametric families and normal mixtures.

mod fit;
mod mixture;
mod pit;

pub use fit::{fit_parametric, select_margin, MarginFit, Selection};
pub use mixture::{fit_mixture_normal, EmTrace};
pub use pit::{jitter_ties, pit_transform, PitResult};

use crate::error::{domain, Error, Result};
use crate::numeric::optim::solve_increasing;
use crate::numeric::quad::{integrate, integrate_lower, integrate_upper};
use crate::numeric::special::{
    norm_cdf, norm_ln_cdf, norm_ln_pdf, norm_quantile, norm_sf, StudentT,
};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarginalFamilyTag {
    Normal,
    LogNormal,
    SkewNormal,
    SkewStudentT,
    Gev,
    Gamma,
    /// Mixture of `S` normal components.
    NormalMixture(usize),
}

impl MarginalFamilyTag {
    pub fn name(self) -> &'static str {
        match self {
            MarginalFamilyTag::Normal => "normal",
            MarginalFamilyTag::LogNormal => "lognormal",
            MarginalFamilyTag::SkewNormal => "skew_normal",
            MarginalFamilyTag::SkewStudentT => "skew_t",
            MarginalFamilyTag::Gev => "gev",
            MarginalFamilyTag::Gamma => "gamma",
            MarginalFamilyTag::NormalMixture(_) => "normal_mixture",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            MarginalFamilyTag::Normal | MarginalFamilyTag::LogNormal | MarginalFamilyTag::Gamma => 2,
            MarginalFamilyTag::SkewNormal | MarginalFamilyTag::Gev => 3,
            MarginalFamilyTag::SkewStudentT => 4,
            MarginalFamilyTag::NormalMixture(s) => 3 * s - 1,
        }
    }

    /// Every family with the default mixture size.
    pub fn all() -> Vec<MarginalFamilyTag> {
        vec![
            MarginalFamilyTag::Normal,
            MarginalFamilyTag::LogNormal,
            MarginalFamilyTag::SkewNormal,
            MarginalFamilyTag::SkewStudentT,
            MarginalFamilyTag::Gev,
            MarginalFamilyTag::Gamma,
            MarginalFamilyTag::NormalMixture(2),
        ]
    }
}

impl fmt::Display for MarginalFamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginalFamilyTag::NormalMixture(s) => write!(f, "normal_mixture({s})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MarginalFamilyTag {
    type Err = Error;

    /// Accepts `normal_mixture` (size chosen later) or `normal_mixture(S)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(rest) = s.strip_prefix("normal_mixture") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(MarginalFamilyTag::NormalMixture(2));
            }
            let k = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.trim().parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::Usage(format!("bad mixture spec '{s}'")))?;
            return Ok(MarginalFamilyTag::NormalMixture(k));
        }
        Ok(match s.as_str() {
            "normal" => MarginalFamilyTag::Normal,
            "lognormal" => MarginalFamilyTag::LogNormal,
            "skew_normal" => MarginalFamilyTag::SkewNormal,
            "skew_t" | "skew_student_t" => MarginalFamilyTag::SkewStudentT,
            "gev" => MarginalFamilyTag::Gev,
            "gamma" => MarginalFamilyTag::Gamma,
            other => return Err(Error::Usage(format!("unknown margin family '{other}'"))),
        })
    }
}

/// Below this the GEV shape is treated as the Gumbel limit.
const GEV_SHAPE_EPS: f64 = 1e-8;

/// A fitted univariate distribution.
///
/// Parameter layouts: normal and lognormal `[μ, σ]`; skew-normal `[ξ, ω, α]`;
/// skew-t `[ξ, ω, α, ν]`; GEV `[μ, σ, shape]`; gamma `[shape, rate]`;
/// mixtures `[μ₁..μ_S, σ₁..σ_S, ω₁..ω_S]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginRepr", into = "MarginRepr")]
pub struct MarginalModel {
    family: MarginalFamilyTag,
    params: Vec<f64>,
    /// Unnormalized mass left and right of ξ for the skew families.
    split_mass: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct MarginRepr {
    family: String,
    parameters: Vec<f64>,
}

impl TryFrom<MarginRepr> for MarginalModel {
    type Error = Error;

    fn try_from(r: MarginRepr) -> Result<Self> {
        let mut family: MarginalFamilyTag = r.family.parse()?;
        if let MarginalFamilyTag::NormalMixture(_) = family {
            if r.parameters.len() % 3 != 0 || r.parameters.is_empty() {
                return domain("mixture parameters must come in (mu, sigma, weight) triples");
            }
            family = MarginalFamilyTag::NormalMixture(r.parameters.len() / 3);
        }
        MarginalModel::new(family, &r.parameters)
    }
}

impl From<MarginalModel> for MarginRepr {
    fn from(m: MarginalModel) -> Self {
        MarginRepr { family: m.family.name().to_string(), parameters: m.params }
    }
}

impl MarginalModel {
    pub fn new(family: MarginalFamilyTag, params: &[f64]) -> Result<Self> {
        let expected = match family {
            MarginalFamilyTag::NormalMixture(s) => 3 * s,
            f => f.n_params(),
        };
        if params.len() != expected {
            return domain(format!("{family} takes {expected} parameters, got {}", params.len()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return domain(format!("{family} parameters must be finite"));
        }
        let positive = |i: usize, what: &str| {
            if params[i] > 0.0 {
                Ok(())
            } else {
                domain(format!("{family} requires {what} > 0, got {}", params[i]))
            }
        };
        match family {
            MarginalFamilyTag::Normal | MarginalFamilyTag::LogNormal => positive(1, "sigma")?,
            MarginalFamilyTag::SkewNormal => positive(1, "omega")?,
            MarginalFamilyTag::SkewStudentT => {
                positive(1, "omega")?;
                positive(3, "nu")?;
            }
            MarginalFamilyTag::Gev => positive(1, "sigma")?,
            MarginalFamilyTag::Gamma => {
                positive(0, "shape")?;
                positive(1, "rate")?;
            }
            MarginalFamilyTag::NormalMixture(s) => {
                if s == 0 {
                    return domain("mixture needs at least one component");
                }
                for i in 0..s {
                    positive(s + i, "sigma")?;
                    positive(2 * s + i, "weight")?;
                }
                let total: f64 = params[2 * s..].iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return domain(format!("mixture weights must sum to 1, got {total}"));
                }
            }
        }
        let mut m = MarginalModel { family, params: params.to_vec(), split_mass: (0.5, 0.5) };
        if matches!(family, MarginalFamilyTag::SkewNormal | MarginalFamilyTag::SkewStudentT) {
            let xi = params[0];
            let left = integrate_lower(|x| m.pdf(x), xi, 1e-16, 1e-13).value;
            let right = integrate_upper(|x| m.pdf(x), xi, 1e-16, 1e-13).value;
            m.split_mass = (left, right);
        }
        Ok(m)
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(MarginalFamilyTag::Normal, &[mu, sigma])
    }

    pub fn family(&self) -> MarginalFamilyTag {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Free parameters (mixture weights carry one constraint).
    pub fn n_free_params(&self) -> usize {
        self.family.n_params()
    }

    fn mixture_parts(&self) -> (&[f64], &[f64], &[f64]) {
        let s = self.params.len() / 3;
        (&self.params[..s], &self.params[s..2 * s], &self.params[2 * s..])
    }

    /// Lower and upper end of the support.
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            MarginalFamilyTag::LogNormal | MarginalFamilyTag::Gamma => (0.0, f64::INFINITY),
            MarginalFamilyTag::Gev => {
                let (mu, sigma, shape) = (self.params[0], self.params[1], self.params[2]);
                if shape > GEV_SHAPE_EPS {
                    (mu - sigma / shape, f64::INFINITY)
                } else if shape < -GEV_SHAPE_EPS {
                    (f64::NEG_INFINITY, mu - sigma / shape)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            MarginalFamilyTag::Normal => norm_ln_pdf((x - p[0]) / p[1]) - p[1].ln(),
            MarginalFamilyTag::LogNormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                norm_ln_pdf((x.ln() - p[0]) / p[1]) - p[1].ln() - x.ln()
            }
            MarginalFamilyTag::SkewNormal => {
                let z = (x - p[0]) / p[1];
                std::f64::consts::LN_2 - p[1].ln() + norm_ln_pdf(z) + norm_ln_cdf(p[2] * z)
            }
            MarginalFamilyTag::SkewStudentT => {
                skew_t_ln_pdf(x, p, &StudentT::new(p[3]), &StudentT::new(p[3] + 1.0))
            }
            MarginalFamilyTag::Gev => match self.gev_ln_t(x) {
                Some(ln_t) => -p[1].ln() + (p[2] + 1.0) * ln_t - ln_t.exp(),
                None => f64::NEG_INFINITY,
            },
            MarginalFamilyTag::Gamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                p[0] * p[1].ln() - ln_gamma(p[0]) + (p[0] - 1.0) * x.ln() - p[1] * x
            }
            MarginalFamilyTag::NormalMixture(_) => {
                let (mu, sd, w) = self.mixture_parts();
                let terms: Vec<f64> = (0..mu.len())
                    .map(|i| w[i].ln() + norm_ln_pdf((x - mu[i]) / sd[i]) - sd[i].ln())
                    .collect();
                let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    return m;
                }
                m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `ln t(x)` for the GEV, `None` outside the support.
    fn gev_ln_t(&self, x: f64) -> Option<f64> {
        let (mu, sigma, shape) = (self.params[0], self.params[1], self.params[2]);
        let z = (x - mu) / sigma;
        if shape.abs() < GEV_SHAPE_EPS {
            return Some(-z);
        }
        let arg = shape * z;
        if arg <= -1.0 {
            return None;
        }
        Some(-arg.ln_1p() / shape)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let p = &self.params;
        match self.family {
            MarginalFamilyTag::Normal => norm_cdf((x - p[0]) / p[1]),
            MarginalFamilyTag::LogNormal => {
                if x <= 0.0 { 0.0 } else { norm_cdf((x.ln() - p[0]) / p[1]) }
            }
            MarginalFamilyTag::Gev => match self.gev_ln_t(x) {
                Some(ln_t) => (-ln_t.exp()).exp(),
                None => if p[2] > 0.0 { 0.0 } else { 1.0 },
            },
            MarginalFamilyTag::Gamma => {
                if x <= 0.0 { 0.0 } else { gamma_lr(p[0], p[1] * x) }
            }
            MarginalFamilyTag::NormalMixture(_) => {
                let (mu, sd, w) = self.mixture_parts();
                (0..mu.len()).map(|i| w[i] * norm_cdf((x - mu[i]) / sd[i])).sum::<f64>().min(1.0)
            }
            MarginalFamilyTag::SkewNormal | MarginalFamilyTag::SkewStudentT => {
                if x <= p[0] {
                    self.skew_lower(x)
                } else {
                    1.0 - self.skew_upper(x)
                }
            }
        }
    }

    /// Survival function `1 − F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let p = &self.params;
        match self.family {
            MarginalFamilyTag::Normal => norm_sf((x - p[0]) / p[1]),
            MarginalFamilyTag::LogNormal => {
                if x <= 0.0 { 1.0 } else { norm_sf((x.ln() - p[0]) / p[1]) }
            }
            MarginalFamilyTag::Gev => match self.gev_ln_t(x) {
                Some(ln_t) => -(-ln_t.exp()).exp_m1(),
                None => if p[2] > 0.0 { 1.0 } else { 0.0 },
            },
            MarginalFamilyTag::Gamma => {
                if x <= 0.0 { 1.0 } else { gamma_ur(p[0], p[1] * x) }
            }
            MarginalFamilyTag::NormalMixture(_) => {
                let (mu, sd, w) = self.mixture_parts();
                (0..mu.len()).map(|i| w[i] * norm_sf((x - mu[i]) / sd[i])).sum::<f64>().min(1.0)
            }
            MarginalFamilyTag::SkewNormal | MarginalFamilyTag::SkewStudentT => {
                if x > p[0] {
                    self.skew_upper(x)
                } else {
                    1.0 - self.skew_lower(x)
                }
            }
        }
    }

    fn skew_total(&self) -> f64 {
        self.split_mass.0 + self.split_mass.1
    }

    fn skew_lower(&self, x: f64) -> f64 {
        let xi = self.params[0];
        let scale = self.params[1];
        // Integrate back to ξ where the mass is cached when that is shorter.
        let v = if x > xi - 4.0 * scale {
            self.split_mass.0 - integrate(|t| self.pdf(t), x, xi, 1e-17, 1e-13).value
        } else {
            integrate_lower(|t| self.pdf(t), x, 1e-300, 1e-12).value
        };
        (v / self.skew_total()).clamp(0.0, 1.0)
    }

    fn skew_upper(&self, x: f64) -> f64 {
        let xi = self.params[0];
        let scale = self.params[1];
        let v = if x < xi + 4.0 * scale {
            self.split_mass.1 - integrate(|t| self.pdf(t), xi, x, 1e-17, 1e-13).value
        } else {
            integrate_upper(|t| self.pdf(t), x, 1e-300, 1e-12).value
        };
        (v / self.skew_total()).clamp(0.0, 1.0)
    }

    /// Quantile function; `p` is clamped into the open unit interval.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_checked(p).0
    }

    /// Quantile plus a flag telling whether `p` had to be clamped.
    pub fn quantile_checked(&self, p: f64) -> (f64, bool) {
        let clamped = !(p > 0.0 && p < 1.0);
        let p = if p.is_nan() { 0.5 } else { p.clamp(1e-300, 1.0 - 1e-16) };
        (self.quantile_inner(p), clamped)
    }

    fn quantile_inner(&self, p: f64) -> f64 {
        let par = &self.params;
        match self.family {
            MarginalFamilyTag::Normal => par[0] + par[1] * norm_quantile(p),
            MarginalFamilyTag::LogNormal => (par[0] + par[1] * norm_quantile(p)).exp(),
            MarginalFamilyTag::Gev => {
                let t = -p.ln();
                if par[2].abs() < GEV_SHAPE_EPS {
                    par[0] - par[1] * t.ln()
                } else {
                    par[0] + par[1] * (-par[2] * t.ln()).exp_m1() / par[2]
                }
            }
            _ => self.invert_numeric(p),
        }
    }

    fn location_scale(&self) -> (f64, f64) {
        let p = &self.params;
        match self.family {
            MarginalFamilyTag::Gamma => (p[0] / p[1], p[0].sqrt() / p[1]),
            MarginalFamilyTag::NormalMixture(_) => {
                let (mu, sd, w) = self.mixture_parts();
                let m: f64 = mu.iter().zip(w).map(|(a, b)| a * b).sum();
                let s = sd.iter().cloned().fold(0.0, f64::max)
                    + mu.iter().map(|x| (x - m).abs()).fold(0.0, f64::max);
                (m, s)
            }
            _ => (p[0], p[1]),
        }
    }

    fn invert_numeric(&self, p: f64) -> f64 {
        let upper = p > 0.5;
        let q = 1.0 - p;
        // Increasing residual; the upper tail works on the survival scale.
        let resid = |x: f64| if upper { q - self.sf(x) } else { self.cdf(x) - p };
        let (center, scale) = self.location_scale();
        let (support_lo, _) = self.support();
        let mut lo = center - scale;
        let mut hi = center + scale;
        let mut step = scale;
        while resid(hi) < 0.0 {
            step *= 2.0;
            hi = center + step;
            if !hi.is_finite() {
                break;
            }
        }
        step = scale;
        if support_lo > f64::NEG_INFINITY {
            lo = lo.max(support_lo + 0.5 * (center - support_lo));
            while resid(lo) > 0.0 && lo > support_lo {
                lo = support_lo + (lo - support_lo) * 0.25;
                if lo - support_lo < 1e-300 {
                    lo = support_lo;
                    break;
                }
            }
        } else {
            while resid(lo) > 0.0 {
                step *= 2.0;
                lo = center - step;
                if !lo.is_finite() {
                    break;
                }
            }
        }
        let f = |x: f64| (resid(x), self.pdf(x));
        solve_increasing(f, lo, hi, 0.5 * (lo + hi), 1e-14, 300).unwrap_or(0.5 * (lo + hi))
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        if self.family == MarginalFamilyTag::SkewStudentT {
            let p = &self.params;
            let (body, shape) = (StudentT::new(p[3]), StudentT::new(p[3] + 1.0));
            return data.iter().map(|&x| skew_t_ln_pdf(x, p, &body, &shape)).sum();
        }
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        let p = &self.params;
        match self.family {
            MarginalFamilyTag::Normal => p[0],
            MarginalFamilyTag::LogNormal => (p[0] + 0.5 * p[1] * p[1]).exp(),
            MarginalFamilyTag::Gamma => p[0] / p[1],
            MarginalFamilyTag::NormalMixture(_) => self.location_scale().0,
            _ => self.quantile(0.5),
        }
    }
}

/// Skew Student t log-density with location, scale, skewness and degrees of
/// freedom in `p`; `body` and `shape` carry ν and ν + 1 degrees of freedom.
fn skew_t_ln_pdf(x: f64, p: &[f64], body: &StudentT, shape: &StudentT) -> f64 {
    let (z, nu) = ((x - p[0]) / p[1], p[3]);
    let arg = p[2] * z * ((nu + 1.0) / (nu + z * z)).sqrt();
    std::f64::consts::LN_2 - p[1].ln() + body.ln_pdf(z) + shape.ln_cdf(arg)
}

#[cfg(test)]
mod tests;
