//! Unrotated family kernels.
//!
//! Every kernel is exchangeable, so one conditional distribution suffices:
//! `h(u, v) = ∂C(u, v)/∂v`. Each also provides `h_refl(u, v) = 1 − h(1 − u, v)`,
//! evaluated without cancellation so that conditional probabilities far in
//! either tail keep their relative precision.

use crate::numeric::optim::solve_increasing;
use crate::numeric::quad::integrate;
use crate::numeric::special::{
    bvn_cdf, debye1, ln_expm1, log1p_exp, log_add_exp, norm_cdf, norm_quantile, t_cdf, t_quantile,
};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kernel {
    Independence,
    Gaussian { rho: f64, s: f64 },
    StudentT { rho: f64, nu: f64, ln_const: f64 },
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    Frank { theta: f64 },
    Joe { theta: f64 },
    Bb1 { theta: f64, delta: f64 },
    Bb8 { theta: f64, delta: f64, ln_eta: f64 },
}

pub(crate) fn student_t_ln_const(rho: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0))
        - 0.5 * ((1.0 - rho) * (1.0 + rho)).ln()
}

/// Log density of the t copula at t-scores `x`, `y`.
pub(crate) fn student_t_ln_pdf_scores(rho: f64, nu: f64, ln_const: f64, x: f64, y: f64) -> f64 {
    let q = (x * x + y * y - 2.0 * rho * x * y) / (nu * (1.0 - rho * rho));
    ln_const - 0.5 * (nu + 2.0) * q.ln_1p() + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

impl Kernel {
    pub fn gaussian(rho: f64) -> Self {
        Kernel::Gaussian { rho, s: ((1.0 - rho) * (1.0 + rho)).sqrt() }
    }

    pub fn student_t(rho: f64, nu: f64) -> Self {
        Kernel::StudentT { rho, nu, ln_const: student_t_ln_const(rho, nu) }
    }

    pub fn bb8(theta: f64, delta: f64) -> Self {
        let eta = -(theta * (-delta).ln_1p()).exp_m1();
        Kernel::Bb8 { theta, delta, ln_eta: eta.ln() }
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let c = match *self {
            Kernel::Independence => u * v,
            Kernel::Gaussian { rho, .. } => bvn_cdf(norm_quantile(u), norm_quantile(v), rho),
            Kernel::StudentT { .. } => {
                // Integrate the conditional distribution along the second argument.
                integrate(|s| self.h(u, s), 0.0, v, 1e-15, 1e-13).value
            }
            Kernel::Clayton { theta } => (-clayton_ln_s(theta, u, v) / theta).exp(),
            Kernel::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                (-(gumbel_ln_a(theta, x, y) / theta).exp()).exp()
            }
            Kernel::Frank { theta } => {
                let (eu, ev, e1) = ((-theta * u).exp_m1(), (-theta * v).exp_m1(), (-theta).exp_m1());
                -(eu * ev / e1).ln_1p() / theta
            }
            Kernel::Joe { theta } => -(joe_ln_b(theta, u, v) / theta).exp_m1(),
            Kernel::Bb1 { theta, delta } => {
                let (_, ln_1pt) = bb1_s_t(theta, delta, u, v);
                (-ln_1pt / theta).exp()
            }
            Kernel::Bb8 { theta, delta, ln_eta } => {
                let p = bb8_a(theta, delta, u) * bb8_a(theta, delta, v) / ln_eta.exp();
                -((-p).ln_1p() / theta).exp_m1() / delta
            }
        };
        c.clamp(0.0, u.min(v))
    }

    pub fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            Kernel::Independence => 0.0,
            Kernel::Gaussian { rho, s } => {
                let (x, y) = (norm_quantile(u), norm_quantile(v));
                -s.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s * s)
            }
            Kernel::StudentT { rho, nu, ln_const } => {
                student_t_ln_pdf_scores(rho, nu, ln_const, t_quantile(u, nu), t_quantile(v, nu))
            }
            Kernel::Clayton { theta } => {
                (1.0 + theta).ln() - (theta + 1.0) * (u.ln() + v.ln())
                    - (2.0 + 1.0 / theta) * clayton_ln_s(theta, u, v)
            }
            Kernel::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                let ln_a = gumbel_ln_a(theta, x, y);
                let a_root = (ln_a / theta).exp();
                -a_root + x + y + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 / theta - 2.0) * ln_a
                    + (a_root + theta - 1.0).ln()
            }
            Kernel::Frank { theta } => {
                let (eu, ev, e1) = ((-theta * u).exp_m1(), (-theta * v).exp_m1(), (-theta).exp_m1());
                (-theta * e1).ln() - theta * (u + v) - 2.0 * (e1 + eu * ev).abs().ln()
            }
            Kernel::Joe { theta } => {
                let ln_b = joe_ln_b(theta, u, v);
                (1.0 / theta - 2.0) * ln_b + (theta - 1.0) * ((-u).ln_1p() + (-v).ln_1p())
                    + (theta - 1.0 + ln_b.exp()).ln()
            }
            Kernel::Bb1 { theta, delta } => {
                let (ln_x, ln_y) = (bb1_ln_x(theta, u), bb1_ln_x(theta, v));
                let ln_s = log_add_exp(delta * ln_x, delta * ln_y);
                let ln_t = ln_s / delta;
                let ln_1pt = log1p_exp(ln_t);
                let frac = (ln_t - ln_1pt).exp();
                (-1.0 / theta - 2.0) * ln_1pt + (1.0 / delta - 2.0) * ln_s
                    - (theta + 1.0) * (u.ln() + v.ln())
                    + (delta - 1.0) * (ln_x + ln_y)
                    + ln_1pt
                    + ((1.0 + theta) * frac + theta * (delta - 1.0)).ln()
            }
            Kernel::Bb8 { theta, delta, ln_eta } => {
                let p = bb8_a(theta, delta, u) * bb8_a(theta, delta, v) / ln_eta.exp();
                theta.ln() + delta.ln() - ln_eta
                    + (theta - 1.0) * ((-delta * u).ln_1p() + (-delta * v).ln_1p())
                    + (1.0 / theta - 2.0) * (-p).ln_1p()
                    + (1.0 - p / theta).ln()
            }
        }
    }

    /// `P(U ≤ u | V = v)`.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        let h = match *self {
            Kernel::Independence => u,
            Kernel::Gaussian { rho, s } => norm_cdf((norm_quantile(u) - rho * norm_quantile(v)) / s),
            Kernel::StudentT { rho, nu, .. } => student_h(rho, nu, u, v),
            Kernel::Clayton { theta } => {
                (-(theta + 1.0) * v.ln() - (1.0 + 1.0 / theta) * clayton_ln_s(theta, u, v)).exp()
            }
            Kernel::Gumbel { theta } => gumbel_ln_h(theta, -u.ln(), -v.ln()).exp(),
            Kernel::Frank { theta } => frank_h(theta, u, v),
            Kernel::Joe { theta } => {
                let ln_b = joe_ln_b(theta, u, v);
                ((1.0 / theta - 1.0) * ln_b + (theta - 1.0) * (-v).ln_1p()
                    + (-(theta * (-u).ln_1p()).exp_m1()).ln())
                .exp()
            }
            Kernel::Bb1 { theta, delta } => {
                let (ln_s, ln_1pt) = bb1_s_t(theta, delta, u, v);
                ((-1.0 / theta - 1.0) * ln_1pt + (1.0 / delta - 1.0) * ln_s - (theta + 1.0) * v.ln()
                    + (delta - 1.0) * bb1_ln_x(theta, v))
                .exp()
            }
            Kernel::Bb8 { theta, delta, ln_eta } => {
                let au = bb8_a(theta, delta, u);
                let p = au * bb8_a(theta, delta, v) / ln_eta.exp();
                ((1.0 / theta - 1.0) * (-p).ln_1p() + au.ln() + (theta - 1.0) * (-delta * v).ln_1p()
                    - ln_eta)
                    .exp()
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// `1 − h(1 − u, v)`, accurate when `u` is tiny.
    pub fn h_refl(&self, u: f64, v: f64) -> f64 {
        let h = match *self {
            Kernel::Independence => u,
            Kernel::Gaussian { rho, s } => norm_cdf((norm_quantile(u) + rho * norm_quantile(v)) / s),
            Kernel::StudentT { rho, nu, .. } => student_h(-rho, nu, u, v),
            Kernel::Clayton { theta } => {
                let ln_d = (-theta * (-u).ln_1p()).exp_m1().ln();
                -(-(1.0 + 1.0 / theta) * log1p_exp(ln_d + theta * v.ln())).exp_m1()
            }
            Kernel::Gumbel { theta } => -gumbel_ln_h(theta, -(-u).ln_1p(), -v.ln()).exp_m1(),
            Kernel::Frank { theta } => frank_h(-theta, u, v),
            Kernel::Joe { theta } => {
                let ln_s = theta * u.ln() + ln_expm1(-theta * (-v).ln_1p());
                -((1.0 / theta - 1.0) * log1p_exp(ln_s) + (-(theta * u.ln()).exp()).ln_1p()).exp_m1()
            }
            Kernel::Bb1 { theta, delta } => {
                let ln_xt = ln_expm1(-theta * (-u).ln_1p());
                let ln_y = bb1_ln_x(theta, v);
                let ln_r = delta * (ln_xt - ln_y);
                let ln_1pr = log1p_exp(ln_r);
                let ln_em = ln_expm1(ln_1pr / delta);
                let ln_ratio = (-(theta * v.ln()).exp_m1()).ln();
                let ln_h = (-1.0 / theta - 1.0) * log1p_exp(ln_ratio + ln_em) + (1.0 / delta - 1.0) * ln_1pr;
                -ln_h.exp_m1()
            }
            Kernel::Bb8 { theta, delta, ln_eta } => {
                let ln_d = if delta < 1.0 {
                    theta * (-delta).ln_1p() + ln_expm1(theta * (delta * u / (1.0 - delta)).ln_1p())
                } else {
                    theta * u.ln()
                };
                let ln_k = theta * (-delta * v).ln_1p();
                let ln_q = ln_d + bb8_a(theta, delta, v).ln() - ln_eta - ln_k;
                let ln_h = (1.0 / theta - 1.0) * log1p_exp(ln_q) + (-(ln_d - ln_eta).exp()).ln_1p();
                -ln_h.exp_m1()
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// Solves `h(u, v) = w` for `u`.
    pub fn hinv(&self, w: f64, v: f64) -> f64 {
        let u = match *self {
            Kernel::Independence => w,
            Kernel::Gaussian { rho, s } => norm_cdf(norm_quantile(w) * s + rho * norm_quantile(v)),
            Kernel::StudentT { rho, nu, .. } => student_hinv(rho, nu, w, v),
            Kernel::Clayton { theta } => {
                let k = -theta * w.ln() / (1.0 + theta);
                let ln_s = log1p_exp(-theta * v.ln() + ln_expm1(k));
                (-ln_s / theta).exp()
            }
            Kernel::Frank { theta } => frank_hinv(theta, w, v),
            _ => self.hinv_numeric(w, v, false),
        };
        u.clamp(0.0, 1.0)
    }

    /// Solves `h_refl(u, v) = w` for `u`.
    pub fn hinv_refl(&self, w: f64, v: f64) -> f64 {
        let u = match *self {
            Kernel::Independence => w,
            Kernel::Gaussian { rho, s } => norm_cdf(norm_quantile(w) * s - rho * norm_quantile(v)),
            Kernel::StudentT { rho, nu, .. } => student_hinv(-rho, nu, w, v),
            Kernel::Clayton { theta } => {
                let m = -(-w).ln_1p() / (1.0 + 1.0 / theta);
                let l = log1p_exp(ln_expm1(m) - theta * v.ln());
                -(-l / theta).exp_m1()
            }
            Kernel::Frank { theta } => frank_hinv(-theta, w, v),
            _ => self.hinv_numeric(w, v, true),
        };
        u.clamp(0.0, 1.0)
    }

    fn hinv_numeric(&self, w: f64, v: f64, reflected: bool) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        if w >= 1.0 {
            return 1.0;
        }
        let f = |u: f64| {
            if reflected {
                (self.h_refl(u, v) - w, self.ln_pdf(1.0 - u, v).exp())
            } else {
                (self.h(u, v) - w, self.ln_pdf(u, v).exp())
            }
        };
        solve_increasing(f, 0.0, 1.0, w, 1e-15, 400).unwrap_or(w)
    }

    pub fn tau(&self) -> f64 {
        match *self {
            Kernel::Independence => 0.0,
            Kernel::Gaussian { rho, .. } | Kernel::StudentT { rho, .. } => 2.0 / PI * rho.asin(),
            Kernel::Clayton { theta } => theta / (theta + 2.0),
            Kernel::Gumbel { theta } => 1.0 - 1.0 / theta,
            Kernel::Frank { theta } => frank_tau(theta),
            Kernel::Joe { theta } => archimedean_tau(|t| {
                // φ/φ' = q·ln q·(1 − t)/(θ·p) with p = (1 − t)^θ, q = 1 − p.
                let p = (theta * (-t).ln_1p()).exp();
                if p <= 0.0 {
                    return 0.0;
                }
                let q = -(theta * (-t).ln_1p()).exp_m1();
                q * ((-p).ln_1p() / p) * (1.0 - t) / theta
            }),
            Kernel::Bb1 { theta, delta } => 1.0 - 2.0 / (delta * (theta + 2.0)),
            Kernel::Bb8 { theta, delta, ln_eta } => archimedean_tau(|t| {
                // Same rearrangement with p = (1 − δt)^θ and p₁ = (1 − δ)^θ.
                let p = (theta * (-delta * t).ln_1p()).exp();
                if p <= 0.0 {
                    return 0.0;
                }
                let a = -(theta * (-delta * t).ln_1p()).exp_m1();
                let p1 = -ln_eta.exp_m1();
                let eta = ln_eta.exp();
                let ratio = if p1 > 0.0 { ((p1 - p) / eta).ln_1p() / p } else { (-p).ln_1p() / p };
                a * ratio * (1.0 - delta * t) / (theta * delta)
            }),
        }
    }
}

/// `τ = 1 + 4∫₀¹ φ(t)/φ'(t) dt` for an Archimedean generator φ.
fn archimedean_tau<F: Fn(f64) -> f64>(ratio: F) -> f64 {
    1.0 + 4.0 * integrate(ratio, 0.0, 1.0, 1e-14, 1e-13).value
}

pub(crate) fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-5 {
        return theta / 9.0;
    }
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

fn clayton_ln_s(theta: f64, u: f64, v: f64) -> f64 {
    let (a, b) = (-theta * u.ln(), -theta * v.ln());
    log1p_exp(log_add_exp(ln_expm1(a), ln_expm1(b)))
}

fn gumbel_ln_a(theta: f64, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    theta * hi.ln() + log1p_exp(theta * (lo.ln() - hi.ln()))
}

/// `ln h` for Gumbel in terms of `x = −ln u`, `y = −ln v`.
fn gumbel_ln_h(theta: f64, x: f64, y: f64) -> f64 {
    let ln_1pr = log1p_exp(theta * (x.ln() - y.ln()));
    -y * (ln_1pr / theta).exp_m1() + (1.0 / theta - 1.0) * ln_1pr
}

fn frank_h(theta: f64, u: f64, v: f64) -> f64 {
    let (eu, ev, e1) = ((-theta * u).exp_m1(), (-theta * v).exp_m1(), (-theta).exp_m1());
    (-theta * v).exp() * eu / (e1 + eu * ev)
}

fn frank_hinv(theta: f64, w: f64, v: f64) -> f64 {
    let (ev, e1) = ((-theta * v).exp_m1(), (-theta).exp_m1());
    let a = w * e1 / (1.0 + ev * (1.0 - w));
    -a.ln_1p() / theta
}

fn joe_ln_b(theta: f64, u: f64, v: f64) -> f64 {
    let au = -(theta * (-u).ln_1p()).exp_m1();
    let av = -(theta * (-v).ln_1p()).exp_m1();
    (-au * av).ln_1p()
}

/// `ln(u^{−θ} − 1)`.
fn bb1_ln_x(theta: f64, u: f64) -> f64 {
    ln_expm1(-theta * u.ln())
}

/// Returns `(ln S, ln(1 + T))` with `S = x^δ + y^δ`, `T = S^{1/δ}`.
fn bb1_s_t(theta: f64, delta: f64, u: f64, v: f64) -> (f64, f64) {
    let ln_s = log_add_exp(delta * bb1_ln_x(theta, u), delta * bb1_ln_x(theta, v));
    (ln_s, log1p_exp(ln_s / delta))
}

/// `1 − (1 − δu)^θ`.
fn bb8_a(theta: f64, delta: f64, u: f64) -> f64 {
    -(theta * (-delta * u).ln_1p()).exp_m1()
}

fn student_h(rho: f64, nu: f64, u: f64, v: f64) -> f64 {
    let x = t_quantile(u, nu);
    let y = t_quantile(v, nu);
    let scale = ((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
    t_cdf((x - rho * y) / scale, nu + 1.0)
}

fn student_hinv(rho: f64, nu: f64, w: f64, v: f64) -> f64 {
    let y = t_quantile(v, nu);
    let scale = ((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
    t_cdf(t_quantile(w, nu + 1.0) * scale + rho * y, nu)
}
