//! Parametric bivariate copulas: evaluation, conditional distributions,
//! Kendall's τ, simulation and maximum-likelihood fitting.

mod family;
mod fit;

pub use fit::{fit_bicop, BicopFit, FitOptions};

use crate::error::{domain, Error, Result};
use crate::numeric::optim::solve_increasing;
use family::{frank_tau, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Clamp applied to pseudo-observations and conditioning arguments.
pub const PIT_EPS: f64 = 1e-10;

/// Smallest conditioned argument kept when chasing tail probabilities.
pub const TAIL_EPS: f64 = 1e-290;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    #[serde(rename = "indep")]
    Independence,
    Gaussian,
    #[serde(rename = "t")]
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
    #[serde(rename = "bb1")]
    BB1,
    #[serde(rename = "bb8")]
    BB8,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 9] = [
        FamilyTag::Independence,
        FamilyTag::Gaussian,
        FamilyTag::StudentT,
        FamilyTag::Clayton,
        FamilyTag::Gumbel,
        FamilyTag::Frank,
        FamilyTag::Joe,
        FamilyTag::BB1,
        FamilyTag::BB8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Independence => "indep",
            FamilyTag::Gaussian => "gaussian",
            FamilyTag::StudentT => "t",
            FamilyTag::Clayton => "clayton",
            FamilyTag::Gumbel => "gumbel",
            FamilyTag::Frank => "frank",
            FamilyTag::Joe => "joe",
            FamilyTag::BB1 => "bb1",
            FamilyTag::BB8 => "bb8",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            FamilyTag::Independence => 0,
            FamilyTag::StudentT | FamilyTag::BB1 | FamilyTag::BB8 => 2,
            _ => 1,
        }
    }

    /// Rotations that are not redundant for this family.
    pub fn rotations(self) -> &'static [Rotation] {
        match self {
            FamilyTag::Independence | FamilyTag::Gaussian | FamilyTag::StudentT | FamilyTag::Frank => {
                &[Rotation::R0]
            }
            _ => &Rotation::ALL,
        }
    }

    /// Every admissible (family, rotation) pair, in catalog order.
    pub fn catalog(families: &[FamilyTag]) -> Vec<(FamilyTag, Rotation)> {
        let mut out: Vec<(FamilyTag, Rotation)> =
            families.iter().flat_map(|&f| f.rotations().iter().map(move |&r| (f, r))).collect();
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = match s.to_ascii_lowercase().as_str() {
            "indep" | "independence" => FamilyTag::Independence,
            "gaussian" | "normal" => FamilyTag::Gaussian,
            "t" | "student" | "student_t" => FamilyTag::StudentT,
            "clayton" => FamilyTag::Clayton,
            "gumbel" => FamilyTag::Gumbel,
            "frank" => FamilyTag::Frank,
            "joe" => FamilyTag::Joe,
            "bb1" => FamilyTag::BB1,
            "bb8" => FamilyTag::BB8,
            other => return Err(Error::Usage(format!("unknown copula family '{other}'"))),
        };
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    /// Whether the rotation turns positive base dependence into negative.
    pub fn is_negative(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

impl TryFrom<u16> for Rotation {
    type Error = Error;

    fn try_from(d: u16) -> Result<Self> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => domain(format!("rotation must be 0, 90, 180 or 270, got {d}")),
        }
    }
}

impl From<Rotation> for u16 {
    fn from(r: Rotation) -> u16 {
        r.degrees()
    }
}

/// Which argument is conditioned on in an h-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `h_{1|2}(u | v) = ∂C(u, v)/∂v`.
    FirstGivenSecond,
    /// `h_{2|1}(v | u) = ∂C(u, v)/∂u`.
    SecondGivenFirst,
}

/// A pair copula: family, rotation and parameters.
///
/// For the Student-t family `params` is `[ρ, ν]`; serialization stores ν
/// separately as `df`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRepr", into = "CopulaRepr")]
pub struct BivariateCopula {
    family: FamilyTag,
    rotation: Rotation,
    params: Vec<f64>,
    kernel: Kernel,
}

#[derive(Serialize, Deserialize)]
struct CopulaRepr {
    family: FamilyTag,
    rotation: Rotation,
    parameters: Vec<f64>,
    df: Option<f64>,
}

impl TryFrom<CopulaRepr> for BivariateCopula {
    type Error = Error;

    fn try_from(r: CopulaRepr) -> Result<Self> {
        let mut params = r.parameters;
        if r.family == FamilyTag::StudentT {
            match r.df {
                Some(df) => params.push(df),
                None => return domain("t copula requires df"),
            }
        }
        BivariateCopula::new(r.family, r.rotation, &params)
    }
}

impl From<BivariateCopula> for CopulaRepr {
    fn from(c: BivariateCopula) -> Self {
        let (parameters, df) = if c.family == FamilyTag::StudentT {
            (vec![c.params[0]], Some(c.params[1]))
        } else {
            (c.params.clone(), None)
        };
        CopulaRepr { family: c.family, rotation: c.rotation, parameters, df }
    }
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(what()))
    }
}

impl BivariateCopula {
    pub fn new(family: FamilyTag, rotation: Rotation, params: &[f64]) -> Result<Self> {
        if !family.rotations().contains(&rotation) {
            return domain(format!("{family} admits rotation 0 only, got {}", rotation.degrees()));
        }
        if params.len() != family.n_params() {
            return domain(format!(
                "{family} takes {} parameter(s), got {}",
                family.n_params(),
                params.len()
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return domain(format!("{family} parameters must be finite"));
        }
        let p = |i: usize| params[i];
        let kernel = match family {
            FamilyTag::Independence => Kernel::Independence,
            FamilyTag::Gaussian => {
                check(p(0).abs() < 1.0, || format!("gaussian requires |rho| < 1, got {}", p(0)))?;
                Kernel::gaussian(p(0))
            }
            FamilyTag::StudentT => {
                check(p(0).abs() < 1.0, || format!("t requires |rho| < 1, got {}", p(0)))?;
                check((2.0..=30.0).contains(&p(1)), || format!("t requires df in [2, 30], got {}", p(1)))?;
                Kernel::student_t(p(0), p(1))
            }
            FamilyTag::Clayton => {
                check(p(0) > 0.0, || format!("clayton requires theta > 0, got {}", p(0)))?;
                Kernel::Clayton { theta: p(0) }
            }
            FamilyTag::Gumbel => {
                check(p(0) >= 1.0, || format!("gumbel requires theta >= 1, got {}", p(0)))?;
                Kernel::Gumbel { theta: p(0) }
            }
            FamilyTag::Frank => {
                check(p(0) != 0.0, || "frank requires theta != 0".to_string())?;
                Kernel::Frank { theta: p(0) }
            }
            FamilyTag::Joe => {
                check(p(0) >= 1.0, || format!("joe requires theta >= 1, got {}", p(0)))?;
                Kernel::Joe { theta: p(0) }
            }
            FamilyTag::BB1 => {
                check(p(0) > 0.0, || format!("bb1 requires theta > 0, got {}", p(0)))?;
                check(p(1) >= 1.0, || format!("bb1 requires delta >= 1, got {}", p(1)))?;
                Kernel::Bb1 { theta: p(0), delta: p(1) }
            }
            FamilyTag::BB8 => {
                check(p(0) >= 1.0, || format!("bb8 requires theta >= 1, got {}", p(0)))?;
                check(p(1) > 0.0 && p(1) <= 1.0, || format!("bb8 requires delta in (0, 1], got {}", p(1)))?;
                Kernel::bb8(p(0), p(1))
            }
        };
        Ok(BivariateCopula { family, rotation, params: params.to_vec(), kernel })
    }

    pub fn independence() -> Self {
        BivariateCopula {
            family: FamilyTag::Independence,
            rotation: Rotation::R0,
            params: Vec::new(),
            kernel: Kernel::Independence,
        }
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_independence(&self) -> bool {
        self.family == FamilyTag::Independence
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let k = &self.kernel;
        let c = match self.rotation {
            Rotation::R0 => k.cdf(u, v),
            Rotation::R90 => v - k.cdf(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + k.cdf(1.0 - u, 1.0 - v),
            Rotation::R270 => u - k.cdf(u, 1.0 - v),
        };
        c.clamp((u + v - 1.0).max(0.0), u.min(v))
    }

    pub fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_pit(u), clamp_pit(v));
        let k = &self.kernel;
        match self.rotation {
            Rotation::R0 => k.ln_pdf(u, v),
            Rotation::R90 => k.ln_pdf(1.0 - u, v),
            Rotation::R180 => k.ln_pdf(1.0 - u, 1.0 - v),
            Rotation::R270 => k.ln_pdf(u, 1.0 - v),
        }
    }

    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        self.ln_pdf(u, v).exp()
    }

    /// `P(U ≤ u | V = v)`.
    pub fn h1_2(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_tail(u), clamp_pit(v));
        let k = &self.kernel;
        match self.rotation {
            Rotation::R0 => k.h(u, v),
            Rotation::R90 => k.h_refl(u, v),
            Rotation::R180 => k.h_refl(u, 1.0 - v),
            Rotation::R270 => k.h(u, 1.0 - v),
        }
    }

    /// `P(V ≤ v | U = u)`.
    pub fn h2_1(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_pit(u), clamp_tail(v));
        let k = &self.kernel;
        match self.rotation {
            Rotation::R0 => k.h(v, u),
            Rotation::R90 => k.h(v, 1.0 - u),
            Rotation::R180 => k.h_refl(v, 1.0 - u),
            Rotation::R270 => k.h_refl(v, u),
        }
    }

    pub fn hfunc(&self, dir: Conditioning, u: f64, v: f64) -> f64 {
        match dir {
            Conditioning::FirstGivenSecond => self.h1_2(u, v),
            Conditioning::SecondGivenFirst => self.h2_1(u, v),
        }
    }

    /// The `u` solving `h1_2(u, v) = w`.
    pub fn hinv1_2(&self, w: f64, v: f64) -> f64 {
        let (w, v) = (clamp_tail(w), clamp_pit(v));
        let k = &self.kernel;
        match self.rotation {
            Rotation::R0 => k.hinv(w, v),
            Rotation::R90 => k.hinv_refl(w, v),
            Rotation::R180 => k.hinv_refl(w, 1.0 - v),
            Rotation::R270 => k.hinv(w, 1.0 - v),
        }
    }

    /// The `v` solving `h2_1(u, v) = w`.
    pub fn hinv2_1(&self, w: f64, u: f64) -> f64 {
        let (w, u) = (clamp_tail(w), clamp_pit(u));
        let k = &self.kernel;
        match self.rotation {
            Rotation::R0 => k.hinv(w, u),
            Rotation::R90 => k.hinv(w, 1.0 - u),
            Rotation::R180 => k.hinv_refl(w, 1.0 - u),
            Rotation::R270 => k.hinv_refl(w, u),
        }
    }

    /// Inverse h-function; `cond` is the conditioning argument.
    pub fn hinv(&self, dir: Conditioning, w: f64, cond: f64) -> f64 {
        match dir {
            Conditioning::FirstGivenSecond => self.hinv1_2(w, cond),
            Conditioning::SecondGivenFirst => self.hinv2_1(w, cond),
        }
    }

    /// Copula of `(1 − U, V)`.
    ///
    /// Its `h1_2(s, v)` equals `1 − h1_2(1 − s, v)` of the original, which
    /// turns upper-tail conditional probabilities into lower-tail ones.
    pub fn reflect_first(&self) -> BivariateCopula {
        match self.family {
            FamilyTag::Independence => self.clone(),
            FamilyTag::Gaussian => Self::new(self.family, Rotation::R0, &[-self.params[0]]).unwrap(),
            FamilyTag::StudentT => {
                Self::new(self.family, Rotation::R0, &[-self.params[0], self.params[1]]).unwrap()
            }
            FamilyTag::Frank => Self::new(self.family, Rotation::R0, &[-self.params[0]]).unwrap(),
            _ => {
                let rot = match self.rotation {
                    Rotation::R0 => Rotation::R90,
                    Rotation::R90 => Rotation::R0,
                    Rotation::R180 => Rotation::R270,
                    Rotation::R270 => Rotation::R180,
                };
                Self::new(self.family, rot, &self.params).unwrap()
            }
        }
    }

    pub fn tau(&self) -> f64 {
        let t = self.kernel.tau();
        if self.rotation.is_negative() {
            -t
        } else {
            t
        }
    }

    /// Log-likelihood of paired pseudo-observations.
    pub fn loglik(&self, u: &[f64], v: &[f64]) -> f64 {
        if self.is_independence() {
            return 0.0;
        }
        u.iter().zip(v).map(|(&a, &b)| self.ln_pdf(a, b)).sum()
    }

    pub fn simulate(&self, n: usize, seed: u64) -> PseudoObservations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let a = open_uniform(&mut rng);
            let w = open_uniform(&mut rng);
            u.push(a);
            v.push(self.hinv2_1(w, a));
        }
        PseudoObservations { u, v }
    }
}

/// Paired observations on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoObservations {
    /// Builds a sample, clamping every value into `[PIT_EPS, 1 − PIT_EPS]`.
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return domain(format!("pseudo-observation lengths differ: {} vs {}", u.len(), v.len()));
        }
        if u.iter().chain(&v).any(|x| !(0.0..=1.0).contains(x)) {
            return domain("pseudo-observations must lie in [0, 1]");
        }
        Ok(PseudoObservations {
            u: u.into_iter().map(clamp_pit).collect(),
            v: v.into_iter().map(clamp_pit).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

pub(crate) fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

pub fn clamp_pit(x: f64) -> f64 {
    x.clamp(PIT_EPS, 1.0 - PIT_EPS)
}

fn clamp_tail(x: f64) -> f64 {
    x.clamp(TAIL_EPS, 1.0 - 1e-16)
}

/// Parameters matching a Kendall's τ.
///
/// Two-parameter families return a start vector whose first component is
/// matched to τ with the second at its one-parameter limit.
pub fn tau_to_param(family: FamilyTag, rotation: Rotation, tau: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&tau) || tau.is_nan() {
        return domain(format!("tau must lie in [-1, 1], got {tau}"));
    }
    if !family.rotations().contains(&rotation) {
        return domain(format!("{family} admits rotation 0 only"));
    }
    let base = if rotation.is_negative() { -tau } else { tau };
    let needs_positive = |lo: f64| {
        if base > lo && base < 1.0 {
            Ok(())
        } else {
            domain(format!("tau {tau} not attainable by {family} rotated {}", rotation.degrees()))
        }
    };
    let p = match family {
        FamilyTag::Independence => {
            if tau != 0.0 {
                return domain("independence copula has tau 0");
            }
            vec![]
        }
        FamilyTag::Gaussian | FamilyTag::StudentT => {
            if tau.abs() >= 1.0 {
                return domain(format!("tau {tau} not attainable by {family}"));
            }
            let rho = (std::f64::consts::FRAC_PI_2 * tau).sin();
            if family == FamilyTag::Gaussian { vec![rho] } else { vec![rho, 8.0] }
        }
        FamilyTag::Clayton => {
            needs_positive(0.0)?;
            vec![2.0 * base / (1.0 - base)]
        }
        FamilyTag::Gumbel => {
            needs_positive(-1e-300)?;
            vec![1.0 / (1.0 - base)]
        }
        FamilyTag::Frank => {
            if tau == 0.0 || tau.abs() >= 1.0 {
                return domain(format!("tau {tau} not attainable by frank"));
            }
            let target = tau.abs();
            let theta = invert_tau(|t| frank_tau(t), target, 1e-8, 1e4);
            vec![theta.copysign(tau)]
        }
        FamilyTag::Joe => {
            needs_positive(-1e-300)?;
            let theta = invert_tau(|t| Kernel::Joe { theta: t }.tau(), base, 1.0, 1e3);
            vec![theta]
        }
        FamilyTag::BB1 => {
            needs_positive(0.0)?;
            vec![2.0 * base / (1.0 - base), 1.0]
        }
        FamilyTag::BB8 => {
            needs_positive(-1e-300)?;
            let theta = invert_tau(|t| Kernel::Joe { theta: t }.tau(), base, 1.0, 1e3);
            vec![theta, 1.0]
        }
    };
    Ok(p)
}

/// Inverts an increasing τ(θ) on `[lo, hi]`.
fn invert_tau<F: Fn(f64) -> f64>(tau_of: F, target: f64, lo: f64, hi: f64) -> f64 {
    if tau_of(lo) >= target {
        return lo;
    }
    if tau_of(hi) <= target {
        return hi;
    }
    let dtau = |t: f64| {
        let h = 1e-6 * t.max(1.0);
        (tau_of(t + h) - tau_of(t - h)) / (2.0 * h)
    };
    solve_increasing(|t| (tau_of(t) - target, dtau(t)), lo, hi, lo.max(1.0) * 2.0, 1e-15, 200)
        .unwrap_or(lo)
}

#[cfg(test)]
mod tests;
