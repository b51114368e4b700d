//! D-vine copula quantile regression with analytic small-probability
//! exceedance estimates.
//!
//! The crate is organised bottom up:
//!
//! * [`bicop`] – parametric pair copulas, h-functions and their inverses;
//! * [`margins`] – univariate margins, normal mixtures fitted by EM;
//! * [`dvine`] – D-vine regression with forward covariate selection;
//! * [`risk`] – exceedance probabilities and the downstream ranking analysis;
//! * [`lqr`] – linear quantile regression used as a benchmark.

pub mod bicop;
pub mod error;
pub mod lqr;
pub mod dvine;
pub mod margins;
pub mod numeric;
pub mod risk;

pub use bicop::{BivariateCopula, FamilyTag, Rotation};
pub use error::{Error, Result};
