//! Built-in ground-truth model for synthetic flight data.
//!
//! Margins follow the fitted distributions reported for the flight sample;
//! response edges follow the reported forward-selection path. Neighbouring
//! covariates are mildly Gaussian-dependent in the first tree and
//! conditionally independent afterwards. `tsd` enters last and is
//! independent of everything, so a correct selection leaves it out.

use vinerisk::dvine::{DVineRegressionModel, VariableSpec};
use vinerisk::margins::{MarginalFamilyTag as M, MarginalModel};
use vinerisk::{BivariateCopula, FamilyTag as F, Result, Rotation as R};

pub const NOISE_COVARIATE: &str = "tsd";

fn spec(name: &str, family: M, params: &[f64]) -> Result<VariableSpec> {
    Ok(VariableSpec { name: name.to_string(), margin: MarginalModel::new(family, params)? })
}

pub fn reference_model() -> Result<DVineRegressionModel> {
    let response = spec("th80", M::Normal, &[1739.943, 259.2278])?;
    let covariates = vec![
        spec(
            "lm",
            M::NormalMixture(4),
            &[
                265.3788, 304.4632, 336.5114, 342.8597, 24.928, 16.6916, 4.0202, 1.4208, 0.2636, 0.4957, 0.1013,
                0.1394,
            ],
        )?,
        spec("td", M::Gamma, &[12.6204, 0.0285])?,
        spec("hws", M::SkewStudentT, &[-0.7578, 2.9865, 1.4194, 19.0])?,
        spec("ea", M::SkewNormal, &[-1.722, 0.25, 0.9385])?,
        spec("asd", M::SkewNormal, &[0.3789, 1.8669, 0.6545])?,
        spec("temp", M::LogNormal, &[5.6462, 0.0245])?,
        spec("tbs", M::Gev, &[1.6125, 1.5624, 0.5771])?,
        spec("bd", M::NormalMixture(2), &[10.7978, 18.3855, 4.3706, 2.8982, 0.282, 0.718])?,
        spec("trd", M::Gev, &[2.9832, 0.7539, 0.0580])?,
        spec("refAP", M::SkewStudentT, &[1023.067, 9.8146, -1.3456, 9.0])?,
        spec(NOISE_COVARIATE, M::LogNormal, &[1.2064, 0.0826])?,
    ];
    let response_edges = [
        BivariateCopula::new(F::BB8, R::R0, &[3.62, 0.84])?,
        BivariateCopula::new(F::Frank, R::R0, &[4.43])?,
        BivariateCopula::new(F::Gaussian, R::R0, &[-0.50])?,
        BivariateCopula::new(F::Gaussian, R::R0, &[0.44])?,
        BivariateCopula::new(F::Gaussian, R::R0, &[0.45])?,
        BivariateCopula::new(F::Frank, R::R0, &[1.86])?,
        BivariateCopula::new(F::Frank, R::R0, &[2.11])?,
        BivariateCopula::new(F::Frank, R::R0, &[2.02])?,
        BivariateCopula::new(F::Gumbel, R::R0, &[1.09])?,
        BivariateCopula::new(F::Gumbel, R::R90, &[1.12])?,
        BivariateCopula::independence(),
    ];
    let m = covariates.len();
    let neighbour = BivariateCopula::new(F::Gaussian, R::R0, &[0.2])?;
    let trees = (0..m)
        .map(|t| {
            (0..m - t)
                .map(|a| {
                    if a == 0 {
                        response_edges[t].clone()
                    } else if t == 0 && a + 1 < m {
                        neighbour.clone()
                    } else {
                        BivariateCopula::independence()
                    }
                })
                .collect()
        })
        .collect();
    DVineRegressionModel::new(response, covariates, trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::COVARIATES;

    #[test]
    fn reference_model_uses_table_names() {
        let model = reference_model().unwrap();
        assert_eq!(model.response().name, "th80");
        let mut names: Vec<&str> = model.covariate_names();
        names.sort_unstable();
        let mut expected = COVARIATES.to_vec();
        expected.sort_unstable();
        assert_eq!(names, expected);
        assert_eq!(model.trees()[9][0].tau().signum(), -1.0);
    }

    #[test]
    fn noise_column_is_independent_of_response() {
        let model = reference_model().unwrap();
        let (y, x) = model.simulate(4000, 9);
        let tau = vinerisk::risk::empirical_kendall_tau(&y, &x[10]).unwrap();
        assert!(tau.abs() < 0.03, "{tau}");
        let lm_tau = vinerisk::risk::empirical_kendall_tau(&y, &x[0]).unwrap();
        assert!((lm_tau - model.trees()[0][0].tau()).abs() < 0.03);
    }
}
