//! Shared fixtures for the benchmarks.

use vinerisk::dvine::{DVineRegressionModel, VariableSpec};
use vinerisk::margins::{MarginalFamilyTag, MarginalModel};
use vinerisk::{BivariateCopula, FamilyTag, Rotation};

fn spec(name: &str, family: MarginalFamilyTag, params: &[f64]) -> VariableSpec {
    VariableSpec { name: name.to_string(), margin: MarginalModel::new(family, params).expect("margin") }
}

fn pair(family: FamilyTag, rotation: Rotation, params: &[f64]) -> BivariateCopula {
    BivariateCopula::new(family, rotation, params).expect("copula")
}

/// One representative copula per family.
pub fn copula_zoo() -> Vec<BivariateCopula> {
    vec![
        pair(FamilyTag::Gaussian, Rotation::R0, &[0.5]),
        pair(FamilyTag::StudentT, Rotation::R0, &[0.5, 5.0]),
        pair(FamilyTag::Clayton, Rotation::R0, &[1.5]),
        pair(FamilyTag::Gumbel, Rotation::R0, &[1.8]),
        pair(FamilyTag::Frank, Rotation::R0, &[4.0]),
        pair(FamilyTag::Joe, Rotation::R0, &[2.0]),
        pair(FamilyTag::BB1, Rotation::R0, &[0.5, 1.5]),
        pair(FamilyTag::BB8, Rotation::R180, &[3.0, 0.8]),
    ]
}

/// Four-covariate D-vine with mixed margins and tail-dependent pairs.
pub fn regression_model() -> DVineRegressionModel {
    use MarginalFamilyTag as M;
    let response = spec("y", M::Normal, &[1739.943, 259.2278]);
    let covariates = vec![
        spec("a", M::Gev, &[1.6125, 1.5624, 0.5771]),
        spec("b", M::NormalMixture(2), &[10.7978, 18.3855, 4.3706, 2.8982, 0.282, 0.718]),
        spec("c", M::SkewNormal, &[0.3789, 1.8669, 0.6545]),
        spec("d", M::Gamma, &[12.6204, 0.0285]),
    ];
    let trees = vec![
        vec![
            pair(FamilyTag::Gumbel, Rotation::R180, &[1.6]),
            pair(FamilyTag::Gaussian, Rotation::R0, &[0.3]),
            pair(FamilyTag::Frank, Rotation::R0, &[2.0]),
            pair(FamilyTag::Clayton, Rotation::R0, &[0.8]),
        ],
        vec![
            pair(FamilyTag::StudentT, Rotation::R0, &[0.2, 6.0]),
            pair(FamilyTag::Joe, Rotation::R0, &[1.3]),
            BivariateCopula::independence(),
        ],
        vec![pair(FamilyTag::Clayton, Rotation::R90, &[0.5]), BivariateCopula::independence()],
        vec![pair(FamilyTag::Frank, Rotation::R0, &[-1.0])],
    ];
    DVineRegressionModel::new(response, covariates, trees).expect("model")
}
