use super::*;
use approx::assert_relative_eq;

fn cop(f: FamilyTag, r: Rotation, p: &[f64]) -> BivariateCopula {
    BivariateCopula::new(f, r, p).unwrap()
}

#[test]
fn trivial_values() {
    let ind = BivariateCopula::independence();
    assert_relative_eq!(ind.cdf(0.3, 0.7), 0.21, epsilon = 1e-15);
    assert_eq!(ind.pdf(0.4, 0.8), 1.0);
    assert_eq!(ind.h1_2(0.42, 0.9), 0.42);
    assert_eq!(ind.hinv1_2(0.42, 0.9), 0.42);
    let g0 = cop(FamilyTag::Gaussian, Rotation::R0, &[0.0]);
    assert_relative_eq!(g0.cdf(0.5, 0.5), 0.25, epsilon = 1e-14);
    assert_relative_eq!(g0.pdf(0.2, 0.9), 1.0, epsilon = 1e-14);
    assert_relative_eq!(g0.h1_2(0.37, 0.8), 0.37, epsilon = 1e-14);
    assert_eq!(g0.tau(), 0.0);
    let g5 = cop(FamilyTag::Gaussian, Rotation::R0, &[0.5]);
    assert_relative_eq!(g5.hinv1_2(0.5, 0.5), 0.5, epsilon = 1e-14);
}

#[test]
fn clayton_closed_forms() {
    let c = cop(FamilyTag::Clayton, Rotation::R0, &[2.0]);
    assert_relative_eq!(c.cdf(0.5, 0.5), 7f64.powf(-0.5), epsilon = 1e-14);
    assert_relative_eq!(c.h1_2(0.5, 0.5), 8.0 * 7f64.powf(-1.5), epsilon = 1e-14);
    assert_relative_eq!(c.tau(), 0.5, epsilon = 1e-15);
}

#[test]
fn frank_tau_matches_debye_oracle() {
    // Reference from an independent high-precision evaluation of the Debye integral.
    let f = cop(FamilyTag::Frank, Rotation::R0, &[4.43]);
    assert_relative_eq!(f.tau(), 0.419_082_035_464_457_5, epsilon = 1e-12);
    let f = cop(FamilyTag::Frank, Rotation::R0, &[-1.47]);
    assert_relative_eq!(f.tau(), -0.159_928_353_922_079_7, epsilon = 1e-12);
}

#[test]
fn archimedean_tau_by_quadrature() {
    // Joe θ = 2 has τ = 1 − ψ'(2) = 2 − π²/6.
    let j = cop(FamilyTag::Joe, Rotation::R0, &[2.0]);
    assert_relative_eq!(j.tau(), 2.0 - std::f64::consts::PI.powi(2) / 6.0, epsilon = 1e-11);
    let b = cop(FamilyTag::BB8, Rotation::R0, &[3.62, 0.84]);
    assert_relative_eq!(b.tau(), 0.450_545_585_688_371_7, epsilon = 1e-10);
    let b = cop(FamilyTag::BB8, Rotation::R0, &[1.71, 0.80]);
    assert_relative_eq!(b.tau(), 0.146_013_837_285_705_7, epsilon = 1e-10);
    let b = cop(FamilyTag::BB1, Rotation::R0, &[0.11, 1.03]);
    assert_relative_eq!(b.tau(), 0.079_740_486_817_282_4, epsilon = 1e-14);
}

#[test]
fn frank_density_matches_cdf_differences() {
    let f = cop(FamilyTag::Frank, Rotation::R0, &[4.43]);
    let h = 1e-4;
    let (u, v) = (0.5, 0.5);
    let fd = (f.cdf(u + h, v + h) - f.cdf(u + h, v - h) - f.cdf(u - h, v + h) + f.cdf(u - h, v - h)) / (4.0 * h * h);
    assert_relative_eq!(f.pdf(u, v), fd, epsilon = 1e-6);
}

#[test]
fn rotation_reflections() {
    let base = cop(FamilyTag::Gumbel, Rotation::R0, &[2.3]);
    for (rot, map) in [
        (Rotation::R90, (|u: f64, v: f64| (1.0 - u, v)) as fn(f64, f64) -> (f64, f64)),
        (Rotation::R180, |u, v| (1.0 - u, 1.0 - v)),
        (Rotation::R270, |u, v| (u, 1.0 - v)),
    ] {
        let r = cop(FamilyTag::Gumbel, rot, &[2.3]);
        for &(u, v) in &[(0.2, 0.7), (0.9, 0.15), (0.5, 0.5)] {
            let (a, b) = map(u, v);
            assert_relative_eq!(r.pdf(u, v), base.pdf(a, b), max_relative = 1e-12);
        }
    }
}

#[test]
fn reflection_helper_is_exact_complement() {
    let cases = [
        cop(FamilyTag::Gaussian, Rotation::R0, &[0.6]),
        cop(FamilyTag::StudentT, Rotation::R0, &[-0.3, 5.0]),
        cop(FamilyTag::Frank, Rotation::R0, &[4.0]),
        cop(FamilyTag::Clayton, Rotation::R180, &[1.5]),
        cop(FamilyTag::Joe, Rotation::R90, &[2.0]),
        cop(FamilyTag::BB8, Rotation::R270, &[3.0, 0.7]),
    ];
    for c in &cases {
        let r = c.reflect_first();
        for &(u, v) in &[(0.3, 0.6), (0.05, 0.9), (0.8, 0.2)] {
            assert_relative_eq!(r.h1_2(u, v), 1.0 - c.h1_2(1.0 - u, v), epsilon = 1e-12);
        }
    }
}

#[test]
fn tail_h_keeps_relative_precision() {
    // Reflected forms must agree with the direct complement where both are accurate
    // and stay positive and monotone far beyond double-precision cancellation.
    let c = cop(FamilyTag::Gumbel, Rotation::R180, &[1.8]);
    let mut prev = 0.0;
    for k in (0..=60).rev() {
        let u = 10f64.powi(-k);
        let h = c.h1_2(u.min(0.999), 0.4);
        assert!(h >= prev && h > 0.0, "u={u} h={h} prev={prev}");
        prev = h;
    }
}

#[test]
fn tau_roundtrip_one_parameter() {
    for (f, r, tau) in [
        (FamilyTag::Gaussian, Rotation::R0, -0.4),
        (FamilyTag::Clayton, Rotation::R0, 0.3),
        (FamilyTag::Clayton, Rotation::R90, -0.3),
        (FamilyTag::Gumbel, Rotation::R180, 0.55),
        (FamilyTag::Frank, Rotation::R0, 0.42),
        (FamilyTag::Frank, Rotation::R0, -0.16),
        (FamilyTag::Joe, Rotation::R270, -0.2),
        (FamilyTag::Joe, Rotation::R0, 0.7),
    ] {
        let p = tau_to_param(f, r, tau).unwrap();
        assert_relative_eq!(cop(f, r, &p).tau(), tau, epsilon = 1e-8);
    }
}

#[test]
fn tau_out_of_range_rejected() {
    assert!(tau_to_param(FamilyTag::Clayton, Rotation::R0, -0.2).is_err());
    assert!(tau_to_param(FamilyTag::Gumbel, Rotation::R90, 0.2).is_err());
    assert!(tau_to_param(FamilyTag::Frank, Rotation::R0, 0.0).is_err());
}

#[test]
fn invalid_parameters_name_the_bound() {
    let e = BivariateCopula::new(FamilyTag::BB8, Rotation::R0, &[2.0, 1.5]).unwrap_err();
    assert!(e.to_string().contains("delta"));
    assert!(BivariateCopula::new(FamilyTag::Frank, Rotation::R90, &[2.0]).is_err());
    assert!(BivariateCopula::new(FamilyTag::StudentT, Rotation::R0, &[0.2, 40.0]).is_err());
}

#[test]
fn simulation_deterministic_and_tau_consistent() {
    let c = cop(FamilyTag::Clayton, Rotation::R0, &[2.0]);
    let a = c.simulate(100_000, 42);
    let b = c.simulate(100_000, 42);
    assert_eq!(a, b);
    let tau = crate::numeric::stats::kendall_tau(&a.u, &a.v).unwrap();
    assert!((0.49..=0.51).contains(&tau), "tau {tau}");
    let i = BivariateCopula::independence().simulate(100_000, 1);
    let tau = crate::numeric::stats::kendall_tau(&i.u, &i.v).unwrap();
    assert!(tau.abs() <= 0.01);
}

#[test]
fn json_roundtrip_is_exact() {
    let c = cop(FamilyTag::StudentT, Rotation::R0, &[0.123_456_789_012_345_67, 6.940_000_000_000_001]);
    let s = serde_json::to_string(&c).unwrap();
    assert!(s.contains("\"df\""));
    let back: BivariateCopula = serde_json::from_str(&s).unwrap();
    assert_eq!(back, c);
    let c = cop(FamilyTag::Clayton, Rotation::R90, &[0.1 + 0.2]);
    let back: BivariateCopula = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back.params()[0].to_bits(), c.params()[0].to_bits());
    assert!(serde_json::from_str::<BivariateCopula>(r#"{"family":"frank","rotation":90,"parameters":[1.0],"df":null}"#).is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn any_copula() -> impl Strategy<Value = BivariateCopula> {
        let rot = prop::sample::select(Rotation::ALL.to_vec());
        prop_oneof![
            (-0.95f64..0.95).prop_map(|r| cop(FamilyTag::Gaussian, Rotation::R0, &[r])),
            (-0.9f64..0.9, 2.5f64..25.0).prop_map(|(r, n)| cop(FamilyTag::StudentT, Rotation::R0, &[r, n])),
            (0.1f64..8.0, rot.clone()).prop_map(|(t, r)| cop(FamilyTag::Clayton, r, &[t])),
            (1.0f64..6.0, rot.clone()).prop_map(|(t, r)| cop(FamilyTag::Gumbel, r, &[t])),
            (-20.0f64..20.0).prop_filter("nonzero", |t| t.abs() > 0.05).prop_map(|t| cop(FamilyTag::Frank, Rotation::R0, &[t])),
            (1.0f64..6.0, rot.clone()).prop_map(|(t, r)| cop(FamilyTag::Joe, r, &[t])),
            (0.1f64..3.0, 1.0f64..3.0, rot.clone()).prop_map(|(t, d, r)| cop(FamilyTag::BB1, r, &[t, d])),
            (1.0f64..5.0, 0.1f64..1.0, rot).prop_map(|(t, d, r)| cop(FamilyTag::BB8, r, &[t, d])),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn h_inverse_roundtrip(c in any_copula(), u in 0.001f64..0.999, v in 0.001f64..0.999) {
            let w = c.h1_2(u, v);
            prop_assert!((c.h1_2(c.hinv1_2(w, v), v) - w).abs() < 1e-9);
            let w = c.h2_1(u, v);
            prop_assert!((c.h2_1(u, c.hinv2_1(w, u)) - w).abs() < 1e-9);
        }

        #[test]
        fn h_monotone_in_conditioned_argument(c in any_copula(), u in 0.01f64..0.98, v in 0.01f64..0.99) {
            prop_assert!(c.h1_2(u, v) <= c.h1_2(u + 0.01, v) + 1e-12);
            prop_assert!(c.h2_1(v, u) <= c.h2_1(v, u + 0.01) + 1e-12);
        }

        #[test]
        fn cdf_boundaries_and_frechet_bounds(c in any_copula(), u in 0.01f64..0.99, v in 0.01f64..0.99) {
            prop_assert!((c.cdf(u, 1.0) - u).abs() < 1e-15);
            prop_assert!((c.cdf(1.0, v) - v).abs() < 1e-15);
            prop_assert_eq!(c.cdf(0.0, v), 0.0);
            let x = c.cdf(u, v);
            prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-12 && x <= u.min(v) + 1e-12);
        }

        #[test]
        fn h_is_derivative_of_cdf(c in any_copula(), u in 0.05f64..0.95, v in 0.05f64..0.95) {
            let d = 1e-5;
            let fd = (c.cdf(u, v + d) - c.cdf(u, v - d)) / (2.0 * d);
            prop_assert!((fd - c.h1_2(u, v)).abs() < 1e-5, "fd {} h {}", fd, c.h1_2(u, v));
            let fd = (c.cdf(u + d, v) - c.cdf(u - d, v)) / (2.0 * d);
            prop_assert!((fd - c.h2_1(u, v)).abs() < 1e-5);
        }

        #[test]
        fn density_is_mixed_derivative(c in any_copula(), u in 0.05f64..0.95, v in 0.05f64..0.95) {
            let d = 1e-5;
            let pdf = c.pdf(u, v);
            let fd = (c.h1_2(u + d, v) - c.h1_2(u - d, v)) / (2.0 * d);
            prop_assert!((fd - pdf).abs() < 1e-5 * pdf.max(1.0), "fd {} pdf {}", fd, pdf);
            let fd = (c.h2_1(u, v + d) - c.h2_1(u, v - d)) / (2.0 * d);
            prop_assert!((fd - pdf).abs() < 1e-5 * pdf.max(1.0));
        }

        #[test]
        fn h_averages_to_conditioned_argument(c in any_copula(), k in 1usize..10) {
            // Averaging P(U <= u | V = v) over uniform v recovers the margin u.
            let u = k as f64 / 10.0;
            let m = 2000;
            let mean: f64 = (0..m).map(|i| c.h1_2(u, (i as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
            prop_assert!((mean - u).abs() < 1e-3, "mean {}", mean);
        }
    }
}
