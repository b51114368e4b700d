use super::*;
use crate::numeric::quad::integrate;
use crate::numeric::stats::ranks;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(family: MarginalFamilyTag, p: &[f64]) -> MarginalModel {
    MarginalModel::new(family, p).unwrap()
}

/// Models with the parameter values of a realistic flight-data fit.
fn zoo() -> Vec<MarginalModel> {
    vec![
        model(MarginalFamilyTag::Normal, &[1739.943, 259.2278]),
        model(MarginalFamilyTag::LogNormal, &[5.6462, 0.0245]),
        model(MarginalFamilyTag::SkewNormal, &[0.3789, 1.8669, 0.6545]),
        model(MarginalFamilyTag::SkewNormal, &[-1.722, 0.25, 0.9385]),
        model(MarginalFamilyTag::SkewStudentT, &[-0.7578, 2.9865, 1.4194, 19.0]),
        model(MarginalFamilyTag::SkewStudentT, &[1023.067, 9.8146, -1.3456, 9.0]),
        model(MarginalFamilyTag::Gev, &[2.9832, 0.7539, 0.0580]),
        model(MarginalFamilyTag::Gev, &[1.6125, 1.5624, 0.5771]),
        model(MarginalFamilyTag::Gev, &[0.0, 1.0, -0.3]),
        model(MarginalFamilyTag::Gev, &[0.0, 1.0, 0.0]),
        model(MarginalFamilyTag::Gamma, &[12.6204, 0.0285]),
        model(MarginalFamilyTag::NormalMixture(2), &[10.7978, 18.3855, 4.3706, 2.8982, 0.282, 0.718]),
    ]
}

fn sample(m: &MarginalModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| m.quantile(rng.random_range(1e-12..1.0))).collect()
}

#[test]
fn standard_normal_median() {
    assert_eq!(MarginalModel::normal(0.0, 1.0).unwrap().cdf(0.0), 0.5);
}

#[test]
fn gev_quantile_inverts() {
    let m = model(MarginalFamilyTag::Gev, &[2.9832, 0.7539, 0.0580]);
    assert!((m.cdf(m.quantile(0.9)) - 0.9).abs() < 1e-9);
}

#[test]
fn quantile_inverts_cdf_everywhere() {
    for m in zoo() {
        for i in 1..=101 {
            let p = i as f64 / 102.0;
            let x = m.quantile(p);
            assert!((m.cdf(x) - p).abs() < 1e-9, "{:?} p={p}", m.family());
            let back = m.quantile(m.cdf(x));
            assert!((back - x).abs() <= 1e-7 * x.abs().max(1.0), "{:?} x={x} back={back}", m.family());
        }
    }
}

#[test]
fn cdf_monotone_on_grid() {
    for m in zoo() {
        let (a, b) = (m.quantile(1e-6), m.quantile(1.0 - 1e-6));
        let mut prev = 0.0;
        for i in 0..=1000 {
            let x = a + (b - a) * i as f64 / 1000.0;
            let c = m.cdf(x);
            assert!(c >= prev && (0.0..=1.0).contains(&c), "{:?}", m.family());
            prev = c;
        }
    }
}

#[test]
fn pdf_is_derivative_of_cdf() {
    for m in zoo() {
        let scale = m.quantile(0.75) - m.quantile(0.25);
        for p in [0.05, 0.3, 0.5, 0.8, 0.97] {
            let x = m.quantile(p);
            let h = 1e-4 * scale;
            let fd = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
            assert!((fd - m.pdf(x)).abs() * scale < 1e-5, "{:?} at p={p}: {fd} vs {}", m.family(), m.pdf(x));
        }
    }
}

#[test]
fn pdf_integrates_to_one() {
    for m in zoo() {
        let (a, b) = (m.quantile(1e-14), m.quantile(1.0 - 1e-14));
        let mass = integrate(|x| m.pdf(x), a, b, 1e-12, 1e-10).value;
        assert!((mass - 1.0).abs() < 1e-4, "{:?}: {mass}", m.family());
    }
}

#[test]
fn survival_matches_complement() {
    for m in zoo() {
        for p in [0.01, 0.5, 0.99] {
            let x = m.quantile(p);
            assert!((m.sf(x) + m.cdf(x) - 1.0).abs() < 1e-12, "{:?}", m.family());
        }
    }
    let m = MarginalModel::normal(0.0, 1.0).unwrap();
    assert!((m.sf(10.0) / 7.619853024160527e-24 - 1.0).abs() < 1e-10);
}

#[test]
fn upper_tail_quantile_accurate() {
    let m = model(MarginalFamilyTag::SkewStudentT, &[-0.7578, 2.9865, 1.4194, 19.0]);
    let x = m.quantile(1.0 - 1e-9);
    assert!((m.sf(x) / 1e-9 - 1.0).abs() < 1e-6);
}

#[test]
fn quantile_flags_clamping() {
    let m = MarginalModel::normal(0.0, 1.0).unwrap();
    assert!(m.quantile_checked(0.0).1);
    assert!(m.quantile_checked(1.0).1);
    assert!(!m.quantile_checked(0.5).1);
    assert!(m.quantile(0.0).is_finite());
}

#[test]
fn invalid_parameters_rejected() {
    assert!(MarginalModel::normal(0.0, -1.0).is_err());
    assert!(MarginalModel::new(MarginalFamilyTag::NormalMixture(2), &[0.0, 1.0, 1.0, 1.0, 0.3, 0.3]).is_err());
    assert!(MarginalModel::new(MarginalFamilyTag::Gamma, &[1.0]).is_err());
}

#[test]
fn json_round_trip() {
    for m in zoo() {
        let s = serde_json::to_string(&m).unwrap();
        let back: MarginalModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.family(), m.family());
    }
    let s = serde_json::to_string(&zoo()[11]).unwrap();
    assert!(s.starts_with(r#"{"family":"normal_mixture","parameters":"#));
}

#[test]
fn normal_fit_recovers_location() {
    let truth = MarginalModel::normal(1739.943, 259.2278).unwrap();
    let x = sample(&truth, 5000, 42);
    let fit = fit_parametric(&x, MarginalFamilyTag::Normal).unwrap();
    let se = 259.2278 / 5000f64.sqrt();
    assert!((fit.model.params()[0] - 1739.943).abs() < 3.0 * se);
}

#[test]
fn normal_fit_location_equivariant() {
    let x = sample(&MarginalModel::normal(0.0, 2.0).unwrap(), 300, 1);
    let shifted: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
    let a = fit_parametric(&x, MarginalFamilyTag::Normal).unwrap();
    let b = fit_parametric(&shifted, MarginalFamilyTag::Normal).unwrap();
    assert!((b.model.params()[0] - a.model.params()[0] - 10.0).abs() < 1e-9);
}

#[test]
fn gamma_fit_recovers_shape() {
    let truth = model(MarginalFamilyTag::Gamma, &[12.6204, 0.0285]);
    let x = sample(&truth, 5000, 9);
    let fit = fit_parametric(&x, MarginalFamilyTag::Gamma).unwrap();
    let shape = fit.model.params()[0];
    assert!((11.4..=13.9).contains(&shape), "shape {shape}");
}

#[test]
fn positive_families_reject_nonpositive_data() {
    let mut x = sample(&MarginalModel::normal(5.0, 1.0).unwrap(), 50, 3);
    x[0] = -1.0;
    assert!(matches!(fit_parametric(&x, MarginalFamilyTag::Gamma), Err(Error::Domain(_))));
    assert!(matches!(fit_parametric(&x, MarginalFamilyTag::LogNormal), Err(Error::Domain(_))));
}

#[test]
fn too_few_points_rejected() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    assert!(matches!(fit_parametric(&x, MarginalFamilyTag::Normal), Err(Error::InsufficientData(_))));
}

#[test]
fn three_parameter_fits_recover_truth() {
    let cases = [
        model(MarginalFamilyTag::Gev, &[2.9832, 0.7539, 0.0580]),
        model(MarginalFamilyTag::SkewNormal, &[0.3789, 1.8669, 2.0]),
        model(MarginalFamilyTag::SkewStudentT, &[-0.7578, 2.9865, 1.4194, 5.0]),
    ];
    for truth in cases {
        let x = sample(&truth, 4000, 17);
        let fit = fit_parametric(&x, truth.family()).unwrap();
        let truth_ll = truth.loglik(&x);
        assert!(fit.loglik >= truth_ll - 1e-6, "{:?}", truth.family());
        let (a, b) = (fit.model.quantile(0.5), truth.quantile(0.5));
        let spread = truth.quantile(0.75) - truth.quantile(0.25);
        assert!((a - b).abs() < 0.1 * spread, "{:?}", truth.family());
    }
}

#[test]
fn single_component_mixture_is_normal() {
    let x = sample(&MarginalModel::normal(3.0, 2.0).unwrap(), 200, 5);
    let mix = fit_mixture_normal(&x, 1).unwrap();
    let nor = fit_parametric(&x, MarginalFamilyTag::Normal).unwrap();
    for (a, b) in mix.model.params()[..2].iter().zip(nor.model.params()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn bimodal_mixture_recovered() {
    let truth = model(MarginalFamilyTag::NormalMixture(2), &[-3.0, 3.0, 1.0, 1.0, 0.5, 0.5]);
    let x = sample(&truth, 4000, 21);
    let fit = fit_mixture_normal(&x, 2).unwrap();
    let p = fit.model.params();
    assert!((p[0] + 3.0).abs() < 0.15 && (p[1] - 3.0).abs() < 0.15, "{p:?}");
    assert!((0.45..=0.55).contains(&p[4]) && (0.45..=0.55).contains(&p[5]));
}

#[test]
fn overlapping_mixture_recovered() {
    let truth = zoo()[11].clone();
    let x = sample(&truth, 5000, 8);
    let fit = fit_mixture_normal(&x, 2).unwrap();
    let p = fit.model.params();
    assert!((p[0] - 10.7978).abs() < 0.5 && (p[1] - 18.3855).abs() < 0.5, "{p:?}");
}

#[test]
fn em_is_monotone_and_normalized() {
    let truth = model(MarginalFamilyTag::NormalMixture(3), &[-2.0, 0.0, 4.0, 0.5, 1.0, 2.0, 0.2, 0.5, 0.3]);
    let x = sample(&truth, 3000, 13);
    for s in 1..=4 {
        let fit = fit_mixture_normal(&x, s).unwrap();
        let trace = fit.em.as_ref().unwrap();
        for w in trace.logliks.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
        let wsum: f64 = fit.model.params()[2 * s..].iter().sum();
        assert!((wsum - 1.0).abs() < 1e-12);
        assert!((fit.loglik - trace.logliks.last().unwrap()).abs() < 1e-6 * fit.loglik.abs());
    }
}

#[test]
fn mixture_needs_enough_points() {
    let x: Vec<f64> = (0..30).map(f64::from).collect();
    assert!(matches!(fit_mixture_normal(&x, 4), Err(Error::InsufficientData(_))));
}

#[test]
fn selection_prefers_normal_for_normal_data() {
    let x = sample(&MarginalModel::normal(0.0, 1.0).unwrap(), 2000, 4);
    let shifted: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
    let sel = select_margin(&shifted, &[MarginalFamilyTag::Normal, MarginalFamilyTag::Gamma]).unwrap();
    assert_eq!(sel.best.model.family(), MarginalFamilyTag::Normal);
}

#[test]
fn selection_finds_bimodality() {
    let truth = model(MarginalFamilyTag::NormalMixture(2), &[-3.0, 3.0, 1.0, 1.0, 0.5, 0.5]);
    let x = sample(&truth, 1000, 6);
    let sel = select_margin(&x, &[MarginalFamilyTag::Normal, MarginalFamilyTag::NormalMixture(2)]).unwrap();
    assert!(matches!(sel.best.model.family(), MarginalFamilyTag::NormalMixture(_)));
    assert_eq!(sel.tried.len(), 4);
}

#[test]
fn sole_candidate_returned() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let sel = select_margin(&x, &[MarginalFamilyTag::Normal]).unwrap();
    assert_eq!(sel.best.model.family(), MarginalFamilyTag::Normal);
}

#[test]
fn selection_reports_all_failures() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 - 25.0).collect();
    let err = select_margin(&x, &[MarginalFamilyTag::Gamma, MarginalFamilyTag::LogNormal]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("gamma") && msg.contains("lognormal"), "{msg}");
}

#[test]
fn pit_of_own_sample_is_uniform() {
    let m = zoo()[4].clone();
    let x = sample(&m, 1000, 77);
    let pit = pit_transform(&[x.clone()], &[m]).unwrap();
    assert!(pit.ks[0].p_value > 0.01);
    assert_eq!(ranks(&pit.columns[0]), ranks(&x));
    assert!(pit.columns[0].iter().all(|&u| u >= 1e-10 && u <= 1.0 - 1e-10));
}

#[test]
fn pit_rejects_bad_input() {
    let m = MarginalModel::normal(0.0, 1.0).unwrap();
    assert!(matches!(pit_transform(&[vec![1.0; 20]], &[m.clone()]), Err(Error::Domain(_))));
    assert!(matches!(pit_transform(&[vec![1.0, 2.0]], &[]), Err(Error::Usage(_))));
}

#[test]
fn jitter_keeps_order_of_distinct_values() {
    let x = vec![1.0, 1.0, 2.0, 2.0, 2.0, 5.0];
    let j = jitter_ties(&x, 3);
    let mut uniq = j.clone();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    assert_eq!(uniq.len(), x.len());
    assert!(j[0].max(j[1]) < j[2].min(j[3]).min(j[4]));
    assert_eq!(j, jitter_ties(&x, 3));
}

#[test]
fn family_names_parse() {
    for f in MarginalFamilyTag::all() {
        let back: MarginalFamilyTag = f.name().parse().unwrap();
        assert_eq!(back.name(), f.name());
    }
    assert_eq!("normal_mixture(4)".parse::<MarginalFamilyTag>().unwrap(), MarginalFamilyTag::NormalMixture(4));
    assert!("cauchy".parse::<MarginalFamilyTag>().is_err());
}
