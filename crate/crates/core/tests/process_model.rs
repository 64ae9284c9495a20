use isolevy::process_model::{validate, FamilyTag};
use isolevy::{make_family, Error, Family};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn stable_density_at_two() {
    let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    assert_eq!(s.nu.eval(2.0), 0.0625);
}

#[test]
fn two_uniform_density_in_one_dimension() {
    let s = make_family(1, Family::TwoUniformCp { lambda: 2.0, big_r: 4.0 }).unwrap();
    assert!((s.nu.eval(0.5) - 0.75).abs() < 1e-15);
    assert_eq!(s.family_tag(), FamilyTag::TwoUniformCp);
}

/// Trapezoid rule in u = ln t; the integrand decays doubly exponentially at both ends.
fn variance_gamma_oracle(s: f64) -> f64 {
    let (lo, hi, n) = (-12.0f64, 6.0f64, 200_000);
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let u = lo + h * i as f64;
            let t = u.exp();
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (4.0 * PI * t).powf(-1.5) * (-s * s / (4.0 * t) - t).exp()
        })
        .sum::<f64>()
        * h
}

#[test]
fn variance_gamma_density_matches_independent_quadrature() {
    let s = make_family(3, Family::VarianceGamma).unwrap();
    for x in [0.3, 1.0, 2.5] {
        let oracle = variance_gamma_oracle(x);
        assert!(((s.nu.eval(x) - oracle) / oracle).abs() < 1e-8, "s = {x}");
    }
}

#[test]
fn brownian_has_no_jumps() {
    let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
    let rep = validate(&b, None);
    assert!(!rep.compound_poisson);
    assert_eq!(rep.integrability, 0.0);
    assert!(rep.failure().is_none());
}

#[test]
fn two_uniform_total_mass() {
    let s = make_family(3, Family::TwoUniformCp { lambda: 10.0, big_r: 100.0 }).unwrap();
    let rep = validate(&s, None);
    assert!((rep.total_mass - 11.0).abs() < 1e-12);
    assert!(rep.compound_poisson);
}

#[test]
fn stable_integrability_integral() {
    let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    let rep = validate(&s, None);
    assert!((rep.integrability - 8.0 * PI).abs() < 1e-8 * 8.0 * PI);
}

#[test]
fn variance_gamma_local_scaling_has_finite_constant() {
    let s = make_family(3, Family::VarianceGamma).unwrap();
    let cert = validate(&s, Some((1e6, 1.9, 10.0))).scaling.unwrap();
    assert!(cert.worst_ratio.is_finite());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(make_family(3, Family::Stable { alpha: 2.5, scale: 1.0 }).is_err());
    assert!(make_family(3, Family::Stable { alpha: 1.0, scale: -1.0 }).is_err());
    assert!(make_family(3, Family::Brownian { sigma2: 0.0 }).is_err());
    assert!(matches!(
        Family::from_keyed("cauchy", &Default::default()),
        Err(Error::UnknownFamily(_))
    ));
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.05f64..1.95, 0.1f64..10.0).prop_map(|(alpha, scale)| Family::Stable { alpha, scale }),
        (0.05f64..1.95, 0.1f64..10.0).prop_map(|(alpha, scale)| Family::SlowDecay { alpha, scale }),
        (0.1f64..50.0, 2.0f64..1e3).prop_map(|(lambda, big_r)| Family::TwoUniformCp { lambda, big_r }),
        (0.1f64..50.0, 2.0f64..1e3).prop_map(|(lambda, big_r)| Family::GaussPlusUniform { lambda, big_r }),
        Just(Family::VarianceGamma),
        Just(Family::LogKernel),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_are_non_negative_and_non_increasing(f in family(), d in 1usize..5, a in -6.0f64..6.0, b in -6.0f64..6.0) {
        let s = make_family(d, f).unwrap();
        let (lo, hi) = (10f64.powf(a.min(b)), 10f64.powf(a.max(b)));
        let (v_lo, v_hi) = (s.nu.eval(lo), s.nu.eval(hi));
        prop_assert!(v_lo >= 0.0 && v_hi >= 0.0);
        prop_assert!(v_lo >= v_hi * (1.0 - 1e-12));
        let support = s.nu.support_radius();
        if support.is_finite() {
            prop_assert_eq!(s.nu.eval(support * 1.0001), 0.0);
        }
    }

    #[test]
    fn stable_ratio_is_an_exact_power(alpha in 0.05f64..1.95, r1 in 1e-3f64..1e3, r2 in 1e-3f64..1e3) {
        let s = make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap();
        let ratio = s.nu.eval(r1) / s.nu.eval(r2);
        let expect = (r1 / r2).powf(-3.0 - alpha);
        prop_assert!((ratio / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn built_in_families_validate(f in family(), d in 1usize..5) {
        let s = make_family(d, f).unwrap();
        prop_assert!(validate(&s, None).failure().is_none());
    }
}
