use isolevy::scaling_indices::{
    certify_scaling, index_relations_report, karamata_check, matuszewska_indices, KaramataCase, Regime,
};
use isolevy::{make_family, Family};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn power_law_at_infinity() {
    let e = matuszewska_indices(|w| -4.0 * w, Regime::Infinity, 6.0).unwrap();
    assert!((e.lower_index + 4.0).abs() < 0.01 && (e.upper_index + 4.0).abs() < 0.01);
}

#[test]
fn stable_density_indices_at_zero() {
    let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    let e = matuszewska_indices(|w| s.nu.ln_density_at_log(w), Regime::Zero, 6.0).unwrap();
    assert!((e.lower_index + 4.0).abs() < 0.05 && (e.upper_index + 4.0).abs() < 0.05);
}

#[test]
fn slow_decay_density_indices() {
    let s = make_family(3, Family::SlowDecay { alpha: 1.0, scale: 1.0 }).unwrap();
    let inf = matuszewska_indices(|w| s.nu.ln_density_at_log(w), Regime::Infinity, 6.0).unwrap();
    let zero = matuszewska_indices(|w| s.nu.ln_density_at_log(w), Regime::Zero, 6.0).unwrap();
    assert!((inf.lower_index + 4.0).abs() < 0.05 && (inf.upper_index + 4.0).abs() < 0.05, "{inf:?}");
    assert!((zero.lower_index + 3.0).abs() < 0.05 && (zero.upper_index + 3.0).abs() < 0.05, "{zero:?}");
}

#[test]
fn certificates() {
    let st = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    for r_inf in [1.0, 1e3, f64::INFINITY] {
        let c = certify_scaling(&st, 1.0, 1.0, r_inf);
        assert!(c.certified && (c.worst_ratio - 1.0).abs() < 1e-12);
    }
    let lk = make_family(3, Family::LogKernel).unwrap();
    for alpha in [0.5, 1.5] {
        assert!(!certify_scaling(&lk, 1e12, alpha, f64::INFINITY).certified);
    }
    let vg = make_family(3, Family::VarianceGamma).unwrap();
    let c = certify_scaling(&vg, f64::MAX, 1.9, 10.0);
    assert!(c.certified && c.worst_ratio.is_finite());
}

#[test]
fn karamata_exact_upper_tail() {
    let rep = karamata_check(|w| -2.0 * w, -1.0, KaramataCase::UpperTailAtInfinity, 1.0, &log_grid(1e2, 1e6, 9)).unwrap();
    assert!((rep.c_window - 1.0).abs() < 1e-8);
}

#[test]
fn karamata_stable_global_constant() {
    let alpha = 1.5;
    let s = make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap();
    let rep = karamata_check(|w| s.nu.ln_density_at_log(w), -5.0, KaramataCase::Global, 1.0, &log_grid(1e-3, 1e3, 7)).unwrap();
    assert!((rep.max_ratio - 1.0 / (2.0 - alpha)).abs() < 1e-8);
    assert!((rep.min_ratio - 1.0 / (2.0 - alpha)).abs() < 1e-8);
}

#[test]
fn karamata_log_corrected_power_is_bounded() {
    let ln_phi = |w: f64| -2.0 * w + (std::f64::consts::E + (-w).exp()).ln();
    let rep = karamata_check(ln_phi, -1.0, KaramataCase::ToAnchorAtZero, 1.0, &log_grid(1e-6, 0.5, 12)).unwrap();
    assert!(rep.bounded_by(10.0), "{rep:?}");
}

#[test]
fn index_relations_for_reference_families() {
    let st = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    let rep = index_relations_report(&st);
    let psi0 = rep.get("psi", Regime::Zero).unwrap();
    let l_inf = rep.get("L", Regime::Infinity).unwrap();
    assert!((psi0.upper_index - 1.0).abs() < 0.1 && (l_inf.lower_index + 1.0).abs() < 0.1);
    assert!(rep.all_hold());

    let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
    let rep = index_relations_report(&b);
    let psi_inf = rep.get("psi", Regime::Infinity).unwrap();
    let k0 = rep.get("K", Regime::Zero).unwrap();
    assert!((psi_inf.lower_index - 2.0).abs() < 0.1 && (k0.upper_index + 2.0).abs() < 0.1);
    assert!(rep.all_hold());

    let vg = make_family(3, Family::VarianceGamma).unwrap();
    let rep = index_relations_report(&vg);
    assert!(rep.get("psi", Regime::Infinity).unwrap().upper_index.abs() < 0.1);
    assert!(rep.get("L", Regime::Zero).unwrap().lower_index.abs() < 0.1);
}

#[test]
fn slow_decay_comparability_window_is_finite() {
    let sd = make_family(3, Family::SlowDecay { alpha: 1.0, scale: 1.0 }).unwrap();
    let w = index_relations_report(&sd).comparability_window.unwrap();
    assert!(w.is_finite() && w < 10.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_powers_are_recovered(p in -6.0f64..6.0, zero in any::<bool>()) {
        let regime = if zero { Regime::Zero } else { Regime::Infinity };
        let e = matuszewska_indices(|w| p * w, regime, 6.0).unwrap();
        prop_assert!((e.lower_index - p).abs() <= 0.01 && (e.upper_index - p).abs() <= 0.01);
    }

    #[test]
    fn non_increasing_profiles_have_ordered_non_positive_indices(alpha in 0.1f64..1.9, zero in any::<bool>()) {
        let s = make_family(3, Family::SlowDecay { alpha, scale: 1.0 }).unwrap();
        let regime = if zero { Regime::Zero } else { Regime::Infinity };
        let e = matuszewska_indices(|w| s.nu.ln_density_at_log(w), regime, 6.0).unwrap();
        prop_assert!(e.lower_index <= e.upper_index + 1e-12);
        prop_assert!(e.upper_index <= 1e-12);
    }

    #[test]
    fn lower_index_above_s_gives_finite_window(p in -3.0f64..3.0, gap in 0.2f64..3.0) {
        let s = p - gap;
        let e = matuszewska_indices(|w| p * w, Regime::Zero, 6.0).unwrap();
        prop_assert!(e.lower_index > s);
        let rep = karamata_check(|w| p * w, s, KaramataCase::LowerTailAtZero, 1.0, &log_grid(1e-9, 1e-3, 5)).unwrap();
        prop_assert!(rep.c_window.is_finite());
        prop_assert!((rep.max_ratio * gap - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stable_certificate_is_exact(alpha in 0.05f64..1.95, scale in 0.1f64..10.0) {
        let s = make_family(3, Family::Stable { alpha, scale }).unwrap();
        let c = certify_scaling(&s, 1.0, alpha, f64::INFINITY);
        prop_assert!(c.certified);
        prop_assert!((c.worst_ratio - 1.0).abs() < 1e-9);
    }
}
