use isolevy::bound_engine::{
    bhi_constants, exit_time_bounds, green_ball_bounds, halfspace_estimate, levy_ratio, poisson_kernel_bounds, pot_bounds,
    ret_bounds, sandwich, sup_bounds, transition_density_upper, SandwichStatus,
};
use isolevy::monte_carlo::{hit_ball_prob, SimScheme};
use isolevy::radial_calculus::pruitt;
use isolevy::{make_family, Error, Family, ProcessSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

fn stable1() -> ProcessSpec {
    make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

#[test]
fn stable_potential_shapes_at_two() {
    let p = pot_bounds(&stable1(), 2.0).unwrap();
    assert!(close(p.upper.unwrap(), 1.0 / (64.0 * PI)));
    assert!(close(p.lower.unwrap(), 1.0 / (256.0 * PI * PI)));
}

#[test]
fn stable_green_shapes() {
    let g = green_ball_bounds(&stable1(), 1.0, &[0.0; 3], &[0.5, 0.0, 0.0]).unwrap();
    assert!(close(g.upper.unwrap(), 1.0 / PI));
    assert!(close(g.lower.unwrap(), 1.0 / (16.0 * PI * PI)));
}

#[test]
fn stable_exit_and_exit_law_shapes() {
    let s = stable1();
    let e = exit_time_bounds(&s, 2.0).unwrap();
    assert!(close(e.lower.unwrap(), 1.0 / (4.0 * PI)));
    assert_eq!(e.lower, e.upper);
    let pk = poisson_kernel_bounds(&s, 1.0, 3.0).unwrap();
    assert!(close(pk.lower.unwrap(), 3f64.powi(-4) / (8.0 * PI)));
    assert!(close(pk.upper.unwrap(), 2f64.powi(-4) / (8.0 * PI)));
    assert!(close(transition_density_upper(&s, 0.5, 1.0).unwrap(), 2.0 * PI));
}

#[test]
fn brownian_lower_shapes_are_zero() {
    let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
    assert_eq!(ret_bounds(&b, 1.0, 3.0).unwrap().lower, Some(0.0));
    assert_eq!(pot_bounds(&b, 1.0).unwrap().lower, Some(0.0));
    assert_eq!(green_ball_bounds(&b, 1.0, &[0.1, 0.0, 0.0], &[0.0, 0.2, 0.0]).unwrap().lower, Some(0.0));
    assert_eq!(sup_bounds(&b, 1.0, 0.5).unwrap().lower_coeff, 0.0);
}

#[test]
fn hypotheses_are_enforced() {
    let s = stable1();
    assert!(matches!(ret_bounds(&s, 1.0, 0.5), Err(Error::HypothesisViolated(_))));
    assert_eq!(ret_bounds(&s, 1.0, 1.5).unwrap().upper, None);
    assert!(matches!(green_ball_bounds(&s, 1.0, &[0.0; 3], &[0.0; 3]), Err(Error::HypothesisViolated(_))));
    assert!(matches!(sup_bounds(&s, 1.0, 1.0), Err(Error::HypothesisViolated(_))));
    let plane = make_family(2, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    assert_eq!(pot_bounds(&plane, 1.0).unwrap().upper, None);
}

#[test]
fn halfspace_limits() {
    let s = stable1();
    let v = halfspace_estimate(&s, &[0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
    let p = pruitt(&s, 1.0).unwrap();
    assert!(close(v, 0.5 * p.k / (p.sum * p.sum)));
    let deep = halfspace_estimate(&s, &[0.0, 0.0, 1e9], &[1.0, 0.0, 1e9]).unwrap();
    assert!((deep / pot_bounds(&s, 1.0).unwrap().upper.unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn boundary_harnack_constants() {
    let s = stable1();
    let c = bhi_constants(&s, 0.5, 2.0).unwrap();
    assert!(c.c_levy >= 1.0 && c.c_bhi.is_finite() && c.c_bhi > 0.0);
    assert!(close(c.c_exit, 1.0 / pruitt(&s, 0.5).unwrap().sum));
    let cp = make_family(3, Family::TwoUniformCp { lambda: 1.0, big_r: 4.0 }).unwrap();
    assert!(matches!(levy_ratio(&cp, 0.5, 2.0), Err(Error::UnboundedLevyRatio(_))));
}

#[test]
fn stable_hitting_probability_sits_in_its_sandwich() {
    let s = stable1();
    let h = hit_ball_prob(&s, &SimScheme::default(), 1.0, &[2.0, 0.0, 0.0], 5_000, 9).unwrap();
    let rep = sandwich("ret", "|x|/r=2", ret_bounds(&s, 1.0, 2.0).unwrap(), h.estimate, 1e3).unwrap();
    assert_eq!(rep.status, SandwichStatus::Ok);
    assert!(rep.worst_constant() < 1e3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_shapes_are_symmetric(alpha in 0.2f64..1.8, r in 0.5f64..4.0,
                                  x in prop::array::uniform3(-0.5f64..0.5), y in prop::array::uniform3(-0.5f64..0.5)) {
        let s = make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap();
        let (x, y) = (x.map(|v| v * r), y.map(|v| v * r));
        prop_assume!(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-6);
        let a = green_ball_bounds(&s, r, &x, &y).unwrap();
        let b = green_ball_bounds(&s, r, &y, &x).unwrap();
        prop_assert!(close(a.lower.unwrap(), b.lower.unwrap()) && close(a.upper.unwrap(), b.upper.unwrap()));
        let hx = [x[0], x[1], x[2].abs() + 0.1];
        let hy = [y[0], y[1], y[2].abs() + 0.1];
        prop_assert!(close(halfspace_estimate(&s, &hx, &hy).unwrap(), halfspace_estimate(&s, &hy, &hx).unwrap()));
    }

    #[test]
    fn stable_halfspace_factor_at_depth_r(alpha in 0.2f64..1.8, r in 0.1f64..10.0) {
        let s = make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap();
        let v = halfspace_estimate(&s, &[0.0, 0.0, r], &[r, 0.0, r]).unwrap();
        let p = pruitt(&s, r).unwrap();
        prop_assert!(close(v, 2f64.powf(-alpha) * p.k / (r.powi(3) * p.sum * p.sum)));
    }

    #[test]
    fn hitting_shapes_decrease_with_distance(alpha in 0.2f64..1.8, m1 in 2.0f64..50.0, m2 in 2.0f64..50.0) {
        let s = make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap();
        let (near, far) = (m1.min(m2), m1.max(m2));
        let a = ret_bounds(&s, 1.0, near).unwrap();
        let b = ret_bounds(&s, 1.0, far).unwrap();
        prop_assert!(b.upper.unwrap() <= a.upper.unwrap() * (1.0 + 1e-12));
        prop_assert!(b.lower.unwrap() <= a.lower.unwrap() * (1.0 + 1e-12));
        prop_assert!(a.lower.unwrap() <= a.upper.unwrap());
    }
}
