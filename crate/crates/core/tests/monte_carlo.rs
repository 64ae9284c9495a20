use isolevy::exec::Execution;
use isolevy::monte_carlo::{
    exit_radii_ball, exit_time_ball, green_ball, green_by_entry, harmonic_eval, BoundaryData, Domain, ExitRadius, ShellBins,
    SimScheme,
};
use isolevy::{make_family, Error, Family, ProcessSpec};
use std::f64::consts::PI;
use std::sync::Arc;

fn brownian() -> ProcessSpec {
    make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap()
}

fn stable(alpha: f64) -> ProcessSpec {
    make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap()
}

#[test]
fn constant_data_is_reproduced_exactly() {
    let one = BoundaryData::Exit(Arc::new(|_: &[f64]| 1.0));
    for spec in [stable(0.8), stable(1.6), brownian()] {
        let e = harmonic_eval(&spec, &SimScheme::default(), &Domain::ball(3, 1.0), &one, &[0.3, 0.0, 0.0], 2_000, 5).unwrap();
        assert_eq!(e.mean, 1.0, "{}", spec.label());
        assert_eq!(e.stderr, 0.0);
    }
}

#[test]
fn results_do_not_depend_on_execution_mode() {
    let spec = stable(1.2);
    let base = SimScheme::default();
    let runs: Vec<_> = [Execution::Sequential, Execution::Parallel, Execution::Threads(3)]
        .into_iter()
        .map(|ex| exit_time_ball(&spec, &base.clone().with_execution(ex), 1.0, &[0.2, 0.0, 0.0], 5_500, 17).unwrap())
        .collect();
    assert!(runs.windows(2).all(|w| w[0].mean == w[1].mean && w[0].stderr == w[1].stderr));
    let other = exit_time_ball(&spec, &base, 1.0, &[0.2, 0.0, 0.0], 5_500, 18).unwrap();
    assert_ne!(other.mean, runs[0].mean);
}

#[test]
fn brownian_exit_time_off_center() {
    let e = exit_time_ball(&brownian(), &SimScheme::default(), 1.0, &[0.5, 0.0, 0.0], 40_000, 3).unwrap();
    assert!(e.z_score(0.75 / 6.0).abs() < 4.0, "{e:?}");
}

#[test]
fn brownian_occupation_totals_the_exit_time() {
    let bins = ShellBins::new(vec![0.0, 0.25, 0.5, 1.0, 2.0]).unwrap();
    let g = green_ball(&brownian(), &SimScheme::default(), 1.0, &[0.0; 3], &bins, 40_000, 4).unwrap();
    assert!(g.total.z_score(1.0 / 6.0).abs() < 4.0);
    assert!((g.integrated(3) - g.total.mean).abs() < 1e-9 * g.total.mean);
    // G(0, y) = (1/|y| − 1)/(4π) averaged over the shell 1/4 < |y| < 1/2
    let shell = ((0.25 - 0.0625) / 2.0 - (0.125 - 0.015625) / 3.0) / bins.volume(1, 3);
    assert!((g.density[1] - shell).abs() < 4.0 * g.stderr[1] + 0.02 * shell, "{} vs {shell}", g.density[1]);
}

#[test]
fn stable_exit_radius_law() {
    // P^0(|X(τ_{B_1})| > R) = (2/π) arcsin(1/R) for α = 1
    let radii = exit_radii_ball(&stable(1.0), &SimScheme::default(), 1.0, 20_000, 6).unwrap();
    let bad: Vec<_> = radii.iter().filter(|e| !matches!(e, ExitRadius::Jump(s) if *s >= 1.0 - 1e-12)).take(5).collect();
    assert!(bad.is_empty(), "{bad:?}");
    for big in [1.5, 2.0, 5.0] {
        let p = radii.iter().filter(|e| matches!(e, ExitRadius::Jump(s) if *s > big)).count() as f64 / radii.len() as f64;
        let exact = 2.0 / PI * (1.0 / big).asin();
        let se = (exact * (1.0 - exact) / radii.len() as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "R = {big}: {p} vs {exact}");
    }
}

#[test]
fn entry_estimator_needs_a_pure_jump_process() {
    let r = green_by_entry(&brownian(), &SimScheme::default(), 1.0, &[0.5, 0.0, 0.0], &[-0.5, 0.0, 0.0], 0.05, 10, 1);
    assert!(matches!(r, Err(Error::HypothesisViolated(_))));
}

#[test]
fn shell_bins() {
    assert!(ShellBins::new(vec![0.0]).is_err());
    assert!(ShellBins::new(vec![0.0, 1.0, 1.0]).is_err());
    assert!(ShellBins::new(vec![-1.0, 1.0]).is_err());
    assert!(ShellBins::new(vec![0.0, f64::INFINITY]).is_err());
    let b = ShellBins::new(vec![0.0, 1.0, 2.0]).unwrap();
    assert_eq!((b.locate(0.0), b.locate(1.0), b.locate(1.99), b.locate(2.0)), (Some(0), Some(1), Some(1), None));
    assert!((b.volume(1, 3) - 28.0 * PI / 3.0).abs() < 1e-12);
    let l = ShellBins::log_annuli(1.0, 100.0, 2).unwrap();
    assert!((l.edges()[1] - 10.0).abs() < 1e-12 && l.edges()[2] == 100.0);
    let lb = ShellBins::log_ball(0.1, 10.0, 3).unwrap();
    assert_eq!(lb.len(), 3);
    assert_eq!(lb.edges()[0], 0.0);
}

#[test]
fn zero_paths_are_rejected() {
    assert!(exit_time_ball(&brownian(), &SimScheme::default(), 1.0, &[0.0; 3], 0, 1).is_err());
    assert!(exit_time_ball(&brownian(), &SimScheme::default(), 1.0, &[2.0, 0.0, 0.0], 10, 1).is_err());
}
