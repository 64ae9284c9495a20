use isolevy::kernel_averaging::{dyadic_average, regularization_kernel, KernelFamily, RadialDensity, RadialKernel};
use isolevy::monte_carlo::SimScheme;
use isolevy::{make_family, Error, Family};
use proptest::prelude::*;
use std::sync::Arc;

fn exponential(start: f64) -> RadialKernel {
    RadialKernel {
        start,
        atom: 0.0,
        density: RadialDensity::Profile {
            density: Arc::new(move |t: f64| (start - t).exp()),
            primitive: Arc::new(move |t: f64| -(start - t).exp()),
        },
    }
}

#[test]
fn flat_family_averages_to_one_everywhere() {
    let avg = dyadic_average(KernelFamily::from_fn(0.0, 1.0, 4, RadialKernel::flat).unwrap()).unwrap();
    assert_eq!(avg.weights, vec![1.0, 0.0, 0.0, 0.0]);
    for s in [0.1, 0.9, 3.0, 100.0] {
        assert_eq!(avg.density(s), 1.0);
    }
}

#[test]
fn atoms_get_equal_weights() {
    let avg = dyadic_average(KernelFamily::from_fn(0.0, 1.0, 4, RadialKernel::atom).unwrap()).unwrap();
    assert_eq!(avg.weights, vec![0.25; 4]);
}

#[test]
fn atom_plus_flat_by_hand() {
    let fam = KernelFamily::from_fn(0.0, 1.0, 2, |s| RadialKernel { atom: 1.0, ..RadialKernel::flat(s) }).unwrap();
    let w = dyadic_average(fam).unwrap().weights;
    assert!((w[0] - 1.0 / 3.0).abs() <= f64::EPSILON);
    assert!((w[1] - 2.0 / 9.0).abs() <= f64::EPSILON);
}

#[test]
fn kernel_outside_its_interval_is_rejected() {
    let kernels = vec![RadialKernel::flat(0.0), RadialKernel::flat(0.1)];
    assert!(matches!(KernelFamily::new(0.0, 1.0, kernels), Err(Error::DomainError(_))));
}

#[test]
fn refinement_moves_the_tail_by_at_most_one_step() {
    for n in [8, 16, 32] {
        let coarse = dyadic_average(KernelFamily::from_fn(0.0, 1.0, n, exponential).unwrap()).unwrap();
        let fine = dyadic_average(KernelFamily::from_fn(0.0, 1.0, 2 * n, exponential).unwrap()).unwrap();
        let h = 1.0 / n as f64;
        let mut prev = f64::INFINITY;
        for i in 0..=60 {
            let s = 1.0 + 0.05 * i as f64;
            let (a, b) = (coarse.density(s), fine.density(s));
            assert!((a - b).abs() <= h, "n = {n}, s = {s}: {a} vs {b}");
            assert!(b <= 1.0 + 1e-12 && b <= prev + 1e-12);
            prev = b;
        }
    }
}

#[test]
fn regularization_kernel_structure() {
    let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    let reg = regularization_kernel(&s, &SimScheme::default(), 0.25, 1.0, 8, 5_000, 3).unwrap();
    assert!(reg.kernel.weights.iter().all(|&w| w >= 0.0));
    assert!(reg.c_reg > 0.0 && reg.c_reg.is_finite());
    assert!(reg.window.0 < reg.window.1);
    assert!((reg.window.1 / reg.window.0 - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    for rho in [1.0, 1.5, 2.0, 4.0] {
        assert!(reg.outer_density(rho) <= 1.2 * reg.c_reg, "rho = {rho}");
    }
    let (mass, err) = reg.total_mass();
    assert!((mass - 1.0).abs() < 0.1 + 3.0 * err, "mass {mass} ± {err}");
}

#[test]
fn regularization_rejects_bad_radii() {
    let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
    assert!(regularization_kernel(&s, &SimScheme::default(), 1.0, 1.0, 4, 10, 1).is_err());
    assert!(regularization_kernel(&s, &SimScheme::default(), 0.0, 1.0, 0, 10, 1).is_err());
}

/// Non-increasing step densities with random atoms, one per node.
fn monotone_family() -> impl Strategy<Value = (usize, Vec<(f64, Vec<f64>)>)> {
    (1usize..24).prop_flat_map(|n| {
        let kernel = (0.0f64..1.0, prop::collection::vec(0.0f64..1.0, 1..6)).prop_map(|(atom, mut drops)| {
            let mut v = 1.0 + drops[0] * 3.0;
            for d in drops.iter_mut() {
                v *= *d;
                *d = v;
            }
            (atom, drops)
        });
        (Just(n), prop::collection::vec(kernel, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_non_negative_and_recursion_is_exact((n, spec) in monotone_family(), q in 0.0f64..2.0, len in 0.1f64..5.0) {
        let top = q + len;
        let h = len / n as f64;
        let kernels: Vec<RadialKernel> = spec
            .iter()
            .enumerate()
            .map(|(j, (atom, values))| {
                let start = q + j as f64 * h;
                let edges = (0..=values.len()).map(|i| start + i as f64 * 0.7 * h).collect();
                RadialKernel { start, atom: atom + 1e-3, density: RadialDensity::Steps { edges, values: values.clone() } }
            })
            .collect();
        prop_assert!(kernels.iter().all(|k| k.is_non_increasing(top * 10.0, 0.0)));
        let avg = dyadic_average(KernelFamily::new(q, top, kernels).unwrap()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(avg.weights.iter().all(|&w| w >= 0.0));
        for j in 0..n {
            let (a, b) = avg.family.interval(j);
            prop_assert!((avg.mass(a, b) - (b - a)).abs() <= 1e-12 * len.max(1.0), "j = {}", j);
        }
    }
}
