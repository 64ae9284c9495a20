//! Special functions on integer and half-integer orders.

use std::f64::consts::PI;

/// Γ(k/2) for a positive integer k.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "gamma_half needs k > 0");
    if k.is_multiple_of(2) {
        (1..k / 2).fold(1.0, |acc, j| acc * j as f64)
    } else {
        let mut g = PI.sqrt();
        let mut a = 0.5;
        for _ in 0..k / 2 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// Surface area ω_{d−1} of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Volume of the unit ball in ℝ^d.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

fn double_factorial_odd(l: i64) -> f64 {
    // (2l+1)!! with (−1)!! = 1
    let mut p = 1.0;
    let mut k = 2 * l + 1;
    while k > 1 {
        p *= k as f64;
        k -= 2;
    }
    p
}

/// Spherical Bessel function j_l(x) for l ≥ −1, x > 0.
pub fn spherical_bessel(l: i64, x: f64) -> f64 {
    if l == -1 {
        return x.cos() / x;
    }
    if x < (l as f64) + 2.0 {
        let mut term = x.powi(l as i32) / double_factorial_odd(l);
        let mut sum = term;
        let q = -0.5 * x * x;
        for k in 1..200 {
            term *= q / (k as f64 * (2 * l + 2 * k + 1) as f64);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let (s, c) = x.sin_cos();
    let mut jm = s / x;
    if l == 0 {
        return jm;
    }
    let mut j = s / (x * x) - c / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * j - jm;
        jm = j;
        j = next;
    }
    j
}

fn bessel_series(n: i64, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powi(n as i32) / (1..=n).fold(1.0, |a, k| a * k as f64);
    let mut sum = term;
    let q = -h * h;
    for k in 1..300 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_miller(n: i64, x: f64) -> f64 {
    let start = 2 * (((x as i64).max(n) + 40) / 2);
    let mut jp = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    let mut out = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == n {
            out = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            out *= 1e-250;
        }
    }
    norm += j;
    out / norm
}

fn bessel_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..200 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (8.0 * k as f64 * x);
        }
        if a.abs() > last && k > 2 {
            break;
        }
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a == 0.0 || a.abs() < 1e-18 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function J_ν(x) for x ≥ 0 and ν an integer or half-integer ≥ −1/2
/// (negative integer orders via reflection).
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let twice = (2.0 * nu).round();
    assert!((2.0 * nu - twice).abs() < 1e-12, "order must be a multiple of 1/2");
    let twice = twice as i64;
    if twice % 2 != 0 {
        let l = (twice - 1) / 2;
        assert!(l >= -1, "half-integer order below −1/2 unsupported");
        if x == 0.0 {
            return if l == -1 { f64::INFINITY } else { 0.0 };
        }
        return (2.0 * x / PI).sqrt() * spherical_bessel(l, x);
    }
    let n = twice / 2;
    if n < 0 {
        let v = bessel_j(-nu, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= 2.0 {
        bessel_series(n, x)
    } else if x <= 25.0 {
        bessel_miller(n, x)
    } else {
        bessel_hankel(nu, x)
    }
}

/// Spherical mean of cos over the unit sphere in ℝ^d: j_d(u) = Γ(d/2)(2/u)^{d/2−1} J_{d/2−1}(u).
pub fn sphere_cos_mean(d: usize, u: f64) -> f64 {
    if u < 1.0 {
        return 1.0 - sphere_cos_gap_series(d, u);
    }
    if d % 2 == 1 {
        let l = (d as i64 - 3) / 2;
        double_factorial_odd(l) * spherical_bessel(l, u) / u.powi(l as i32)
    } else {
        let n = d as i64 / 2 - 1;
        let fact = (1..=n).fold(1.0, |a, k| a * k as f64);
        fact * (2.0 / u).powi(n as i32) * bessel_j(n as f64, u)
    }
}

fn sphere_cos_gap_series(d: usize, u: f64) -> f64 {
    let half = d as f64 / 2.0;
    let q = 0.25 * u * u;
    let mut term = -1.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= -q / (k as f64 * (k as f64 - 1.0 + half));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// g_d(u) = 1 − j_d(u), computed without cancellation for small u.
pub fn sphere_cos_gap(d: usize, u: f64) -> f64 {
    if u < 1.0 {
        sphere_cos_gap_series(d, u)
    } else {
        1.0 - sphere_cos_mean(d, u)
    }
}

/// k-th positive zero (k ≥ 1) of J_ν, McMahon start refined by Newton.
pub fn bessel_zero(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let e = 8.0 * beta;
    let mut z = beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
    for _ in 0..8 {
        let j = bessel_j(nu, z);
        let dj = nu / z * j - bessel_j(nu + 1.0, z);
        if dj == 0.0 {
            break;
        }
        let step = j / dj;
        z -= step;
        if step.abs() < 1e-15 * z {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn half_integer_orders_match_elementary_forms() {
        for &x in &[0.3, 1.7, 5.0, 31.0, 400.0] {
            let j12 = (2.0 / (PI * x)).sqrt() * x.sin();
            let jm12 = (2.0 / (PI * x)).sqrt() * x.cos();
            let j32 = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(0.5, x) - j12).abs() < 1e-13);
            assert!((bessel_j(-0.5, x) - jm12).abs() < 1e-13);
            assert!((bessel_j(1.5, x) - j32).abs() < 1e-13);
        }
    }

    #[test]
    fn integer_orders_reference_values() {
        // Abramowitz & Stegun Table 9.1
        assert!((bessel_j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1.0, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(0.0, 10.0) + 0.245_935_764_451_348_3).abs() < 1e-13);
        assert!((bessel_j(1.0, 10.0) - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!((bessel_j(2.0, 5.0) - 0.046_565_116_277_752_21).abs() < 1e-13);
        assert!((bessel_j(0.0, 30.0) + 0.086_367_983_581_040_23).abs() < 1e-13);
        assert!((bessel_j(1.0, 50.0) + 0.097_511_828_125_175_5).abs() < 1e-13);
    }

    #[test]
    fn miller_and_hankel_agree_at_the_switch() {
        for n in 0..4 {
            let a = bessel_miller(n, 25.0);
            let b = bessel_hankel(n as f64, 25.0);
            assert!((a - b).abs() < 1e-13, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn sphere_cos_mean_low_dimensions() {
        for &u in &[0.005, 0.5, 2.0, 17.0] {
            assert!((sphere_cos_mean(1, u) - u.cos()).abs() < 1e-14);
            assert!((sphere_cos_mean(3, u) - u.sin() / u).abs() < 1e-14);
            assert!((sphere_cos_mean(2, u) - bessel_j(0.0, u)).abs() < 1e-14);
        }
        let u: f64 = 1e-3;
        assert!((sphere_cos_gap(3, u) - (u * u / 6.0 - u.powi(4) / 120.0)).abs() < 1e-20);
    }

    #[test]
    fn zeros() {
        assert!((bessel_zero(0.0, 1) - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_zero(1.0, 1) - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(0.5, 3) - 3.0 * PI).abs() < 1e-12);
        assert!((bessel_zero(-0.5, 2) - 1.5 * PI).abs() < 1e-12);
    }
}
