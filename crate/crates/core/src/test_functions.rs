//! Radial test functions used by the generator checks and the superharmonic witness.

use crate::quad::{gauss_legendre, integrate, QuadratureConfig};
use crate::radial_calculus::{spherical_mean, RadialFunction};
use crate::special::sphere_area;

/// exp(−ρ²/w²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub width: f64,
}

impl RadialFunction for Gaussian {
    fn value(&self, rho: f64) -> f64 {
        (-(rho / self.width).powi(2)).exp()
    }
    fn d1(&self, rho: f64) -> f64 {
        -2.0 * rho / self.width.powi(2) * self.value(rho)
    }
    fn d2(&self, rho: f64) -> f64 {
        let w2 = self.width.powi(2);
        (4.0 * rho * rho / (w2 * w2) - 2.0 / w2) * self.value(rho)
    }
    fn inner_scale(&self) -> f64 {
        self.width
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let t2 = t * t;
    (t2 * t * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - t).powi(2), 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t))
}

/// Equal to 1 on [0, inner], 0 beyond `outer`, with a quintic C² transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothBump {
    pub inner: f64,
    pub outer: f64,
}

impl SmoothBump {
    fn t(&self, rho: f64) -> f64 {
        (rho - self.inner) / (self.outer - self.inner)
    }
}

impl RadialFunction for SmoothBump {
    fn value(&self, rho: f64) -> f64 {
        1.0 - smoothstep(self.t(rho)).0
    }
    fn d1(&self, rho: f64) -> f64 {
        -smoothstep(self.t(rho)).1 / (self.outer - self.inner)
    }
    fn d2(&self, rho: f64) -> f64 {
        -smoothstep(self.t(rho)).2 / (self.outer - self.inner).powi(2)
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.inner, self.outer]
    }
    fn support(&self) -> f64 {
        self.outer
    }
    fn inner_scale(&self) -> f64 {
        (self.outer - self.inner).min(self.inner)
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// min(1, (R/ρ)^{d−2}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonianProfile {
    pub big_r: f64,
    pub d: usize,
}

impl RadialFunction for NewtonianProfile {
    fn value(&self, rho: f64) -> f64 {
        if rho <= self.big_r { 1.0 } else { (self.big_r / rho).powi(self.d as i32 - 2) }
    }
    fn d1(&self, rho: f64) -> f64 {
        if rho <= self.big_r { 0.0 } else { -(self.d as f64 - 2.0) * self.value(rho) / rho }
    }
    fn d2(&self, rho: f64) -> f64 {
        let k = self.d as f64 - 2.0;
        if rho <= self.big_r { 0.0 } else { k * (k + 1.0) * self.value(rho) / (rho * rho) }
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.big_r]
    }
    fn inner_scale(&self) -> f64 {
        self.big_r
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// Radial mollifier c·(1 − s²/ρ²)³ on B_ρ with unit integral over ℝ^d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    pub radius: f64,
    norm: f64,
}

impl Mollifier {
    pub fn new(d: usize, radius: f64) -> Self {
        let (x, w) = gauss_legendre(32);
        let m: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let u = 0.5 * (x + 1.0);
                0.5 * w * u.powi(d as i32 - 1) * (1.0 - u * u).powi(3)
            })
            .sum();
        Self { radius, norm: 1.0 / (sphere_area(d) * m * radius.powi(d as i32)) }
    }

    pub fn value(&self, s: f64) -> f64 {
        if s >= self.radius { 0.0 } else { self.norm * (1.0 - (s / self.radius).powi(2)).powi(3) }
    }
}

/// Chebyshev interpolant on [a, b] with derivative series.
#[derive(Clone, Debug, PartialEq)]
struct Chebyshev {
    a: f64,
    b: f64,
    c: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    d[n - 2] = 2.0 * (n - 1) as f64 * c[n - 1];
    for k in (0..n.saturating_sub(2)).rev() {
        d[k] = d[k + 2] + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d
}

impl Chebyshev {
    fn fit<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Self {
        let nodes: Vec<f64> = (0..n).map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos()).collect();
        let vals: Vec<f64> = nodes.iter().map(|t| f(0.5 * (a + b) + 0.5 * (b - a) * t)).collect();
        let c: Vec<f64> = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| vals[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                if j == 0 { s / n as f64 } else { 2.0 * s / n as f64 }
            })
            .collect();
        let mut c1 = derivative_coeffs(&c);
        c1[0] *= 0.5;
        let mut c2 = derivative_coeffs(&c1_full(&c1));
        c2[0] *= 0.5;
        Self { a, b, c, c1, c2 }
    }

    fn eval(c: &[f64], t: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c[0]
    }

    fn t(&self, x: f64) -> f64 {
        ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0)
    }

    fn value(&self, x: f64) -> f64 {
        Self::eval(&self.c, self.t(x))
    }

    fn d1(&self, x: f64) -> f64 {
        Self::eval(&self.c1, self.t(x)) * 2.0 / (self.b - self.a)
    }

    fn d2(&self, x: f64) -> f64 {
        Self::eval(&self.c2, self.t(x)) * (2.0 / (self.b - self.a)).powi(2)
    }
}

/// Undo the halved constant term so the recurrence applies again.
fn c1_full(c1: &[f64]) -> Vec<f64> {
    let mut v = c1.to_vec();
    v[0] *= 2.0;
    v
}

/// h = h_R ∗ κ for the Newtonian profile h_R and a mollifier κ supported in B_r.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedNewtonian {
    pub profile: NewtonianProfile,
    pub mollifier: Mollifier,
    band: Chebyshev,
}

impl MollifiedNewtonian {
    pub fn new(d: usize, big_r: f64, r: f64) -> Self {
        let profile = NewtonianProfile { big_r, d };
        let mollifier = Mollifier::new(d, r);
        let cfg = QuadratureConfig::default().with_rel_tol(1e-12);
        let omega = sphere_area(d);
        let conv = |a: f64| {
            integrate(
                |s| omega * s.powi(d as i32 - 1) * mollifier.value(s) * spherical_mean(&profile, d, a, s, &cfg),
                0.0,
                r,
                &cfg,
            )
            .value
        };
        let band = Chebyshev::fit(conv, big_r - r, big_r + r, 48);
        Self { profile, mollifier, band }
    }

    fn in_band(&self, rho: f64) -> bool {
        (rho - self.profile.big_r).abs() < self.mollifier.radius
    }
}

impl RadialFunction for MollifiedNewtonian {
    fn value(&self, rho: f64) -> f64 {
        if self.in_band(rho) { self.band.value(rho) } else { self.profile.value(rho) }
    }
    fn d1(&self, rho: f64) -> f64 {
        if self.in_band(rho) { self.band.d1(rho) } else { self.profile.d1(rho) }
    }
    fn d2(&self, rho: f64) -> f64 {
        if self.in_band(rho) { self.band.d2(rho) } else { self.profile.d2(rho) }
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.profile.big_r - self.mollifier.radius, self.profile.big_r + self.mollifier.radius]
    }
    fn inner_scale(&self) -> f64 {
        self.mollifier.radius
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_c2_at_the_joints() {
        let g = SmoothBump { inner: 1.0, outer: 2.0 };
        for x in [1.0, 2.0] {
            assert!(g.d1(x).abs() < 1e-12 && g.d2(x).abs() < 1e-12);
        }
        assert_eq!(g.value(0.5), 1.0);
        assert_eq!(g.value(2.5), 0.0);
        let h = 1e-5;
        let fd = (g.value(1.3 + h) - g.value(1.3 - h)) / (2.0 * h);
        assert!((fd - g.d1(1.3)).abs() < 1e-8);
    }

    #[test]
    fn mollifier_has_unit_mass() {
        let k = Mollifier::new(3, 0.5);
        let cfg = QuadratureConfig::default();
        let m = integrate(|s| 4.0 * std::f64::consts::PI * s * s * k.value(s), 0.0, 0.5, &cfg).value;
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollified_profile_matches_outside_band_and_stays_below() {
        let h = MollifiedNewtonian::new(3, 6.0, 1.0);
        for x in [5.0, 7.0] {
            assert!((h.band.value(x) - h.profile.value(x)).abs() < 1e-8, "x={x}");
        }
        for x in [4.9, 7.1] {
            assert_eq!(h.value(x), h.profile.value(x));
        }
        for i in 0..=40 {
            let x = 5.0 + 2.0 * i as f64 / 40.0;
            assert!(h.value(x) <= h.profile.value(x) + 1e-10);
            let fd = (h.value(x + 1e-4) - h.value(x - 1e-4)) / 2e-4;
            if (x - 5.0).abs() > 1e-3 && (x - 7.0).abs() > 1e-3 {
                assert!((fd - h.d1(x)).abs() < 1e-5, "x={x} fd={fd} d1={}", h.d1(x));
            }
        }
    }
}
