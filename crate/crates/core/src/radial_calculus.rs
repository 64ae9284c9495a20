//! Deterministic evaluation of K, L, Ψ, h, the potential kernel U and the
//! generator on radial test functions.

use crate::error::{Error, Result};
use crate::process_model::{ProcessSpec, Shape};
use crate::quad::{self, QuadResult, QuadratureConfig};
use crate::special::{bessel_j, bessel_zero, sphere_area, sphere_cos_gap, sphere_cos_mean};

/// K, L, K+L and h = (K+L)^{−1/2} at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruittValues {
    pub r: f64,
    pub k: f64,
    pub l: f64,
    pub sum: f64,
    pub h: f64,
}

/// A value with an absolute error indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub error: f64,
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("radius must be positive and finite, got {r}")))
    }
}

/// Largest value of (p+1)w + ln ν(e^w) on a coarse grid over [w_lo, w_hi].
fn log_peak(spec: &ProcessSpec, p: f64, w_lo: f64, w_hi: f64) -> f64 {
    let n = 64;
    (0..=n)
        .map(|i| {
            let w = w_lo + (w_hi - w_lo) * i as f64 / n as f64;
            (p + 1.0) * w + spec.nu.ln_density_at_log(w)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// ω∫₀^r s^{d+1}ν(s)ds / r².
pub(crate) fn k_jump(spec: &ProcessSpec, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if spec.nu.is_zero() {
        return Ok(0.0);
    }
    let d = spec.d as f64;
    let top = r.min(spec.nu.support_radius() * (1.0 - 1e-12)).ln();
    let peak = log_peak(spec, d + 1.0, top - 40.0, top);
    let ln_norm = if peak.is_finite() { peak } else { 2.0 * r.ln() };
    let m = spec.nu.moment(d + 1.0, 0.0, r, ln_norm, cfg).require("K(r)")?;
    Ok(spec.omega() * m.value * (ln_norm - 2.0 * r.ln()).exp())
}

/// K(r) = σ²d/r² + (ω/r²)∫₀^r s^{d+1}ν(s)ds.
pub fn pruitt_k(spec: &ProcessSpec, r: f64) -> Result<f64> {
    pruitt_k_with(spec, r, &QuadratureConfig::default())
}

pub fn pruitt_k_with(spec: &ProcessSpec, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_radius(r)?;
    Ok(spec.sigma2 * spec.d as f64 / (r * r) + k_jump(spec, r, cfg)?)
}

/// L(r) = ω∫_r^∞ s^{d−1}ν(s)ds.
pub fn pruitt_l(spec: &ProcessSpec, r: f64) -> Result<f64> {
    pruitt_l_with(spec, r, &QuadratureConfig::default())
}

pub fn pruitt_l_with(spec: &ProcessSpec, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_radius(r)?;
    if spec.nu.is_zero() || r >= spec.nu.support_radius() {
        return Ok(0.0);
    }
    let w = r.ln();
    let top = spec.nu.support_radius().min(r * 1e12).ln();
    let peak = log_peak(spec, spec.d as f64 - 1.0, w, top);
    let ln_norm = if peak.is_finite() { peak } else { spec.d as f64 * w + spec.nu.ln_eval(r) };
    let m = spec.nu.moment(spec.d as f64 - 1.0, r, f64::INFINITY, ln_norm, cfg).require("L(r)")?;
    Ok(spec.omega() * m.value * ln_norm.exp())
}

/// All Pruitt quantities at radius `r`.
pub fn pruitt(spec: &ProcessSpec, r: f64) -> Result<PruittValues> {
    pruitt_with(spec, r, &QuadratureConfig::default())
}

pub fn pruitt_with(spec: &ProcessSpec, r: f64, cfg: &QuadratureConfig) -> Result<PruittValues> {
    let k = pruitt_k_with(spec, r, cfg)?;
    let l = pruitt_l_with(spec, r, cfg)?;
    let sum = k + l;
    Ok(PruittValues { r, k, l, sum, h: if sum > 0.0 { sum.powf(-0.5) } else { f64::INFINITY } })
}

/// Integral of `g` over [a, ∞) for an integrand oscillating with the zeros of
/// J_order: pieces between consecutive zeros are Euler-summed.
fn bessel_tail<G: FnMut(f64) -> f64>(mut g: G, order: f64, a: f64, cfg: &QuadratureConfig) -> Result<Approx> {
    let mut k = 1;
    while bessel_zero(order, k) <= a {
        k += 1;
    }
    let first = bessel_zero(order, k);
    let head = quad::integrate(&mut g, a, first, cfg);
    let mut partial = vec![head.value];
    let mut lo = first;
    let mut total_eval_err = head.error;
    let mut n_terms = 32;
    loop {
        while partial.len() < n_terms {
            k += 1;
            let hi = bessel_zero(order, k);
            let piece = quad::integrate(&mut g, lo, hi, cfg);
            total_eval_err += piece.error;
            partial.push(partial[partial.len() - 1] + piece.value);
            lo = hi;
        }
        let (v, e) = quad::euler_limit(&partial, 24);
        let scale = partial.iter().map(|p| p.abs()).fold(0.0, f64::max);
        if e <= 10.0 * cfg.rel_tol * scale.max(v.abs()) + cfg.abs_tol || n_terms >= 512 {
            return if e.is_finite() && v.is_finite() {
                Ok(Approx { value: v, error: e + total_eval_err })
            } else {
                Err(Error::NonConvergentQuadrature("oscillatory tail".into()))
            };
        }
        n_terms *= 2;
    }
}

/// Ψ(ρ) = σ²ρ² + ω∫₀^∞ s^{d−1}ν(s)(1 − j_d(ρs))ds.
pub fn psi(spec: &ProcessSpec, rho: f64) -> Result<f64> {
    psi_with(spec, rho, &QuadratureConfig::default())
}

pub fn psi_with(spec: &ProcessSpec, rho: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::DomainError(format!("psi needs rho ≥ 0, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let d = spec.d;
    let gauss = spec.sigma2 * rho * rho;
    let nu = &spec.nu;
    let natural = |cfg: &QuadratureConfig| -> Result<QuadratureConfig> {
        let scale = k_jump(spec, 1.0 / rho, cfg)? + pruitt_l_with(spec, 1.0 / rho, cfg)?;
        Ok(QuadratureConfig { abs_tol: (1e-2 * cfg.rel_tol * scale / spec.omega()).max(1e-300), ..*cfg })
    };
    let jumps = match nu.shape() {
        Shape::Zero => 0.0,
        Shape::Uniform(balls) => balls.iter().map(|b| b.mass * sphere_cos_gap(d + 2, b.radius * rho)).sum(),
        Shape::LogKernel => spec.omega() * log_kernel_psi_integral(d, rho, &natural(cfg)?)?,
        _ => spec.omega() * psi_integral(spec, rho, &natural(cfg)?)?,
    };
    Ok(gauss + jumps)
}

fn zero_order(d: usize) -> f64 {
    d as f64 / 2.0 - 1.0
}

/// ∫₀^ρ g_d(u)/u du.
fn log_kernel_psi_integral(d: usize, rho: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let order = zero_order(d);
    let z = bessel_zero(order, 4);
    let g = |w: f64| sphere_cos_gap(d, w.exp());
    if rho <= z {
        return Ok(quad::integrate_lower_tail(g, rho.ln(), cfg).require("log-kernel psi")?.value);
    }
    let head = quad::integrate_lower_tail(g, z.ln(), cfg).require("log-kernel psi")?.value;
    let tail = |a: f64| bessel_tail(|u: f64| sphere_cos_mean(d, u) / u, order, a, cfg);
    let t_z = tail(z)?.value;
    let t_rho = tail(rho)?.value;
    Ok(head + (rho / z).ln() - (t_z - t_rho))
}

fn psi_integral(spec: &ProcessSpec, rho: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let d = spec.d;
    let nu = &spec.nu;
    let order = zero_order(d);
    let cut = bessel_zero(order, 4) / rho;
    let support = nu.support_radius();
    let dd = d as f64;
    // head ∫₀^{cut} in w = ln s
    let head_integrand = |w: f64| {
        let s = w.exp();
        let e = dd * w + nu.ln_density_at_log(w);
        if e == f64::NEG_INFINITY { 0.0 } else { e.exp() * sphere_cos_gap(d, rho * s) }
    };
    let mut cuts: Vec<f64> = nu.breakpoints().into_iter().filter(|&b| b < cut.min(support)).collect();
    cuts.push(1.0 / rho);
    cuts.push(1.0);
    cuts.retain(|&c| c < cut.min(support));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let top = cut.min(support);
    let mut head = QuadResult::ZERO;
    let mut lo = f64::NEG_INFINITY;
    for c in cuts.into_iter().chain(std::iter::once(top)) {
        let part = if lo == f64::NEG_INFINITY {
            quad::integrate_lower_tail(head_integrand, c.ln(), cfg)
        } else {
            quad::integrate(head_integrand, lo, c.ln(), cfg)
        };
        head = head + part;
        lo = c.ln();
    }
    let head = head.require("psi head")?.value;
    if support <= cut {
        return Ok(head);
    }
    // tail: ∫_cut^∞ s^{d−1}ν ds − ∫_cut^∞ s^{d−1}ν j_d(ρs) ds
    let plain = nu.moment(dd - 1.0, cut, f64::INFINITY, 0.0, cfg).require("psi tail mass")?.value;
    let osc_integrand = |u: f64| {
        let w = (u / rho).ln();
        let e = (dd - 1.0) * w + nu.ln_density_at_log(w);
        if e == f64::NEG_INFINITY { 0.0 } else { e.exp() * sphere_cos_mean(d, u) / rho }
    };
    let osc = if support.is_finite() {
        let hi = support * rho;
        let mut k = 5;
        let mut lo = cut * rho;
        let mut acc = 0.0;
        loop {
            if k > 200_000 {
                return Err(Error::NonConvergentQuadrature("psi: too many oscillations below support".into()));
            }
            let z = bessel_zero(order, k).min(hi);
            let mut pts: Vec<f64> = nu.breakpoints().iter().map(|b| b * rho).filter(|&b| b > lo && b < z).collect();
            pts.push(z);
            let mut a = lo;
            for p in pts {
                acc += quad::integrate(osc_integrand, a, p, cfg).value;
                a = p;
            }
            if z >= hi {
                break;
            }
            lo = z;
            k += 1;
        }
        acc
    } else {
        bessel_tail(osc_integrand, order, cut * rho, cfg)?.value
    };
    Ok(head + plain - osc)
}

/// Stable scale A for which Ψ(ρ) = ρ^α, found from one quadrature of Ψ at ρ = 1 with A = 1.
pub fn stable_calibrated_scale(d: usize, alpha: f64) -> Result<f64> {
    let spec = crate::process_model::make_family(d, crate::process_model::Family::Stable { alpha, scale: 1.0 })?;
    Ok(1.0 / psi(&spec, 1.0)?)
}

/// U(|x|) by radial Fourier inversion with Euler-summed oscillatory tail.
pub fn potential_kernel_fourier(spec: &ProcessSpec, x_norm: f64) -> Result<Approx> {
    potential_kernel_fourier_with(spec, x_norm, &QuadratureConfig::default())
}

pub fn potential_kernel_fourier_with(spec: &ProcessSpec, x_norm: f64, cfg: &QuadratureConfig) -> Result<Approx> {
    if spec.d < 3 {
        return Err(Error::TransienceNotGuaranteed(format!("d = {} < 3", spec.d)));
    }
    check_radius(x_norm)?;
    let d = spec.d;
    let order = zero_order(d);
    let half = d as f64 / 2.0;
    let scale = 1.0 / psi_with(spec, 1.0 / x_norm, cfg)?;
    let local = QuadratureConfig { abs_tol: (1e-2 * cfg.rel_tol * scale).max(1e-300), ..*cfg };
    let cfg = &local;
    let mut failure = None;
    let mut integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        match psi_with(spec, u / x_norm, cfg) {
            Ok(p) if p > 0.0 => bessel_j(order, u) * u.powf(half) / p,
            Ok(_) if u < 1e-100 => 0.0,
            Ok(_) => {
                failure.get_or_insert_with(|| Error::TransienceNotGuaranteed("Ψ vanishes".into()));
                0.0
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let z1 = bessel_zero(order, 1);
    let head = quad::integrate_lower_tail(|w: f64| integrand(w.exp()) * w.exp(), z1.ln(), cfg);
    let tail = bessel_tail(&mut integrand, order, z1, cfg);
    if let Some(e) = failure {
        return Err(e);
    }
    let head = head.require("potential head")?;
    let tail = tail?;
    let pref = (2.0 * std::f64::consts::PI).powf(-half) * x_norm.powi(-(d as i32));
    Ok(Approx { value: pref * (head.value + tail.value), error: pref * (head.error + tail.error) })
}

/// ∫_{B_r} U(z) dz by radial quadrature of the Fourier-inverted kernel.
///
/// The innermost part below r·e^{−SPAN} is closed with the local power law of U(s)s^d.
pub fn potential_measure_ball(spec: &ProcessSpec, r: f64) -> Result<f64> {
    const SPAN: f64 = 25.0;
    check_radius(r)?;
    let cfg = QuadratureConfig::new(1e-6, 1e-300, 200);
    let inner = QuadratureConfig::new(1e-9, 1e-300, 500);
    let dd = spec.d as f64;
    let mut failure = None;
    let mut g = |w: f64| {
        let s = w.exp();
        match potential_kernel_fourier_with(spec, s, &inner) {
            Ok(u) => u.value * s.powf(dd),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let lo = r.ln() - SPAN;
    let (g0, g1) = (g(lo), g(lo + 1.0));
    let body = quad::integrate(&mut g, lo, r.ln(), &cfg);
    if let Some(e) = failure {
        return Err(e);
    }
    let slope = (g1 / g0).ln();
    if !(slope > 0.0) {
        return Err(Error::NonConvergentQuadrature("potential measure does not vanish at the origin".into()));
    }
    Ok(spec.omega() * (body.require("potential measure")?.value + g0 / slope))
}

/// A radial function φ(|x|) with its first two radial derivatives.
pub trait RadialFunction: Sync {
    fn value(&self, rho: f64) -> f64;
    fn d1(&self, rho: f64) -> f64;
    fn d2(&self, rho: f64) -> f64;
    /// Radii where φ″ may be discontinuous.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Radius beyond which φ vanishes.
    fn support(&self) -> f64 {
        f64::INFINITY
    }
    /// Inner length scale of φ.
    fn inner_scale(&self) -> f64;
    /// sup |φ|.
    fn sup_norm(&self) -> f64;
}

/// Δφ at radius a in ℝ^d.
pub fn radial_laplacian<F: RadialFunction + ?Sized>(f: &F, d: usize, a: f64) -> f64 {
    if a == 0.0 {
        d as f64 * f.d2(0.0)
    } else {
        f.d2(a) + (d as f64 - 1.0) * f.d1(a) / a
    }
}

/// Mean of φ(|y|) over the sphere |y − x| = s with |x| = a.
pub fn spherical_mean<F: RadialFunction + ?Sized>(f: &F, d: usize, a: f64, s: f64, cfg: &QuadratureConfig) -> f64 {
    if a == 0.0 || s == 0.0 {
        return f.value(a + s);
    }
    if d == 1 {
        return 0.5 * (f.value(a + s) + f.value((a - s).abs()));
    }
    let lo = (a - s).abs();
    let hi = a + s;
    let supp = f.support();
    if lo >= supp {
        return 0.0;
    }
    let mut kinks: Vec<f64> = f.kinks();
    kinks.push(supp);
    let w = |theta: f64| {
        let rho = (a * a + s * s + 2.0 * a * s * theta.cos()).max(0.0).sqrt();
        if rho >= supp { 0.0 } else { f.value(rho) * theta.sin().powi(d as i32 - 2) }
    };
    let mut breaks: Vec<f64> = kinks
        .iter()
        .filter(|&&k| k > lo && k < hi)
        .map(|&k| ((k * k - a * a - s * s) / (2.0 * a * s)).clamp(-1.0, 1.0).acos())
        .collect();
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let norm = sphere_area(d - 1) / sphere_area(d);
    norm * quad::integrate_pieces(w, 0.0, std::f64::consts::PI, &breaks, cfg).value
}

/// A f(|x|) for a radial test function, with an error indicator.
pub fn generator_apply<F: RadialFunction + ?Sized>(spec: &ProcessSpec, f: &F, x_norm: f64) -> Result<Approx> {
    generator_apply_with(spec, f, x_norm, &QuadratureConfig::default().with_rel_tol(1e-9))
}

pub fn generator_apply_with<F: RadialFunction + ?Sized>(
    spec: &ProcessSpec,
    f: &F,
    x_norm: f64,
    cfg: &QuadratureConfig,
) -> Result<Approx> {
    let a = x_norm;
    let d = spec.d;
    let dd = d as f64;
    let lap = radial_laplacian(f, d, a);
    let mut value = spec.sigma2 * lap;
    if spec.nu.is_zero() {
        return Ok(Approx { value, error: 0.0 });
    }
    let scale = f.inner_scale();
    let kinks = f.kinks();
    let kink_gap = kinks.iter().map(|k| (k - a).abs()).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    let mut eps = scale.min(1.0) / 64.0;
    if kink_gap < 2.0 * eps {
        eps = (0.5 * kink_gap).max(1e-6 * eps);
    }
    let natural = f.sup_norm() * pruitt_with(spec, scale, cfg)?.sum;
    let abs_tol = cfg.rel_tol * natural;
    let local = QuadratureConfig { abs_tol: abs_tol.max(1e-300), ..*cfg };
    let inner_cfg = QuadratureConfig { abs_tol: 1e-3 * cfg.rel_tol * f.sup_norm(), ..*cfg };

    // inner part: second-order Taylor term of the spherical mean
    let jump_k = k_jump(spec, eps, cfg)?;
    let inner = lap / (2.0 * dd) * eps * eps * jump_k;
    let taylor_err = inner.abs() * (eps / scale.min(kink_gap.max(eps))).powi(2);
    value += inner;

    let fa = f.value(a);
    let supp = f.support();
    let top = if supp.is_finite() { a + supp } else { f64::INFINITY };
    let mut cuts: Vec<f64> = spec.nu.breakpoints();
    cuts.push(1.0);
    for k in kinks.iter().chain(std::iter::once(&supp)).filter(|k| k.is_finite()) {
        cuts.push((a - k).abs());
        cuts.push(a + k);
    }
    cuts.retain(|&c| c > eps && c < top);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let nu = &spec.nu;
    let g = |w: f64| {
        let e = dd * w + nu.ln_density_at_log(w);
        if e == f64::NEG_INFINITY {
            return 0.0;
        }
        e.exp() * (spherical_mean(f, d, a, w.exp(), &inner_cfg) - fa)
    };
    let mut outer = QuadResult::ZERO;
    let mut lo = eps.ln();
    for c in cuts {
        outer = outer + quad::integrate(g, lo, c.ln(), &local);
        lo = c.ln();
    }
    if top.is_finite() {
        outer = outer + quad::integrate(g, lo, top.ln(), &local);
        let tail = -fa * pruitt_l_with(spec, top, cfg)? / spec.omega();
        outer.value += tail;
    } else {
        outer = outer + quad::integrate_upper_tail(g, lo, &local);
    }
    let outer = outer.require("generator")?;
    value += spec.omega() * outer.value;
    Ok(Approx { value, error: spec.omega() * outer.error + taylor_err })
}

/// A general test function on ℝ^d (d ≤ 3) with its Laplacian.
pub trait TestFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn laplacian(&self, x: &[f64]) -> f64;
    /// Radius of a ball around the origin containing the support.
    fn support_radius(&self) -> f64;
    fn inner_scale(&self) -> f64;
}

/// A f(x) for a general test function in dimension d ≤ 3 by a product rule on the sphere.
pub fn generator_apply_general<F: TestFunction + ?Sized>(spec: &ProcessSpec, f: &F, x: &[f64]) -> Result<Approx> {
    let d = spec.d;
    if d > 3 || x.len() != d {
        return Err(Error::DomainError("general test functions are supported for d ≤ 3".into()));
    }
    let lap = f.laplacian(x);
    let mut value = spec.sigma2 * lap;
    if spec.nu.is_zero() {
        return Ok(Approx { value, error: 0.0 });
    }
    let cfg = QuadratureConfig::default().with_rel_tol(1e-8);
    let eps = f.inner_scale().min(1.0) / 64.0;
    let inner = lap / (2.0 * d as f64) * eps * eps * k_jump(spec, eps, &cfg)?;
    value += inner;
    // sphere rule
    let dirs: Vec<(Vec<f64>, f64)> = match d {
        1 => vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)],
        2 => (0..128)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 128.0;
                (vec![t.cos(), t.sin()], 1.0 / 128.0)
            })
            .collect(),
        _ => {
            let (gx, gw) = quad::gauss_legendre(48);
            let mut v = Vec::new();
            for (c, wc) in gx.iter().zip(&gw) {
                let sn = (1.0 - c * c).sqrt();
                for j in 0..96 {
                    let p = 2.0 * std::f64::consts::PI * j as f64 / 96.0;
                    v.push((vec![sn * p.cos(), sn * p.sin(), *c], wc / 2.0 / 96.0));
                }
            }
            v
        }
    };
    let fx = f.value(x);
    let xn = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let top = xn + f.support_radius();
    let nu = &spec.nu;
    let dd = d as f64;
    let g = |w: f64| {
        let e = dd * w + nu.ln_density_at_log(w);
        if e == f64::NEG_INFINITY {
            return 0.0;
        }
        let s = w.exp();
        let mut y = [0.0; 3];
        let mut mean = 0.0;
        for (dir, wt) in &dirs {
            for i in 0..d {
                y[i] = x[i] + s * dir[i];
            }
            mean += wt * f.value(&y[..d]);
        }
        e.exp() * (mean - fx)
    };
    let mut breaks = nu.breakpoints();
    breaks.push(1.0);
    let ln_breaks: Vec<f64> = breaks.iter().filter(|&&b| b > eps && b < top).map(|b| b.ln()).collect();
    let outer = quad::integrate_pieces(g, eps.ln(), top.ln(), &ln_breaks, &cfg).require("generator")?;
    let tail = -fx * pruitt_l_with(spec, top, &cfg)?;
    value += spec.omega() * outer.value + tail;
    Ok(Approx { value, error: spec.omega() * outer.error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{make_family, Family};
    use std::f64::consts::PI;

    fn stable(alpha: f64) -> ProcessSpec {
        make_family(3, Family::Stable { alpha, scale: 1.0 }).unwrap()
    }

    #[test]
    fn brownian_pruitt() {
        let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
        let p = pruitt(&b, 2.0).unwrap();
        assert_eq!(p.k, 0.75);
        assert_eq!(p.l, 0.0);
    }

    #[test]
    fn stable_pruitt_closed_form() {
        let p = pruitt(&stable(1.0), 1.0).unwrap();
        assert!((p.k / (4.0 * PI) - 1.0).abs() < 1e-10);
        assert!((p.l / (4.0 * PI) - 1.0).abs() < 1e-10);
        assert!((p.h - (8.0 * PI).powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn two_uniform_pruitt_beyond_support() {
        let s = make_family(3, Family::TwoUniformCp { lambda: 3.0, big_r: 2.0 }).unwrap();
        for &r in &[2.0, 5.0] {
            let p = pruitt(&s, r).unwrap();
            let k = 3.0 / (5.0 * r * r) * (1.0 + 3.0 * 4.0);
            assert!((p.k / k - 1.0).abs() < 1e-10, "{} vs {}", p.k, k);
            assert_eq!(p.l, 0.0);
        }
    }

    #[test]
    fn brownian_psi() {
        for d in 1..5 {
            let b = make_family(d, Family::Brownian { sigma2: 1.0 }).unwrap();
            assert_eq!(psi(&b, 3.0).unwrap(), 9.0);
        }
    }

    #[test]
    fn uniform_psi_matches_direct_integration() {
        // ν = 1{s<1}/|B_1| in d = 3: Ψ(ρ) = 3∫₀¹ s²(1 − sin(ρs)/(ρs)) ds
        let s = make_family(3, Family::TwoUniformCp { lambda: 1e-12, big_r: 1.0 }).unwrap();
        for &rho in &[0.3, 2.0, 40.0] {
            let direct = 3.0
                * quad::integrate(|t: f64| t * t * sphere_cos_gap(3, rho * t), 0.0, 1.0, &QuadratureConfig::default()).value
                * (1.0 + 1e-12);
            let v = psi(&s, rho).unwrap();
            assert!((v / direct - 1.0).abs() < 1e-9, "rho={rho}: {v} vs {direct}");
        }
    }

    #[test]
    fn log_kernel_psi_is_continuous_across_the_split() {
        let s = make_family(3, Family::LogKernel).unwrap();
        let z = bessel_zero(0.5, 4);
        let a = psi(&s, z * (1.0 - 1e-9)).unwrap();
        let b = psi(&s, z * (1.0 + 1e-9)).unwrap();
        assert!((a - b).abs() < 1e-7 * a);
    }

    #[test]
    fn generator_brownian_gaussian() {
        struct G;
        impl RadialFunction for G {
            fn value(&self, r: f64) -> f64 {
                (-r * r).exp()
            }
            fn d1(&self, r: f64) -> f64 {
                -2.0 * r * (-r * r).exp()
            }
            fn d2(&self, r: f64) -> f64 {
                (4.0 * r * r - 2.0) * (-r * r).exp()
            }
            fn inner_scale(&self) -> f64 {
                1.0
            }
            fn sup_norm(&self) -> f64 {
                1.0
            }
        }
        let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
        assert_eq!(generator_apply(&b, &G, 0.0).unwrap().value, -6.0);
    }
}
