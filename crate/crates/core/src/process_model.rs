//! Process specifications: radial Lévy densities, the example families, and
//! validation of the isotropic-unimodal hypotheses.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quad::{self, QuadResult, QuadratureConfig};
use crate::scaling_indices::{certify_scaling, ScalingCertificate};
use crate::special::{ball_volume, gamma_half, sphere_area};

/// Family of a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    Brownian,
    Stable,
    SlowDecay,
    VarianceGamma,
    TwoUniformCp,
    GaussPlusUniform,
    LogKernel,
    Tabulated,
}

impl FamilyTag {
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Brownian => "brownian",
            FamilyTag::Stable => "stable",
            FamilyTag::SlowDecay => "slow_decay",
            FamilyTag::VarianceGamma => "variance_gamma",
            FamilyTag::TwoUniformCp => "two_uniform_cp",
            FamilyTag::GaussPlusUniform => "gauss_plus_uniform",
            FamilyTag::LogKernel => "log_kernel",
            FamilyTag::Tabulated => "tabulated",
        }
    }
}

/// Uniform jump law on a ball: density `mass / |B_radius|` on `s < radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformBall {
    pub mass: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Shape {
    Zero,
    Power { ln_scale: f64, exponent: f64 },
    SlowDecay { ln_scale: f64, alpha: f64 },
    VarianceGamma,
    Uniform(Vec<UniformBall>),
    LogKernel,
    Tabulated { ln_r: Vec<f64>, ln_v: Vec<f64> },
}

/// Large-radius behaviour of a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailKind {
    Vanishing,
    PowerLaw { exponent: f64 },
    Exponential { rate: f64 },
    Compact { radius: f64 },
}

/// Radial Lévy density ν(s) on (0, ∞).
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    d: usize,
    shape: Shape,
    tag: FamilyTag,
}

impl RadialProfile {
    pub fn zero(d: usize) -> Self {
        Self { d, shape: Shape::Zero, tag: FamilyTag::Brownian }
    }

    /// ν(s) = A s^{−d−α}.
    pub fn stable(d: usize, alpha: f64, scale: f64) -> Self {
        Self {
            d,
            shape: Shape::Power { ln_scale: scale.ln(), exponent: d as f64 + alpha },
            tag: FamilyTag::Stable,
        }
    }

    /// ν(s) = C s^{−d}(1+s)^{−α}.
    pub fn slow_decay(d: usize, alpha: f64, scale: f64) -> Self {
        Self { d, shape: Shape::SlowDecay { ln_scale: scale.ln(), alpha }, tag: FamilyTag::SlowDecay }
    }

    /// Gaussian mixture ν(s) = ∫₀^∞ (4πt)^{−d/2} e^{−s²/(4t)} t^{−1} e^{−t} dt.
    pub fn variance_gamma(d: usize) -> Self {
        Self { d, shape: Shape::VarianceGamma, tag: FamilyTag::VarianceGamma }
    }

    /// Sum of uniform laws on balls.
    pub fn uniform_mixture(d: usize, balls: Vec<UniformBall>, tag: FamilyTag) -> Self {
        let mut balls = balls;
        balls.sort_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap());
        Self { d, shape: Shape::Uniform(balls), tag }
    }

    /// ν(s) = s^{−d} on s < 1.
    pub fn log_kernel(d: usize) -> Self {
        Self { d, shape: Shape::LogKernel, tag: FamilyTag::LogKernel }
    }

    /// Log-log interpolated table; power extrapolation below the first radius, zero beyond the last.
    pub fn tabulated(d: usize, radii: &[f64], values: &[f64]) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::ValidationFailed("table needs at least two matching points".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
            return Err(Error::ValidationFailed("table radii must be positive and increasing".into()));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::ValidationFailed("table values must be positive".into()));
        }
        Ok(Self {
            d,
            shape: Shape::Tabulated {
                ln_r: radii.iter().map(|r| r.ln()).collect(),
                ln_v: values.iter().map(|v| v.ln()).collect(),
            },
            tag: FamilyTag::Tabulated,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The balls of a uniform mixture, largest last.
    pub fn uniform_balls(&self) -> Option<&[UniformBall]> {
        match &self.shape {
            Shape::Uniform(b) => Some(b),
            _ => None,
        }
    }

    pub fn family_tag(&self) -> FamilyTag {
        self.tag
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
    }

    /// ln ν(e^w); −∞ where ν vanishes.
    pub fn ln_density_at_log(&self, w: f64) -> f64 {
        let d = self.d as f64;
        match &self.shape {
            Shape::Zero => f64::NEG_INFINITY,
            Shape::Power { ln_scale, exponent } => ln_scale - exponent * w,
            Shape::SlowDecay { ln_scale, alpha } => ln_scale - d * w - alpha * w.exp().ln_1p(),
            Shape::VarianceGamma => vg_ln_density(self.d, w),
            Shape::Uniform(balls) => {
                let s = w.exp();
                let v: f64 = balls
                    .iter()
                    .filter(|b| s < b.radius)
                    .map(|b| b.mass / (ball_volume(self.d) * b.radius.powi(self.d as i32)))
                    .sum();
                if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }
            }
            Shape::LogKernel => {
                if w < 0.0 { -d * w } else { f64::NEG_INFINITY }
            }
            Shape::Tabulated { ln_r, ln_v } => {
                let n = ln_r.len();
                if w >= ln_r[n - 1] {
                    return if w == ln_r[n - 1] { ln_v[n - 1] } else { f64::NEG_INFINITY };
                }
                let i = match ln_r.partition_point(|&x| x <= w) {
                    0 => 0,
                    k => k - 1,
                };
                let t = (w - ln_r[i]) / (ln_r[i + 1] - ln_r[i]);
                ln_v[i] + t * (ln_v[i + 1] - ln_v[i])
            }
        }
    }

    /// ν(s).
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        self.ln_density_at_log(s.ln()).exp()
    }

    /// ln ν(s).
    pub fn ln_eval(&self, s: f64) -> f64 {
        self.ln_density_at_log(s.ln())
    }

    /// Radius beyond which ν vanishes (∞ for full support, 0 for the zero profile).
    pub fn support_radius(&self) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Uniform(balls) => balls.iter().map(|b| b.radius).fold(0.0, f64::max),
            Shape::LogKernel => 1.0,
            Shape::Tabulated { ln_r, .. } => ln_r[ln_r.len() - 1].exp(),
            _ => f64::INFINITY,
        }
    }

    pub fn singular_at_zero(&self) -> bool {
        matches!(
            self.shape,
            Shape::Power { .. } | Shape::SlowDecay { .. } | Shape::LogKernel | Shape::VarianceGamma
        )
    }

    /// Radii where ν is discontinuous or changes formula.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Uniform(balls) => balls.iter().map(|b| b.radius).collect(),
            Shape::LogKernel => vec![1.0],
            Shape::Tabulated { ln_r, .. } => ln_r.iter().map(|w| w.exp()).collect(),
            _ => Vec::new(),
        }
    }

    /// Total mass ω_{d−1}∫ s^{d−1}ν(s) ds of the Lévy measure.
    pub fn total_mass(&self) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Uniform(balls) => balls.iter().map(|b| b.mass).sum(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_compound_poisson(&self) -> bool {
        let m = self.total_mass();
        m.is_finite() && m > 0.0
    }

    pub fn tail_kind(&self) -> TailKind {
        match &self.shape {
            Shape::Zero => TailKind::Vanishing,
            Shape::Power { exponent, .. } => TailKind::PowerLaw { exponent: *exponent },
            Shape::SlowDecay { alpha, .. } => TailKind::PowerLaw { exponent: self.d as f64 + alpha },
            Shape::VarianceGamma => TailKind::Exponential { rate: 1.0 },
            _ => TailKind::Compact { radius: self.support_radius() },
        }
    }

    /// ∫_a^b s^p ν(s) ds · e^{−ln_norm}, with 0 ≤ a < b ≤ ∞, integrated in w = ln s.
    pub fn moment(&self, p: f64, a: f64, b: f64, ln_norm: f64, cfg: &QuadratureConfig) -> QuadResult {
        let b = b.min(self.support_radius());
        if self.is_zero() || !(b > a) {
            return QuadResult::ZERO;
        }
        let g = |w: f64| {
            let e = (p + 1.0) * w + self.ln_density_at_log(w) - ln_norm;
            if e == f64::NEG_INFINITY { 0.0 } else { e.exp() }
        };
        let mut cuts: Vec<f64> = self.breakpoints();
        cuts.push(1.0);
        cuts.retain(|&c| c > a && c < b);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        let mut pts = Vec::with_capacity(cuts.len() + 2);
        pts.push(a);
        pts.extend(cuts);
        pts.push(b);
        let mut acc = QuadResult::ZERO;
        for win in pts.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            let part = if lo == 0.0 && hi.is_infinite() {
                quad::integrate_lower_tail(g, 0.0, cfg) + quad::integrate_upper_tail(g, 0.0, cfg)
            } else if lo == 0.0 {
                quad::integrate_lower_tail(g, hi.ln(), cfg)
            } else if hi.is_infinite() {
                quad::integrate_upper_tail(g, lo.ln(), cfg)
            } else {
                quad::integrate(g, lo.ln(), hi.ln(), cfg)
            };
            acc = acc + part;
        }
        acc
    }
}

fn vg_ln_density(d: usize, w: f64) -> f64 {
    // t = e^u: integrand (4π)^{−d/2} exp(−(d/2)u − e^{2w−u}/4 − e^u), trapezoid in u
    let half = d as f64 / 2.0;
    if w < -40.0 {
        // e^{−t} ≈ 1 on the relevant range of t
        return gamma_half(d).ln() - half * PI.ln() - d as f64 * w;
    }
    if w > 30.0 {
        // large-argument form of 2(s/2)^{−d/2} K_{d/2}(s)
        let s = w.exp();
        return -half * (4.0 * PI).ln() + 2f64.ln() - half * (w - 2f64.ln()) + 0.5 * (PI / (2.0 * s)).ln() - s;
    }
    let s2 = (2.0 * w).exp();
    let phi = |u: f64| -half * u - 0.25 * (2.0 * w - u).exp() - u.exp();
    let y = 0.5 * (-half + (half * half + s2).sqrt());
    let y = if y > 0.0 { y } else { 0.25 * s2 / half };
    let u0 = y.ln();
    let curv = 0.25 * (2.0 * w - u0).exp() + y;
    let h = (0.5 / curv.sqrt()).min(0.25);
    let peak = phi(u0);
    let mut sum = 1.0;
    for dir in [-1.0, 1.0] {
        let mut k = 1.0;
        loop {
            let v = phi(u0 + dir * k * h) - peak;
            sum += v.exp();
            if v < -45.0 || k > 1e5 {
                break;
            }
            k += 1.0;
        }
    }
    -half * (4.0 * PI).ln() + peak + (h * sum).ln()
}

/// A validated process: dimension, Gaussian coefficient and radial Lévy density.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub d: usize,
    pub sigma2: f64,
    pub nu: RadialProfile,
    label: String,
    omega: f64,
}

impl ProcessSpec {
    /// Builds a spec without running validation grids.
    pub fn new(d: usize, sigma2: f64, nu: RadialProfile, label: impl Into<String>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ParamOutOfRange { name: "d", value: 0.0 });
        }
        if nu.dim() != d {
            return Err(Error::ValidationFailed("profile dimension differs from spec dimension".into()));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::ParamOutOfRange { name: "sigma2", value: sigma2 });
        }
        if sigma2 == 0.0 && nu.is_zero() {
            return Err(Error::ValidationFailed("constant process: sigma2 = 0 and nu = 0".into()));
        }
        Ok(Self { d, sigma2, nu, label: label.into(), omega: sphere_area(d) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family_tag(&self) -> FamilyTag {
        if self.nu.is_zero() { FamilyTag::Brownian } else { self.nu.family_tag() }
    }

    /// ω_{d−1}.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_compound_poisson(&self) -> bool {
        self.sigma2 == 0.0 && self.nu.is_compound_poisson()
    }
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Example families with their parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Brownian { sigma2: f64 },
    Stable { alpha: f64, scale: f64 },
    SlowDecay { alpha: f64, scale: f64 },
    VarianceGamma,
    TwoUniformCp { lambda: f64, big_r: f64 },
    GaussPlusUniform { lambda: f64, big_r: f64 },
    LogKernel,
}

impl Family {
    /// Builds a family from its name and keyed parameters.
    pub fn from_keyed(name: &str, params: &BTreeMap<String, f64>) -> Result<Family> {
        let get = |key: &'static str| -> Result<f64> {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::ValidationFailed(format!("family `{name}` needs parameter `{key}`")))
        };
        let get_or = |key: &str, v: f64| params.get(key).copied().unwrap_or(v);
        Ok(match name {
            "brownian" => Family::Brownian { sigma2: get_or("sigma2", 1.0) },
            "stable" => Family::Stable { alpha: get("alpha")?, scale: get_or("scale", 1.0) },
            "slow_decay" => Family::SlowDecay { alpha: get("alpha")?, scale: get_or("scale", 1.0) },
            "variance_gamma" => Family::VarianceGamma,
            "two_uniform_cp" => Family::TwoUniformCp { lambda: get("lambda")?, big_r: get("big_r")? },
            "gauss_plus_uniform" => Family::GaussPlusUniform { lambda: get("lambda")?, big_r: get("big_r")? },
            "log_kernel" => Family::LogKernel,
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    /// Parameter names accepted by a family.
    pub fn parameter_names(name: &str) -> Option<&'static [&'static str]> {
        Some(match name {
            "brownian" => &["sigma2"],
            "stable" | "slow_decay" => &["alpha", "scale"],
            "variance_gamma" | "log_kernel" => &[],
            "two_uniform_cp" | "gauss_plus_uniform" => &["lambda", "big_r"],
            _ => return None,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() { Ok(v) } else { Err(Error::ParamOutOfRange { name, value: v }) }
}

fn stability_index(v: f64) -> Result<f64> {
    if v > 0.0 && v < 2.0 { Ok(v) } else { Err(Error::ParamOutOfRange { name: "alpha", value: v }) }
}

/// Builds and validates one of the example families in dimension `d`.
pub fn make_family(d: usize, family: Family) -> Result<ProcessSpec> {
    if d == 0 {
        return Err(Error::ParamOutOfRange { name: "d", value: 0.0 });
    }
    let spec = match family {
        Family::Brownian { sigma2 } => {
            ProcessSpec::new(d, positive("sigma2", sigma2)?, RadialProfile::zero(d), format!("brownian(d={d},sigma2={sigma2})"))?
        }
        Family::Stable { alpha, scale } => ProcessSpec::new(
            d,
            0.0,
            RadialProfile::stable(d, stability_index(alpha)?, positive("scale", scale)?),
            format!("stable(d={d},alpha={alpha},A={scale})"),
        )?,
        Family::SlowDecay { alpha, scale } => ProcessSpec::new(
            d,
            0.0,
            RadialProfile::slow_decay(d, stability_index(alpha)?, positive("scale", scale)?),
            format!("slow_decay(d={d},alpha={alpha},C={scale})"),
        )?,
        Family::VarianceGamma => {
            ProcessSpec::new(d, 0.0, RadialProfile::variance_gamma(d), format!("variance_gamma(d={d})"))?
        }
        Family::TwoUniformCp { lambda, big_r } => ProcessSpec::new(
            d,
            0.0,
            RadialProfile::uniform_mixture(
                d,
                vec![
                    UniformBall { mass: 1.0, radius: 1.0 },
                    UniformBall { mass: positive("lambda", lambda)?, radius: positive("big_r", big_r)? },
                ],
                FamilyTag::TwoUniformCp,
            ),
            format!("two_uniform_cp(d={d},lambda={lambda},R={big_r})"),
        )?,
        Family::GaussPlusUniform { lambda, big_r } => ProcessSpec::new(
            d,
            1.0,
            RadialProfile::uniform_mixture(
                d,
                vec![UniformBall { mass: positive("lambda", lambda)?, radius: positive("big_r", big_r)? }],
                FamilyTag::GaussPlusUniform,
            ),
            format!("gauss_plus_uniform(d={d},lambda={lambda},R={big_r})"),
        )?,
        Family::LogKernel => ProcessSpec::new(d, 0.0, RadialProfile::log_kernel(d), format!("log_kernel(d={d})"))?,
    };
    let report = validate(&spec, None);
    if let Some(msg) = report.failure() {
        return Err(Error::ValidationFailed(msg));
    }
    Ok(spec)
}

/// Findings of [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub monotonicity_violations: usize,
    pub first_violation: Option<f64>,
    pub integrability: f64,
    pub integrability_converged: bool,
    pub total_mass: f64,
    pub compound_poisson: bool,
    pub scaling: Option<ScalingCertificate>,
}

impl ValidationReport {
    /// Description of the first failed hypothesis, if any.
    pub fn failure(&self) -> Option<String> {
        if self.monotonicity_violations > 0 {
            return Some(format!(
                "profile increases at {} grid points (first near s = {:e})",
                self.monotonicity_violations,
                self.first_violation.unwrap_or(f64::NAN)
            ));
        }
        if !self.integrability_converged || !self.integrability.is_finite() {
            return Some("Lévy integrability integral does not converge".into());
        }
        None
    }
}

/// Checks monotonicity on a 1000-point log grid over [1e−6, 1e6], the Lévy
/// integrability integral, the total mass, and optionally the scaling condition.
pub fn validate(spec: &ProcessSpec, scaling: Option<(f64, f64, f64)>) -> ValidationReport {
    let nu = &spec.nu;
    let mut violations = 0;
    let mut first = None;
    let n = 1000;
    let mut prev = f64::INFINITY;
    for i in 0..n {
        let w = (-6.0 + 12.0 * i as f64 / (n - 1) as f64) * std::f64::consts::LN_10;
        let v = nu.ln_density_at_log(w);
        if v > prev + 1e-12 * prev.abs().max(1.0) {
            violations += 1;
            first.get_or_insert(w.exp());
        }
        prev = v;
    }
    let cfg = QuadratureConfig::default();
    let (integrability, converged) = if nu.is_zero() {
        (0.0, true)
    } else {
        let head = nu.moment(spec.d as f64 + 1.0, 0.0, 1.0, 0.0, &cfg);
        let tail = nu.moment(spec.d as f64 - 1.0, 1.0, f64::INFINITY, 0.0, &cfg);
        let total = head + tail;
        (spec.omega() * total.value, total.converged)
    };
    let total_mass = nu.total_mass();
    ValidationReport {
        monotonicity_violations: violations,
        first_violation: first,
        integrability,
        integrability_converged: converged,
        total_mass,
        compound_poisson: total_mass.is_finite() && total_mass > 0.0,
        scaling: scaling.map(|(m, alpha, r_inf)| certify_scaling(spec, m, alpha, r_inf)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_density_value() {
        let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
        assert!((s.nu.eval(2.0) - 0.0625).abs() < 1e-16);
    }

    #[test]
    fn two_uniform_density_in_one_dimension() {
        let s = make_family(1, Family::TwoUniformCp { lambda: 2.0, big_r: 4.0 }).unwrap();
        assert!((s.nu.eval(0.5) - 0.75).abs() < 1e-15);
        assert_eq!(s.nu.eval(5.0), 0.0);
    }

    #[test]
    fn brownian_validation() {
        let s = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
        let r = validate(&s, None);
        assert!(!r.compound_poisson);
        assert_eq!(r.integrability, 0.0);
    }

    #[test]
    fn two_uniform_total_mass() {
        let s = make_family(3, Family::TwoUniformCp { lambda: 10.0, big_r: 100.0 }).unwrap();
        let r = validate(&s, None);
        assert!(r.compound_poisson);
        assert!((r.total_mass - 11.0).abs() < 1e-12);
    }

    #[test]
    fn stable_integrability_is_eight_pi() {
        let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
        let r = validate(&s, None);
        assert!((r.integrability - 8.0 * PI).abs() < 1e-9 * 8.0 * PI);
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(
            make_family(3, Family::Stable { alpha: 2.0, scale: 1.0 }),
            Err(Error::ParamOutOfRange { name: "alpha", .. })
        ));
        assert!(matches!(Family::from_keyed("cauchy", &BTreeMap::new()), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn increasing_table_is_rejected_by_validation() {
        let nu = RadialProfile::tabulated(3, &[0.1, 1.0, 2.0], &[1.0, 2.0, 0.5]).unwrap();
        let spec = ProcessSpec::new(3, 0.0, nu, "tab").unwrap();
        assert!(validate(&spec, None).failure().is_some());
    }

    #[test]
    fn slow_decay_is_log_safe_at_tiny_radii() {
        let nu = RadialProfile::slow_decay(3, 1.9, 1.0);
        let w = -1000.0;
        assert!((nu.ln_density_at_log(w) - 3000.0).abs() < 1e-9);
    }
}
