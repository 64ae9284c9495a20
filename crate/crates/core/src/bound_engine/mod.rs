//! Closed-form bound expressions, boundary Harnack constants and sandwich
//! reports comparing them with Monte Carlo estimates.
//!
//! Dimensional constants c(d) are never fixed here: every expression is the
//! bare shape, and reports carry the constants implied by an estimate.

mod witness;

pub use witness::{superharmonic_witness, WitnessOutcome, WitnessReport, WitnessSearch};

use std::fmt;

use crate::error::{Error, Result};
use crate::monte_carlo::Estimate;
use crate::process_model::{ProcessSpec, TailKind};
use crate::radial_calculus::{pruitt, PruittValues};

/// Lower and upper shapes; `None` marks a side whose hypotheses fail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundPair {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

fn need(cond: bool, what: &str) -> Result<()> {
    if cond { Ok(()) } else { Err(Error::HypothesisViolated(what.to_string())) }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn powd(spec: &ProcessSpec, r: f64) -> f64 {
    r.powi(spec.d as i32)
}

/// Hitting probability of B̄_r from distance `x_norm`:
/// upper = [K/(K+L)](|x|)·r^d(K+L)(r)/(|x|^d(K+L)(|x|)) for |x| ≥ 2r, d ≥ 3;
/// lower = [|x|^dν(|x|)/(K+L)(|x|)]·r^d(K+L)(r)/(|x|^d(K+L)(|x|)) for |x| ≥ r.
pub fn ret_bounds(spec: &ProcessSpec, r: f64, x_norm: f64) -> Result<BoundPair> {
    need(r > 0.0 && x_norm >= r, "hitting bounds need |x| ≥ r > 0")?;
    let at_r = pruitt(spec, r)?;
    let at_x = pruitt(spec, x_norm)?;
    let common = powd(spec, r) * at_r.sum / (powd(spec, x_norm) * at_x.sum);
    let upper = (x_norm >= 2.0 * r && spec.d >= 3).then(|| at_x.k / at_x.sum * common);
    let lower = powd(spec, x_norm) * spec.nu.eval(x_norm) / at_x.sum * common;
    Ok(BoundPair { lower: Some(lower), upper })
}

/// Potential kernel: upper = K/(|x|^d(K+L)²) (d ≥ 3), lower = ν/(K+L)².
pub fn pot_bounds(spec: &ProcessSpec, x_norm: f64) -> Result<BoundPair> {
    need(x_norm > 0.0, "potential bounds need x ≠ 0")?;
    let p = pruitt(spec, x_norm)?;
    Ok(BoundPair {
        lower: Some(spec.nu.eval(x_norm) / (p.sum * p.sum)),
        upper: (spec.d >= 3).then(|| p.k / (powd(spec, x_norm) * p.sum * p.sum)),
    })
}

/// Green function of B_r: upper = K(|x−y|)/(|x−y|^d(K+L)(r)²);
/// lower = ν(|x−y|)/((K+L)(r_x)(K+L)(r_y)), r_x = min(|x−y|, r−|x|).
pub fn green_ball_bounds(spec: &ProcessSpec, r: f64, x: &[f64], y: &[f64]) -> Result<BoundPair> {
    need(x.len() == spec.d && y.len() == spec.d, "points must have d coordinates")?;
    let (nx, ny, rho) = (norm(x), norm(y), dist(x, y));
    need(nx < r && ny < r, "points must lie in the ball")?;
    need(rho > 0.0, "Green bounds need x ≠ y")?;
    let at_r = pruitt(spec, r)?;
    let at_rho = pruitt(spec, rho)?;
    let rx = pruitt(spec, rho.min(r - nx))?.sum;
    let ry = pruitt(spec, rho.min(r - ny))?.sum;
    Ok(BoundPair {
        lower: Some(spec.nu.eval(rho) / (rx * ry)),
        upper: Some(at_rho.k / (powd(spec, rho) * at_r.sum * at_r.sum)),
    })
}

/// Mean exit time of B_r: 1/(K+L)(r) on both sides.
pub fn exit_time_bounds(spec: &ProcessSpec, r: f64) -> Result<BoundPair> {
    let v = 1.0 / pruitt(spec, r)?.sum;
    Ok(BoundPair { lower: Some(v), upper: Some(v) })
}

/// Exit distribution of B_r from the origin at |z| > r:
/// ν(|z|)/(K+L)(r) below, ν(|z| − r)/(K+L)(r) above.
pub fn poisson_kernel_bounds(spec: &ProcessSpec, r: f64, z_norm: f64) -> Result<BoundPair> {
    need(z_norm > r && r > 0.0, "exit-law bounds need |z| > r > 0")?;
    let s = pruitt(spec, r)?.sum;
    Ok(BoundPair { lower: Some(spec.nu.eval(z_norm) / s), upper: Some(spec.nu.eval(z_norm - r) / s) })
}

/// Transition density shape t·K(r)/r^d.
pub fn transition_density_upper(spec: &ProcessSpec, t: f64, r: f64) -> Result<f64> {
    need(t > 0.0 && r > 0.0, "transition bound needs t, r > 0")?;
    Ok(t * pruitt(spec, r)?.k / powd(spec, r))
}

/// Coefficients of the supremum estimate for a harmonic function in B_r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupCoefficients {
    /// K(r)/(r^d(K+L)(r)), multiplying ∫_{ℝ^d∖B_q} f.
    pub upper_coeff: f64,
    /// ν(r)/(K+L)(r), multiplying ∫_{B_r∖B_q} f.
    pub lower_coeff: f64,
    /// Shapes bracketing the regularization constant C_reg(q, r): lower ≲ C_reg ≲ upper.
    pub c_reg_window: (f64, f64),
}

pub fn sup_bounds(spec: &ProcessSpec, r: f64, q: f64) -> Result<SupCoefficients> {
    need(0.0 <= q && q < r, "supremum bounds need 0 ≤ q < r")?;
    let p = pruitt(spec, r)?;
    let upper_coeff = p.k / (powd(spec, r) * p.sum);
    let lower_coeff = spec.nu.eval(r) / p.sum;
    Ok(SupCoefficients { upper_coeff, lower_coeff, c_reg_window: (lower_coeff, upper_coeff) })
}

/// Half-space Green function shape with h = (K+L)^{−1/2}:
/// [h(δ_x)/h(δ_x+r)]·[h(δ_y)/h(δ_y+r)]·K(r)/(r^d(K+L)(r)²), r = |x − y|.
pub fn halfspace_estimate(spec: &ProcessSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = spec.d;
    need(d >= 3, "the half-space estimate needs d ≥ 3")?;
    need(x.len() == d && y.len() == d, "points must have d coordinates")?;
    let (dx, dy, r) = (x[d - 1], y[d - 1], dist(x, y));
    need(dx > 0.0 && dy > 0.0, "points must lie in the half-space")?;
    need(r > 0.0, "the half-space estimate needs x ≠ y")?;
    let h = |s: f64| -> Result<f64> { Ok(pruitt(spec, s)?.h) };
    let at_r = pruitt(spec, r)?;
    Ok(h(dx)? / h(dx + r)? * h(dy)? / h(dy + r)? * at_r.k / (powd(spec, r) * at_r.sum * at_r.sum))
}

/// sup_{s>R} ν(s − r)/ν(s + r), with the limit at infinity taken from the tail type.
pub fn levy_ratio(spec: &ProcessSpec, r: f64, big_r: f64) -> Result<f64> {
    need(0.0 < r && r < big_r, "the Lévy ratio needs 0 < r < R")?;
    let tail = match spec.nu.tail_kind() {
        TailKind::PowerLaw { .. } => 1.0,
        TailKind::Exponential { rate } => (2.0 * rate * r).exp(),
        TailKind::Compact { radius } => {
            return Err(Error::UnboundedLevyRatio(format!("ν vanishes beyond {radius}")));
        }
        TailKind::Vanishing => return Err(Error::UnboundedLevyRatio("ν ≡ 0".into())),
    };
    let mut sup = tail;
    let n = 400;
    for i in 0..=n {
        let s = big_r * (1.0 + 1e-12) * (1e6f64).powf(i as f64 / n as f64);
        let top = spec.nu.ln_eval(s + r);
        if top == f64::NEG_INFINITY {
            return Err(Error::UnboundedLevyRatio(format!("ν({}) = 0", s + r)));
        }
        sup = sup.max((spec.nu.ln_eval(s - r) - top).exp());
    }
    Ok(sup)
}

/// Constants entering the boundary Harnack inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BhiConstants {
    pub c_levy: f64,
    /// (R/(R − r))²K(R).
    pub rho_bound: f64,
    /// K(s − r)/((s − r)^d(K+L)(R)²) at s = (r + R)/2.
    pub c_green: f64,
    /// 1/(K+L)(r).
    pub c_exit: f64,
    /// (R/r)^d (R/(R−r))⁴ C̃³ K(2R)/(R^dν(2R)).
    pub c_bhi: f64,
}

pub fn bhi_constants(spec: &ProcessSpec, r: f64, big_r: f64) -> Result<BhiConstants> {
    need(0.0 < r && r < big_r, "constants need 0 < r < R")?;
    let rt = |t: f64| (1.0 - t) * r + t * big_r;
    let c_levy = levy_ratio(spec, r, big_r)?;
    let c_tilde = levy_ratio(spec, rt(1.0 / 3.0), rt(2.0 / 3.0))?
        .max(levy_ratio(spec, rt(7.0 / 9.0), rt(8.0 / 9.0))?)
        .max(levy_ratio(spec, big_r, rt(4.0 / 3.0))?);
    let at_big = pruitt(spec, big_r)?;
    let at_2big = pruitt(spec, 2.0 * big_r)?;
    let gap = 0.5 * (big_r - r);
    let at_gap = pruitt(spec, gap)?;
    let nu_2big = spec.nu.eval(2.0 * big_r);
    if !(nu_2big > 0.0) {
        return Err(Error::UnboundedLevyRatio(format!("ν(2R) = 0 at R = {big_r}")));
    }
    Ok(BhiConstants {
        c_levy,
        rho_bound: (big_r / (big_r - r)).powi(2) * at_big.k,
        c_green: at_gap.k / (powd(spec, gap) * at_big.sum * at_big.sum),
        c_exit: 1.0 / pruitt(spec, r)?.sum,
        c_bhi: (big_r / r).powi(spec.d as i32) * (big_r / (big_r - r)).powi(4) * c_tilde.powi(3) * at_2big.k
            / (powd(spec, big_r) * nu_2big),
    })
}

/// Ordering verdict of a sandwich.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichStatus {
    Ok,
    /// The lower shape vanishes, so only the upper side is checked.
    Degenerate,
}

impl fmt::Display for SandwichStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SandwichStatus::Ok => "ok",
            SandwichStatus::Degenerate => "degenerate",
        })
    }
}

/// A Monte Carlo estimate placed between two bound shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichReport {
    pub theorem: String,
    pub context: String,
    pub lower_expr: Option<f64>,
    pub estimate: Estimate,
    pub upper_expr: Option<f64>,
    /// estimate / lower.
    pub implied_c_lower: Option<f64>,
    /// upper / estimate.
    pub implied_c_upper: Option<f64>,
    pub status: SandwichStatus,
}

impl SandwichReport {
    /// The larger of the two implied constants (each at least 1 when read as c ≥ ratio and c ≥ 1/ratio).
    pub fn worst_constant(&self) -> f64 {
        let side = |c: Option<f64>| c.map(|c| c.max(1.0 / c)).unwrap_or(1.0);
        side(self.implied_c_lower).max(side(self.implied_c_upper))
    }
}

/// Checks lower ≤ c_budget·(estimate + 3σ) and estimate − 3σ ≤ c_budget·upper.
pub fn sandwich(theorem: &str, context: &str, bounds: BoundPair, estimate: Estimate, c_budget: f64) -> Result<SandwichReport> {
    let hi = estimate.mean + 3.0 * estimate.stderr;
    let lo = estimate.mean - 3.0 * estimate.stderr;
    let lower = bounds.lower.filter(|l| *l > 0.0);
    let status = if lower.is_some() { SandwichStatus::Ok } else { SandwichStatus::Degenerate };
    if let Some(l) = lower {
        if l > c_budget * hi {
            return Err(Error::OrderingViolated {
                theorem: theorem.into(),
                detail: format!("{context}: lower {l:.6e} exceeds {c_budget}·(estimate + 3σ) = {:.6e}", c_budget * hi),
            });
        }
    }
    if let Some(u) = bounds.upper {
        if lo > c_budget * u {
            return Err(Error::OrderingViolated {
                theorem: theorem.into(),
                detail: format!("{context}: estimate − 3σ = {lo:.6e} exceeds {c_budget}·upper = {:.6e}", c_budget * u),
            });
        }
    }
    let mean = estimate.mean;
    Ok(SandwichReport {
        theorem: theorem.into(),
        context: context.into(),
        lower_expr: bounds.lower,
        implied_c_lower: lower.map(|l| mean / l),
        implied_c_upper: bounds.upper.map(|u| u / mean),
        upper_expr: bounds.upper,
        estimate,
        status,
    })
}

/// K, L at one radius, re-exported for report tables.
pub fn pruitt_row(spec: &ProcessSpec, r: f64) -> Result<PruittValues> {
    pruitt(spec, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{make_family, Family};
    use std::f64::consts::PI;

    fn stable1() -> ProcessSpec {
        make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs()
    }

    #[test]
    fn stable_closed_forms() {
        let s = stable1();
        let ret = ret_bounds(&s, 1.0, 2.0).unwrap();
        assert!(close(ret.upper.unwrap(), 1.0 / 8.0));
        assert!(close(ret.lower.unwrap(), 1.0 / (32.0 * PI)));
        let pot = pot_bounds(&s, 1.0).unwrap();
        assert!(close(pot.upper.unwrap(), 1.0 / (16.0 * PI)));
        assert!(close(pot.lower.unwrap(), 1.0 / (64.0 * PI * PI)));
        let sup = sup_bounds(&s, 1.0, 0.0).unwrap();
        assert!(close(sup.upper_coeff, 0.5));
        assert!(close(sup.lower_coeff, 1.0 / (8.0 * PI)));
    }

    #[test]
    fn brownian_lower_shapes_vanish() {
        let b = make_family(3, Family::Brownian { sigma2: 1.0 }).unwrap();
        assert_eq!(ret_bounds(&b, 1.0, 2.0).unwrap().lower, Some(0.0));
        let x = 1.5;
        let up = pot_bounds(&b, x).unwrap().upper.unwrap();
        assert!(close(up, 3.0 / x.powi(5) * (x * x / 3.0).powi(2)));
    }

    #[test]
    fn levy_ratio_of_power_law_sits_at_r() {
        let s = stable1();
        let (r, big) = (0.5, 2.0);
        let c = levy_ratio(&s, r, big).unwrap();
        assert!((c / ((big + r) / (big - r)).powi(4) - 1.0).abs() < 1e-9);
        let log = make_family(3, Family::LogKernel).unwrap();
        assert!(matches!(levy_ratio(&log, 0.2, 1.0), Err(Error::UnboundedLevyRatio(_))));
    }

    #[test]
    fn halfspace_factor_at_equal_depths() {
        let s = stable1();
        let v = halfspace_estimate(&s, &[0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
        let p = pruitt(&s, 1.0).unwrap();
        assert!(close(v, 0.5 * p.k / (p.sum * p.sum)));
    }

    #[test]
    fn sandwich_identity_and_violation() {
        let est = Estimate {
            mean: 2.0,
            stderr: 0.0,
            n: 10,
            seed: 0,
            scheme: Default::default(),
            censored: 0.0,
            killed: 0.0,
            flagged: false,
        };
        let r = sandwich("t", "c", BoundPair { lower: Some(2.0), upper: Some(2.0) }, est.clone(), 1.0).unwrap();
        assert_eq!(r.implied_c_lower, Some(1.0));
        assert_eq!(r.implied_c_upper, Some(1.0));
        let bad = sandwich("t", "c", BoundPair { lower: Some(1.0), upper: Some(0.1) }, est.clone(), 10.0);
        assert!(matches!(bad, Err(Error::OrderingViolated { .. })));
        let deg = sandwich("t", "c", BoundPair { lower: Some(0.0), upper: Some(3.0) }, est, 1.0).unwrap();
        assert_eq!(deg.status, SandwichStatus::Degenerate);
    }
}
