//! Matuszewska indices on finite grids, the scaling condition, Karamata-type
//! integral comparisons and the index relations between Ψ, K, L and ν.

use std::fmt;

use crate::error::{Error, Result};
use crate::process_model::ProcessSpec;
use crate::quad::{self, QuadratureConfig};
use crate::radial_calculus::{pruitt_k, pruitt_l, psi};

/// Which end of the half-line an index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Zero,
    Infinity,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Zero => "zero",
            Regime::Infinity => "infinity",
        }
    }

    /// Default grid [lo, hi] spanning `decades` decades away from 1.
    pub fn default_grid(self, decades: f64) -> (f64, f64) {
        match self {
            Regime::Zero => (10f64.powf(-6.0 - decades), 1e-6),
            Regime::Infinity => (1e6, 10f64.powf(6.0 + decades)),
        }
    }
}

/// Slopes steeper than this are reported as unbounded.
pub const UNBOUNDED_SLOPE: f64 = 100.0;

/// Lower and upper Matuszewska index estimates with constants realizing
/// A (r₂/r₁)^a ≤ φ(r₂)/φ(r₁) ≤ B (r₂/r₁)^b on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexEstimate {
    pub regime: Regime,
    /// −∞ when unbounded below.
    pub lower_index: f64,
    /// +∞ when unbounded above.
    pub upper_index: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub r0: f64,
}

impl IndexEstimate {
    pub fn lower_bounded(&self) -> bool {
        self.lower_index.is_finite()
    }

    pub fn upper_bounded(&self) -> bool {
        self.upper_index.is_finite()
    }
}

fn fmt_index(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "unbounded below".into()
    } else if v == f64::INFINITY {
        "unbounded above".into()
    } else {
        format!("{v:.6}")
    }
}

impl fmt::Display for IndexEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}, {}]", self.regime.name(), fmt_index(self.lower_index), fmt_index(self.upper_index))
    }
}

/// Indices of φ from its logarithm, given as a function of ln r, on the default grid.
pub fn matuszewska_indices<F: Fn(f64) -> f64>(ln_phi: F, regime: Regime, grid_decades: f64) -> Result<IndexEstimate> {
    let (lo, hi) = regime.default_grid(grid_decades);
    matuszewska_indices_on(ln_phi, regime, lo, hi)
}

/// Indices from all pairs of a dyadic grid in [lo, hi].
pub fn matuszewska_indices_on<F: Fn(f64) -> f64>(ln_phi: F, regime: Regime, lo: f64, hi: f64) -> Result<IndexEstimate> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::DomainError(format!("bad index grid [{lo}, {hi}]")));
    }
    let n = ((hi / lo).log2().floor() as usize).max(1);
    let w: Vec<f64> = (0..=n).map(|i| lo.ln() + i as f64 * std::f64::consts::LN_2).collect();
    let v: Vec<f64> = w.iter().map(|&x| ln_phi(x)).collect();
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::DegenerateProfile(format!("ln φ = {} at r = {:e}", v[i], w[i].exp())));
    }
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in i + 1..=n {
            let slope = (v[j] - v[i]) / (w[j] - w[i]);
            lower = lower.min(slope);
            upper = upper.max(slope);
        }
    }
    if lower < -UNBOUNDED_SLOPE {
        lower = f64::NEG_INFINITY;
    }
    if upper > UNBOUNDED_SLOPE {
        upper = f64::INFINITY;
    }
    // unbounded growth of the slope across the grid also counts as unbounded
    let first = (v[1] - v[0]) / (w[1] - w[0]);
    let last = (v[n] - v[n - 1]) / (w[n] - w[n - 1]);
    let drift = match regime {
        Regime::Infinity => last - first,
        Regime::Zero => first - last,
    };
    if drift.abs() > 10.0 {
        if drift < 0.0 {
            lower = f64::NEG_INFINITY;
        } else {
            upper = f64::INFINITY;
        }
    }
    let r0 = match regime {
        Regime::Zero => hi,
        Regime::Infinity => lo,
    };
    Ok(IndexEstimate { regime, lower_index: lower, upper_index: upper, a_const: 1.0, b_const: 1.0, r0 })
}

/// Outcome of the scaling-condition check ν(r₁)/ν(r₂) ≤ M (r₁/r₂)^{−d−α}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCertificate {
    pub certified: bool,
    pub m: f64,
    pub alpha: f64,
    pub r_inf: f64,
    /// sup over the grid of ν(r₁)/ν(r₂)·(r₁/r₂)^{d+α}, the smallest admissible M.
    pub worst_ratio: f64,
    pub worst_pair: (f64, f64),
}

/// Checks the scaling condition on a 200-point log grid below 2R∞ (six decades).
pub fn certify_scaling(spec: &ProcessSpec, m: f64, alpha: f64, r_inf: f64) -> ScalingCertificate {
    let hi = if r_inf.is_finite() { 2.0 * r_inf } else { 1e6 };
    let lo = if r_inf.is_finite() { hi * 1e-6 } else { 1e-6 };
    let n = 200;
    let w: Vec<f64> = (0..n).map(|i| lo.ln() + (hi / lo).ln() * i as f64 / n as f64).collect();
    let v: Vec<f64> = w.iter().map(|&x| spec.nu.ln_density_at_log(x)).collect();
    let p = spec.d as f64 + alpha;
    let mut worst = f64::NEG_INFINITY;
    let mut pair = (w[0].exp(), w[0].exp());
    for i in 0..n {
        for j in i + 1..n {
            let e = if v[j] == f64::NEG_INFINITY { f64::INFINITY } else { v[i] - v[j] + p * (w[i] - w[j]) };
            if e > worst {
                worst = e;
                pair = (w[i].exp(), w[j].exp());
            }
        }
    }
    let worst_ratio = worst.exp();
    ScalingCertificate { certified: worst_ratio <= m * (1.0 + 1e-12), m, alpha, r_inf, worst_ratio, worst_pair: pair }
}

/// The four one-sided cases of the Karamata-type comparison and its global version.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KaramataCase {
    /// ∫_r^∞, r large.
    UpperTailAtInfinity,
    /// ∫_R^r, r ≥ 2R.
    FromAnchorAtInfinity,
    /// ∫_0^r, r small.
    LowerTailAtZero,
    /// ∫_r^R, r ≤ R/2.
    ToAnchorAtZero,
    /// ∫_0^r for all r.
    Global,
}

/// Ratio of ∫ t^{−s}φ(t)dt/t to r^{−s}φ(r) over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KaramataReport {
    pub case: KaramataCase,
    pub s: f64,
    pub points: Vec<(f64, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest C with ratio ∈ [1/C, C].
    pub c_window: f64,
}

impl KaramataReport {
    pub fn bounded_by(&self, c: f64) -> bool {
        self.c_window.is_finite() && self.c_window <= c
    }
}

/// Evaluates the comparison for `ln_phi` (a function of ln t) at radii `grid`;
/// `anchor` is R for the two anchored cases.
pub fn karamata_check<F: Fn(f64) -> f64>(
    ln_phi: F,
    s: f64,
    case: KaramataCase,
    anchor: f64,
    grid: &[f64],
) -> Result<KaramataReport> {
    let cfg = QuadratureConfig::default().with_rel_tol(1e-10).with_abs_tol(1e-300);
    let mut points = Vec::with_capacity(grid.len());
    for &r in grid {
        let wr = r.ln();
        let base = ln_phi(wr);
        if !base.is_finite() {
            return Err(Error::DegenerateProfile(format!("φ({r:e}) = 0")));
        }
        let g = |w: f64| {
            let e = -s * (w - wr) + ln_phi(w) - base;
            if e.is_nan() { 0.0 } else { e.exp() }
        };
        let decays = |sign: f64| {
            let a = g(wr + sign * 60.0);
            let b = g(wr + sign * 120.0);
            b <= a.max(1e-300) * 0.5 || b == 0.0
        };
        let res = match case {
            KaramataCase::UpperTailAtInfinity => {
                if !decays(1.0) {
                    return Err(Error::DivergentIntegral(format!("upper tail at s = {s}")));
                }
                quad::integrate_upper_tail(g, wr, &cfg)
            }
            KaramataCase::LowerTailAtZero | KaramataCase::Global => {
                if !decays(-1.0) {
                    return Err(Error::DivergentIntegral(format!("lower tail at s = {s}")));
                }
                quad::integrate_lower_tail(g, wr, &cfg)
            }
            KaramataCase::FromAnchorAtInfinity => quad::integrate(g, anchor.ln(), wr, &cfg),
            KaramataCase::ToAnchorAtZero => quad::integrate(g, wr, anchor.ln(), &cfg),
        };
        let v = res.require("karamata integral")?.value;
        points.push((r, v));
    }
    let min_ratio = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_ratio = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let c_window = max_ratio.max(1.0 / min_ratio);
    Ok(KaramataReport { case, s, points, min_ratio, max_ratio, c_window })
}

/// Tolerance for index comparisons.
pub const INDEX_TOLERANCE: f64 = 0.1;

/// One implication between estimated indices.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationCheck {
    pub name: &'static str,
    pub applicable: bool,
    pub holds: bool,
    pub detail: String,
}

/// A row of the index table.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexRow {
    pub quantity: &'static str,
    pub estimate: Option<IndexEstimate>,
}

/// Index estimates for Ψ, K, L, ν and the checks between them.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexRelationsReport {
    pub rows: Vec<IndexRow>,
    pub relations: Vec<RelationCheck>,
    /// max/min of L, K+L and Ψ(1/·) pairwise ratios over r ∈ [1, 10⁶].
    pub comparability_window: Option<f64>,
}

impl IndexRelationsReport {
    pub fn get(&self, quantity: &str, regime: Regime) -> Option<IndexEstimate> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .filter_map(|r| r.estimate)
            .find(|e| e.regime == regime)
    }

    pub fn all_hold(&self) -> bool {
        self.relations.iter().all(|r| !r.applicable || r.holds)
    }
}

fn ln_of(v: Result<f64>) -> f64 {
    match v {
        Ok(x) if x > 0.0 => x.ln(),
        Ok(_) => f64::NEG_INFINITY,
        Err(_) => f64::NAN,
    }
}

/// Estimates the indices on six-decade grids and checks the relations of Ψ with K and L.
pub fn index_relations_report(spec: &ProcessSpec) -> IndexRelationsReport {
    let decades = 6.0;
    let mut rows = Vec::new();
    for regime in [Regime::Zero, Regime::Infinity] {
        let est = matuszewska_indices(|w| ln_of(psi(spec, w.exp())), regime, decades).ok();
        rows.push(IndexRow { quantity: "psi", estimate: est });
        let est = matuszewska_indices(|w| ln_of(pruitt_k(spec, w.exp())), regime, decades).ok();
        rows.push(IndexRow { quantity: "K", estimate: est });
        let est = matuszewska_indices(|w| ln_of(pruitt_l(spec, w.exp())), regime, decades).ok();
        rows.push(IndexRow { quantity: "L", estimate: est });
        let est = matuszewska_indices(|w| spec.nu.ln_density_at_log(w), regime, decades).ok();
        rows.push(IndexRow { quantity: "nu", estimate: est });
    }
    let find = |q: &str, reg: Regime| {
        rows.iter().filter(|r| r.quantity == q).filter_map(|r| r.estimate).find(|e| e.regime == reg)
    };
    let tol = INDEX_TOLERANCE;
    let close = |a: f64, b: f64| (a - b).abs() <= tol || (a.is_infinite() && a == b);
    let mut relations = Vec::new();

    // (a) Ψ upper at zero β ∈ [0,2)  ⇔  L lower at infinity −β
    let psi0 = find("psi", Regime::Zero);
    let psi_inf = find("psi", Regime::Infinity);
    let l_inf = find("L", Regime::Infinity);
    let l_zero = find("L", Regime::Zero);
    let k_inf = find("K", Regime::Infinity);
    let k_zero = find("K", Regime::Zero);
    let nu_inf = find("nu", Regime::Infinity);
    let in_beta = |b: f64| b > -tol && b < 2.0 - tol;
    let in_alpha = |a: f64| a > tol && a < 2.0 + tol;
    relations.push(match (psi0, l_inf) {
        (Some(p), Some(l)) if in_beta(p.upper_index) || in_beta(-l.lower_index) => RelationCheck {
            name: "a",
            applicable: true,
            holds: close(p.upper_index, -l.lower_index),
            detail: format!("psi upper at zero {} vs -L lower at infinity {}", fmt_index(p.upper_index), fmt_index(-l.lower_index)),
        },
        _ => RelationCheck { name: "a", applicable: false, holds: true, detail: "outside range".into() },
    });
    relations.push(match (psi0, k_inf) {
        (Some(p), Some(k)) if in_alpha(p.lower_index) || in_alpha(-k.upper_index) => RelationCheck {
            name: "b",
            applicable: true,
            holds: close(p.lower_index, -k.upper_index),
            detail: format!("psi lower at zero {} vs -K upper at infinity {}", fmt_index(p.lower_index), fmt_index(-k.upper_index)),
        },
        _ => RelationCheck { name: "b", applicable: false, holds: true, detail: "outside range".into() },
    });
    relations.push(match psi_inf {
        Some(p) if in_beta(p.upper_index) => {
            let l = l_zero.map(|l| -l.lower_index).unwrap_or(f64::NAN);
            RelationCheck {
                name: "c",
                applicable: true,
                holds: spec.sigma2 == 0.0 && close(p.upper_index, l),
                detail: format!("psi upper at infinity {} vs -L lower at zero {}, sigma2 = {}", fmt_index(p.upper_index), fmt_index(l), spec.sigma2),
            }
        }
        _ => RelationCheck { name: "c", applicable: false, holds: true, detail: "outside range".into() },
    });
    relations.push(match (psi_inf, k_zero) {
        (Some(p), Some(k)) if in_alpha(p.lower_index) || in_alpha(-k.upper_index) => RelationCheck {
            name: "d",
            applicable: true,
            holds: close(p.lower_index, -k.upper_index),
            detail: format!("psi lower at infinity {} vs -K upper at zero {}", fmt_index(p.lower_index), fmt_index(-k.upper_index)),
        },
        _ => RelationCheck { name: "d", applicable: false, holds: true, detail: "outside range".into() },
    });
    relations.push(match (nu_inf, psi0) {
        (Some(n), Some(p)) if in_beta(-n.lower_index - spec.d as f64) => {
            let beta = -n.lower_index - spec.d as f64;
            RelationCheck {
                name: "nu-a",
                applicable: true,
                holds: p.upper_index <= beta + tol,
                detail: format!("psi upper at zero {} vs beta {beta:.6}", fmt_index(p.upper_index)),
            }
        }
        _ => RelationCheck { name: "nu-a", applicable: false, holds: true, detail: "outside range".into() },
    });

    let comparability_window = relations[0].applicable.then(|| comparability_window(spec)).flatten();
    IndexRelationsReport { rows, relations, comparability_window }
}

/// Largest ratio spread among L, K+L and Ψ(1/r) over r ∈ [1, 10⁶].
pub fn comparability_window(spec: &ProcessSpec) -> Option<f64> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [0.0f64; 2];
    for i in 0..=24 {
        let r = 10f64.powf(i as f64 / 4.0);
        let k = pruitt_k(spec, r).ok()?;
        let l = pruitt_l(spec, r).ok()?;
        let p = psi(spec, 1.0 / r).ok()?;
        let ratios = [l / (k + l), p / (k + l)];
        for j in 0..2 {
            lo[j] = lo[j].min(ratios[j]);
            hi[j] = hi[j].max(ratios[j]);
        }
    }
    let w = (0..2).map(|j| hi[j].max(1.0 / lo[j])).fold(1.0, f64::max);
    w.is_finite().then_some(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{make_family, Family};

    #[test]
    fn exact_power() {
        let e = matuszewska_indices(|w| -4.0 * w, Regime::Infinity, 6.0).unwrap();
        assert!((e.lower_index + 4.0).abs() < 1e-9 && (e.upper_index + 4.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_decay_is_unbounded_below() {
        let e = matuszewska_indices(|w| -w.exp(), Regime::Infinity, 6.0).unwrap();
        assert_eq!(e.lower_index, f64::NEG_INFINITY);
    }

    #[test]
    fn zero_values_are_degenerate() {
        let s = make_family(3, Family::LogKernel).unwrap();
        let r = matuszewska_indices(|w| s.nu.ln_density_at_log(w), Regime::Infinity, 6.0);
        assert!(matches!(r, Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn karamata_exact_case() {
        let grid = [1.0, 10.0, 1e3];
        let r = karamata_check(|w| -2.0 * w, -1.0, KaramataCase::UpperTailAtInfinity, 0.0, &grid).unwrap();
        for (_, v) in r.points {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn karamata_divergence() {
        let r = karamata_check(|w| -2.0 * w, -3.0, KaramataCase::UpperTailAtInfinity, 0.0, &[1.0]);
        assert!(matches!(r, Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn stable_scaling_certificate() {
        let s = make_family(3, Family::Stable { alpha: 1.0, scale: 1.0 }).unwrap();
        let c = certify_scaling(&s, 1.0, 1.0, f64::INFINITY);
        assert!(c.certified);
        assert!((c.worst_ratio - 1.0).abs() < 1e-12);
    }
}
