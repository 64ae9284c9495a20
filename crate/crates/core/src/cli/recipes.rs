//! Experiment recipes shared by the command line and the acceptance suite.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitBall;

use crate::bound_engine::{
    exit_time_bounds, green_ball_bounds, pot_bounds, ret_bounds, sandwich, sup_bounds, BoundPair, SupCoefficients,
};
use crate::error::{Error, Result};
use crate::monte_carlo::{
    exit_time_ball, green_ball_at, green_by_entry, harmonic_eval, harmonic_mean_ball, hit_ball_prob, BoundaryData, Domain, Estimate,
    ShellBins, SimScheme,
};
use crate::monte_carlo::run_batches;
use crate::process_model::{make_family, Family, ProcessSpec, UniformBall};
use crate::special::ball_volume;

/// |B(0, a) ∩ B(c·e₁, b)| in three dimensions.
pub fn lens_volume_3d(a: f64, b: f64, c: f64) -> f64 {
    if c >= a + b {
        0.0
    } else if c <= (a - b).abs() {
        4.0 / 3.0 * PI * a.min(b).powi(3)
    } else {
        PI * (a + b - c).powi(2) * (c * c + 2.0 * c * (a + b) - 3.0 * (a - b).powi(2)) / (12.0 * c)
    }
}

/// Theorems checked by `verify-bounds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// Hitting probability of a ball.
    Ret,
    /// Potential kernel.
    Pot,
    /// Green function of a ball.
    Green,
    /// Mean exit time against 1/(K+L).
    Exit,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::Ret, Theorem::Pot, Theorem::Green, Theorem::Exit];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::Ret => "ret",
            Theorem::Pot => "pot",
            Theorem::Green => "green",
            Theorem::Exit => "exit",
        }
    }

    pub fn parse(s: &str) -> Option<Theorem> {
        Theorem::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// One estimate placed between its bound shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichRow {
    pub theorem: String,
    pub spec: String,
    pub geometry: String,
    pub lower: Option<f64>,
    pub estimate: Estimate,
    pub upper: Option<f64>,
    pub c_lower: Option<f64>,
    pub c_upper: Option<f64>,
    /// ok, degenerate or violated.
    pub status: String,
}

impl SandwichRow {
    fn new(theorem: &str, spec: &ProcessSpec, geometry: String, bounds: BoundPair, estimate: Estimate, c_budget: f64) -> Self {
        let status = match sandwich(theorem, &geometry, bounds, estimate.clone(), c_budget) {
            Ok(rep) => rep.status.to_string(),
            Err(_) => "violated".to_string(),
        };
        let mean = estimate.mean;
        SandwichRow {
            theorem: theorem.into(),
            spec: spec.label().into(),
            geometry,
            lower: bounds.lower,
            upper: bounds.upper,
            c_lower: bounds.lower.filter(|l| *l > 0.0).map(|l| mean / l),
            c_upper: bounds.upper.map(|u| u / mean),
            estimate,
            status,
        }
    }

    /// max(c, 1/c) over both sides.
    pub fn worst_constant(&self) -> f64 {
        let side = |c: Option<f64>| c.map(|c| c.max(1.0 / c)).unwrap_or(1.0);
        side(self.c_lower).max(side(self.c_upper))
    }

    pub fn violated(&self) -> bool {
        self.status == "violated"
    }
}

fn axis(d: usize, i: usize, t: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = t;
    v
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Point pairs (x, y) in B_r: centre to mid-radius, antipodal, orthogonal,
/// both near the boundary and close together, and antipodal near the boundary.
pub fn green_geometries(d: usize, r: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![0.0; d], axis(d, 0, 0.5 * r)),
        (axis(d, 0, 0.5 * r), axis(d, 0, -0.5 * r)),
        (axis(d, 0, 0.5 * r), axis(d, 1.min(d - 1), 0.5 * r)),
        (axis(d, 0, 0.8 * r), axis(d, 0, 0.9 * r)),
        (axis(d, 0, 0.9 * r), axis(d, 0, -0.9 * r)),
    ]
}

/// Occupation density of B(y, ρ) for the process from `x` killed outside B_big, as an estimate.
#[allow(clippy::too_many_arguments)]
fn green_point(spec: &ProcessSpec, scheme: &SimScheme, big: f64, x: &[f64], y: &[f64], rho: f64, n: u64, seed: u64) -> Result<Estimate> {
    let bins = ShellBins::new(vec![0.0, rho])?;
    let g = green_ball_at(spec, scheme, big, x, y, &bins, n, seed)?;
    Ok(Estimate { mean: g.density[0], stderr: g.stderr[0], ..g.total })
}

/// Monte Carlo sandwich rows for one theorem at scale r. Every geometry uses the same seed.
pub fn theorem_rows(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    theorem: Theorem,
    r: f64,
    n: u64,
    seed: u64,
    c_budget: f64,
) -> Result<Vec<SandwichRow>> {
    let d = spec.d;
    let name = theorem.name();
    let mut rows = Vec::new();
    match theorem {
        Theorem::Ret => {
            for m in [2.0, 4.0, 8.0] {
                let x = axis(d, 0, m * r);
                let h = hit_ball_prob(spec, scheme, r, &x, n, seed)?;
                rows.push(SandwichRow::new(name, spec, format!("|x|/r={m}"), ret_bounds(spec, r, m * r)?, h.estimate, c_budget));
            }
        }
        Theorem::Pot => {
            for m in [0.5, 1.0, 2.0] {
                let y = axis(d, 0, m * r);
                let est = green_point(spec, scheme, 50.0 * m * r, &vec![0.0; d], &y, 0.1 * m * r, n, seed)?;
                rows.push(SandwichRow::new(name, spec, format!("|x|/r={m}"), pot_bounds(spec, m * r)?, est, c_budget));
            }
        }
        Theorem::Green => {
            for (i, (x, y)) in green_geometries(d, r).into_iter().enumerate() {
                let rho = 0.1 * dist(&x, &y).min(r - norm(&y));
                let far = dist(&x, &y) > r - norm(&y);
                let est = if far && d == 3 && spec.sigma2 == 0.0 {
                    green_by_entry(spec, scheme, r, &x, &y, rho, n, seed)?
                } else {
                    green_point(spec, scheme, r, &x, &y, rho, n, seed)?
                };
                let geometry = format!("g{}:|x|/r={:.2},|y|/r={:.2},|x-y|/r={:.2}", i + 1, norm(&x) / r, norm(&y) / r, dist(&x, &y) / r);
                rows.push(SandwichRow::new(name, spec, geometry, green_ball_bounds(spec, r, &x, &y)?, est, c_budget));
            }
        }
        Theorem::Exit => {
            let est = exit_time_ball(spec, scheme, r, &vec![0.0; d], n, seed)?;
            rows.push(SandwichRow::new(name, spec, format!("r={r}"), exit_time_bounds(spec, r)?, est, c_budget));
        }
    }
    Ok(rows)
}

/// f(0) for f(x) = P^x(X(τ_{B_r}) ∈ B_ρ) against the local part of the supremum bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SupExperiment {
    pub f0: Estimate,
    /// E f(U) for U uniform on B_r∖B_q.
    pub local_mean: Estimate,
    /// ∫_{B_r∖B_q} f.
    pub local_integral: f64,
    pub local_stderr: f64,
    /// ∫_{ℝ^d∖B_q} f.
    pub full_integral: f64,
    pub coeffs: SupCoefficients,
    /// f(0) / (upper_coeff·∫_{B_r∖B_q} f).
    pub ratio: f64,
    pub ratio_stderr: f64,
}

/// Boundary data 1{|z| < ρ}.
fn ball_data(rho: f64) -> BoundaryData {
    BoundaryData::Exit(Arc::new(move |z: &[f64]| if norm(z) < rho { 1.0 } else { 0.0 }))
}

/// Jump intensity from x into B_ρ∖B_r for a three-dimensional uniform mixture.
fn mixture_intensity(balls: &[UniformBall], r: f64, rho: f64, x: &[f64]) -> f64 {
    let c = norm(x);
    balls.iter().map(|b| b.mass / (ball_volume(3) * b.radius.powi(3)) * (lens_volume_3d(rho, b.radius, c) - lens_volume_3d(r, b.radius, c))).sum()
}

fn uniform_in_ball(center: &[f64; 3], radius: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let u: [f64; 3] = rng.sample(UnitBall);
    [center[0] + radius * u[0], center[1] + radius * u[1], center[2] + radius * u[2]]
}

/// P^x(X(τ_{B_r}) ∈ B_ρ) averaged over the start law, for a pure compound Poisson
/// uniform mixture in d = 3. Every jump is drawn conditioned on staying in B_r and the
/// path weight is multiplied by the probability of doing so, so no path is lost to
/// rare survival. Each visit contributes weight·k(x)/total rate.
fn mixture_exit_mass(
    balls: &[UniformBall],
    scheme: &SimScheme,
    r: f64,
    rho: f64,
    start: impl Fn(&mut ChaCha8Rng) -> [f64; 3] + Sync + Send,
    n: u64,
    seed: u64,
) -> Estimate {
    let total: f64 = balls.iter().map(|b| b.mass).sum();
    let vol = ball_volume(3);
    let sums = run_batches(n, seed, scheme, |rng, count| {
        let (mut s, mut s2) = (0.0, 0.0);
        let mut stay = vec![0.0; balls.len()];
        for _ in 0..count {
            let mut x = start(rng);
            let (mut w, mut acc) = (1.0, 0.0);
            while w > 1e-18 {
                acc += w * mixture_intensity(balls, r, rho, &x) / total;
                let c = norm(&x);
                for (p, b) in stay.iter_mut().zip(balls) {
                    *p = b.mass * lens_volume_3d(r, b.radius, c) / (vol * b.radius.powi(3));
                }
                let survive: f64 = stay.iter().sum();
                if survive <= 0.0 {
                    break;
                }
                w *= survive / total;
                let mut u = rng.random::<f64>() * survive;
                let i = stay.iter().position(|p| {
                    u -= p;
                    u < 0.0
                });
                let b = balls[i.unwrap_or(balls.len() - 1)];
                x = if b.radius <= r {
                    loop {
                        let y = uniform_in_ball(&x, b.radius, rng);
                        if norm(&y) < r {
                            break y;
                        }
                    }
                } else {
                    loop {
                        let y = uniform_in_ball(&[0.0; 3], r, rng);
                        if dist(&y, &x) < b.radius {
                            break y;
                        }
                    }
                };
            }
            s += acc;
            s2 += acc * acc;
        }
        (s, s2)
    });
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Estimate {
        mean,
        stderr: (var / nf).sqrt(),
        n,
        seed,
        scheme: scheme.clone(),
        censored: 0.0,
        killed: 0.0,
        flagged: false,
    }
}

pub fn sup_experiment(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    q: f64,
    r: f64,
    rho: f64,
    n: u64,
    seed: u64,
) -> Result<SupExperiment> {
    if !(0.0 <= q && q < r && r < rho) {
        return Err(Error::DomainError(format!("need 0 ≤ q < r < ρ, got {q}, {r}, {rho}")));
    }
    let d = spec.d;
    let (f0, local_mean) = match spec.nu.uniform_balls() {
        Some(balls) if d == 3 && spec.sigma2 == 0.0 => {
            let f0 = mixture_exit_mass(balls, scheme, r, rho, |_| [0.0; 3], n, seed);
            let shell = move |rng: &mut ChaCha8Rng| loop {
                let y = uniform_in_ball(&[0.0; 3], r, rng);
                if norm(&y) >= q {
                    break y;
                }
            };
            (f0, mixture_exit_mass(balls, scheme, r, rho, shell, n, seed.wrapping_add(1)))
        }
        _ => {
            let data = ball_data(rho);
            let f0 = harmonic_eval(spec, scheme, &Domain::ball(d, r), &data, &vec![0.0; d], n, seed)?;
            (f0, harmonic_mean_ball(spec, scheme, r, q, &data, n, seed.wrapping_add(1))?)
        }
    };
    let shell = ball_volume(d) * (r.powi(d as i32) - q.powi(d as i32));
    let local_integral = shell * local_mean.mean;
    let local_stderr = shell * local_mean.stderr;
    let full_integral = local_integral + ball_volume(d) * (rho.powi(d as i32) - r.powi(d as i32));
    let coeffs = sup_bounds(spec, r, q)?;
    let ratio = f0.mean / (coeffs.upper_coeff * local_integral);
    let ratio_stderr = ratio * (f0.stderr / f0.mean).hypot(local_stderr / local_integral);
    Ok(SupExperiment { f0, local_mean, local_integral, local_stderr, full_integral, coeffs, ratio, ratio_stderr })
}

/// The two-ball compound Poisson process with R = λ³ in d = 3 and its supremum experiment
/// for f(x) = P^x(X(τ_{B_2}) ∈ B_3), q = 1.
pub fn sup_counterexample(scheme: &SimScheme, lambda: f64, n: u64, seed: u64) -> Result<SupExperiment> {
    let spec = make_family(3, Family::TwoUniformCp { lambda, big_r: lambda.powi(3) })?;
    sup_experiment(&spec, scheme, 1.0, 2.0, 3.0, n, seed)
}

/// f_r(±x_r) for f_r(x) = P^x(X(τ_{B_{2r}}) ∈ {z_d > 1}) and ν(z) = |z|^{−d}1{|z| < 1}, d = 3.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnackExperiment {
    pub r: f64,
    pub plus: Estimate,
    pub minus: Estimate,
    /// f_r(−x_r)/f_r(x_r).
    pub ratio: f64,
    pub ratio_stderr: f64,
}

pub fn harnack_counterexample(scheme: &SimScheme, r: f64, n: u64, seed: u64) -> Result<HarnackExperiment> {
    if !(0.0 < r && r < 0.25) {
        return Err(Error::DomainError(format!("need 0 < r < 1/4, got {r}")));
    }
    let spec = make_family(3, Family::LogKernel)?;
    // ∫_{z_3 > 1} ν(z − y)dz = 2π(ln(1/h) − 1 + h) with h = 1 − y_3.
    let data = BoundaryData::JumpIntensity(Arc::new(|y: &[f64]| {
        let h = 1.0 - y[2];
        if h >= 1.0 { 0.0 } else { 2.0 * PI * (-h.ln() - 1.0 + h) }
    }));
    let domain = Domain::ball(3, 2.0 * r);
    let plus = harmonic_eval(&spec, scheme, &domain, &data, &[0.0, 0.0, r], n, seed)?;
    let minus = harmonic_eval(&spec, scheme, &domain, &data, &[0.0, 0.0, -r], n, seed.wrapping_add(1))?;
    let ratio = minus.mean / plus.mean;
    let ratio_stderr = ratio * (minus.stderr / minus.mean).hypot(plus.stderr / plus.mean);
    Ok(HarnackExperiment { r, plus, minus, ratio, ratio_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_limits() {
        let v1 = 4.0 / 3.0 * PI;
        assert_eq!(lens_volume_3d(1.0, 2.0, 0.5), v1);
        assert_eq!(lens_volume_3d(1.0, 1.0, 2.0), 0.0);
        assert!((lens_volume_3d(1.0, 1.0, 1e-9) - v1).abs() < 1e-6);
        // two unit balls at distance 1: 5π/12
        assert!((lens_volume_3d(1.0, 1.0, 1.0) - 5.0 * PI / 12.0).abs() < 1e-14);
    }
}
