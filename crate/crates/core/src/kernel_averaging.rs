//! Averaging a family of monotone radial kernels π_s, s ∈ [q, r], into one
//! whose density is flat on [q, r], and the regularization kernel P̄_{q,r}
//! built from exit laws of balls.

use std::sync::Arc;

use crate::bound_engine::sup_bounds;
use crate::error::{Error, Result};
use crate::monte_carlo::{exit_radii_ball, ExitRadius, SimScheme};
use crate::process_model::ProcessSpec;
use crate::special::{ball_volume, sphere_area};

/// Density part of a radial kernel, supported on (start, ∞).
#[derive(Clone)]
pub enum RadialDensity {
    Zero,
    Constant(f64),
    /// Piecewise constant: `values[i]` on [edges[i], edges[i+1]), zero past the last edge.
    Steps { edges: Vec<f64>, values: Vec<f64> },
    /// Any integrable non-increasing profile, with its antiderivative.
    Profile { density: Arc<dyn Fn(f64) -> f64 + Send + Sync>, primitive: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl std::fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Steps { edges, values } => f.debug_struct("Steps").field("edges", edges).field("values", values).finish(),
            Self::Profile { .. } => write!(f, "Profile"),
        }
    }
}

/// A measure on [start, ∞): an atom at `start` plus a density on (start, ∞).
#[derive(Clone, Debug)]
pub struct RadialKernel {
    pub start: f64,
    pub atom: f64,
    pub density: RadialDensity,
}

impl RadialKernel {
    pub fn flat(start: f64) -> Self {
        Self { start, atom: 0.0, density: RadialDensity::Constant(1.0) }
    }

    pub fn atom(start: f64) -> Self {
        Self { start, atom: 1.0, density: RadialDensity::Zero }
    }

    /// Density at s > start.
    pub fn density(&self, s: f64) -> f64 {
        if s <= self.start {
            return 0.0;
        }
        match &self.density {
            RadialDensity::Zero => 0.0,
            RadialDensity::Constant(c) => *c,
            RadialDensity::Steps { edges, values } => {
                if s < edges[0] || s >= edges[edges.len() - 1] {
                    0.0
                } else {
                    values[edges.partition_point(|&e| e <= s) - 1]
                }
            }
            RadialDensity::Profile { density, .. } => density(s),
        }
    }

    /// Mass of [a, b).
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let atom = if self.start >= a && self.start < b { self.atom } else { 0.0 };
        let lo = a.max(self.start);
        if b <= lo {
            return atom;
        }
        let body = match &self.density {
            RadialDensity::Zero => 0.0,
            RadialDensity::Constant(c) => c * (b - lo),
            RadialDensity::Steps { edges, values } => values
                .iter()
                .enumerate()
                .map(|(i, v)| v * (b.min(edges[i + 1]) - lo.max(edges[i])).max(0.0))
                .sum(),
            RadialDensity::Profile { primitive, .. } => primitive(b) - primitive(lo),
        };
        atom + body
    }

    /// Density non-increasing on the sampled points of (start, hi].
    pub fn is_non_increasing(&self, hi: f64, tol: f64) -> bool {
        let pts: Vec<f64> = match &self.density {
            RadialDensity::Steps { edges, .. } => edges.iter().copied().filter(|&e| e > self.start && e < hi).collect(),
            _ => (1..=200).map(|i| self.start + (hi - self.start) * i as f64 / 200.0).collect(),
        };
        pts.windows(2).all(|w| self.density(w[1]) <= self.density(w[0]) + tol)
    }
}

/// Kernels π_{s_j} indexed by the nodes of a uniform partition of [q, top].
#[derive(Clone, Debug)]
pub struct KernelFamily {
    pub q: f64,
    pub top: f64,
    pub kernels: Vec<RadialKernel>,
}

impl KernelFamily {
    /// Kernel j must start inside I_j = [q + jh, q + (j+1)h).
    pub fn new(q: f64, top: f64, kernels: Vec<RadialKernel>) -> Result<Self> {
        if !(0.0 <= q && q < top && top.is_finite()) {
            return Err(Error::DomainError(format!("need 0 ≤ q < top, got [{q}, {top}]")));
        }
        if kernels.is_empty() {
            return Err(Error::ParamOutOfRange { name: "n", value: 0.0 });
        }
        let mut fam = Self { q, top, kernels };
        for j in 0..fam.n() {
            let (a, b) = fam.interval(j);
            let k = &mut fam.kernels[j];
            if !(k.start >= a - 1e-12 * top && k.start < b) {
                return Err(Error::DomainError(format!("kernel {j} starts at {} outside [{a}, {b})", k.start)));
            }
            k.start = k.start.max(a);
        }
        Ok(fam)
    }

    /// Kernels at the left endpoints s_j = q + j(top − q)/n.
    pub fn from_fn(q: f64, top: f64, n: usize, f: impl Fn(f64) -> RadialKernel) -> Result<Self> {
        let h = (top - q) / n.max(1) as f64;
        Self::new(q, top, (0..n).map(|j| f(q + j as f64 * h)).collect())
    }

    pub fn n(&self) -> usize {
        self.kernels.len()
    }

    pub fn step(&self) -> f64 {
        (self.top - self.q) / self.n() as f64
    }

    pub fn interval(&self, j: usize) -> (f64, f64) {
        let h = self.step();
        let b = if j + 1 == self.n() { self.top } else { self.q + (j + 1) as f64 * h };
        (self.q + j as f64 * h, b)
    }
}

/// μ = Σ α_j δ_{s_j} and π̄ = Σ α_j π_{s_j}.
#[derive(Clone, Debug)]
pub struct AveragedKernel {
    pub family: KernelFamily,
    pub weights: Vec<f64>,
    /// (s, π̄(s)) on [q, 4·top].
    pub table: Vec<(f64, f64)>,
    /// 1/Σα_j, set when the kernels are radial parts of probability measures.
    pub c_reg: Option<f64>,
}

impl AveragedKernel {
    pub fn density(&self, s: f64) -> f64 {
        self.weights.iter().zip(&self.family.kernels).map(|(a, k)| a * k.density(s)).sum()
    }

    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.weights.iter().zip(&self.family.kernels).map(|(w, k)| w * k.mass(a, b)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Solves (α₀π₀ + … + α_jπ_{s_j})(I_j) = |I_j| by forward substitution.
pub fn dyadic_average(family: KernelFamily) -> Result<AveragedKernel> {
    let n = family.n();
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let (a, b) = family.interval(j);
        let diag = family.kernels[j].mass(a, b);
        if !(diag > 0.0) {
            return Err(Error::ZeroDiagonal(j));
        }
        let prior: f64 = weights.iter().zip(&family.kernels).map(|(w, k): (&f64, _)| w * k.mass(a, b)).sum();
        let rest = (b - a) - prior;
        if rest < -1e-12 * (b - a) {
            return Err(Error::NegativeWeight { j, value: rest / diag });
        }
        weights.push(rest.max(0.0) / diag);
    }
    let mut avg = AveragedKernel { family, weights, table: Vec::new(), c_reg: None };
    let (q, top) = (avg.family.q, avg.family.top);
    let mut grid: Vec<f64> = (0..64).map(|i| q + (top - q) * (i as f64 + 0.5) / 64.0).collect();
    grid.extend((0..64).map(|i| top * 4f64.powf(i as f64 / 63.0)));
    avg.table = grid.into_iter().map(|s| (s, avg.density(s))).collect();
    Ok(avg)
}

/// P̄_{q,r} from Monte Carlo exit laws, with its constant and the analytic window.
#[derive(Clone, Debug)]
pub struct Regularization {
    pub q: f64,
    pub r: f64,
    pub kernel: AveragedKernel,
    /// Density of P̄ on B_r∖B_q.
    pub c_reg: f64,
    /// (ν(r)/(K+L)(r), K(r)/(r^d(K+L)(r))).
    pub window: (f64, f64),
    /// Smallest c with window.0/c ≤ C_reg ≤ c·window.1.
    pub implied_c: f64,
    pub paths: u64,
    samples: Vec<Vec<ExitRadius>>,
    d: usize,
}

impl Regularization {
    /// c·Σα_j E[f(|X^{(j)}|); |X^{(j)}| ≥ r] with its standard error. Nodes share
    /// random numbers, so the sum is formed path by path.
    pub fn outer_integral(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let m = self.paths as usize;
        let mut acc = vec![0.0; m];
        for (a, sample) in self.kernel.weights.iter().zip(&self.samples) {
            for (slot, e) in acc.iter_mut().zip(sample) {
                if let ExitRadius::Jump(t) = *e {
                    if t >= self.r {
                        *slot += self.c_reg * a * f(t);
                    }
                }
            }
        }
        let mean = acc.iter().sum::<f64>() / m as f64;
        let var = acc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        (mean, (var / m as f64).sqrt())
    }

    /// C_reg·|B_r∖B_q| plus the mass of P̄ outside B_r.
    pub fn total_mass(&self) -> (f64, f64) {
        let inner = self.c_reg * ball_volume(self.d) * (self.r.powi(self.d as i32) - self.q.powi(self.d as i32));
        let (outer, err) = self.outer_integral(|_| 1.0);
        (inner + outer, err)
    }

    /// Profile of P̄ at |z| = rho ≥ r.
    pub fn outer_density(&self, rho: f64) -> f64 {
        self.c_reg * self.kernel.density(rho)
    }
}

/// Radial part of the empirical exit law of B_s: steps on the partition
/// intervals inside [s, top), then log-spaced shells out to 10³·top.
fn empirical_kernel(d: usize, s: f64, fam_edges: &[f64], tail: &[f64], sample: &[ExitRadius]) -> RadialKernel {
    let mut edges = vec![s];
    edges.extend(fam_edges.iter().copied().filter(|&e| e > s));
    edges.extend(tail.iter().copied().skip(1));
    let omega = sphere_area(d);
    let n = sample.len() as f64;
    let mut mass = vec![0.0; edges.len() - 1];
    let mut atom = 0.0;
    for e in sample {
        match *e {
            ExitRadius::Sphere => atom += 1.0 / (n * omega * s.powi(d as i32 - 1)),
            ExitRadius::Jump(t) => {
                if t >= edges[0] && t < edges[edges.len() - 1] {
                    mass[edges.partition_point(|&x| x <= t) - 1] += 1.0 / (n * omega * t.powi(d as i32 - 1));
                }
            }
            ExitRadius::Lost => {}
        }
    }
    let values = mass.iter().enumerate().map(|(i, m)| m / (edges[i + 1] - edges[i])).collect();
    RadialKernel { start: s, atom, density: RadialDensity::Steps { edges, values } }
}

/// Builds P̄_{q,r} from `paths` exit positions per node; every node reuses `seed`.
/// With q = 0 the first node sits at h/2 since the exit law of B_0 is degenerate.
pub fn regularization_kernel(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    q: f64,
    r: f64,
    n: usize,
    paths: u64,
    seed: u64,
) -> Result<Regularization> {
    if !(0.0 <= q && q < r) {
        return Err(Error::DomainError(format!("need 0 ≤ q < r, got q = {q}, r = {r}")));
    }
    if n == 0 {
        return Err(Error::ParamOutOfRange { name: "n", value: 0.0 });
    }
    let d = spec.d;
    let h = (r - q) / n as f64;
    let nodes: Vec<f64> = (0..n).map(|j| if j == 0 && q == 0.0 { 0.5 * h } else { q + j as f64 * h }).collect();
    let fam_edges: Vec<f64> = (1..=n).map(|j| if j == n { r } else { q + j as f64 * h }).collect();
    let tail: Vec<f64> = (0..=60).map(|i| r * 1e3f64.powf(i as f64 / 60.0)).collect();
    let samples = nodes.iter().map(|&s| exit_radii_ball(spec, scheme, s, paths, seed)).collect::<Result<Vec<_>>>()?;
    let kernels = nodes.iter().zip(&samples).map(|(&s, smp)| empirical_kernel(d, s, &fam_edges, &tail, smp)).collect();
    let mut kernel = dyadic_average(KernelFamily::new(q, r, kernels)?)?;
    let c_reg = 1.0 / kernel.total_weight();
    kernel.c_reg = Some(c_reg);
    let window = sup_bounds(spec, r, q)?.c_reg_window;
    let implied_c = (c_reg / window.1).max(window.0 / c_reg).max(1.0);
    Ok(Regularization { q, r, kernel, c_reg, window, implied_c, paths, samples, d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let flat = dyadic_average(KernelFamily::from_fn(0.0, 1.0, 4, RadialKernel::flat).unwrap()).unwrap();
        assert_eq!(flat.weights, vec![1.0, 0.0, 0.0, 0.0]);
        let atoms = dyadic_average(KernelFamily::from_fn(0.0, 1.0, 4, RadialKernel::atom).unwrap()).unwrap();
        assert_eq!(atoms.weights, vec![0.25; 4]);
        let mixed = KernelFamily::from_fn(0.0, 1.0, 2, |s| RadialKernel { atom: 1.0, ..RadialKernel::flat(s) }).unwrap();
        let w = dyadic_average(mixed).unwrap().weights;
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15 && (w[1] - 2.0 / 9.0).abs() < 1e-15, "{w:?}");
    }

    #[test]
    fn zero_diagonal_is_rejected() {
        let fam = KernelFamily::from_fn(0.0, 1.0, 2, |s| RadialKernel { start: s, atom: 0.0, density: RadialDensity::Zero }).unwrap();
        assert_eq!(dyadic_average(fam).unwrap_err(), Error::ZeroDiagonal(0));
    }

    #[test]
    fn increasing_density_gives_negative_weight() {
        let fam = KernelFamily::from_fn(0.0, 1.0, 4, |s| RadialKernel {
            start: s,
            atom: 0.0,
            density: RadialDensity::Steps { edges: vec![s, s + 0.25, s + 0.5], values: vec![1.0, 3.0] },
        })
        .unwrap();
        assert!(matches!(dyadic_average(fam), Err(Error::NegativeWeight { j: 1, .. })));
    }
}
