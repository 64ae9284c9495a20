//! Adaptive Gauss–Kronrod quadrature, log-variable maps for singular heads and
//! power-law tails, and Euler summation of alternating series.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, max_subdivisions: 2000 }
    }
}

impl QuadratureConfig {
    pub const fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Self {
        Self { rel_tol, abs_tol, max_subdivisions }
    }

    pub const fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub const fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_subdivisions > 0) {
            return Err(Error::DomainError("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;

    fn add(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult { value: 0.0, error: 0.0, evaluations: 0, converged: true };

    pub fn scale(self, c: f64) -> QuadResult {
        QuadResult { value: self.value * c, error: self.error * c.abs(), ..self }
    }

    /// Converts a non-converged result into an error.
    pub fn require(self, what: &str) -> Result<QuadResult> {
        if self.converged && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonConvergentQuadrature(format!(
                "{what}: value {} error {} after {} evaluations",
                self.value, self.error, self.evaluations
            )))
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive G7–K15 integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> QuadResult {
    if a == b {
        return QuadResult::ZERO;
    }
    let (v, e) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    let mut splits = 0;
    while err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if splits >= cfg.max_subdivisions || !total.is_finite() {
            return QuadResult { value: total, error: err, evaluations: evals, converged: false };
        }
        let seg = heap.pop().expect("heap is never empty");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            // interval below floating resolution
            heap.push(seg);
            return QuadResult { value: total, error: err, evaluations: evals, converged: false };
        }
        let (v1, e1) = kronrod15(&mut f, seg.a, m);
        let (v2, e2) = kronrod15(&mut f, m, seg.b);
        evals += 30;
        splits += 1;
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: seg.b, value: v2, error: e2 });
    }
    // resum to shed accumulated rounding
    let mut value = 0.0;
    let mut error = 0.0;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    QuadResult { value, error, evaluations: evals, converged: true }
}

/// Integrates over `[a, b]` split at the given interior points.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> QuadResult {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    let mut acc = QuadResult::ZERO;
    for w in pts.windows(2) {
        acc = acc + integrate(&mut f, w[0], w[1], cfg);
    }
    acc
}

/// ∫_{w0}^{∞} g(w) dw through w = w0 + t/(1−t).
pub fn integrate_upper_tail<G: FnMut(f64) -> f64>(mut g: G, w0: f64, cfg: &QuadratureConfig) -> QuadResult {
    integrate(
        |t: f64| {
            let u = 1.0 - t;
            let v = g(w0 + t / u) / (u * u);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        cfg,
    )
}

/// ∫_{−∞}^{w0} g(w) dw through w = w0 − t/(1−t).
pub fn integrate_lower_tail<G: FnMut(f64) -> f64>(mut g: G, w0: f64, cfg: &QuadratureConfig) -> QuadResult {
    integrate(
        |t: f64| {
            let u = 1.0 - t;
            let v = g(w0 - t / u) / (u * u);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        cfg,
    )
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Euler-summed limit of a sequence of partial sums of an alternating series,
/// using the last `depth + 1` sums; returns (limit, error indicator).
pub fn euler_limit(partial: &[f64], depth: usize) -> (f64, f64) {
    let n = partial.len();
    assert!(n >= 2, "need at least two partial sums");
    let m = depth.min(n - 2);
    let run = |s: &[f64]| -> f64 {
        let mut v = s.to_vec();
        while v.len() > 1 {
            for i in 0..v.len() - 1 {
                v[i] = 0.5 * (v[i] + v[i + 1]);
            }
            v.pop();
        }
        v[0]
    };
    let a = run(&partial[n - m - 1..]);
    let b = run(&partial[n - m - 2..n - 1]);
    (a, (a - b).abs())
}
