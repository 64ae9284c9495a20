//! Path simulation and Monte Carlo estimators: exit times, hitting
//! probabilities, Green functions, exit distributions and harmonic functions.
//!
//! Paths are split into fixed-size batches. Batch `i` draws from the ChaCha8
//! stream `i` of the user seed and batch results are reduced in index order,
//! so estimates do not depend on how batches are spread over threads.

mod domain;
mod engine;
mod jumps;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

pub use domain::{Domain, IndicatorFn, Region, MAX_DIM};
pub use jumps::{mixture_quantile, JumpLaw};

use crate::error::{Error, Result};
use crate::exec::{map_batches, Execution};
use crate::process_model::ProcessSpec;
use crate::radial_calculus::pruitt;
use crate::special::ball_volume;
use domain::{to_point, Point};
use engine::{direction, EndKind, Engine, Observer, PathEnd};

/// Simulation parameters.
///
/// With `epsilon` and `dt` unset the scheme is adaptive: at distance ℓ from the
/// boundary (or from an observed region) the cutoff is about `adapt·ℓ` and the
/// diffusive part of a step has standard deviation about `step·ℓ` per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SimScheme {
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
    pub adapt: f64,
    pub step: f64,
    /// Smallest resolved length, relative to the problem scale.
    pub resolution_floor: f64,
    pub horizon: f64,
    pub outer_kill_radius: Option<f64>,
    pub bridge_correction: bool,
    pub batch_size: u64,
    pub execution: Execution,
}

impl Default for SimScheme {
    fn default() -> Self {
        Self {
            epsilon: None,
            dt: None,
            adapt: 0.1,
            step: 0.3,
            resolution_floor: 1e-4,
            horizon: 1e6,
            outer_kill_radius: None,
            bridge_correction: true,
            batch_size: 1000,
            execution: Execution::default(),
        }
    }
}

impl SimScheme {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && !v.is_nan() { Ok(()) } else { Err(Error::ParamOutOfRange { name, value: v }) }
        };
        if let Some(e) = self.epsilon {
            pos("epsilon", e)?;
        }
        if let Some(dt) = self.dt {
            pos("dt", dt)?;
        }
        if let Some(k) = self.outer_kill_radius {
            pos("outer_kill_radius", k)?;
        }
        pos("adapt", self.adapt)?;
        pos("step", self.step)?;
        pos("resolution_floor", self.resolution_floor)?;
        pos("horizon", self.horizon)?;
        if self.batch_size == 0 {
            return Err(Error::ParamOutOfRange { name: "batch_size", value: 0.0 });
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    pub scheme: SimScheme,
    /// Fraction of paths stopped by the horizon.
    pub censored: f64,
    /// Fraction of paths stopped at a truncation boundary.
    pub killed: f64,
    /// Set when more than 0.1% of paths were censored.
    pub flagged: bool,
}

impl Estimate {
    fn from_stats(s: &Welford, censored: u64, killed: u64, seed: u64, scheme: &SimScheme) -> Self {
        let n = s.n.max(1) as f64;
        let censored = censored as f64 / n;
        Estimate {
            mean: s.mean,
            stderr: if s.n > 1 { (s.m2 / (s.n - 1) as f64 / n).sqrt() } else { f64::INFINITY },
            n: s.n,
            seed,
            scheme: scheme.clone(),
            censored,
            killed: killed as f64 / n,
            flagged: censored > 1e-3,
        }
    }

    /// Distance to `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value) / self.stderr
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        self.mean += delta * o.n as f64 / n as f64;
        self.m2 += o.m2 + delta * delta * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }
}

/// Per-bin sums over paths.
#[derive(Clone, Debug)]
struct BinStats {
    n: u64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl BinStats {
    fn new(k: usize) -> Self {
        Self { n: 0, sum: vec![0.0; k], sumsq: vec![0.0; k] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    fn merge(&mut self, o: &BinStats) {
        self.n += o.n;
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sumsq[i] += o.sumsq[i];
        }
    }

    fn mean_stderr(&self, i: usize) -> (f64, f64) {
        let n = self.n as f64;
        let m = self.sum[i] / n;
        let var = ((self.sumsq[i] - n * m * m) / (n - 1.0)).max(0.0);
        (m, (var / n).sqrt())
    }
}

/// Generator for batch `stream` of `seed`.
pub fn batch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn run_batches<T: Send, F>(n: u64, seed: u64, scheme: &SimScheme, f: F) -> Vec<T>
where
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync + Send,
{
    let b = scheme.batch_size;
    map_batches(n.div_ceil(b), scheme.execution, |i| {
        let mut rng = batch_rng(seed, i);
        f(&mut rng, b.min(n - i * b))
    })
}

/// Bridge point at a uniform time inside a Gaussian segment.
fn bridge_point(x: &[f64], y: &[f64], dt: f64, v: f64, rng: &mut ChaCha8Rng, out: &mut Point) {
    let u = rng.random::<f64>();
    let sd = (v * dt * u * (1.0 - u)).sqrt();
    for i in 0..x.len() {
        out[i] = x[i] + u * (y[i] - x[i]) + sd * rng.sample::<f64, _>(StandardNormal);
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

struct Clock(f64);

impl Observer for Clock {
    fn segment(&mut self, _x: &[f64], _y: &[f64], dt: f64, _v: f64, _rng: &mut ChaCha8Rng) {
        self.0 += dt;
    }
    fn hold(&mut self, _x: &[f64], mean_dt: f64, _first: bool) {
        self.0 += mean_dt;
    }
}

/// Concentric shells around a center, given by increasing radii.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellBins {
    edges: Vec<f64>,
}

impl ShellBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) || !edges[edges.len() - 1].is_finite() {
            return Err(Error::DomainError("shell edges must be finite, non-negative and increasing".into()));
        }
        Ok(Self { edges })
    }

    /// A ball of radius `inner` followed by `count − 1` log-spaced shells up to `outer`.
    pub fn log_ball(inner: f64, outer: f64, count: usize) -> Result<Self> {
        let mut edges = vec![0.0];
        edges.extend(Self::log_annuli(inner, outer, count.max(2) - 1)?.edges);
        Self::new(edges)
    }

    /// `count` log-spaced shells between `lo` and `hi`.
    pub fn log_annuli(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count == 0 {
            return Err(Error::DomainError(format!("log shells need 0 < {lo} < {hi}")));
        }
        let q = (hi / lo).ln() / count as f64;
        let mut edges: Vec<f64> = (0..=count).map(|i| lo * (q * i as f64).exp()).collect();
        edges[count] = hi;
        Self::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self, i: usize, d: usize) -> f64 {
        ball_volume(d) * (self.edges[i + 1].powi(d as i32) - self.edges[i].powi(d as i32))
    }

    /// Bin containing radius `rho`, if any.
    pub fn locate(&self, rho: f64) -> Option<usize> {
        if rho < self.edges[0] || rho >= self.edges[self.edges.len() - 1] {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= rho) - 1)
    }
}

struct Shells<'b> {
    center: Point,
    bins: &'b ShellBins,
    time: Vec<f64>,
    outside: f64,
    atom: f64,
    total: f64,
    track_atom: bool,
}

impl Shells<'_> {
    fn add(&mut self, z: &[f64], dt: f64) {
        let rho = dist(z, &self.center[..z.len()]);
        match self.bins.locate(rho) {
            Some(i) => self.time[i] += dt,
            None => self.outside += dt,
        }
        self.total += dt;
    }

    fn reset(&mut self) {
        self.time.iter_mut().for_each(|t| *t = 0.0);
        self.outside = 0.0;
        self.atom = 0.0;
        self.total = 0.0;
    }
}

impl Observer for Shells<'_> {
    fn resolution(&self, x: &[f64]) -> f64 {
        let rho = dist(x, &self.center[..x.len()]);
        let e = self.bins.edges();
        let outer = e[e.len() - 1];
        (rho - outer).max(0.0) + 0.5 * rho.max(e[1])
    }

    fn segment(&mut self, x: &[f64], y: &[f64], dt: f64, v: f64, rng: &mut ChaCha8Rng) {
        let mut z = [0.0; MAX_DIM];
        bridge_point(x, y, dt, v, rng, &mut z);
        self.add(&z[..x.len()], dt);
    }

    fn hold(&mut self, x: &[f64], mean_dt: f64, first: bool) {
        if first && self.track_atom {
            self.atom += mean_dt;
            self.total += mean_dt;
        } else {
            self.add(x, mean_dt);
        }
    }
}

/// Time integral of a rate function along the path.
struct Functional<'f> {
    k: &'f (dyn Fn(&[f64]) -> f64 + Send + Sync),
    total: f64,
}

impl Observer for Functional<'_> {
    fn segment(&mut self, x: &[f64], y: &[f64], dt: f64, v: f64, rng: &mut ChaCha8Rng) {
        let mut z = [0.0; MAX_DIM];
        bridge_point(x, y, dt, v, rng, &mut z);
        self.total += (self.k)(&z[..x.len()]) * dt;
    }

    fn hold(&mut self, x: &[f64], mean_dt: f64, _first: bool) {
        self.total += (self.k)(x) * mean_dt;
    }
}

fn check_point(spec: &ProcessSpec, x: &[f64]) -> Result<Point> {
    if x.len() != spec.d {
        return Err(Error::DomainError(format!("point has {} coordinates, expected {}", x.len(), spec.d)));
    }
    to_point(x)
}

#[derive(Clone, Copy, Default)]
struct Tally {
    stats: Welford,
    censored: u64,
    killed: u64,
}

impl Tally {
    fn record(&mut self, end: &PathEnd, value: f64) {
        self.stats.push(value);
        match end.kind {
            EndKind::Horizon => self.censored += 1,
            EndKind::Killed => self.killed += 1,
            EndKind::Exit => {}
        }
    }

    fn merge(mut acc: Tally, o: &Tally) -> Tally {
        acc.stats.merge(&o.stats);
        acc.censored += o.censored;
        acc.killed += o.killed;
        acc
    }

    fn into_estimate(self, seed: u64, scheme: &SimScheme) -> Estimate {
        Estimate::from_stats(&self.stats, self.censored, self.killed, seed, scheme)
    }
}

fn positive_n(n: u64) -> Result<()> {
    if n >= 2 { Ok(()) } else { Err(Error::ParamOutOfRange { name: "n", value: n as f64 }) }
}

/// Mean exit time E^{x0} τ_{B_r}.
pub fn exit_time_ball(spec: &ProcessSpec, scheme: &SimScheme, r: f64, x0: &[f64], n: u64, seed: u64) -> Result<Estimate> {
    positive_n(n)?;
    let start = check_point(spec, x0)?;
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    if !domain.contains(x0) {
        return Err(Error::DomainError("start point outside the ball".into()));
    }
    let engine = Engine::new(spec, scheme, r, r)?;
    let tallies = run_batches(n, seed, scheme, |rng, count| {
        let mut t = Tally::default();
        for _ in 0..count {
            let mut clock = Clock(0.0);
            let end = engine.run(&domain, &start, &mut clock, rng);
            t.record(&end, clock.0);
        }
        t
    });
    Ok(tallies.iter().fold(Tally::default(), Tally::merge).into_estimate(seed, scheme))
}

/// Hitting probability with the truncation it was computed under.
#[derive(Clone, Debug, PartialEq)]
pub struct HitEstimate {
    pub estimate: Estimate,
    pub kill_radius: f64,
    /// Killed fraction times the return-probability bound at the kill radius (without its dimensional constant).
    pub truncation_bias: f64,
}

/// P^x(T_r < ∞), the probability of ever entering the closed ball B̄_r.
pub fn hit_ball_prob(spec: &ProcessSpec, scheme: &SimScheme, r: f64, x: &[f64], n: u64, seed: u64) -> Result<HitEstimate> {
    positive_n(n)?;
    let start = check_point(spec, x)?;
    let norm = dist(x, &vec![0.0; x.len()]);
    if !(norm > r) {
        return Err(Error::DomainError(format!("|x| = {norm} must exceed r = {r}")));
    }
    let kill = scheme.outer_kill_radius.unwrap_or(50.0 * norm).max(2.0 * norm);
    let domain = Domain::ball_complement(spec.d, r, kill);
    let engine = Engine::new(spec, scheme, r, kill)?;
    let tallies = run_batches(n, seed, scheme, |rng, count| {
        let mut t = Tally::default();
        for _ in 0..count {
            let end = engine.run(&domain, &start, &mut (), rng);
            t.record(&end, if end.kind == EndKind::Exit { 1.0 } else { 0.0 });
        }
        t
    });
    let estimate = tallies.iter().fold(Tally::default(), Tally::merge).into_estimate(seed, scheme);
    let truncation_bias = if spec.d >= 3 {
        let at_r = pruitt(spec, r)?;
        let at_kill = pruitt(spec, kill)?;
        let ratio = (r / kill).powi(spec.d as i32) * at_r.sum / at_kill.sum;
        estimate.killed * at_kill.k / at_kill.sum * ratio
    } else {
        f64::INFINITY
    };
    Ok(HitEstimate { estimate, kill_radius: kill, truncation_bias })
}

/// Occupation-density histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenEstimate {
    pub bins: ShellBins,
    pub center: Vec<f64>,
    /// Occupation time per unit volume in each shell.
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Expected time spent outside all shells (atom excluded).
    pub outside: f64,
    /// Expected holding time at the start point before the first jump, for compound Poisson specs.
    pub atom: Option<f64>,
    /// Expected total occupation time.
    pub total: Estimate,
}

impl GreenEstimate {
    /// Σ density·volume + outside + atom.
    pub fn integrated(&self, d: usize) -> f64 {
        let shells: f64 = self.density.iter().enumerate().map(|(i, g)| g * self.bins.volume(i, d)).sum();
        shells + self.outside + self.atom.unwrap_or(0.0)
    }
}

#[allow(clippy::too_many_arguments)]
fn occupation(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    engine: &Engine<'_>,
    domain: &Domain,
    start: Point,
    center: &[f64],
    bins: &ShellBins,
    n: u64,
    seed: u64,
) -> Result<GreenEstimate> {
    let track_atom = spec.is_compound_poisson();
    let center_pt = to_point(center)?;
    let k = bins.len();
    let parts = run_batches(n, seed, scheme, |rng, count| {
        let mut stats = BinStats::new(k + 2);
        let mut tally = Tally::default();
        let mut obs = Shells {
            center: center_pt,
            bins,
            time: vec![0.0; k],
            outside: 0.0,
            atom: 0.0,
            total: 0.0,
            track_atom,
        };
        let mut row = vec![0.0; k + 2];
        for _ in 0..count {
            obs.reset();
            let end = engine.run(domain, &start, &mut obs, rng);
            row[..k].copy_from_slice(&obs.time);
            row[k] = obs.outside;
            row[k + 1] = obs.atom;
            stats.push(&row);
            tally.record(&end, obs.total);
        }
        (stats, tally)
    });
    let mut stats = BinStats::new(k + 2);
    let mut tally = Tally::default();
    for (s, t) in &parts {
        stats.merge(s);
        tally = Tally::merge(tally, t);
    }
    let mut density = Vec::with_capacity(k);
    let mut stderr = Vec::with_capacity(k);
    for i in 0..k {
        let (m, e) = stats.mean_stderr(i);
        let vol = bins.volume(i, spec.d);
        density.push(m / vol);
        stderr.push(e / vol);
    }
    Ok(GreenEstimate {
        bins: bins.clone(),
        center: center.to_vec(),
        density,
        stderr,
        outside: stats.mean_stderr(k).0,
        atom: track_atom.then(|| stats.mean_stderr(k + 1).0),
        total: tally.into_estimate(seed, scheme),
    })
}

/// Default shells for a Green histogram of B_r centred at `x`.
pub fn default_green_bins(r: f64, x_norm: f64) -> Result<ShellBins> {
    ShellBins::log_ball(0.01 * r, r + x_norm, 32)
}

/// Occupation density of the process started at `x` and killed on leaving B_r,
/// binned in shells around `x`.
pub fn green_ball(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    r: f64,
    x: &[f64],
    bins: &ShellBins,
    n: u64,
    seed: u64,
) -> Result<GreenEstimate> {
    positive_n(n)?;
    let start = check_point(spec, x)?;
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    if !domain.contains(x) {
        return Err(Error::DomainError("start point outside the ball".into()));
    }
    let engine = Engine::new(spec, scheme, r, r)?;
    occupation(spec, scheme, &engine, &domain, start, x, bins, n, seed)
}

/// As [`green_ball`], with the shells centered at `center` instead of the start point.
#[allow(clippy::too_many_arguments)]
pub fn green_ball_at(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    r: f64,
    x: &[f64],
    center: &[f64],
    bins: &ShellBins,
    n: u64,
    seed: u64,
) -> Result<GreenEstimate> {
    positive_n(n)?;
    let start = check_point(spec, x)?;
    check_point(spec, center)?;
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    if !domain.contains(x) {
        return Err(Error::DomainError("start point outside the ball".into()));
    }
    let engine = Engine::new(spec, scheme, r, r)?;
    occupation(spec, scheme, &engine, &domain, start, center, bins, n, seed)
}

/// Rate of jumps from `z` into B(y, ρ) in ℝ³: ∫_{B(y,ρ)} ν(w − z)dw.
fn entry_rate(spec: &ProcessSpec, c: f64, rho: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let lo = c - rho;
    let hi = (c + rho).min(spec.nu.support_radius());
    if hi <= lo {
        return 0.0;
    }
    let (a, b) = (lo.ln(), hi.ln());
    let (x, w) = nodes;
    let half = 0.5 * (b - a);
    x.iter()
        .zip(w)
        .map(|(t, wt)| {
            let s = (a + half * (t + 1.0)).exp();
            let cap = std::f64::consts::PI * s * (rho * rho - (c - s) * (c - s)).max(0.0) / c;
            wt * half * s * spec.nu.eval(s) * cap
        })
        .sum()
}

/// Mean Green density of B_r over B(y, ρ) from `x`, for pure-jump processes in ℝ³.
///
/// The path from `x` is killed on entering B(y, ρ) and integrates the rate of
/// jumps into it; each entry is credited with the mean occupation of B(y, ρ)
/// from a uniform start inside it.
#[allow(clippy::too_many_arguments)]
pub fn green_by_entry(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    r: f64,
    x: &[f64],
    y: &[f64],
    rho: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    positive_n(n)?;
    if spec.d != 3 || spec.sigma2 > 0.0 {
        return Err(Error::HypothesisViolated("entry estimator needs a pure-jump process in dimension 3".into()));
    }
    let hole = check_point(spec, y)?;
    let domain = Domain::Punctured { center: vec![0.0; 3], radius: r, hole: y.to_vec(), hole_radius: rho };
    domain.check(3)?;
    if !domain.contains(x) {
        return Err(Error::DomainError("start point outside the punctured ball".into()));
    }
    let nodes = crate::quad::gauss_legendre(16);
    let (spec_k, yk) = (spec.clone(), y.to_vec());
    let rate: PointFn = Arc::new(move |z: &[f64]| entry_rate(&spec_k, dist(z, &yk), rho, &nodes));
    let reach = harmonic_eval(spec, scheme, &domain, &BoundaryData::JumpIntensity(rate), x, n, seed)?;

    let ball = Domain::ball(3, r);
    let engine = Engine::new(spec, scheme, rho, r)?;
    let yk = y.to_vec();
    let inside: PointFn = Arc::new(move |z: &[f64]| if dist(z, &yk) < rho { 1.0 } else { 0.0 });
    let sample = |rng: &mut ChaCha8Rng| {
        let mut p = [0.0; MAX_DIM];
        direction(3, rng, &mut p);
        let u = rho * rng.random::<f64>().cbrt();
        for i in 0..3 {
            p[i] = hole[i] + u * p[i];
        }
        p
    };
    let stay = harmonic_core(spec, scheme, &engine, &ball, &BoundaryData::JumpIntensity(inside), sample, n, seed ^ 0x9e37_79b9);

    let vol = ball_volume(3) * rho.powi(3);
    let mean = reach.mean * stay.mean / vol;
    let rel = (reach.stderr / reach.mean).hypot(stay.stderr / stay.mean);
    Ok(Estimate {
        mean,
        stderr: mean.abs() * rel,
        censored: reach.censored.max(stay.censored),
        killed: reach.killed.max(stay.killed),
        flagged: reach.flagged || stay.flagged,
        ..reach
    })
}

/// Exit-position histogram from the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonKernelEstimate {
    pub annuli: ShellBins,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Continuous exits through the sphere.
    pub boundary_mass: Estimate,
    /// Exits landing outside every annulus.
    pub unbinned_mass: f64,
}

impl PoissonKernelEstimate {
    pub fn total_mass(&self, d: usize) -> f64 {
        let binned: f64 = self.density.iter().enumerate().map(|(i, p)| p * self.annuli.volume(i, d)).sum();
        binned + self.boundary_mass.mean + self.unbinned_mass
    }
}

/// Density of X(τ_{B_r}) under P^0 on annuli outside B_r.
pub fn poisson_kernel_ball(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    r: f64,
    annuli: &ShellBins,
    n: u64,
    seed: u64,
) -> Result<PoissonKernelEstimate> {
    positive_n(n)?;
    if annuli.edges()[0] < r {
        return Err(Error::DomainError("annuli must lie outside the ball".into()));
    }
    let start = to_point(&vec![0.0; spec.d])?;
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    let engine = Engine::new(spec, scheme, r, r)?;
    let k = annuli.len();
    let continuous = spec.sigma2 > 0.0;
    let parts = run_batches(n, seed, scheme, |rng, count| {
        let mut stats = BinStats::new(k + 1);
        let mut boundary = Tally::default();
        let mut row = vec![0.0; k + 1];
        for _ in 0..count {
            let end = engine.run(&domain, &start, &mut (), rng);
            row.iter_mut().for_each(|v| *v = 0.0);
            let on_sphere = end.kind == EndKind::Exit && continuous && !end.by_jump;
            if end.kind == EndKind::Exit && !on_sphere {
                match annuli.locate(dist(&end.pos[..spec.d], &start[..spec.d])) {
                    Some(i) => row[i] = 1.0,
                    None => row[k] = 1.0,
                }
            }
            stats.push(&row);
            boundary.record(&end, if on_sphere { 1.0 } else { 0.0 });
        }
        (stats, boundary)
    });
    let mut stats = BinStats::new(k + 1);
    let mut boundary = Tally::default();
    for (s, t) in &parts {
        stats.merge(s);
        boundary = Tally::merge(boundary, t);
    }
    let (density, stderr) = (0..k)
        .map(|i| {
            let (m, e) = stats.mean_stderr(i);
            let vol = annuli.volume(i, spec.d);
            (m / vol, e / vol)
        })
        .unzip();
    Ok(PoissonKernelEstimate {
        annuli: annuli.clone(),
        density,
        stderr,
        boundary_mass: boundary.into_estimate(seed, scheme),
        unbinned_mass: stats.mean_stderr(k).0,
    })
}

/// Real-valued function of a point.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How the harmonic function is specified.
#[derive(Clone)]
pub enum BoundaryData {
    /// f evaluated at the exit position; killed or censored paths contribute 0.
    Exit(PointFn),
    /// k(x) = ∫ f(y)ν(y − x)dy for f vanishing near the closure of the domain;
    /// the estimator is ∫₀^τ k(X_t)dt.
    JumpIntensity(PointFn),
}

/// E^x f(X(τ_D)).
pub fn harmonic_eval(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    domain: &Domain,
    data: &BoundaryData,
    x: &[f64],
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    positive_n(n)?;
    let start = check_point(spec, x)?;
    domain.check(spec.d)?;
    if !domain.contains(x) {
        return Err(Error::DomainError("start point outside the domain".into()));
    }
    let scale = domain.distance(x).min(domain.outer_scale(x));
    let engine = Engine::new(spec, scheme, scale, domain.outer_scale(x))?;
    Ok(harmonic_core(spec, scheme, &engine, domain, data, |_| start, n, seed))
}

/// E[F(U)] for U uniform on B_r∖B_q and F the harmonic function in B_r with the given data.
pub fn harmonic_mean_ball(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    r: f64,
    q: f64,
    data: &BoundaryData,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    positive_n(n)?;
    if !(0.0 <= q && q < r) {
        return Err(Error::DomainError(format!("need 0 ≤ q < r, got q = {q}, r = {r}")));
    }
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    let engine = Engine::new(spec, scheme, r, r)?;
    let d = spec.d;
    let (qd, rd) = (q.powi(d as i32), r.powi(d as i32));
    let sample = |rng: &mut ChaCha8Rng| {
        let mut p = [0.0; MAX_DIM];
        direction(d, rng, &mut p);
        let rho = (qd + (rd - qd) * rng.random::<f64>()).powf(1.0 / d as f64).min(r * (1.0 - 1e-12));
        p.iter_mut().for_each(|v| *v *= rho);
        p
    };
    Ok(harmonic_core(spec, scheme, &engine, &domain, data, sample, n, seed))
}

#[allow(clippy::too_many_arguments)]
fn harmonic_core<S>(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    engine: &Engine,
    domain: &Domain,
    data: &BoundaryData,
    start: S,
    n: u64,
    seed: u64,
) -> Estimate
where
    S: Fn(&mut ChaCha8Rng) -> Point + Sync + Send,
{
    let d = spec.d;
    let tallies = run_batches(n, seed, scheme, |rng, count| {
        let mut t = Tally::default();
        for _ in 0..count {
            let start = start(rng);
            match data {
                BoundaryData::Exit(f) => {
                    let end = engine.run(domain, &start, &mut (), rng);
                    let v = if end.kind == EndKind::Exit { f(&end.pos[..d]) } else { 0.0 };
                    t.record(&end, v);
                }
                BoundaryData::JumpIntensity(k) => {
                    let mut obs = Functional { k: k.as_ref(), total: 0.0 };
                    let end = engine.run(domain, &start, &mut obs, rng);
                    t.record(&end, obs.total);
                }
            }
        }
        t
    });
    tallies.iter().fold(Tally::default(), Tally::merge).into_estimate(seed, scheme)
}

/// Where a path left the ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExitRadius {
    /// Continuous exit through the sphere.
    Sphere,
    /// Landed by a jump at this distance from the origin.
    Jump(f64),
    /// Killed or censored.
    Lost,
}

/// |X(τ_{B_r})| under P^0, one entry per path in batch order.
pub fn exit_radii_ball(spec: &ProcessSpec, scheme: &SimScheme, r: f64, n: u64, seed: u64) -> Result<Vec<ExitRadius>> {
    positive_n(n)?;
    let start = to_point(&vec![0.0; spec.d])?;
    let domain = Domain::ball(spec.d, r);
    domain.check(spec.d)?;
    let engine = Engine::new(spec, scheme, r, r)?;
    let continuous = spec.sigma2 > 0.0;
    let parts = run_batches(n, seed, scheme, |rng, count| {
        (0..count)
            .map(|_| {
                let end = engine.run(&domain, &start, &mut (), rng);
                match end.kind {
                    EndKind::Exit if continuous && !end.by_jump => ExitRadius::Sphere,
                    EndKind::Exit => ExitRadius::Jump(dist(&end.pos[..spec.d], &start[..spec.d])),
                    _ => ExitRadius::Lost,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Occupation density near `y` of the process started at `x` and killed on
/// leaving the half-space {x_d > 0}, laterally truncated to a box.
pub fn green_halfspace(
    spec: &ProcessSpec,
    scheme: &SimScheme,
    x: &[f64],
    y: &[f64],
    bins: &ShellBins,
    n: u64,
    seed: u64,
) -> Result<GreenEstimate> {
    positive_n(n)?;
    let start = check_point(spec, x)?;
    check_point(spec, y)?;
    let d = spec.d;
    if x[d - 1] <= 0.0 || y[d - 1] <= 0.0 {
        return Err(Error::DomainError("points must lie in the upper half-space".into()));
    }
    let span = dist(x, y).max(x[d - 1]).max(y[d - 1]);
    let lateral = scheme.outer_kill_radius.unwrap_or(50.0 * span);
    let domain = Domain::HalfSpace { lateral };
    if !domain.contains(x) || !domain.contains(y) {
        return Err(Error::DomainError("points outside the truncation box".into()));
    }
    let scale = x[d - 1].min(y[d - 1]).min(dist(x, y)).min(bins.edges()[1]);
    let engine = Engine::new(spec, scheme, scale, lateral)?;
    occupation(spec, scheme, &engine, &domain, start, y, bins, n, seed)
}

/// One increment of the ε-truncated scheme over a fixed time step.
#[derive(Clone, Debug)]
pub struct StepSampler {
    d: usize,
    sigma2: f64,
    law: JumpLaw,
}

impl StepSampler {
    /// `epsilon` is ignored for specs with finite jump mass.
    pub fn new(spec: &ProcessSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::ParamOutOfRange { name: "epsilon", value: epsilon });
        }
        Ok(Self { d: spec.d, sigma2: spec.sigma2, law: JumpLaw::new(spec, epsilon, epsilon)? })
    }

    /// Λ(ε), the rate of jumps longer than ε (total mass for compound Poisson).
    pub fn jump_rate(&self) -> f64 {
        self.law.rate_at_level(0)
    }

    /// Per-coordinate variance rate of the Gaussian replacing the jumps up to ε.
    pub fn small_jump_variance(&self) -> f64 {
        self.law.levels.var[0]
    }

    /// Radius with tail probability `u` among jumps longer than ε.
    pub fn radius_quantile(&self, u: f64) -> f64 {
        self.law.quantile(self.law.level_eps(0), u)
    }

    pub fn sample(&self, dt: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let sd = ((2.0 * self.sigma2 + self.small_jump_variance()) * dt).sqrt();
        let mut x: Vec<f64> = (0..self.d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let mean = self.jump_rate() * dt;
        let count = if mean > 0.0 { Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0) } else { 0 };
        let mut dir = [0.0; MAX_DIM];
        for _ in 0..count {
            let s = self.radius_quantile(1.0 - rng.random::<f64>());
            direction(self.d, rng, &mut dir);
            for i in 0..self.d {
                x[i] += s * dir[i];
            }
        }
        x
    }
}

/// Increment over `scheme.dt` with cutoff `scheme.epsilon`.
pub fn sample_path_step(spec: &ProcessSpec, scheme: &SimScheme, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    scheme.check()?;
    let dt = scheme.dt.ok_or_else(|| Error::DomainError("a fixed dt is required".into()))?;
    let eps = match scheme.epsilon {
        Some(e) => e,
        None if spec.nu.is_compound_poisson() || spec.nu.is_zero() => 1.0,
        None => return Err(Error::DomainError("a fixed epsilon is required".into())),
    };
    Ok(StepSampler::new(spec, eps)?.sample(dt, rng))
}
