//! Single-path simulation of the killed process.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::domain::{Domain, Point, Region, MAX_DIM};
use super::jumps::JumpLaw;
use super::SimScheme;
use crate::error::Result;
use crate::process_model::ProcessSpec;

/// Accumulates path functionals while the engine runs.
pub(crate) trait Observer {
    /// Finest length scale the observer needs near `x`.
    fn resolution(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
    /// Continuous motion from `x` to `y` over `dt` with per-coordinate variance rate `v`.
    fn segment(&mut self, _x: &[f64], _y: &[f64], _dt: f64, _v: f64, _rng: &mut ChaCha8Rng) {}
    /// Pure-jump holding at `x`; `mean_dt` is its conditional mean.
    fn hold(&mut self, _x: &[f64], _mean_dt: f64, _first: bool) {}
}

impl Observer for () {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum EndKind {
    Exit,
    Killed,
    Horizon,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PathEnd {
    pub kind: EndKind,
    pub pos: Point,
    /// Left the domain by a jump rather than continuously.
    pub by_jump: bool,
}

const MAX_STEPS: u64 = 200_000_000;
const REFINE_DEPTH: usize = 12;

pub(crate) struct Engine<'a> {
    pub d: usize,
    sigma2: f64,
    pub law: JumpLaw,
    scheme: &'a SimScheme,
    floor: f64,
    fixed_level: Option<usize>,
}

/// Uniform point on the unit sphere, written into `out[..d]`.
pub(crate) fn direction(d: usize, rng: &mut ChaCha8Rng, out: &mut Point) {
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut().take(d) {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 1e-300 {
            let inv = n2.sqrt().recip();
            for v in out.iter_mut().take(d) {
                *v *= inv;
            }
            return;
        }
    }
}

impl<'a> Engine<'a> {
    /// `scale` is the problem's length scale; `reach` the largest distance a path may need to cover.
    pub fn new(spec: &ProcessSpec, scheme: &'a SimScheme, scale: f64, reach: f64) -> Result<Self> {
        scheme.check()?;
        let floor = scheme.resolution_floor * scale;
        let (law, fixed_level) = match scheme.epsilon {
            Some(eps) => (JumpLaw::new(spec, eps, eps)?, Some(0)),
            None => {
                let lo = scheme.adapt * floor;
                let hi = (scheme.adapt * reach).max(lo);
                (JumpLaw::new(spec, lo, hi)?, None)
            }
        };
        Ok(Self { d: spec.d, sigma2: spec.sigma2, law, scheme, floor, fixed_level })
    }

    fn jump(&self, k: usize, rng: &mut ChaCha8Rng, x: &mut Point) {
        let u = 1.0 - rng.random::<f64>();
        let s = self.law.quantile(self.law.level_eps(k), u);
        let mut dir = [0.0; MAX_DIM];
        direction(self.d, rng, &mut dir);
        for i in 0..self.d {
            x[i] += s * dir[i];
        }
    }

    /// Locates the first passage inside a Gaussian step from `x` to `y` that left the
    /// domain, by bisection with Brownian-bridge midpoints. Returns the elapsed time
    /// and the endpoint of the final sub-interval.
    fn refine_exit(&self, domain: &Domain, x: &Point, y: &Point, dt: f64, v: f64, rng: &mut ChaCha8Rng) -> (f64, Point) {
        let d = self.d;
        let (mut a, mut b) = (*x, *y);
        let (mut t0, mut h) = (0.0, dt);
        for _ in 0..REFINE_DEPTH {
            let half = 0.5 * h;
            let sd = (0.25 * v * h).sqrt();
            let mut m = a;
            for i in 0..d {
                m[i] = 0.5 * (a[i] + b[i]) + sd * rng.sample::<f64, _>(StandardNormal);
            }
            let first = domain.region(&m[..d]) != Region::Inside || {
                let p = (-2.0 * domain.distance(&a[..d]) * domain.distance(&m[..d]) / (v * half)).exp();
                rng.random::<f64>() < p
            };
            if first {
                b = m;
            } else {
                a = m;
                t0 += half;
            }
            h = half;
        }
        (t0 + h, b)
    }

    fn classify(pos: Point, region: Region, by_jump: bool) -> PathEnd {
        let kind = if region == Region::Killed { EndKind::Killed } else { EndKind::Exit };
        PathEnd { kind, pos, by_jump }
    }

    /// Runs one path from `x0` until it leaves `domain`, is killed, or reaches the horizon.
    pub fn run<O: Observer>(&self, domain: &Domain, x0: &Point, obs: &mut O, rng: &mut ChaCha8Rng) -> PathEnd {
        let d = self.d;
        let mut x = *x0;
        let mut t = 0.0;
        let horizon = self.scheme.horizon;
        let pure_cp = self.sigma2 == 0.0 && self.law.is_finite();
        let mut first = true;
        for _ in 0..MAX_STEPS {
            if pure_cp {
                let m = self.law.rate_at_level(0);
                t += rng.sample::<f64, _>(Exp1) / m;
                if t >= horizon {
                    return PathEnd { kind: EndKind::Horizon, pos: x, by_jump: false };
                }
                obs.hold(&x[..d], 1.0 / m, first);
                first = false;
                self.jump(0, rng, &mut x);
                let region = domain.region(&x[..d]);
                if region != Region::Inside {
                    return Self::classify(x, region, true);
                }
                continue;
            }
            let dist = domain.distance(&x[..d]);
            let ell = dist.min(obs.resolution(&x[..d])).max(self.floor);
            let k = match self.fixed_level {
                Some(k) => k,
                None if self.law.is_finite() => 0,
                None => self.law.levels.pick(self.scheme.adapt * ell),
            };
            let v = 2.0 * self.sigma2 + self.law.levels.var[k];
            let rate = self.law.rate_at_level(k);
            let dt_diff = match self.scheme.dt {
                Some(dt) => dt,
                None if v > 0.0 => (self.scheme.step * ell).powi(2) / v,
                None => f64::INFINITY,
            };
            let t_jump = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
            let dt = dt_diff.min(t_jump).min(horizon - t);
            let jumps = t_jump <= dt_diff && t_jump < horizon - t;
            let mut y = x;
            if v > 0.0 {
                let sd = (v * dt).sqrt();
                for yi in y.iter_mut().take(d) {
                    *yi += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let region = domain.region(&y[..d]);
            let crossed = region == Region::Inside && self.scheme.bridge_correction && v > 0.0 && {
                let d2 = domain.distance(&y[..d]);
                let p = (-2.0 * dist * d2 / (v * dt)).exp();
                rng.random::<f64>() < p
            };
            if region != Region::Inside || crossed {
                let (dt_exit, mut end) = self.refine_exit(domain, &x, &y, dt, v, rng);
                obs.segment(&x[..d], &end[..d], dt_exit, v, rng);
                let region = if crossed {
                    if domain.nearest_is_kill(&y[..d]) { Region::Killed } else { Region::Exit }
                } else {
                    region
                };
                if region == Region::Exit && (self.sigma2 > 0.0 || crossed) {
                    domain.project(&mut end[..d]);
                    return Self::classify(end, region, false);
                }
                return Self::classify(y, region, false);
            }
            obs.segment(&x[..d], &y[..d], dt, v, rng);
            t += dt;
            x = y;
            if jumps {
                self.jump(k, rng, &mut x);
                let region = domain.region(&x[..d]);
                if region != Region::Inside {
                    return Self::classify(x, region, true);
                }
            }
            if t >= horizon {
                return PathEnd { kind: EndKind::Horizon, pos: x, by_jump: false };
            }
        }
        PathEnd { kind: EndKind::Horizon, pos: x, by_jump: false }
    }
}
