//! Jump radii above a cutoff, and the cutoff ladder used by the adaptive scheme.

use crate::error::{Error, Result};
use crate::process_model::{ProcessSpec, Shape, UniformBall};
use crate::quad::{gauss_legendre, QuadratureConfig};
use crate::radial_calculus::{k_jump, pruitt_l_with};

/// Law of the jump radius conditioned on exceeding a cutoff.
#[derive(Clone, Debug)]
pub(crate) enum RadiusLaw {
    None,
    /// L(s) ∝ s^{−α}.
    Power { alpha: f64 },
    /// L(s) ∝ ln(1/s) on s < 1.
    LogKernel,
    /// Finite mixture of uniform laws on balls, sampled with no cutoff.
    Mixture { balls: Vec<UniformBall>, d: usize },
    /// ln L tabulated on a uniform grid in w = ln s, non-increasing.
    Table { w0: f64, h: f64, ln_l: Vec<f64> },
}

/// Inverse of the mixture CDF Σ (m_i/M) min(s/R_i, 1)^d.
pub fn mixture_quantile(balls: &[UniformBall], d: usize, u: f64) -> f64 {
    let total: f64 = balls.iter().map(|b| b.mass).sum();
    let mut below = 0.0;
    let mut prev = 0.0;
    for (k, b) in balls.iter().enumerate() {
        let slope: f64 = balls[k..].iter().map(|c| c.mass / (total * c.radius.powi(d as i32))).sum();
        let at_edge = below + slope * b.radius.powi(d as i32);
        if u <= at_edge || k + 1 == balls.len() {
            let s = ((u - below).max(0.0) / slope).powf(1.0 / d as f64);
            return s.clamp(prev, b.radius);
        }
        below += b.mass / total;
        prev = b.radius;
    }
    prev
}

/// Cutoff levels ε_k = ε_max·2^{−k/2} with the jump rate L(ε_k) above the cutoff
/// and the per-coordinate variance rate of the jumps below it.
#[derive(Clone, Debug)]
pub(crate) struct Levels {
    pub eps: Vec<f64>,
    pub rate: Vec<f64>,
    pub var: Vec<f64>,
}

impl Levels {
    /// Largest level not above `target`, clamped to the ladder.
    pub fn pick(&self, target: f64) -> usize {
        let k = (2.0 * (self.eps[0] / target).log2()).ceil();
        if !(k > 0.0) {
            0
        } else {
            (k as usize).min(self.eps.len() - 1)
        }
    }
}

/// Jump sampler of a spec together with its cutoff ladder.
#[derive(Clone, Debug)]
pub struct JumpLaw {
    pub(crate) law: RadiusLaw,
    pub(crate) levels: Levels,
    /// Total jump rate when ν is finite.
    pub(crate) finite_rate: Option<f64>,
}

const TABLE_STEP: f64 = 1.0 / 32.0;

impl JumpLaw {
    /// Builds the sampler with cutoffs spanning [eps_min, eps_max].
    pub fn new(spec: &ProcessSpec, eps_min: f64, eps_max: f64) -> Result<Self> {
        let cfg = QuadratureConfig::default();
        if !(eps_min > 0.0 && eps_max >= eps_min) {
            return Err(Error::DomainError(format!("cutoff range [{eps_min}, {eps_max}]")));
        }
        if spec.nu.is_zero() {
            return Ok(Self { law: RadiusLaw::None, levels: Levels { eps: vec![eps_max], rate: vec![0.0], var: vec![0.0] }, finite_rate: None });
        }
        if let Shape::Uniform(balls) = spec.nu.shape() {
            let m = spec.nu.total_mass();
            return Ok(Self {
                law: RadiusLaw::Mixture { balls: balls.clone(), d: spec.d },
                levels: Levels { eps: vec![0.0], rate: vec![m], var: vec![0.0] },
                finite_rate: Some(m),
            });
        }
        let n = (2.0 * (eps_max / eps_min).log2()).ceil().max(0.0) as usize + 1;
        let mut levels = Levels { eps: Vec::with_capacity(n), rate: Vec::with_capacity(n), var: Vec::with_capacity(n) };
        for k in 0..n {
            let eps = eps_max * 2f64.powf(-(k as f64) / 2.0);
            let rate = pruitt_l_with(spec, eps, &cfg)?;
            if !rate.is_finite() {
                return Err(Error::CutoffTooSmall(rate));
            }
            let var = eps * eps * k_jump(spec, eps, &cfg)? / spec.d as f64;
            levels.eps.push(eps);
            levels.rate.push(rate);
            levels.var.push(var);
        }
        let law = match spec.nu.shape() {
            Shape::Power { exponent, .. } => RadiusLaw::Power { alpha: exponent - spec.d as f64 },
            Shape::LogKernel => RadiusLaw::LogKernel,
            _ => Self::table(spec, levels.eps[n - 1], &cfg)?,
        };
        Ok(Self { law, levels, finite_rate: None })
    }

    fn table(spec: &ProcessSpec, eps_min: f64, cfg: &QuadratureConfig) -> Result<RadiusLaw> {
        let d = spec.d as f64;
        let w0 = eps_min.ln();
        let l0 = pruitt_l_with(spec, eps_min, cfg)?;
        let support = spec.nu.support_radius();
        let mut w_top = w0;
        loop {
            let next = w_top + 1.0;
            if next >= support.ln() || next > w0 + 60.0 {
                w_top = next.min(support.ln() - 1e-9);
                break;
            }
            w_top = next;
            if pruitt_l_with(spec, w_top.exp(), cfg)? < 1e-18 * l0 {
                break;
            }
        }
        let cells = ((w_top - w0) / TABLE_STEP).ceil().max(1.0) as usize;
        let h = (w_top - w0) / cells as f64;
        let (gx, gw) = gauss_legendre(8);
        let mut l = vec![0.0; cells + 1];
        l[cells] = pruitt_l_with(spec, w_top.exp(), cfg)?;
        for i in (0..cells).rev() {
            let a = w0 + i as f64 * h;
            let seg: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, wt)| {
                    let w = a + 0.5 * h * (x + 1.0);
                    wt * (d * w + spec.nu.ln_density_at_log(w)).exp()
                })
                .sum::<f64>()
                * 0.5
                * h
                * spec.omega();
            l[i] = l[i + 1] + seg;
        }
        Ok(RadiusLaw::Table { w0, h, ln_l: l.into_iter().map(f64::ln).collect() })
    }

    /// Radius with tail probability `u ∈ (0, 1]` among jumps longer than `eps`.
    pub fn quantile(&self, eps: f64, u: f64) -> f64 {
        match &self.law {
            RadiusLaw::None => f64::NAN,
            RadiusLaw::Power { alpha } => eps * u.powf(-1.0 / alpha),
            RadiusLaw::LogKernel => eps.powf(u),
            RadiusLaw::Mixture { balls, d } => mixture_quantile(balls, *d, 1.0 - u),
            RadiusLaw::Table { w0, h, ln_l } => {
                let lookup = |w: f64| {
                    let x = ((w - w0) / h).clamp(0.0, (ln_l.len() - 1) as f64);
                    let i = (x.floor() as usize).min(ln_l.len() - 2);
                    let t = x - i as f64;
                    ln_l[i] + t * (ln_l[i + 1] - ln_l[i])
                };
                let target = lookup(eps.ln()) + u.ln();
                let j = ln_l.partition_point(|&v| v > target);
                if j == 0 {
                    return eps;
                }
                if j >= ln_l.len() {
                    return (w0 + h * (ln_l.len() - 1) as f64).exp();
                }
                let (a, b) = (ln_l[j - 1], ln_l[j]);
                let t = if a > b { (a - target) / (a - b) } else { 0.0 };
                (w0 + h * ((j - 1) as f64 + t)).exp().max(eps)
            }
        }
    }

    /// Jump rate above the finest cutoff not exceeding `eps`.
    pub fn rate_at_level(&self, k: usize) -> f64 {
        self.levels.rate[k]
    }

    pub fn level_eps(&self, k: usize) -> f64 {
        self.levels.eps[k]
    }

    pub fn is_finite(&self) -> bool {
        self.finite_rate.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{make_family, Family};

    #[test]
    fn mixture_quantile_edges() {
        let balls = [UniformBall { mass: 1.0, radius: 1.0 }, UniformBall { mass: 10.0, radius: 100.0 }];
        assert_eq!(mixture_quantile(&balls, 3, 0.0), 0.0);
        assert!((mixture_quantile(&balls, 3, 1.0) - 100.0).abs() < 1e-9);
        let s = mixture_quantile(&balls, 3, 0.5);
        let cdf = (1.0 / 11.0) + (10.0 / 11.0) * (s / 100.0).powi(3);
        assert!((cdf - 0.5).abs() < 1e-14);
    }

    #[test]
    fn table_matches_tail_for_slow_decay() {
        let spec = make_family(3, Family::SlowDecay { alpha: 1.0, scale: 1.0 }).unwrap();
        let law = JumpLaw::new(&spec, 1e-3, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        for &(eps, u) in &[(1e-3, 0.5), (0.01, 0.1), (0.5, 0.01)] {
            let s = law.quantile(eps, u);
            let ratio = pruitt_l_with(&spec, s, &cfg).unwrap() / pruitt_l_with(&spec, eps, &cfg).unwrap();
            assert!((ratio - u).abs() < 1e-4 * u, "eps={eps} u={u} ratio={ratio}");
        }
    }
}
