//! Numerical search for the superharmonic function f = bL(r)g + K(r)h used to
//! bound hitting probabilities of a ball.

use crate::error::{Error, Result};
use crate::process_model::ProcessSpec;
use crate::radial_calculus::{generator_apply, pruitt};
use crate::test_functions::{MollifiedNewtonian, SmoothBump};

/// Search grid and acceptance tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSearch {
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    /// Number of log-spaced evaluation radii in (r, 20R].
    pub points: usize,
    /// A f ≤ tolerance·K(r)L(r) counts as non-positive.
    pub tolerance: f64,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        let dyadic: Vec<f64> = (1..=20).map(|k| 2f64.powi(-k)).collect();
        Self { a_grid: dyadic.clone(), b_grid: dyadic, points: 60, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessOutcome {
    /// aL(r) ≤ 5^dK(r) for every a on the grid, so K/(K+L) ≥ a/(a + 5^d) already.
    Trivial { a: f64, constant: f64 },
    Found { a: f64, b: f64, big_r: f64, max_af: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub r: f64,
    pub k: f64,
    pub l: f64,
    pub outcome: WitnessOutcome,
    /// Radii where A f was evaluated for the reported pair.
    pub grid: Vec<f64>,
    pub af: Vec<f64>,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn superharmonic_witness(spec: &ProcessSpec, r: f64, search: &WitnessSearch) -> Result<WitnessReport> {
    let d = spec.d;
    if d < 3 {
        return Err(Error::HypothesisViolated("the witness needs d ≥ 3".into()));
    }
    let p = pruitt(spec, r)?;
    let (k, l) = (p.k, p.l);
    let five_d = 5f64.powi(d as i32);
    let mut valid: Vec<f64> = search.a_grid.iter().copied().filter(|a| a * l > five_d * k).collect();
    valid.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if valid.is_empty() {
        let a = search.a_grid.iter().copied().fold(0.0, f64::max);
        return Ok(WitnessReport {
            r,
            k,
            l,
            outcome: WitnessOutcome::Trivial { a, constant: (a + five_d) / a },
            grid: Vec::new(),
            af: Vec::new(),
        });
    }
    let radius = |a: f64| (a * l / k).powf(1.0 / d as f64) * r;
    let r_max = radius(valid[0]);
    let mut grid = log_grid(r * 1.001, 20.0 * r_max, search.points.max(2));
    for &a in &valid {
        let big = radius(a);
        grid.extend((0..=8).map(|i| big - 2.0 * r + 0.5 * r * i as f64));
    }
    grid.retain(|&x| x > r);
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();

    let g = SmoothBump { inner: r, outer: 2.0 * r };
    let ag = grid.iter().map(|&x| Ok(generator_apply(spec, &g, x)?.value)).collect::<Result<Vec<f64>>>()?;
    let tol = search.tolerance * k * l;
    let mut b_sorted = search.b_grid.clone();
    b_sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for &a in &valid {
        let big = radius(a);
        let h = MollifiedNewtonian::new(d, big, r);
        let ah = grid.iter().map(|&x| Ok(generator_apply(spec, &h, x)?.value)).collect::<Result<Vec<f64>>>()?;
        for &b in &b_sorted {
            let af: Vec<f64> = ag.iter().zip(&ah).map(|(g, h)| b * l * g + k * h).collect();
            let max_af = af.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max_af <= tol {
                return Ok(WitnessReport { r, k, l, outcome: WitnessOutcome::Found { a, b, big_r: big, max_af }, grid, af });
            }
        }
    }
    Err(Error::NoWitnessFound(format!("no (a, b) pair on the grid at r = {r:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{make_family, Family};

    #[test]
    fn stable_half_is_trivial() {
        let s = make_family(3, Family::Stable { alpha: 0.5, scale: 1.0 }).unwrap();
        let rep = superharmonic_witness(&s, 1.0, &WitnessSearch::default()).unwrap();
        assert!((rep.l / rep.k - 3.0).abs() < 1e-9);
        assert!(matches!(rep.outcome, WitnessOutcome::Trivial { .. }));
    }
}
