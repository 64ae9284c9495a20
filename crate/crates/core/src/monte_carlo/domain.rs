//! Domains for the killed process: membership, distance to the boundary and
//! classification of the point where a path leaves.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported dimension for path simulation.
pub const MAX_DIM: usize = 8;

pub(crate) type Point = [f64; MAX_DIM];

pub(crate) fn to_point(x: &[f64]) -> Result<Point> {
    if x.is_empty() || x.len() > MAX_DIM {
        return Err(Error::DomainError(format!("dimension {} outside 1..={MAX_DIM}", x.len())));
    }
    let mut p = [0.0; MAX_DIM];
    p[..x.len()].copy_from_slice(x);
    Ok(p)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Membership test used by [`Domain::Indicator`].
pub type IndicatorFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Where a point sits relative to a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Inside,
    /// Outside through the real boundary.
    Exit,
    /// Outside through an artificial truncation boundary.
    Killed,
}

#[derive(Clone)]
pub enum Domain {
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Complement of the closed ball, truncated at `kill_radius` from the center.
    BallComplement { center: Vec<f64>, radius: f64, kill_radius: f64 },
    /// {x_d > 0} truncated to |x_i| < lateral and x_d < lateral.
    HalfSpace { lateral: f64 },
    /// Arbitrary open set; `scale` bounds the step length inside it.
    Indicator { inside: IndicatorFn, scale: f64 },
    /// Open ball with a closed ball removed; entering the hole is an exit.
    Punctured { center: Vec<f64>, radius: f64, hole: Vec<f64>, hole_radius: f64 },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            Domain::BallComplement { center, radius, kill_radius } => {
                write!(f, "BallComplement({center:?}, {radius}, kill={kill_radius})")
            }
            Domain::HalfSpace { lateral } => write!(f, "HalfSpace(lateral={lateral})"),
            Domain::Indicator { scale, .. } => write!(f, "Indicator(scale={scale})"),
            Domain::Punctured { center, radius, hole, hole_radius } => {
                write!(f, "Punctured({center:?}, {radius}, hole={hole:?}, {hole_radius})")
            }
        }
    }
}

impl Domain {
    pub fn ball(d: usize, radius: f64) -> Self {
        Domain::Ball { center: vec![0.0; d], radius }
    }

    pub fn ball_complement(d: usize, radius: f64, kill_radius: f64) -> Self {
        Domain::BallComplement { center: vec![0.0; d], radius, kill_radius }
    }

    pub(crate) fn check(&self, d: usize) -> Result<()> {
        let ok = match self {
            Domain::Ball { center, radius } => center.len() == d && *radius > 0.0,
            Domain::BallComplement { center, radius, kill_radius } => {
                center.len() == d && *radius > 0.0 && kill_radius > radius
            }
            Domain::HalfSpace { lateral } => *lateral > 0.0,
            Domain::Indicator { scale, .. } => *scale > 0.0,
            Domain::Punctured { center, radius, hole, hole_radius } => {
                center.len() == d
                    && hole.len() == d
                    && *hole_radius > 0.0
                    && Self::offset(center, hole) + hole_radius < *radius
            }
        };
        if ok { Ok(()) } else { Err(Error::DomainError(format!("malformed domain {self:?} in dimension {d}"))) }
    }

    fn offset(center: &[f64], x: &[f64]) -> f64 {
        center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum::<f64>().sqrt()
    }

    pub fn region(&self, x: &[f64]) -> Region {
        match self {
            Domain::Ball { center, radius } => {
                if Self::offset(center, x) < *radius { Region::Inside } else { Region::Exit }
            }
            Domain::BallComplement { center, radius, kill_radius } => {
                let r = Self::offset(center, x);
                if r <= *radius {
                    Region::Exit
                } else if r >= *kill_radius {
                    Region::Killed
                } else {
                    Region::Inside
                }
            }
            Domain::HalfSpace { lateral } => {
                let d = x.len();
                if x[d - 1] <= 0.0 {
                    Region::Exit
                } else if x[d - 1] >= *lateral || x[..d - 1].iter().any(|v| v.abs() >= *lateral) {
                    Region::Killed
                } else {
                    Region::Inside
                }
            }
            Domain::Indicator { inside, .. } => {
                if inside(x) { Region::Inside } else { Region::Exit }
            }
            Domain::Punctured { center, radius, hole, hole_radius } => {
                if Self::offset(center, x) < *radius && Self::offset(hole, x) > *hole_radius {
                    Region::Inside
                } else {
                    Region::Exit
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.region(x) == Region::Inside
    }

    /// Distance to the boundary from an interior point (a lower bound for indicators).
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => radius - Self::offset(center, x),
            Domain::BallComplement { center, radius, kill_radius } => {
                let r = Self::offset(center, x);
                (r - radius).min(kill_radius - r)
            }
            Domain::HalfSpace { lateral } => {
                let d = x.len();
                let side = x[..d - 1].iter().map(|v| lateral - v.abs()).fold(f64::INFINITY, f64::min);
                x[d - 1].min(lateral - x[d - 1]).min(side)
            }
            Domain::Indicator { scale, .. } => *scale,
            Domain::Punctured { center, radius, hole, hole_radius } => {
                (radius - Self::offset(center, x)).min(Self::offset(hole, x) - hole_radius)
            }
        }
    }

    /// Whether a continuous crossing near `x` goes through the truncation boundary.
    pub(crate) fn nearest_is_kill(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { .. } | Domain::Indicator { .. } | Domain::Punctured { .. } => false,
            Domain::BallComplement { center, radius, kill_radius } => {
                let r = Self::offset(center, x);
                kill_radius - r < r - radius
            }
            Domain::HalfSpace { lateral } => {
                let d = x.len();
                let side = x[..d - 1].iter().map(|v| lateral - v.abs()).fold(f64::INFINITY, f64::min);
                side.min(lateral - x[d - 1]) < x[d - 1]
            }
        }
    }

    /// Nearest point of the real boundary, for continuous exits.
    pub(crate) fn project(&self, x: &mut [f64]) {
        match self {
            Domain::Ball { center, radius } | Domain::BallComplement { center, radius, .. } => {
                let r = Self::offset(center, x);
                if r > 0.0 {
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + (*v - c) * radius / r;
                    }
                }
            }
            Domain::HalfSpace { .. } => {
                let d = x.len();
                x[d - 1] = 0.0;
            }
            Domain::Indicator { .. } => {}
            Domain::Punctured { center, radius, hole, hole_radius } => {
                let (outer, inner) = (Self::offset(center, x), Self::offset(hole, x));
                let (c, target, r) =
                    if radius - outer < inner - hole_radius { (center, radius, outer) } else { (hole, hole_radius, inner) };
                if r > 0.0 {
                    for (v, c) in x.iter_mut().zip(c) {
                        *v = c + (*v - c) * target / r;
                    }
                }
            }
        }
    }

    /// Length scale of the domain, used to place the cutoff ladder.
    pub(crate) fn outer_scale(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::BallComplement { kill_radius, .. } => *kill_radius,
            Domain::HalfSpace { lateral } => *lateral,
            Domain::Indicator { scale, .. } => scale.max(norm(x)),
            Domain::Punctured { radius, .. } => *radius,
        }
    }
}
