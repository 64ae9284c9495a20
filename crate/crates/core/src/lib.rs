//! Potential theory of isotropic unimodal Lévy processes: Pruitt functions,
//! characteristic exponents, potential kernels, two-sided bound expressions
//! and Monte Carlo estimators to check them against.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound_engine;
pub mod cli;
pub mod error;
pub mod exec;
pub mod kernel_averaging;
pub mod monte_carlo;
pub mod process_model;
pub mod quad;
pub mod radial_calculus;
pub mod scaling_indices;
pub mod special;
pub mod test_functions;

pub use error::{Error, Result};
pub use process_model::{make_family, Family, ProcessSpec, RadialProfile};
pub use quad::QuadratureConfig;
pub use radial_calculus::PruittValues;
