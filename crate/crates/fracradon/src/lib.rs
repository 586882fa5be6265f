//! Discrete fractional Radon transforms along paraboloids {(m, Q(m))}:
//! Gauss sums, twisted theta functions and their inversion law, the arc
//! dissection of the torus, the Fourier multiplier and its pieces, the
//! operator itself, representation numbers and sharpness experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::too_many_arguments)]

pub mod arcs;
pub mod cli;
pub mod error;
pub mod exponential_sums;
pub mod multiplier;
pub mod numerics;
pub mod operator;
pub mod quadform;
pub mod representations;
pub mod sharpness;
pub mod theta;

pub use error::{Error, Result};
pub use quadform::{AdjointForm, QuadraticForm};
