//! Numerical laboratory for spectral inequalities of finite Hermite
//! combinations on thick sets, the covering geometry behind them, and
//! constructive null-control of fractional harmonic oscillator semigroups.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod control;
pub mod error;
pub mod geometry;
pub mod hermite;
pub mod linalg;
pub mod quadrature;
pub mod semigroup;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
