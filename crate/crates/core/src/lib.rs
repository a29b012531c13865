//! Numerical toolkit for the Hermite operator `H = -Δ + |x|^2` on `R^n`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bmo;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod hermite;
pub mod input;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
