//! Finite-dimensional semigroup calculus for 2x2 block operator matrices.
//!
//! The crate works with generators of the form `[[A, B], [C, D]]` acting on
//! a product space, either with a diagonal domain (`blocksg`, `dyson`,
//! `stability`) or with a boundary coupling `L u = x` absorbed into the
//! coordinates (`coupled`, `models`). Every operator is a dense [`Matrix`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocksg;
pub mod coupled;
pub mod dyson;
mod error;
pub mod matcore;
pub mod models;
pub mod quadrature;
pub mod semigroup;
pub mod stability;

pub use error::{Error, Result};
pub use matcore::{Matrix, C64};
