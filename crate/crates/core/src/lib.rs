//! Exact and sublinear evaluation of the fractional-part difference sums
//!
//! ```text
//! W(x;a,b) = Σ_{n≥0} |{x/(n+a)} − {x/(n+b)}|
//! V(x;a,b) = Σ_{n≥0}  ({x/(n+a)} − {x/(n+b)})
//! ```
//!
//! for rational `x > 0` and `0 < a < b`, together with the block decomposition
//! behind their asymptotics, the remainder sums `R_j`, the main term
//! `(2/π)·ζ(3/2)·√(cx)` and an application to summatory functions of `f * 1`
//! for mean-zero periodic `f`.
//!
//! Every finite quantity is computed exactly over the rationals. Quantities
//! involving infinite series (the tail `F(t)`, `ζ(3/2)`, `π`) are returned as
//! [`BoundedReal`] enclosures whose radius is a rigorous bound.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod blocks;
pub mod checks;
pub mod directsum;
mod error;
pub mod exactnum;
pub mod periodic;

pub use error::Error;
pub use exactnum::{BoundedReal, Endpoint, Rational};

pub type Result<T, E = Error> = core::result::Result<T, E>;
