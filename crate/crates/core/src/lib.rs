//! Exact arithmetic for Edwards and Weierstrass curves over the truncated
//! p-adic rings Z/p^k.
//!
//! The crate provides:
//!
//! * [`ring`] — the base ring Z/p^k: unit inversion, valuations,
//!   quadratic-residue tests and Hensel square roots;
//! * [`series`] — exact-rational Laurent/power series, the Weierstrass
//!   ℘-expansion and its compositional machinery;
//! * [`weierstrass`] — both Weierstrass curve shapes with a group law that
//!   stays correct over the ring (complete pair of addition laws), point
//!   counting, Hensel lifting, and the exponential/logarithm onto the
//!   kernel of reduction;
//! * [`edwards`] — complete Edwards curve arithmetic and divisor-class
//!   reduction to canonical forms;
//! * [`bridge`] — the birational equivalence between the two models;
//! * [`exp`] — the Edwards exponential map and its exact inverse;
//! * [`split`] — the split representation (P, c) of points over Z/p^k and
//!   a benchmark harness comparing it with direct ring additions.
//!
//! All arithmetic is exact: arbitrary-precision integers and rationals,
//! never floating point.

pub mod bridge;
pub mod edwards;
mod error;
pub mod exp;
pub mod ring;
pub mod selftest;
pub mod series;
pub mod split;
pub mod weierstrass;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
