//! Densities of primes classified by the residue class of the multiplicative
//! order or of the residual index of a fixed rational base, together with the
//! unconditional prime-census machinery used to check every computable
//! prediction.
//!
//! The crate is `no_std` (alloc required); IO, parallel drivers and file
//! formats live in the companion `ordidx` CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

/// Float functions that need an explicit implementation source under
/// `no_std` (libm via num-traits).
pub(crate) mod fmath {
    pub(crate) fn sqrt(x: f64) -> f64 {
        num_traits::Float::sqrt(x)
    }
    pub(crate) fn ln(x: f64) -> f64 {
        num_traits::Float::ln(x)
    }
    pub(crate) fn cos(x: f64) -> f64 {
        num_traits::Float::cos(x)
    }
    pub(crate) fn sin(x: f64) -> f64 {
        num_traits::Float::sin(x)
    }
    pub(crate) fn floor(x: f64) -> f64 {
        num_traits::Float::floor(x)
    }
}

pub mod arith;
pub mod characters;
pub mod densities;
pub mod empirical;
pub mod quadfields;

pub use arith::{DecomposedBase, Factored, Rational};
