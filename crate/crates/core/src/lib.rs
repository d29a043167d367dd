//! Numerical laboratory for uncertainty principles with lacunary spectra.
//!
//! Functions whose Fourier transform lives near a lacunary set of integers
//! cannot hide their energy in the complement of a relatively dense set. This
//! crate builds the pieces needed to check that statement numerically: integer
//! spectra and their lacunarity parameter ([`lacunary`]), interval sets and
//! their density functionals ([`sets`]), trigonometric polynomials and the
//! Λ(4) inequality ([`trigpoly`]), a fixed plateau bump ([`bump`]), band
//! functions and their periodic slice decomposition ([`bandfn`]),
//! periodizations ([`periodize`]) and sharp concentration constants
//! ([`concentration`]). The [`runner`] module drives them from JSON configs
//! and writes CSV.

// `!(x > y)` forms are used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandfn;
pub mod bump;
pub mod concentration;
pub mod error;
pub mod lacunary;
pub mod periodize;
pub mod quadrature;
pub mod runner;
pub mod sets;
pub mod sum;
pub mod trigpoly;

pub use error::{Error, Result};
