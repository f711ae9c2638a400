#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Numerical machinery for random sampling of bandlimited functions.
//!
//! The crate discretizes the time-frequency limiting operator (spectrum of the
//! prolate spheroidal eigenproblem), synthesizes functions that are
//! concentrated on the cube `C_R = [-R/2, R/2]^d`, draws random sampling sets,
//! and measures empirical frame bounds next to the explicit probability bounds
//! that accompany them.
//!
//! Indexing conventions: one-dimensional eigenvalues `mu_k` are 0-based
//! (`mu_0` is the top eigenvalue); d-dimensional eigenvalues `lambda_n` are
//! 1-based in the mathematics, stored at vector index `n - 1`.

pub mod error;
pub mod frame;
pub mod function_space;
pub mod negative;
pub mod point_process;
pub mod quadrature;
pub mod rng;
pub mod spectrum;
pub mod theory;

pub use error::{Error, Result};
pub use function_space::{BandlimitedFunction, ConcentrationClass};
pub use point_process::PointSet;
pub use quadrature::QuadratureRule;
pub use spectrum::{Spectrum1D, SpectrumD};

/// Complex scalar used for function values and expansion coefficients.
pub type Complex = num_complex::Complex64;
