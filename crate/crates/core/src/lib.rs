//! Singular-value spectra of finite Fourier truncations of operators on the
//! torus `T^d`, with estimators for Weyl-type coefficients `lim k^{1/p} μ(k)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`clifford`]: gamma matrices for the Dirac operator.
//! - [`lattice`]: the truncated frequency set `{n ∈ Z^d : |n| <= R}`.
//! - [`symbols`]: functions on `T^d` and `S^{d−1}`, principal symbols and
//!   the constants `κ_d`, `κ′_d`, all by quadrature or closed form.
//! - [`operators`]: dense and sparse matrices of multipliers, multiplication
//!   operators, `sgn D` and the quantized derivative `đf`.
//! - [`spectra`]: singular values, rearrangements, window estimators.
//! - [`harness`]: named experiments with their configs and reports.

// `!(x >= y)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod operators;
pub mod spectra;
pub mod symbols;

pub use clifford::{make_gammas, CliffordRep};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, Report};
pub use lattice::LatticeBasis;
pub use operators::OperatorMatrix;
pub use spectra::{SingularSpectrum, WeylEstimate, WindowPolicy};
pub use symbols::{SphereFunction, SphereQuadrature, SymbolTensor, TorusFunction};
