//! Functions on the torus and on the sphere, principal symbols `Σ f_n ⊗ g_n`
//! and the asymptotic constants `κ_d`, `κ′_d`.
//!
//! Everything here is evaluated by quadrature or closed form. Nothing in this
//! module touches operator matrices, which keeps every reference value
//! independent of the spectral computations it is compared against.

mod constants;
mod quadrature;
mod sphere;
mod tensor;
mod torus;

pub use constants::{
    gamma_half, kappa, kappa_prime, kappa_prime_quadrature, kappa_quadrature, sphere_measure,
    transverse_integral, transverse_integral_quadrature,
};
pub use quadrature::{gauss_gegenbauer, SphereQuadrature, TorusGrid};
pub use sphere::{sphere_lp_norm, Monomial, SphereFunction};
pub use tensor::{dbar_symbol_density, symbol_lp_norm, SymbolDensity, SymbolTensor};
pub use torus::{
    box_indicator, gradient, torus_from_samples, torus_lp_norm, vector_lp_norm, TorusFunction,
    TorusSamples,
};
