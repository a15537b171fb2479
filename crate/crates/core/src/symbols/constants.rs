use std::f64::consts::PI;

use super::quadrature::SphereQuadrature;

/// `Γ(k / 2)` for a positive integer `k`, by the recursion from `Γ(1/2)` or `Γ(1)`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "Γ has a pole at 0");
    let (mut value, mut twice) = if k % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while twice < k {
        value *= twice as f64 / 2.0;
        twice += 2;
    }
    value
}

/// Surface measure of `S^{d-1}`, `2π^{d/2} / Γ(d/2)`.
pub fn sphere_measure(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d as u32)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫_{S^{d-1}} (1 − s_d²)^{d/2} ds = 2π^{d/2} Γ(d − 1/2) / (Γ((d−1)/2) (d−1)!)`.
pub fn transverse_integral(d: usize) -> f64 {
    assert!(d >= 2, "needs d >= 2");
    2.0 * PI.powf(d as f64 / 2.0) * gamma_half(2 * d as u32 - 1)
        / (gamma_half(d as u32 - 1) * factorial(d - 1))
}

pub fn transverse_integral_quadrature(d: usize, quad: &SphereQuadrature) -> f64 {
    assert_eq!(quad.dim(), d, "quadrature dimension mismatch");
    quad.integrate(|s| {
        let last = s[d - 1];
        (1.0 - last * last).max(0.0).powf(d as f64 / 2.0)
    })
}

fn spin_dim(d: usize) -> f64 {
    (1usize << (d / 2)) as f64
}

fn from_integral(d: usize, spin: f64, integral: f64) -> f64 {
    (spin * integral / d as f64).powf(1.0 / d as f64) / (2.0 * PI)
}

/// `κ_d` in gamma-function form. Panics for `d < 2`.
pub fn kappa(d: usize) -> f64 {
    from_integral(d, spin_dim(d), transverse_integral(d))
}

/// `κ′_d = N^{-1/d} κ_d`, the same constant without the spin multiplicity.
pub fn kappa_prime(d: usize) -> f64 {
    from_integral(d, 1.0, transverse_integral(d))
}

pub fn kappa_quadrature(d: usize, quad: &SphereQuadrature) -> f64 {
    from_integral(d, spin_dim(d), transverse_integral_quadrature(d, quad))
}

pub fn kappa_prime_quadrature(d: usize, quad: &SphereQuadrature) -> f64 {
    from_integral(d, 1.0, transverse_integral_quadrature(d, quad))
}
