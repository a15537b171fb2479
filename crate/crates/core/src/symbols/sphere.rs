use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::SphereQuadrature;
use crate::error::{Error, Result};

/// `coeff · s_1^{e_1} ⋯ s_d^{e_d}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: Complex64,
}

/// A function on the unit sphere `S^{d−1}`, the direction part of a homogeneous multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawSphere")]
pub enum SphereFunction {
    /// Polynomial in the coordinates `s_1, …, s_d`.
    Polynomial { dim: usize, terms: Vec<Monomial> },
    /// Indicator of the half-open arc `θ ∈ [start, end)` of `S¹`, `θ = atan2(s_2, s_1) ∈ [0, 2π)`.
    Arc { start: f64, end: f64 },
    /// Values on the uniform angle grid `2πj/M` of `S¹`, interpolated linearly and periodically.
    AngularTable { values: Vec<Complex64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawSphere {
    Polynomial { dim: usize, terms: Vec<Monomial> },
    Arc { start: f64, end: f64 },
    AngularTable { values: Vec<Complex64> },
}

impl TryFrom<RawSphere> for SphereFunction {
    type Error = Error;

    fn try_from(raw: RawSphere) -> Result<Self> {
        match raw {
            RawSphere::Polynomial { dim, terms } => Self::polynomial(dim, terms),
            RawSphere::Arc { start, end } => Self::arc(start, end),
            RawSphere::AngularTable { values } => Self::angular_table(values),
        }
    }
}

fn angle(s: &[f64]) -> f64 {
    let theta = s[1].atan2(s[0]);
    if theta < 0.0 {
        theta + 2.0 * PI
    } else {
        theta
    }
}

impl SphereFunction {
    pub fn polynomial(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension { got: dim, min: 2 });
        }
        if let Some(bad) = terms.iter().find(|m| m.exponents.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "monomial exponents {:?} on S^{}",
                bad.exponents,
                dim - 1
            )));
        }
        Ok(Self::Polynomial { dim, terms })
    }

    pub fn constant(dim: usize, c: impl Into<Complex64>) -> Self {
        Self::Polynomial {
            dim,
            terms: vec![Monomial {
                exponents: vec![0; dim],
                coeff: c.into(),
            }],
        }
    }

    /// `s_axis^power` (zero-based axis).
    pub fn coordinate_power(dim: usize, axis: usize, power: u32) -> Self {
        assert!(axis < dim);
        let mut exponents = vec![0; dim];
        exponents[axis] = power;
        Self::Polynomial {
            dim,
            terms: vec![Monomial {
                exponents,
                coeff: Complex64::new(1.0, 0.0),
            }],
        }
    }

    pub fn arc(start: f64, end: f64) -> Result<Self> {
        if !(0.0 <= start && start < end && end <= 2.0 * PI) {
            return Err(Error::InvalidArgument(format!(
                "arc [{start}, {end}) must satisfy 0 <= start < end <= 2π"
            )));
        }
        Ok(Self::Arc { start, end })
    }

    pub fn angular_table(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty angular table".into()));
        }
        Ok(Self::AngularTable { values })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polynomial { dim, .. } => *dim,
            Self::Arc { .. } | Self::AngularTable { .. } => 2,
        }
    }

    /// Evaluates at a unit vector `s`.
    pub fn eval(&self, s: &[f64]) -> Complex64 {
        debug_assert_eq!(s.len(), self.dim());
        match self {
            Self::Polynomial { terms, .. } => terms
                .iter()
                .map(|m| {
                    let v: f64 = m
                        .exponents
                        .iter()
                        .zip(s)
                        .map(|(&e, &x)| x.powi(e as i32))
                        .product();
                    m.coeff * v
                })
                .sum(),
            Self::Arc { start, end } => {
                let theta = angle(s);
                if *start <= theta && theta < *end {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Self::AngularTable { values } => {
                let m = values.len();
                let x = angle(s) / (2.0 * PI) * m as f64;
                let j = (x.floor() as usize) % m;
                let frac = x - x.floor();
                values[j] * (1.0 - frac) + values[(j + 1) % m] * frac
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Self::Polynomial { terms, .. } => terms.iter().all(|m| m.coeff.im == 0.0),
            Self::Arc { .. } => true,
            Self::AngularTable { values } => values.iter().all(|v| v.im == 0.0),
        }
    }

    /// `‖g‖_{L_p(S^{d−1})}` by the given quadrature.
    pub fn lp_norm(&self, p: f64, quad: &SphereQuadrature) -> Result<f64> {
        sphere_lp_norm(self, p, quad)
    }
}

/// `‖g‖_{L_p(S^{d−1})}` by the given quadrature.
pub fn sphere_lp_norm(g: &SphereFunction, p: f64, quad: &SphereQuadrature) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if quad.dim() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "function on S^{} with a quadrature on S^{}",
            g.dim() - 1,
            quad.dim() - 1
        )));
    }
    Ok(quad.integrate(|s| g.eval(s).norm().powf(p)).powf(1.0 / p))
}
