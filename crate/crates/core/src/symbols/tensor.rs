use num_complex::Complex64;

use super::quadrature::{SphereQuadrature, TorusGrid};
use super::sphere::SphereFunction;
use super::torus::{gradient, TorusFunction};
use crate::error::{Error, Result};

/// A finite sum `Σ_n f_n ⊗ g_n` on `T^d × S^{d−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTensor {
    dim: usize,
    terms: Vec<(TorusFunction, SphereFunction)>,
}

impl SymbolTensor {
    pub fn new(terms: Vec<(TorusFunction, SphereFunction)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(f, _)| f.dim())
            .ok_or_else(|| Error::InvalidArgument("a symbol needs at least one term".into()))?;
        if dim < 2 {
            return Err(Error::InvalidDimension { got: dim, min: 2 });
        }
        for (f, g) in &terms {
            if f.dim() != dim || g.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "term on T^{} × S^{} in a symbol over d = {dim}",
                    f.dim(),
                    g.dim() - 1
                )));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn single(f: TorusFunction, g: SphereFunction) -> Result<Self> {
        Self::new(vec![(f, g)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(TorusFunction, SphereFunction)] {
        &self.terms
    }

    pub fn eval(&self, t: &[f64], s: &[f64]) -> Complex64 {
        self.terms.iter().map(|(f, g)| f.eval(t) * g.eval(s)).sum()
    }

    pub fn band_limit(&self) -> usize {
        self.terms
            .iter()
            .map(|(f, _)| f.band_limit())
            .max()
            .unwrap_or(0)
    }

    /// Default torus grid for this symbol.
    pub fn default_grid(&self) -> TorusGrid {
        TorusGrid::for_band_limit(self.band_limit())
    }

    pub fn lp_norm(&self, p: f64, grid: TorusGrid, quad: &SphereQuadrature) -> Result<f64> {
        symbol_lp_norm(self, p, grid, quad)
    }
}

/// Tensor-product quadrature of `∫∫ |F(t, s)|^p`, with the torus grid doubled
/// until the value moves by less than `1e-8` relative.
fn product_norm(
    dim: usize,
    p: f64,
    grid: TorusGrid,
    quad: &SphereQuadrature,
    mut sum_at: impl FnMut(TorusGrid) -> Result<f64>,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if quad.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "symbol over d = {dim} with a quadrature on S^{}",
            quad.dim() - 1
        )));
    }
    let mut eval =
        |g: TorusGrid| -> Result<f64> { Ok((sum_at(g)? * g.cell_volume(dim)).powf(1.0 / p)) };
    let mut grid = grid;
    let mut value = eval(grid)?;
    for _ in 0..3 {
        let next_grid = grid.doubled();
        if next_grid.points_per_axis.pow(dim as u32) * quad.len() > 1 << 27 {
            break;
        }
        let next = eval(next_grid)?;
        let done = (next - value).abs() <= 1e-8 * next.abs().max(f64::MIN_POSITIVE);
        grid = next_grid;
        value = next;
        if done {
            break;
        }
    }
    Ok(value)
}

/// `‖Σ f_n ⊗ g_n‖_{L_p(T^d × S^{d−1})}`.
pub fn symbol_lp_norm(
    symbol: &SymbolTensor,
    p: f64,
    grid: TorusGrid,
    quad: &SphereQuadrature,
) -> Result<f64> {
    let sphere_vals: Vec<Vec<Complex64>> = symbol
        .terms
        .iter()
        .map(|(_, g)| quad.nodes().map(|s| g.eval(s)).collect())
        .collect();
    let weights = quad.weights();
    product_norm(symbol.dim, p, grid, quad, |grid| {
        let torus_vals = symbol
            .terms
            .iter()
            .map(|(f, _)| f.sample_grid(grid))
            .collect::<Result<Vec<_>>>()?;
        let points = torus_vals[0].len();
        let mut total = 0.0;
        for i in 0..points {
            for (j, w) in weights.iter().enumerate() {
                let v: Complex64 = torus_vals
                    .iter()
                    .zip(&sphere_vals)
                    .map(|(ft, gs)| ft[i] * gs[j])
                    .sum();
                total += w * v.norm().powf(p);
            }
        }
        Ok(total)
    })
}

/// Pointwise modulus of the principal symbol of the quantized derivative,
/// `(|∇f(t)|² − ⟨s, ∇f(t)⟩²)^{1/2}`, for real `f`.
#[derive(Clone, Debug)]
pub struct SymbolDensity {
    dim: usize,
    grad: Vec<TorusFunction>,
}

pub fn dbar_symbol_density(f: &TorusFunction) -> Result<SymbolDensity> {
    if !f.is_real() {
        return Err(Error::NotRealValued(
            "the quantized-derivative symbol is defined here for real f".into(),
        ));
    }
    Ok(SymbolDensity {
        dim: f.dim(),
        grad: gradient(f),
    })
}

fn transverse(grad: &[f64], s: &[f64]) -> f64 {
    let g2: f64 = grad.iter().map(|x| x * x).sum();
    let along: f64 = grad.iter().zip(s).map(|(a, b)| a * b).sum();
    (g2 - along * along).max(0.0).sqrt()
}

impl SymbolDensity {
    pub fn gradient(&self) -> &[TorusFunction] {
        &self.grad
    }

    pub fn eval(&self, t: &[f64], s: &[f64]) -> f64 {
        let g: Vec<f64> = self.grad.iter().map(|h| h.eval(t).re).collect();
        transverse(&g, s)
    }

    /// `‖(|∇f|² − ⟨s,∇f⟩²)^{1/2}‖_{L_p(T^d × S^{d−1})}`.
    pub fn lp_norm(&self, p: f64, grid: TorusGrid, quad: &SphereQuadrature) -> Result<f64> {
        let nodes: Vec<&[f64]> = quad.nodes().collect();
        let weights = quad.weights();
        product_norm(self.dim, p, grid, quad, |grid| {
            let samples = self
                .grad
                .iter()
                .map(|h| h.sample_grid(grid))
                .collect::<Result<Vec<_>>>()?;
            let points = samples[0].len();
            let mut total = 0.0;
            let mut g = vec![0.0; self.dim];
            for i in 0..points {
                for (k, col) in samples.iter().enumerate() {
                    g[k] = col[i].re;
                }
                for (s, w) in nodes.iter().zip(weights) {
                    total += w * transverse(&g, s).powf(p);
                }
            }
            Ok(total)
        })
    }

    pub fn default_grid(&self) -> TorusGrid {
        TorusGrid::for_band_limit(self.grad.iter().map(|h| h.band_limit()).max().unwrap_or(0))
    }
}
