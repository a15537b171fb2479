use faer::{Mat, Side};

use super::constants::{gamma_half, sphere_measure};

/// Uniform grid on `T^d` with `points_per_axis` nodes `2πj/m` per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    pub points_per_axis: usize,
}

impl TorusGrid {
    pub fn new(points_per_axis: usize) -> Self {
        Self { points_per_axis }
    }

    /// Four nodes per unit of band limit, never fewer than eight.
    pub fn for_band_limit(band_limit: usize) -> Self {
        Self::new((4 * band_limit).max(8))
    }

    pub fn doubled(self) -> Self {
        Self::new(2 * self.points_per_axis)
    }

    pub fn cell_volume(&self, d: usize) -> f64 {
        (2.0 * std::f64::consts::PI / self.points_per_axis as f64).powi(d as i32)
    }
}

/// Gauss rule for `∫_{-1}^{1} h(x) (1 − x²)^α dx` via Golub–Welsch.
///
/// `α = 0` is Gauss–Legendre. Returns `(nodes, weights)` with nodes ascending.
pub fn gauss_gegenbauer(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0);
    let mut jacobi = Mat::<f64>::zeros(n, n);
    for k in 1..n {
        let k = k as f64;
        let beta =
            k * (k + 2.0 * alpha) / ((2.0 * k + 2.0 * alpha - 1.0) * (2.0 * k + 2.0 * alpha + 1.0));
        let b = beta.sqrt();
        let i = k as usize;
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    // μ0 = ∫(1 − x²)^α dx = √π Γ(α + 1) / Γ(α + 3/2)
    let mu0 = moment_zero(alpha);
    let eig = jacobi
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric tridiagonal eigenproblem converges");
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (s[i], mu0 * u[(0, i)] * u[(0, i)]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize: the rule is exactly even for this weight.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

fn moment_zero(alpha: f64) -> f64 {
    let twice = 2.0 * alpha;
    assert!(
        (twice - twice.round()).abs() < 1e-12,
        "only integer and half-integer exponents are supported"
    );
    let twice = twice.round() as i64;
    // Γ(α + 1) = Γ((2α + 2)/2), Γ(α + 3/2) = Γ((2α + 3)/2)
    std::f64::consts::PI.sqrt() * gamma_half((twice + 2) as u32) / gamma_half((twice + 3) as u32)
}

/// Product quadrature on `S^{d-1}`.
///
/// `d = 2` uses a uniform midpoint grid in the angle. For `d >= 3` the last
/// coordinate `x = s_d` takes Gauss nodes for the weight `(1 − x²)^{(d−3)/2}`
/// (Gauss–Legendre when `d = 3`) and the remaining coordinates are
/// `√(1 − x²)` times a rule on `S^{d−2}`, recursively.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Default resolution, exact for polynomials of degree well above `2d`.
    pub fn new(d: usize) -> Self {
        let (polar, azimuthal) = match d {
            2 => (0, 512),
            3 => (48, 96),
            4 => (32, 64),
            5 => (20, 40),
            _ => (12, 24),
        };
        Self::with_resolution(d, polar, azimuthal)
    }

    /// `polar` Gauss nodes per latitude level, `azimuthal` nodes on the innermost circle.
    pub fn with_resolution(d: usize, polar: usize, azimuthal: usize) -> Self {
        assert!(d >= 2, "sphere quadrature needs d >= 2");
        assert!(azimuthal >= 2 && (d == 2 || polar >= 1));
        let step = 2.0 * std::f64::consts::PI / azimuthal as f64;
        let mut nodes = Vec::with_capacity(2 * azimuthal);
        let mut weights = Vec::with_capacity(azimuthal);
        for j in 0..azimuthal {
            let theta = step * (j as f64 + 0.5);
            nodes.extend([theta.cos(), theta.sin()]);
            weights.push(step);
        }
        let mut level = 2;
        while level < d {
            level += 1;
            let alpha = (level as f64 - 3.0) / 2.0;
            let (xs, ws) = gauss_gegenbauer(polar, alpha);
            let inner = level - 1;
            let mut next_nodes = Vec::with_capacity(nodes.len() / inner * level * polar);
            let mut next_weights = Vec::with_capacity(weights.len() * polar);
            for (&x, &wx) in xs.iter().zip(&ws) {
                let r = (1.0 - x * x).max(0.0).sqrt();
                for (chunk, &w) in nodes.chunks_exact(inner).zip(&weights) {
                    next_nodes.extend(chunk.iter().map(|c| r * c));
                    next_nodes.push(x);
                    next_weights.push(wx * w);
                }
            }
            nodes = next_nodes;
            weights = next_weights;
        }
        Self {
            dim: d,
            nodes,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(s, w)| w * f(s)).sum()
    }

    /// Relative deviation of the weight sum from `m(S^{d-1})`.
    pub fn measure_error(&self) -> f64 {
        let m = sphere_measure(self.dim);
        (self.total_weight() - m).abs() / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_gegenbauer(3, 0.0);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-14 && x[1] == 0.0 && (x[2] - r).abs() < 1e-14);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-14 && (w[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn gegenbauer_half_weight_is_exact() {
        // ∫ x² √(1 − x²) dx = π/8
        let (x, w) = gauss_gegenbauer(4, 0.5);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((v - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_sphere_measure() {
        for d in 2..=6 {
            let q = SphereQuadrature::new(d);
            assert!(q.measure_error() < 1e-12, "d={d}");
            for s in q.nodes() {
                let n2: f64 = s.iter().map(|c| c * c).sum();
                assert!((n2 - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn low_degree_moments_are_exact() {
        // ∫_{S^{d-1}} s_1² = m/d, ∫ s_1⁴ = 3m/(d(d+2)), ∫ s_1² s_2² = m/(d(d+2))
        for d in 2..=5 {
            let q = SphereQuadrature::new(d);
            let m = sphere_measure(d);
            let dd = d as f64;
            let a = q.integrate(|s| s[0] * s[0]);
            let b = q.integrate(|s| s[0].powi(4));
            let c = q.integrate(|s| s[0] * s[0] * s[d - 1] * s[d - 1]);
            let odd = q.integrate(|s| s[0] * s[1] * s[1]);
            assert!((a - m / dd).abs() < 1e-12 * m);
            assert!((b - 3.0 * m / (dd * (dd + 2.0))).abs() < 1e-12 * m);
            assert!((c - m / (dd * (dd + 2.0))).abs() < 1e-12 * m);
            assert!(odd.abs() < 1e-12 * m);
            let deg = 2 * d as i32;
            let exact = q.integrate(|s| s[d - 1].powi(deg));
            // ∫ s_d^{2k} = m · (2k−1)!! / (d (d+2) ⋯ (d+2k−2))
            let k = d;
            let mut ratio = 1.0;
            for i in 0..k {
                ratio *= (2 * i + 1) as f64 / (dd + 2.0 * i as f64);
            }
            assert!((exact - m * ratio).abs() < 1e-12 * m, "d={d}");
        }
    }

    #[test]
    fn torus_grid_rules() {
        assert_eq!(TorusGrid::for_band_limit(0).points_per_axis, 8);
        assert_eq!(TorusGrid::for_band_limit(5).points_per_axis, 20);
        assert!((TorusGrid::new(8).cell_volume(2) - (PI / 4.0).powi(2)).abs() < 1e-15);
    }
}
