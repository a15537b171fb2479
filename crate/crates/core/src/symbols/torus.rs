use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::quadrature::TorusGrid;
use crate::error::{Error, Result};

/// Coefficients smaller than this (relative to the largest) are dropped after a transform.
const PRUNE_RELATIVE: f64 = 1e-13;

/// A finite Fourier series `f(t) = Σ f̂(n) e^{i⟨n,t⟩}` on `T^d = (R/2πZ)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusFunction {
    dim: usize,
    coeffs: BTreeMap<Vec<i32>, Complex64>,
}

impl TorusFunction {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: impl Into<Complex64>) -> Self {
        Self::exponential(vec![0; dim], c)
    }

    /// `c · e^{i⟨k,t⟩}`.
    pub fn exponential(k: Vec<i32>, c: impl Into<Complex64>) -> Self {
        let dim = k.len();
        let mut f = Self::zero(dim);
        f.add_coeff(k, c.into());
        f
    }

    /// `amplitude · cos(t_axis)`.
    pub fn cosine(dim: usize, axis: usize, amplitude: f64) -> Self {
        assert!(axis < dim);
        let mut k = vec![0; dim];
        k[axis] = 1;
        let mut f = Self::exponential(k.clone(), amplitude / 2.0);
        k[axis] = -1;
        f.add_coeff(k, (amplitude / 2.0).into());
        f
    }

    /// `amplitude · sin(t_axis)`.
    pub fn sine(dim: usize, axis: usize, amplitude: f64) -> Self {
        assert!(axis < dim);
        let mut k = vec![0; dim];
        k[axis] = 1;
        let mut f = Self::exponential(k.clone(), Complex64::new(0.0, -amplitude / 2.0));
        k[axis] = -1;
        f.add_coeff(k, Complex64::new(0.0, amplitude / 2.0));
        f
    }

    /// Sums repeated frequencies; exact zeros are not stored.
    pub fn from_coeffs(
        dim: usize,
        coeffs: impl IntoIterator<Item = (Vec<i32>, Complex64)>,
    ) -> Result<Self> {
        let mut f = Self::zero(dim);
        for (n, c) in coeffs {
            if n.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "frequency {n:?} in a {dim}-dimensional function"
                )));
            }
            f.add_coeff(n, c);
        }
        Ok(f)
    }

    fn add_coeff(&mut self, n: Vec<i32>, c: Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        match self.coeffs.entry(n) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == zero {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c != zero {
                    e.insert(c);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, n: &[i32]) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl ExactSizeIterator<Item = (&[i32], Complex64)> + '_ {
        self.coeffs.iter().map(|(n, c)| (n.as_slice(), *c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|n_j|` over the support.
    pub fn band_limit(&self) -> usize {
        self.coeffs
            .keys()
            .flat_map(|n| n.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// `true` iff `f̂(−n) = conj f̂(n)` for every `n`, up to `1e-12` relative.
    pub fn is_real(&self) -> bool {
        let scale = self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        self.coeffs.iter().all(|(n, c)| {
            let neg: Vec<i32> = n.iter().map(|x| -x).collect();
            (self.coeff(&neg) - c.conj()).norm() <= tol
        })
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim);
        self.coeffs
            .iter()
            .map(|(n, c)| {
                let phase: f64 = n.iter().zip(t).map(|(&k, &x)| k as f64 * x).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// Complex conjugate function: `n ↦ conj f̂(−n)`.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, c)| (n.iter().map(|x| -x).collect(), c.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Self::from_coeffs(
            self.dim,
            self.coeffs.iter().map(|(n, c)| (n.clone(), s * c)),
        )
        .expect("same dimension")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "adding functions on T^{} and T^{}",
                self.dim, other.dim
            )));
        }
        Self::from_coeffs(
            self.dim,
            self.coeffs
                .iter()
                .chain(&other.coeffs)
                .map(|(n, c)| (n.clone(), *c)),
        )
    }

    /// `(2π)^d Σ |f̂(n)|²`, the Parseval value of `‖f‖₂²`.
    pub fn l2_norm_sq_parseval(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32) * self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Values at the grid nodes `2πj/m`, row-major with the last axis fastest.
    pub fn sample_grid(&self, grid: TorusGrid) -> Result<Vec<Complex64>> {
        let m = grid.points_per_axis;
        let band = self.band_limit();
        if m < 2 * band + 1 {
            return Err(Error::GridTooSmall {
                points: m,
                band_limit: band,
            });
        }
        let mut data = vec![Complex64::new(0.0, 0.0); m.pow(self.dim as u32)];
        for (n, c) in &self.coeffs {
            let idx = n
                .iter()
                .fold(0usize, |acc, &k| acc * m + k.rem_euclid(m as i32) as usize);
            data[idx] += c;
        }
        transform_axes(&mut data, m, self.dim, FftDirection::Inverse);
        Ok(data)
    }

    pub fn to_terms(&self) -> Vec<(Vec<i32>, f64, f64)> {
        self.coeffs
            .iter()
            .map(|(n, c)| (n.clone(), c.re, c.im))
            .collect()
    }

    pub fn from_terms(dim: usize, terms: &[(Vec<i32>, f64, f64)]) -> Result<Self> {
        Self::from_coeffs(
            dim,
            terms
                .iter()
                .map(|(n, re, im)| (n.clone(), Complex64::new(*re, *im))),
        )
    }
}

impl Serialize for TorusFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_terms().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TorusFunction {
    /// The dimension is read off the first frequency, so the zero function
    /// (an empty list) deserializes as a 0-dimensional value; callers that know
    /// `d` should prefer [`TorusFunction::from_terms`].
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<(Vec<i32>, f64, f64)>::deserialize(deserializer)?;
        let dim = terms.first().map(|t| t.0.len()).unwrap_or(0);
        Self::from_terms(dim, &terms).map_err(serde::de::Error::custom)
    }
}

/// In-place multi-dimensional DFT over a row-major `m^d` array.
///
/// `Forward` computes `Σ x e^{-2πi jk/m}`, `Inverse` the same with `+`; neither is normalized.
fn transform_axes(data: &mut [Complex64], m: usize, d: usize, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(m, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Samples of a function on the uniform `m^d` grid `t = 2πj/m`.
#[derive(Clone, Debug)]
pub struct TorusSamples {
    pub dim: usize,
    pub points_per_axis: usize,
    /// Row-major, last axis fastest.
    pub values: Vec<Complex64>,
}

impl TorusSamples {
    pub fn from_fn(dim: usize, points_per_axis: usize, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let m = points_per_axis;
        let h = 2.0 * PI / m as f64;
        let total = m.pow(dim as u32);
        let mut t = vec![0.0; dim];
        let values = (0..total)
            .map(|mut idx| {
                for axis in (0..dim).rev() {
                    t[axis] = h * (idx % m) as f64;
                    idx /= m;
                }
                f(&t)
            })
            .collect();
        Self {
            dim,
            points_per_axis,
            values,
        }
    }
}

/// Fourier coefficients with `|n_j| <= band_limit` of uniformly sampled data.
pub fn torus_from_samples(samples: &TorusSamples, band_limit: usize) -> Result<TorusFunction> {
    let m = samples.points_per_axis;
    let d = samples.dim;
    if m < 2 * band_limit + 1 {
        return Err(Error::GridTooSmall {
            points: m,
            band_limit,
        });
    }
    if samples.values.len() != m.pow(d as u32) {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for a {m}^{d} grid",
            samples.values.len()
        )));
    }
    let mut data = samples.values.clone();
    transform_axes(&mut data, m, d, FftDirection::Forward);
    let norm = 1.0 / data.len() as f64;
    let largest = data.iter().map(|c| c.norm()).fold(0.0, f64::max) * norm;
    let cutoff = PRUNE_RELATIVE * largest.max(1.0);
    let band = band_limit as i64;
    let mut coeffs = Vec::new();
    for (idx, c) in data.iter().enumerate() {
        let c = c * norm;
        if c.norm() <= cutoff {
            continue;
        }
        let mut n = vec![0i32; d];
        let mut rest = idx;
        for axis in (0..d).rev() {
            let k = (rest % m) as i64;
            rest /= m;
            let k = if k > (m as i64) / 2 { k - m as i64 } else { k };
            n[axis] = k as i32;
        }
        if n.iter().all(|&k| (k as i64).abs() <= band) {
            coeffs.push((n, c));
        }
    }
    TorusFunction::from_coeffs(d, coeffs)
}

/// `∂_k f` for each `k`: coefficients `i n_k f̂(n)`.
pub fn gradient(f: &TorusFunction) -> Vec<TorusFunction> {
    (0..f.dim)
        .map(|k| {
            TorusFunction::from_coeffs(
                f.dim,
                f.coeffs
                    .iter()
                    .filter(|(n, _)| n[k] != 0)
                    .map(|(n, c)| (n.clone(), Complex64::new(0.0, n[k] as f64) * c)),
            )
            .expect("same dimension")
        })
        .collect()
}

/// `(∫ |F|^p)^{1/p}` where `|F|` is computed from the grid samples of `parts`;
/// the grid is doubled until consecutive values agree to `1e-8` relative.
fn converged_norm(
    dim: usize,
    parts: &[TorusFunction],
    p: f64,
    start: TorusGrid,
    modulus: impl Fn(&[Vec<Complex64>], usize) -> f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let eval = |grid: TorusGrid| -> Result<f64> {
        let samples = parts
            .iter()
            .map(|f| f.sample_grid(grid))
            .collect::<Result<Vec<_>>>()?;
        let total = grid.points_per_axis.pow(dim as u32);
        let sum: f64 = (0..total).map(|i| modulus(&samples, i).powf(p)).sum();
        Ok((sum * grid.cell_volume(dim)).powf(1.0 / p))
    };
    let mut grid = start;
    let mut value = eval(grid)?;
    // 4M^d samples at most; beyond that accept the last refinement.
    for _ in 0..4 {
        let next_grid = grid.doubled();
        if next_grid.points_per_axis.pow(dim as u32) > 1 << 24 {
            break;
        }
        let next = eval(next_grid)?;
        let converged = (next - value).abs() <= 1e-8 * next.abs().max(f64::MIN_POSITIVE);
        grid = next_grid;
        value = next;
        if converged {
            break;
        }
    }
    Ok(value)
}

/// `‖f‖_{L_p(T^d)}` by uniform-grid quadrature at four times the band limit.
pub fn torus_lp_norm(f: &TorusFunction, p: f64) -> Result<f64> {
    converged_norm(
        f.dim,
        std::slice::from_ref(f),
        p,
        TorusGrid::for_band_limit(f.band_limit()),
        |s, i| s[0][i].norm(),
    )
}

/// `‖(Σ_k |f_k|²)^{1/2}‖_{L_p(T^d)}`, e.g. `‖∇f‖_p` from [`gradient`].
pub fn vector_lp_norm(components: &[TorusFunction], p: f64) -> Result<f64> {
    let dim = components
        .first()
        .map(|f| f.dim)
        .ok_or_else(|| Error::InvalidArgument("no components".into()))?;
    if components.iter().any(|f| f.dim != dim) {
        return Err(Error::DimensionMismatch(
            "components on different tori".into(),
        ));
    }
    let band = components.iter().map(|f| f.band_limit()).max().unwrap_or(0);
    converged_norm(
        dim,
        components,
        p,
        TorusGrid::for_band_limit(band),
        |s, i| s.iter().map(|v| v[i].norm_sqr()).sum::<f64>().sqrt(),
    )
}

/// Fourier coefficients `|n_j| <= band_limit` of the indicator of a box
/// `Π [a_j, b_j)` in `[0, 2π)^d`.
///
/// Returns the function together with its relative L² truncation error
/// `‖χ − S χ‖₂ / ‖χ‖₂`.
pub fn box_indicator(intervals: &[(f64, f64)], band_limit: usize) -> Result<(TorusFunction, f64)> {
    let d = intervals.len();
    if d == 0 {
        return Err(Error::InvalidDimension { got: 0, min: 1 });
    }
    let full = 2.0 * PI;
    let mut axes: Vec<Vec<(i32, Complex64)>> = Vec::with_capacity(d);
    let mut measure = 1.0;
    for &(a, b) in intervals {
        if !(0.0 <= a && a < b && b <= full + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}) is not a sub-interval of [0, 2π)"
            )));
        }
        measure *= b - a;
        let whole = (b - a - full).abs() < 1e-12;
        let mut list = vec![(0, Complex64::new((b - a) / full, 0.0))];
        if !whole {
            for k in 1..=band_limit as i32 {
                for k in [k, -k] {
                    let kf = k as f64;
                    let c = (Complex64::from_polar(1.0, -kf * a)
                        - Complex64::from_polar(1.0, -kf * b))
                        / Complex64::new(0.0, full * kf);
                    if c.norm() > 1e-15 {
                        list.push((k, c));
                    }
                }
            }
        }
        axes.push(list);
    }
    let mut coeffs: Vec<(Vec<i32>, Complex64)> = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
    for list in &axes {
        coeffs = coeffs
            .iter()
            .flat_map(|(n, c)| {
                list.iter().map(move |&(k, ck)| {
                    let mut n = n.clone();
                    n.push(k);
                    (n, c * ck)
                })
            })
            .collect();
    }
    let f = TorusFunction::from_coeffs(d, coeffs)?;
    let captured = f.l2_norm_sq_parseval();
    let err = ((measure - captured).max(0.0) / measure).sqrt();
    Ok((f, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn samples_of_constant() {
        let s = TorusSamples::from_fn(2, 9, |_| c(3.0, 0.0));
        let f = torus_from_samples(&s, 4).unwrap();
        assert_eq!(f.support_len(), 1);
        assert!((f.coeff(&[0, 0]) - c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn samples_of_cosine_slice() {
        let s = TorusSamples::from_fn(1, 9, |t| c(2.0 * t[0].cos(), 0.0));
        let f = torus_from_samples(&s, 4).unwrap();
        assert_eq!(f.support_len(), 2);
        assert!((f.coeff(&[1]) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((f.coeff(&[-1]) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn samples_of_plane_wave() {
        let s = TorusSamples::from_fn(2, 8, |t| Complex64::from_polar(1.0, t[0] + 2.0 * t[1]));
        let f = torus_from_samples(&s, 3).unwrap();
        assert_eq!(f.support_len(), 1);
        assert!((f.coeff(&[1, 2]) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let s = TorusSamples::from_fn(1, 6, |_| c(1.0, 0.0));
        assert!(matches!(
            torus_from_samples(&s, 3),
            Err(Error::GridTooSmall { .. })
        ));
        let f = TorusFunction::exponential(vec![5], 1.0);
        assert!(f.sample_grid(TorusGrid::new(10)).is_err());
    }

    #[test]
    fn grid_sampling_round_trip() {
        let f = TorusFunction::from_coeffs(
            2,
            [
                (vec![1, -2], c(0.5, 0.25)),
                (vec![0, 3], c(-1.0, 2.0)),
                (vec![0, 0], c(0.1, 0.0)),
            ],
        )
        .unwrap();
        let grid = TorusGrid::new(12);
        let vals = f.sample_grid(grid).unwrap();
        let s = TorusSamples::from_fn(2, 12, |t| f.eval(t));
        for (a, b) in vals.iter().zip(&s.values) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = torus_from_samples(&s, 5).unwrap();
        assert_eq!(back.support_len(), 3);
        for (n, v) in f.coeffs() {
            assert!((back.coeff(n) - v).norm() < 1e-13);
        }
    }

    #[test]
    fn gradients() {
        let f = TorusFunction::cosine(2, 0, 2.0);
        let g = gradient(&f);
        assert!((g[0].coeff(&[1, 0]) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((g[0].coeff(&[-1, 0]) - c(0.0, -1.0)).norm() < 1e-15);
        assert!(g[1].is_zero());
        let t = [0.7, 0.1];
        assert!((g[0].eval(&t) - c(-2.0 * 0.7f64.sin(), 0.0)).norm() < 1e-14);

        let g = gradient(&TorusFunction::constant(3, 4.0));
        assert!(g.iter().all(|h| h.is_zero()));

        let f = TorusFunction::exponential(vec![1, 2], 1.0);
        assert!((gradient(&f)[1].coeff(&[1, 2]) - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn lp_norms() {
        let one = TorusFunction::constant(2, 1.0);
        assert!(close(torus_lp_norm(&one, 2.0).unwrap(), 2.0 * PI, 1e-12));
        let f = TorusFunction::cosine(2, 0, 2.0);
        assert!(close(
            torus_lp_norm(&f, 2.0).unwrap(),
            2.0 * PI * 2f64.sqrt(),
            1e-12
        ));
        let f = one.add(&TorusFunction::cosine(2, 0, 1.0)).unwrap();
        assert!(close(
            torus_lp_norm(&f, 2.0).unwrap(),
            6f64.sqrt() * PI,
            1e-12
        ));
        // ∫_{T¹} |cos t|³ = 8/3; the kinks at the zeros limit the grid rule
        let f = TorusFunction::cosine(1, 0, 1.0);
        assert!(close(
            torus_lp_norm(&f, 3.0).unwrap(),
            (8.0f64 / 3.0).cbrt(),
            1e-6
        ));
        assert!(torus_lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn gradient_norm_of_cos_sum() {
        // ∇(cos t1 + cos t2) = −(sin t1, sin t2), ‖·‖₂² = 4π²
        let f = TorusFunction::cosine(2, 0, 1.0)
            .add(&TorusFunction::cosine(2, 1, 1.0))
            .unwrap();
        let v = vector_lp_norm(&gradient(&f), 2.0).unwrap();
        assert!(close(v, 2.0 * PI, 1e-12));
    }

    #[test]
    fn reality_predicate_and_conjugate() {
        assert!(TorusFunction::cosine(2, 1, 3.0).is_real());
        assert!(TorusFunction::sine(2, 1, 3.0).is_real());
        let f = TorusFunction::exponential(vec![1, 0], 1.0);
        assert!(!f.is_real());
        let g = f.conj();
        assert_eq!(g.coeff(&[-1, 0]), c(1.0, 0.0));
        assert!(f.add(&g).unwrap().is_real());
    }

    #[test]
    fn indicator_coefficients() {
        let (chi, err) = box_indicator(&[(0.0, PI), (0.0, 2.0 * PI)], 9).unwrap();
        assert!((chi.coeff(&[0, 0]) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((chi.coeff(&[1, 0]) - c(0.0, -1.0 / PI)).norm() < 1e-15);
        assert!((chi.coeff(&[-3, 0]) - c(0.0, 1.0 / (3.0 * PI))).norm() < 1e-15);
        assert_eq!(chi.coeff(&[2, 0]), c(0.0, 0.0));
        assert_eq!(chi.coeff(&[1, 1]), c(0.0, 0.0));
        assert!(chi.is_real());
        // (4/π²) Σ_{odd k ≥ 11} k⁻² = (4/π²)(π²/8 − Σ_{odd k ≤ 9} k⁻²)
        let tail: f64 = PI * PI / 8.0
            - [1.0f64, 3.0, 5.0, 7.0, 9.0]
                .iter()
                .map(|k| k.powi(-2))
                .sum::<f64>();
        assert!((err - (4.0 / (PI * PI) * tail).sqrt()).abs() < 1e-12);
        let (whole, err) = box_indicator(&[(0.0, 2.0 * PI)], 5).unwrap();
        assert_eq!(whole.support_len(), 1);
        assert!(err < 1e-15);
        assert!(box_indicator(&[(1.0, 0.5)], 3).is_err());
    }

    #[test]
    fn json_terms() {
        let f = TorusFunction::cosine(2, 0, 2.0);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, "[[[-1,0],1.0,0.0],[[1,0],1.0,0.0]]");
        let back: TorusFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
