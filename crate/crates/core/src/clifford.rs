//! Gamma matrices for the Dirac operator.
//!
//! The representation is built by the usual tensor recursion: start from the
//! Pauli pair in dimension two, go from `d` to `d + 2` by
//! `γ_j ↦ γ_j ⊗ σ3` plus the two new generators `I ⊗ σ1`, `I ⊗ σ2`, and for
//! odd `d` append the normalized product of the even-dimensional generators.
//! Every entry is one of `0, ±1, ±i`, so the algebraic identities hold exactly.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The `d` Hermitian generators `γ_1, …, γ_d` of size `N = 2^⌊d/2⌋`.
#[derive(Clone, Debug)]
pub struct CliffordRep {
    dim: usize,
    spin_dim: usize,
    gammas: Vec<Mat<Complex64>>,
}

/// Builds the fixed gamma-matrix representation for dimension `d >= 2`.
pub fn make_gammas(d: usize) -> Result<CliffordRep> {
    CliffordRep::new(d)
}

pub fn pauli() -> [Mat<Complex64>; 3] {
    let s1 = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
    let s2 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    });
    let s3 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => ONE,
        (1, 1) => -ONE,
        _ => ZERO,
    });
    [s1, s2, s3]
}

/// Kronecker product `a ⊗ b`; block `(i, j)` of the result is `a[i, j] · b`.
pub(crate) fn kron(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn identity(n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

impl CliffordRep {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension { got: d, min: 2 });
        }
        let [s1, s2, s3] = pauli();
        let mut gammas = vec![s1.clone(), s2.clone()];
        let mut even = 2;
        while even + 2 <= d {
            let n = gammas[0].nrows();
            let mut next: Vec<_> = gammas.iter().map(|g| kron(g, &s3)).collect();
            next.push(kron(&identity(n), &s1));
            next.push(kron(&identity(n), &s2));
            gammas = next;
            even += 2;
        }
        if d % 2 == 1 {
            let half = d / 2;
            let mut prod = identity(gammas[0].nrows());
            for g in &gammas {
                prod = &prod * g;
            }
            // (-i)^⌊d/2⌋ makes the product Hermitian with square one.
            let phase = (-I).powu(half as u32);
            let extra = Mat::from_fn(prod.nrows(), prod.ncols(), |i, j| phase * prod[(i, j)]);
            gammas.push(extra);
        }
        let spin_dim = gammas[0].nrows();
        debug_assert_eq!(spin_dim, 1 << (d / 2));
        Ok(Self {
            dim: d,
            spin_dim,
            gammas,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N = 2^⌊d/2⌋`.
    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn gammas(&self) -> &[Mat<Complex64>] {
        &self.gammas
    }

    /// Zero-based: `gamma(0)` is `γ_1`.
    pub fn gamma(&self, j: usize) -> &Mat<Complex64> {
        &self.gammas[j]
    }

    /// `Σ_j γ_j u_j` for a real vector `u`.
    pub fn dirac_symbol(&self, u: &[f64]) -> Mat<Complex64> {
        assert_eq!(u.len(), self.dim, "direction has wrong dimension");
        let n = self.spin_dim;
        Mat::from_fn(n, n, |a, b| {
            self.gammas
                .iter()
                .zip(u)
                .map(|(g, &uj)| g[(a, b)] * uj)
                .sum()
        })
    }

    /// Largest entrywise deviation from `γ_jγ_k + γ_kγ_j = 2δ_{jk} I` over all pairs.
    pub fn anticommutator_residual(&self) -> f64 {
        let n = self.spin_dim;
        let mut worst = 0.0f64;
        for (j, gj) in self.gammas.iter().enumerate() {
            for (k, gk) in self.gammas.iter().enumerate() {
                let anti = gj * gk + gk * gj;
                for a in 0..n {
                    for b in 0..n {
                        let target = if j == k && a == b { 2.0 } else { 0.0 };
                        worst = worst.max((anti[(a, b)] - target).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest entrywise deviation of any generator from its adjoint.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.spin_dim;
        let mut worst = 0.0f64;
        for g in &self.gammas {
            for a in 0..n {
                for b in 0..n {
                    worst = worst.max((g[(a, b)] - g[(b, a)].conj()).norm());
                }
            }
        }
        worst
    }

    /// JSON dump for inspection: each generator as rows of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump {
            d: usize,
            spin_dim: usize,
            gammas: Vec<Vec<Vec<[f64; 2]>>>,
        }
        let n = self.spin_dim;
        let gammas = self
            .gammas
            .iter()
            .map(|g| {
                (0..n)
                    .map(|a| (0..n).map(|b| [g[(a, b)].re, g[(a, b)].im]).collect())
                    .collect()
            })
            .collect();
        serde_json::to_value(Dump {
            d: self.dim,
            spin_dim: n,
            gammas,
        })
        .expect("gamma dump is always serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn same(a: &Mat<Complex64>, b: &Mat<Complex64>) -> bool {
        a.nrows() == b.nrows()
            && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)] == b[(i, j)]))
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(matches!(
            make_gammas(1),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(make_gammas(0).is_err());
    }

    #[test]
    fn dimension_two_is_pauli_pair() {
        let rep = make_gammas(2).unwrap();
        let [s1, s2, _] = pauli();
        assert_eq!(rep.spin_dim(), 2);
        assert!(same(rep.gamma(0), &s1));
        assert!(same(rep.gamma(1), &s2));
    }

    #[test]
    fn dimension_three_is_pauli_triple() {
        let rep = make_gammas(3).unwrap();
        let [s1, s2, s3] = pauli();
        assert!(same(rep.gamma(0), &s1));
        assert!(same(rep.gamma(1), &s2));
        assert!(same(rep.gamma(2), &s3));
    }

    #[test]
    fn dimension_four_anticommutators() {
        let rep = make_gammas(4).unwrap();
        assert_eq!(rep.spin_dim(), 4);
        assert_eq!(rep.gammas().len(), 4);
        assert!(rep.anticommutator_residual() <= 1e-14);
    }

    #[test]
    fn generators_are_traceless_hermitian_involutions() {
        for d in 2..=7 {
            let rep = make_gammas(d).unwrap();
            assert_eq!(rep.spin_dim(), 1 << (d / 2));
            assert_eq!(rep.hermiticity_residual(), 0.0, "d = {d}");
            assert_eq!(rep.anticommutator_residual(), 0.0, "d = {d}");
            for g in rep.gammas() {
                let tr: Complex64 = (0..rep.spin_dim()).map(|a| g[(a, a)]).sum();
                assert_eq!(tr, ZERO);
                for a in 0..rep.spin_dim() {
                    for b in 0..rep.spin_dim() {
                        let z = g[(a, b)];
                        assert!(
                            [0.0, 1.0, -1.0].contains(&z.re) && [0.0, 1.0, -1.0].contains(&z.im)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = make_gammas(5).unwrap();
        let b = make_gammas(5).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn dirac_symbol_squares_to_norm() {
        let rep = make_gammas(3).unwrap();
        let u = [0.3, -1.2, 0.5];
        let s = rep.dirac_symbol(&u);
        let sq = &s * &s;
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        for a in 0..2 {
            for b in 0..2 {
                let target = if a == b { norm2 } else { 0.0 };
                assert!((sq[(a, b)] - target).norm() < 1e-14);
            }
        }
    }
}
