//! Matrix truncations `P_R A P_R` over the `(spin ⊗ lattice)` Fourier basis.
//!
//! Global index of spin component `a` at lattice position `i` is
//! `a * basis.size() + i`, i.e. `C^N ⊗ l_2` with the spin factor outermost.
//! Diagonal operators stay diagonal, stripe-structured ones (multiplication
//! by a trigonometric polynomial, `sgn D`, `đf`) are stored as sparse rows,
//! and anything else is densified.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::clifford::CliffordRep;
use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::symbols::{SphereFunction, TorusFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const HERMITIAN_TOL: f64 = 1e-12;

/// Which Laplacian power a multiplier uses away from zero frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laplacian {
    /// `|n|^α`, with the constant mode projected out.
    #[default]
    Homogeneous,
    /// `(1 + |n|²)^{α/2}`.
    Inhomogeneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Hermitian,
    AntiHermitian,
}

/// Row-compressed sparse storage; each row is sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseRows {
    fn from_rows(mut rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            // coalesce duplicates, then drop exact zeros
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            merged.retain(|e| e.1 != ZERO);
            *row = merged;
        }
        Self { rows }
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug)]
pub enum Storage {
    Diagonal(Vec<Complex64>),
    Sparse(SparseRows),
    Dense(Mat<Complex64>),
}

/// A square matrix over a lattice basis, optionally tensored with spin.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<LatticeBasis>,
    spin_dim: usize,
    storage: Storage,
    label: String,
    symmetry: Symmetry,
}

impl OperatorMatrix {
    fn assemble(
        basis: Arc<LatticeBasis>,
        spin_dim: usize,
        storage: Storage,
        label: String,
        symmetry: Symmetry,
    ) -> Self {
        Self {
            basis,
            spin_dim,
            storage,
            label,
            symmetry,
        }
    }

    /// Like `assemble`, but a claimed symmetry must hold entrywise to `1e-12`.
    fn assemble_checked(
        basis: Arc<LatticeBasis>,
        spin_dim: usize,
        storage: Storage,
        label: String,
        symmetry: Symmetry,
    ) -> Result<Self> {
        let op = Self::assemble(basis, spin_dim, storage, label, symmetry);
        if symmetry != Symmetry::General {
            let residual = op.symmetry_residual(symmetry);
            if residual > HERMITIAN_TOL {
                return Err(Error::NotHermitian {
                    label: op.label,
                    residual,
                });
            }
        }
        Ok(op)
    }

    /// Keeps a derived symmetry flag only if it survives the entrywise check.
    fn with_derived_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry =
            if symmetry != Symmetry::General && self.symmetry_residual(symmetry) <= HERMITIAN_TOL {
                symmetry
            } else {
                Symmetry::General
            };
        self
    }

    /// Identity on `C^spin_dim ⊗ l_2(basis)`.
    pub fn identity(basis: Arc<LatticeBasis>, spin_dim: usize) -> Self {
        let n = spin_dim * basis.size();
        Self::assemble(
            basis,
            spin_dim,
            Storage::Diagonal(vec![Complex64::new(1.0, 0.0); n]),
            "1".into(),
            Symmetry::Hermitian,
        )
    }

    pub fn from_diagonal(
        basis: Arc<LatticeBasis>,
        spin_dim: usize,
        diag: Vec<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if diag.len() != spin_dim * basis.size() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for dimension {}",
                diag.len(),
                spin_dim * basis.size()
            )));
        }
        let symmetry = if diag.iter().all(|v| v.im == 0.0) {
            Symmetry::Hermitian
        } else {
            Symmetry::General
        };
        Ok(Self::assemble(
            basis,
            spin_dim,
            Storage::Diagonal(diag),
            label.into(),
            symmetry,
        ))
    }

    pub fn from_dense(
        basis: Arc<LatticeBasis>,
        spin_dim: usize,
        mat: Mat<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = spin_dim * basis.size();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dimension {n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self::assemble(
            basis,
            spin_dim,
            Storage::Dense(mat),
            label.into(),
            Symmetry::General,
        ))
    }

    pub fn basis(&self) -> &Arc<LatticeBasis> {
        &self.basis
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn dim(&self) -> usize {
        self.spin_dim * self.basis.size()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_hermitian(&self) -> bool {
        self.symmetry == Symmetry::Hermitian
    }

    pub fn diagonal(&self) -> Option<&[Complex64]> {
        match &self.storage {
            Storage::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match &self.storage {
            Storage::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    ZERO
                }
            }
            Storage::Sparse(s) => s.rows[i]
                .binary_search_by_key(&j, |e| e.0)
                .map(|k| s.rows[i][k].1)
                .unwrap_or(ZERO),
            Storage::Dense(m) => m[(i, j)],
        }
    }

    /// Calls `f(i, j, value)` for every stored entry (dense storage visits all).
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().enumerate().for_each(|(i, &v)| f(i, i, v)),
            Storage::Sparse(s) => {
                for (i, row) in s.rows.iter().enumerate() {
                    for &(j, v) in row {
                        f(i, j, v);
                    }
                }
            }
            Storage::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        f(i, j, m[(i, j)]);
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            _ => {
                let n = self.dim();
                let mut m = Mat::<Complex64>::zeros(n, n);
                self.for_each_entry(|i, j, v| m[(i, j)] = v);
                m
            }
        }
    }

    fn to_sparse_rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        match &self.storage {
            Storage::Diagonal(d) => d
                .iter()
                .enumerate()
                .map(|(i, &v)| if v == ZERO { vec![] } else { vec![(i, v)] })
                .collect(),
            Storage::Sparse(s) => s.rows.clone(),
            Storage::Dense(m) => (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .filter_map(|j| {
                            let v = m[(i, j)];
                            (v != ZERO).then_some((j, v))
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        let mut worst = 0.0f64;
        self.for_each_entry(|_, _, v| worst = worst.max(v.norm()));
        worst
    }

    /// `max |A_ij − conj A_ji|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.symmetry_residual(Symmetry::Hermitian)
    }

    fn symmetry_residual(&self, symmetry: Symmetry) -> f64 {
        let sign = match symmetry {
            Symmetry::AntiHermitian => -1.0,
            _ => 1.0,
        };
        let mut worst = 0.0f64;
        self.for_each_entry(|i, j, v| {
            let r = (v - sign * self.entry(j, i).conj()).norm();
            worst = worst.max(r);
        });
        worst
    }

    /// Largest entrywise difference to another operator of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_same_space(self, other)?;
        let mut worst = 0.0f64;
        self.for_each_entry(|i, j, v| worst = worst.max((v - other.entry(i, j)).norm()));
        other.for_each_entry(|i, j, v| worst = worst.max((v - self.entry(i, j)).norm()));
        Ok(worst)
    }

    /// Row-major complex128 little-endian dump plus a JSON sidecar next to it.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let n = self.dim();
        let mut bytes = Vec::with_capacity(n * n * 16);
        let dense = self.to_dense();
        for i in 0..n {
            for j in 0..n {
                let v = dense[(i, j)];
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))?;

        #[derive(Serialize)]
        struct Sidecar<'a> {
            label: &'a str,
            d: usize,
            radius: f64,
            basis_size: usize,
            spin_dim: usize,
            dim: usize,
            layout: &'static str,
            index: &'static str,
        }
        let sidecar = Sidecar {
            label: &self.label,
            d: self.basis.dim(),
            radius: self.basis.radius(),
            basis_size: self.basis.size(),
            spin_dim: self.spin_dim,
            dim: n,
            layout: "row-major complex128 little-endian (re, im)",
            index: "spin * basis_size + lattice_position",
        };
        let side = path.with_extension("json");
        let text = serde_json::to_string_pretty(&sidecar)?;
        fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
        Ok(())
    }
}

fn check_same_space(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<()> {
    if a.spin_dim != b.spin_dim
        || a.basis.size() != b.basis.size()
        || a.basis.dim() != b.basis.dim()
    {
        return Err(Error::DimensionMismatch(format!(
            "'{}' (spin {}, basis {}) vs '{}' (spin {}, basis {})",
            a.label,
            a.spin_dim,
            a.basis.size(),
            b.label,
            b.spin_dim,
            b.basis.size()
        )));
    }
    if !Arc::ptr_eq(&a.basis, &b.basis) && *a.basis != *b.basis {
        return Err(Error::DimensionMismatch(
            "operators live on different bases".into(),
        ));
    }
    Ok(())
}

fn multiplier_weight(norm: f64, alpha: f64, laplacian: Laplacian) -> f64 {
    match laplacian {
        Laplacian::Homogeneous => norm.powf(alpha),
        Laplacian::Inhomogeneous => (1.0 + norm * norm).powf(alpha / 2.0),
    }
}

/// `g(D/|D|) |D|^α`: diagonal entry `g(n/|n|) |n|^α`, zero at `n = 0`.
pub fn build_multiplier(
    basis: &Arc<LatticeBasis>,
    g: &SphereFunction,
    alpha: f64,
) -> Result<OperatorMatrix> {
    build_multiplier_with(basis, g, alpha, Laplacian::Homogeneous)
}

/// As [`build_multiplier`], with `(1 + |n|²)^{α/2}` in place of `|n|^α` when inhomogeneous.
/// The direction factor vanishes on constants either way.
pub fn build_multiplier_with(
    basis: &Arc<LatticeBasis>,
    g: &SphereFunction,
    alpha: f64,
    laplacian: Laplacian,
) -> Result<OperatorMatrix> {
    if g.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction function on S^{} over a {}-dimensional basis",
            g.dim() - 1,
            basis.dim()
        )));
    }
    let diag: Vec<Complex64> = (0..basis.size())
        .map(|i| match basis.direction(i) {
            None => ZERO,
            Some(u) => g.eval(&u) * multiplier_weight(basis.norm(i), alpha, laplacian),
        })
        .collect();
    let label = match laplacian {
        Laplacian::Homogeneous => format!("g(D/|D|)|D|^{alpha}"),
        Laplacian::Inhomogeneous => format!("g(D/|D|)(1+|D|²)^{}", alpha / 2.0),
    };
    OperatorMatrix::from_diagonal(basis.clone(), 1, diag, label)
}

/// `(1 − Δ)^{α/2}` or `|D|^α (1 − P)`, with no direction factor.
pub fn build_laplacian_power(
    basis: &Arc<LatticeBasis>,
    alpha: f64,
    laplacian: Laplacian,
) -> OperatorMatrix {
    let diag = (0..basis.size())
        .map(|i| {
            let r = basis.norm(i);
            match laplacian {
                Laplacian::Homogeneous if r == 0.0 => ZERO,
                _ => Complex64::new(multiplier_weight(r, alpha, laplacian), 0.0),
            }
        })
        .collect();
    OperatorMatrix::from_diagonal(
        basis.clone(),
        1,
        diag,
        format!("|D|^{alpha} [{laplacian:?}]"),
    )
    .expect("length matches")
}

/// Multiplication by `f`: `M[n, m] = f̂(n − m)`.
pub fn build_multiplication(
    basis: &Arc<LatticeBasis>,
    f: &TorusFunction,
) -> Result<OperatorMatrix> {
    if f.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "function on T^{} over a {}-dimensional basis",
            f.dim(),
            basis.dim()
        )));
    }
    let coeffs: Vec<(&[i32], Complex64)> = f.coeffs().collect();
    let d = basis.dim();
    let mut m_pt = vec![0i32; d];
    let rows = (0..basis.size())
        .map(|i| {
            let n = basis.point(i);
            let mut row = Vec::with_capacity(coeffs.len());
            for &(k, c) in &coeffs {
                for a in 0..d {
                    m_pt[a] = n[a] - k[a];
                }
                if let Some(j) = basis.index_of(&m_pt) {
                    row.push((j, c));
                }
            }
            row
        })
        .collect();
    let symmetry = if f.is_real() {
        Symmetry::Hermitian
    } else {
        Symmetry::General
    };
    let storage = if f.support_len() == 1 && f.dim() > 0 && f.coeff(&vec![0; d]) != ZERO {
        // a constant is a multiple of the identity
        Storage::Diagonal(vec![f.coeff(&vec![0; d]); basis.size()])
    } else {
        Storage::Sparse(SparseRows::from_rows(rows))
    };
    OperatorMatrix::assemble_checked(
        basis.clone(),
        1,
        storage,
        format!("M[f; {} terms]", f.support_len()),
        symmetry,
    )
}

fn check_rep(basis: &LatticeBasis, rep: &CliffordRep) -> Result<()> {
    if rep.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gamma matrices for d = {} over a {}-dimensional basis",
            rep.dim(),
            basis.dim()
        )));
    }
    Ok(())
}

fn unit_directions(basis: &LatticeBasis) -> Vec<Vec<f64>> {
    (0..basis.size())
        .map(|i| basis.direction(i).unwrap_or_else(|| vec![0.0; basis.dim()]))
        .collect()
}

/// `sgn D = Σ_j γ_j ⊗ D_j/|D|`, vanishing on constants.
pub fn build_sgn_dirac(basis: &Arc<LatticeBasis>, rep: &CliffordRep) -> Result<OperatorMatrix> {
    check_rep(basis, rep)?;
    let size = basis.size();
    let spin = rep.spin_dim();
    let dirs = unit_directions(basis);
    let mut rows = vec![Vec::new(); spin * size];
    for (i, u) in dirs.iter().enumerate() {
        let block = rep.dirac_symbol(u);
        for a in 0..spin {
            for b in 0..spin {
                rows[a * size + i].push((b * size + i, block[(a, b)]));
            }
        }
    }
    OperatorMatrix::assemble_checked(
        basis.clone(),
        spin,
        Storage::Sparse(SparseRows::from_rows(rows)),
        "sgn D".into(),
        Symmetry::Hermitian,
    )
}

/// `đf = i[sgn D, 1 ⊗ M_f]` from the closed form
/// `block(n, m) = i Σ_j γ_j (n_j/|n| − m_j/|m|) f̂(n − m)`.
pub fn quantized_derivative(
    basis: &Arc<LatticeBasis>,
    rep: &CliffordRep,
    f: &TorusFunction,
) -> Result<OperatorMatrix> {
    check_rep(basis, rep)?;
    if f.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(
            "function and basis dimensions differ".into(),
        ));
    }
    let size = basis.size();
    let spin = rep.spin_dim();
    let d = basis.dim();
    let dirs = unit_directions(basis);
    let coeffs: Vec<(&[i32], Complex64)> = f.coeffs().collect();
    let mut rows = vec![Vec::new(); spin * size];
    let mut m_pt = vec![0i32; d];
    let mut w = vec![0.0; d];
    for i in 0..size {
        let n = basis.point(i);
        for &(k, c) in &coeffs {
            for a in 0..d {
                m_pt[a] = n[a] - k[a];
            }
            let Some(j) = basis.index_of(&m_pt) else {
                continue;
            };
            for a in 0..d {
                w[a] = dirs[i][a] - dirs[j][a];
            }
            if w.iter().all(|&x| x == 0.0) {
                continue;
            }
            let block = rep.dirac_symbol(&w);
            let scale = Complex64::new(0.0, 1.0) * c;
            for a in 0..spin {
                for b in 0..spin {
                    let v = block[(a, b)] * scale;
                    if v != ZERO {
                        rows[a * size + i].push((b * size + j, v));
                    }
                }
            }
        }
    }
    let symmetry = if f.is_real() {
        Symmetry::Hermitian
    } else {
        Symmetry::General
    };
    OperatorMatrix::assemble_checked(
        basis.clone(),
        spin,
        Storage::Sparse(SparseRows::from_rows(rows)),
        format!("đf [f; {} terms]", f.support_len()),
        symmetry,
    )
}

fn sparse_product(
    a: &[Vec<(usize, Complex64)>],
    b: &[Vec<(usize, Complex64)>],
    n: usize,
) -> Vec<Vec<(usize, Complex64)>> {
    let mut acc = vec![ZERO; n];
    let mut mark = vec![false; n];
    let mut touched = Vec::new();
    a.iter()
        .map(|row| {
            for &(k, av) in row {
                for &(j, bv) in &b[k] {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += av * bv;
                }
            }
            touched.sort_unstable();
            let out = touched.iter().map(|&j| (j, acc[j])).collect();
            for &j in &touched {
                acc[j] = ZERO;
                mark[j] = false;
            }
            touched.clear();
            out
        })
        .collect()
}

/// `A · B`.
pub fn compose(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    check_same_space(a, b)?;
    let label = format!("({})·({})", a.label, b.label);
    let storage = match (&a.storage, &b.storage) {
        (Storage::Diagonal(x), Storage::Diagonal(y)) => {
            Storage::Diagonal(x.iter().zip(y).map(|(p, q)| p * q).collect())
        }
        (Storage::Dense(_), _) | (_, Storage::Dense(_)) => {
            Storage::Dense(a.to_dense() * b.to_dense())
        }
        _ => Storage::Sparse(SparseRows::from_rows(sparse_product(
            &a.to_sparse_rows(),
            &b.to_sparse_rows(),
            a.dim(),
        ))),
    };
    Ok(OperatorMatrix::assemble(
        a.basis.clone(),
        a.spin_dim,
        storage,
        label,
        Symmetry::General,
    ))
}

fn combine(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    sb: Complex64,
    label: String,
) -> Result<OperatorMatrix> {
    check_same_space(a, b)?;
    let storage = match (&a.storage, &b.storage) {
        (Storage::Diagonal(x), Storage::Diagonal(y)) => {
            Storage::Diagonal(x.iter().zip(y).map(|(p, q)| p + sb * q).collect())
        }
        (Storage::Dense(_), _) | (_, Storage::Dense(_)) => {
            let mut m = a.to_dense();
            b.for_each_entry(|i, j, v| m[(i, j)] += sb * v);
            Storage::Dense(m)
        }
        _ => {
            let mut rows = a.to_sparse_rows();
            for (row, other) in rows.iter_mut().zip(b.to_sparse_rows()) {
                row.extend(other.into_iter().map(|(j, v)| (j, sb * v)));
            }
            Storage::Sparse(SparseRows::from_rows(rows))
        }
    };
    let symmetry = if a.symmetry == b.symmetry && sb.im == 0.0 {
        a.symmetry
    } else {
        Symmetry::General
    };
    Ok(OperatorMatrix::assemble(
        a.basis.clone(),
        a.spin_dim,
        storage,
        label,
        Symmetry::General,
    )
    .with_derived_symmetry(symmetry))
}

/// `A + B`.
pub fn add(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    combine(
        a,
        b,
        Complex64::new(1.0, 0.0),
        format!("({}) + ({})", a.label, b.label),
    )
}

/// `A − B`.
pub fn sub(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    combine(
        a,
        b,
        Complex64::new(-1.0, 0.0),
        format!("({}) − ({})", a.label, b.label),
    )
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let ab = compose(a, b)?;
    let ba = compose(b, a)?;
    let derived = if a.is_hermitian() && b.is_hermitian() {
        Symmetry::AntiHermitian
    } else {
        Symmetry::General
    };
    Ok(sub(&ab, &ba)?
        .with_label(format!("[{}, {}]", a.label, b.label))
        .with_derived_symmetry(derived))
}

/// `c · A`.
pub fn scale(a: &OperatorMatrix, c: Complex64) -> OperatorMatrix {
    let storage = match &a.storage {
        Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| c * v).collect()),
        Storage::Sparse(s) => Storage::Sparse(SparseRows::from_rows(
            s.rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| (j, c * v)).collect())
                .collect(),
        )),
        Storage::Dense(m) => {
            Storage::Dense(Mat::from_fn(m.nrows(), m.ncols(), |i, j| c * m[(i, j)]))
        }
    };
    let derived = match (a.symmetry, c.re == 0.0, c.im == 0.0) {
        (Symmetry::Hermitian, _, true) | (Symmetry::AntiHermitian, true, _) => Symmetry::Hermitian,
        (Symmetry::AntiHermitian, _, true) | (Symmetry::Hermitian, true, _) => {
            Symmetry::AntiHermitian
        }
        _ => Symmetry::General,
    };
    OperatorMatrix::assemble(
        a.basis.clone(),
        a.spin_dim,
        storage,
        format!("{c}·({})", a.label),
        Symmetry::General,
    )
    .with_derived_symmetry(derived)
}

/// `A^*`.
pub fn adjoint(a: &OperatorMatrix) -> OperatorMatrix {
    let storage = match &a.storage {
        Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| v.conj()).collect()),
        Storage::Sparse(s) => {
            let mut rows = vec![Vec::new(); a.dim()];
            for (i, row) in s.rows.iter().enumerate() {
                for &(j, v) in row {
                    rows[j].push((i, v.conj()));
                }
            }
            Storage::Sparse(SparseRows::from_rows(rows))
        }
        Storage::Dense(m) => Storage::Dense(m.adjoint().to_owned()),
    };
    OperatorMatrix::assemble(
        a.basis.clone(),
        a.spin_dim,
        storage,
        format!("({})^*", a.label),
        a.symmetry,
    )
}

/// `1_N ⊗ A` for a scalar (spin dimension one) operator.
pub fn spin_lift(a: &OperatorMatrix, spin_dim: usize) -> Result<OperatorMatrix> {
    if a.spin_dim != 1 {
        return Err(Error::DimensionMismatch(format!(
            "spin lift of '{}' which already has spin dimension {}",
            a.label, a.spin_dim
        )));
    }
    let size = a.dim();
    let storage = match &a.storage {
        Storage::Diagonal(d) => {
            Storage::Diagonal(d.iter().cycle().take(spin_dim * size).copied().collect())
        }
        Storage::Dense(m) => {
            let mut out = Mat::<Complex64>::zeros(spin_dim * size, spin_dim * size);
            for s in 0..spin_dim {
                for j in 0..size {
                    for i in 0..size {
                        out[(s * size + i, s * size + j)] = m[(i, j)];
                    }
                }
            }
            Storage::Dense(out)
        }
        Storage::Sparse(sp) => {
            let mut rows = Vec::with_capacity(spin_dim * size);
            for s in 0..spin_dim {
                for row in &sp.rows {
                    rows.push(row.iter().map(|&(j, v)| (s * size + j, v)).collect());
                }
            }
            Storage::Sparse(SparseRows::from_rows(rows))
        }
    };
    Ok(OperatorMatrix::assemble(
        a.basis.clone(),
        spin_dim,
        storage,
        format!("1⊗({})", a.label),
        a.symmetry,
    ))
}

/// `Σ_n M_{f_n} g_n(D/|D|)` followed by the Laplacian power `α`.
pub fn build_tensor_sum(
    basis: &Arc<LatticeBasis>,
    terms: &[(TorusFunction, SphereFunction)],
    alpha: f64,
    laplacian: Laplacian,
) -> Result<OperatorMatrix> {
    let mut sum: Option<OperatorMatrix> = None;
    for (f, g) in terms {
        let term = compose(
            &build_multiplication(basis, f)?,
            &build_multiplier_with(basis, g, 0.0, laplacian)?,
        )?;
        sum = Some(match sum {
            None => term,
            Some(acc) => add(&acc, &term)?,
        });
    }
    let sum = sum.ok_or_else(|| Error::InvalidArgument("empty tensor sum".into()))?;
    let label = format!("Σ M_f g(D/|D|) |D|^{alpha} [{} terms]", terms.len());
    Ok(compose(&sum, &build_laplacian_power(basis, alpha, laplacian))?.with_label(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::make_gammas;

    fn basis(d: usize, r: f64) -> Arc<LatticeBasis> {
        Arc::new(LatticeBasis::enumerate(d, r).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multiplier_entries() {
        let b = basis(2, 5.0);
        let one = SphereFunction::constant(2, 1.0);
        let m = build_multiplier(&b, &one, -1.0).unwrap();
        let i = b.index_of(&[3, 4]).unwrap();
        assert!((m.entry(i, i) - c(0.2, 0.0)).norm() < 1e-15);
        assert_eq!(m.entry(0, 0), ZERO);
        let sq = SphereFunction::coordinate_power(2, 0, 2);
        let m = build_multiplier(&b, &sq, -1.0).unwrap();
        let i = b.index_of(&[1, 1]).unwrap();
        assert!((m.entry(i, i).re - 2f64.powf(-1.5)).abs() < 1e-15);
        let m = build_multiplier_with(&b, &one, -1.0, Laplacian::Inhomogeneous).unwrap();
        assert!((m.entry(i, i).re - 3f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(m.entry(0, 0), ZERO);
        assert!(build_multiplier(&b, &SphereFunction::constant(3, 1.0), -1.0).is_err());
    }

    #[test]
    fn multiplication_is_a_stripe() {
        let b = basis(2, 4.0);
        let shift = build_multiplication(&b, &TorusFunction::exponential(vec![1, 0], 1.0)).unwrap();
        assert!(!shift.is_hermitian());
        for i in 0..b.size() {
            for j in 0..b.size() {
                let n = b.point(i);
                let m = b.point(j);
                let expect = if n[0] - m[0] == 1 && n[1] == m[1] {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(shift.entry(i, j), c(expect, 0.0));
            }
        }
        let cst = build_multiplication(&b, &TorusFunction::constant(2, c(2.0, 1.0))).unwrap();
        assert!(cst.diagonal().unwrap().iter().all(|v| *v == c(2.0, 1.0)));
        let cos = build_multiplication(&b, &TorusFunction::cosine(2, 0, 2.0)).unwrap();
        assert!(cos.is_hermitian());
        for i in 0..b.size() {
            for j in 0..b.size() {
                let (n, m) = (b.point(i), b.point(j));
                let expect = if (n[0] - m[0]).abs() == 1 && n[1] == m[1] {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(cos.entry(i, j).re, expect);
            }
        }
    }

    #[test]
    fn adjoint_of_multiplication_is_conjugate_multiplication() {
        let b = basis(2, 3.0);
        let f =
            TorusFunction::from_coeffs(2, [(vec![1, 1], c(0.5, 2.0)), (vec![0, -1], c(-1.0, 0.3))])
                .unwrap();
        let lhs = adjoint(&build_multiplication(&b, &f).unwrap());
        let rhs = build_multiplication(&b, &f.conj()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-15);
    }

    #[test]
    fn algebra_basics() {
        let b = basis(2, 3.0);
        let f = TorusFunction::cosine(2, 1, 1.0);
        let a = build_multiplication(&b, &f).unwrap();
        let z = commutator(&a, &a).unwrap();
        assert_eq!(z.max_abs_entry(), 0.0);
        let one = SphereFunction::constant(2, 1.0);
        let x = build_multiplier(&b, &one, -1.0).unwrap();
        let y = build_multiplier(&b, &SphereFunction::coordinate_power(2, 0, 1), 1.0).unwrap();
        let xy = compose(&x, &y).unwrap();
        let dx = x.diagonal().unwrap();
        let dy = y.diagonal().unwrap();
        for (k, v) in xy.diagonal().unwrap().iter().enumerate() {
            assert_eq!(*v, dx[k] * dy[k]);
        }
        let dense = OperatorMatrix::from_dense(b.clone(), 1, a.to_dense(), "dense").unwrap();
        let p1 = compose(&a, &x).unwrap();
        let p2 = compose(&dense, &x).unwrap();
        assert!(p1.max_abs_diff(&p2).unwrap() < 1e-15);
        assert!(add(&a, &scale(&a, c(-1.0, 0.0))).unwrap().max_abs_entry() == 0.0);
        let other = basis(2, 2.0);
        let w = build_multiplier(&other, &one, -1.0).unwrap();
        assert!(compose(&a, &w).is_err());
    }

    #[test]
    fn sgn_blocks_are_involutions() {
        for d in [2, 3] {
            let b = basis(d, 3.0);
            let rep = make_gammas(d).unwrap();
            let s = build_sgn_dirac(&b, &rep).unwrap();
            assert!(s.is_hermitian());
            let sq = compose(&s, &s).unwrap();
            let n = rep.spin_dim();
            for a in 0..n {
                for i in 0..b.size() {
                    let target = if i == 0 { 0.0 } else { 1.0 };
                    for bb in 0..n {
                        let v = sq.entry(a * b.size() + i, bb * b.size() + i);
                        let t = if a == bb { target } else { 0.0 };
                        assert!((v - c(t, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
        let b = basis(2, 2.0);
        let rep = make_gammas(2).unwrap();
        let s = build_sgn_dirac(&b, &rep).unwrap();
        let i = b.index_of(&[1, 0]).unwrap();
        let size = b.size();
        assert_eq!(s.entry(i, size + i), c(1.0, 0.0));
        assert_eq!(s.entry(i, i), ZERO);
        assert!(build_sgn_dirac(&b, &make_gammas(3).unwrap()).is_err());
    }

    #[test]
    fn closed_form_matches_commutator() {
        for (d, f) in [
            (
                2,
                TorusFunction::cosine(2, 0, 2.0)
                    .add(&TorusFunction::sine(2, 1, 0.7))
                    .unwrap(),
            ),
            (2, TorusFunction::exponential(vec![1, 2], c(0.3, -0.4))),
            (
                3,
                TorusFunction::cosine(3, 2, 1.0)
                    .add(&TorusFunction::exponential(vec![1, -1, 0], 0.5))
                    .unwrap(),
            ),
        ] {
            let b = basis(d, 3.5);
            let rep = make_gammas(d).unwrap();
            let closed = quantized_derivative(&b, &rep, &f).unwrap();
            let generic = scale(
                &commutator(
                    &build_sgn_dirac(&b, &rep).unwrap(),
                    &spin_lift(&build_multiplication(&b, &f).unwrap(), rep.spin_dim()).unwrap(),
                )
                .unwrap(),
                c(0.0, 1.0),
            );
            assert!(closed.max_abs_diff(&generic).unwrap() < 1e-12);
            assert_eq!(closed.is_hermitian(), f.is_real());
            assert_eq!(generic.is_hermitian(), f.is_real());
        }
    }

    #[test]
    fn quantized_derivative_of_constant_and_plane_wave() {
        let b = basis(2, 4.0);
        let rep = make_gammas(2).unwrap();
        let z = quantized_derivative(&b, &rep, &TorusFunction::constant(2, 3.0)).unwrap();
        assert_eq!(z.max_abs_entry(), 0.0);
        let k0 = [1, -1];
        let q =
            quantized_derivative(&b, &rep, &TorusFunction::exponential(k0.to_vec(), 1.0)).unwrap();
        let size = b.size();
        q.for_each_entry(|i, j, v| {
            if v != ZERO {
                let (n, m) = (b.point(i % size), b.point(j % size));
                assert_eq!([n[0] - m[0], n[1] - m[1]], k0);
            }
        });
        let real = quantized_derivative(&b, &rep, &TorusFunction::cosine(2, 1, 1.0)).unwrap();
        assert!(real.hermiticity_residual() <= 1e-12);
    }

    #[test]
    fn tensor_sum_of_constants_is_the_multiplier() {
        let b = basis(2, 3.0);
        let one_t = TorusFunction::constant(2, 1.0);
        let s1 = SphereFunction::coordinate_power(2, 0, 1);
        let t = build_tensor_sum(
            &b,
            &[(one_t.clone(), s1.clone())],
            -1.0,
            Laplacian::Homogeneous,
        )
        .unwrap();
        let m = build_multiplier(&b, &s1, -1.0).unwrap();
        assert!(t.max_abs_diff(&m).unwrap() < 1e-15);
        let z = build_tensor_sum(
            &b,
            &[(one_t.clone(), s1.clone()), (one_t.scale(-1.0), s1)],
            -1.0,
            Laplacian::Homogeneous,
        )
        .unwrap();
        assert_eq!(z.max_abs_entry(), 0.0);
        assert!(build_tensor_sum(&b, &[], -1.0, Laplacian::Homogeneous).is_err());
    }

    #[test]
    fn spin_lift_is_block_diagonal() {
        let b = basis(2, 2.0);
        let a = build_multiplication(&b, &TorusFunction::cosine(2, 0, 1.0)).unwrap();
        let l = spin_lift(&a, 2).unwrap();
        let n = b.size();
        assert_eq!(l.dim(), 2 * n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(l.entry(i, j), a.entry(i, j));
                assert_eq!(l.entry(n + i, n + j), a.entry(i, j));
                assert_eq!(l.entry(i, n + j), ZERO);
            }
        }
        assert!(spin_lift(&l, 2).is_err());
    }

    #[test]
    fn binary_dump_layout() {
        let b = basis(2, 1.0);
        let a =
            build_multiplication(&b, &TorusFunction::exponential(vec![1, 0], c(0.0, 2.0))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        a.write_binary(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 5 * 5 * 16);
        let i = b.index_of(&[1, 0]).unwrap();
        let j = b.index_of(&[0, 0]).unwrap();
        let off = (i * 5 + j) * 16;
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        assert_eq!((re, im), (0.0, 2.0));
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap())
                .unwrap();
        assert_eq!(side["dim"], 5);
    }
}
