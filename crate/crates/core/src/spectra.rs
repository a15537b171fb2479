//! Singular values and the estimators built on them.
//!
//! Ranks are zero-based in code: `values[k]` is `μ(k)`, the `(k+1)`-th largest
//! singular value, and the scaled sequence is `(k+1)^{1/p} μ(k)`. CSV output
//! uses the one-based rank.

use std::fmt::Write as _;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{OperatorMatrix, Storage};

/// Nonincreasing, nonnegative singular values of a matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    label: String,
}

impl SingularSpectrum {
    /// Takes moduli and sorts them nonincreasingly.
    pub fn from_values(values: impl IntoIterator<Item = f64>, label: impl Into<String>) -> Self {
        let mut values: Vec<f64> = values.into_iter().map(f64::abs).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Self {
            values,
            label: label.into(),
        }
    }

    /// `μ(k) = f(k+1)` for `k < len`.
    pub fn from_fn(len: usize, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values((1..=len).map(|k| f(k as f64)), label)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `sup_k (k+1)^{1/p} μ(k)`, the weak-`L_p` quasi-norm of the sequence.
    pub fn weak_norm(&self, p: f64) -> f64 {
        scaled_sequence(self, p).into_iter().fold(0.0, f64::max)
    }

    /// CSV with header `k,mu,scaled`, one row per rank `k = 1..dim`.
    pub fn to_csv(&self, p: f64) -> String {
        let mut out = String::with_capacity(32 * self.values.len() + 16);
        out.push_str("k,mu,scaled\n");
        for (k, (mu, sc)) in self.values.iter().zip(scaled_sequence(self, p)).enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, mu, sc);
        }
        out
    }
}

/// `(k+1)^{1/p} μ(k)`.
pub fn scaled_sequence(s: &SingularSpectrum, p: f64) -> Vec<f64> {
    s.values
        .iter()
        .enumerate()
        .map(|(k, &mu)| ((k + 1) as f64).powf(1.0 / p) * mu)
        .collect()
}

/// Multiset union of the values, as for a direct sum of operators.
pub fn orthogonal_merge(parts: &[SingularSpectrum]) -> SingularSpectrum {
    let label = parts
        .iter()
        .map(|s| s.label.as_str())
        .collect::<Vec<_>>()
        .join(" ⊕ ");
    SingularSpectrum::from_values(parts.iter().flat_map(|s| s.values.iter().copied()), label)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Index sets of the connected components of the sparsity graph `i ~ j` iff `A_ij ≠ 0`.
/// Permuting to these blocks is a unitary similarity, so singular values are unchanged.
fn components(a: &OperatorMatrix) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut uf = UnionFind::new(n);
    a.for_each_entry(|i, j, v| {
        if i != j && v != Complex64::new(0.0, 0.0) {
            uf.union(i, j);
        }
    });
    let mut slot = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn block_values(a: &OperatorMatrix, idx: &[usize], hermitian: bool) -> Result<Vec<f64>> {
    if idx.len() == 1 {
        return Ok(vec![a.entry(idx[0], idx[0]).norm()]);
    }
    let block = Mat::<Complex64>::from_fn(idx.len(), idx.len(), |i, j| a.entry(idx[i], idx[j]));
    dense_values(&block, hermitian)
}

fn dense_values(m: &Mat<Complex64>, hermitian: bool) -> Result<Vec<f64>> {
    if hermitian {
        let eig = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::SvdNoConvergence)?;
        Ok(eig.into_iter().map(f64::abs).collect())
    } else {
        m.singular_values().map_err(|_| Error::SvdNoConvergence)
    }
}

/// How [`singular_values_with`] factorizes a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SvdOptions {
    /// Solve each connected block of the sparsity pattern separately.
    pub split_blocks: bool,
    /// Use `|eig|` of a Hermitian matrix instead of a general SVD.
    pub use_hermitian: bool,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            split_blocks: true,
            use_hermitian: true,
        }
    }
}

/// All singular values. Diagonal matrices are sorted directly.
pub fn singular_values(a: &OperatorMatrix) -> Result<SingularSpectrum> {
    singular_values_with(a, SvdOptions::default())
}

pub fn singular_values_with(a: &OperatorMatrix, opts: SvdOptions) -> Result<SingularSpectrum> {
    let label = a.label().to_string();
    if let Some(d) = a.diagonal() {
        return Ok(SingularSpectrum::from_values(
            d.iter().map(|v| v.norm()),
            label,
        ));
    }
    let hermitian = opts.use_hermitian && a.is_hermitian();
    if !opts.split_blocks {
        let dense = match a.storage() {
            Storage::Dense(m) => dense_values(m, hermitian)?,
            _ => dense_values(&a.to_dense(), hermitian)?,
        };
        return Ok(SingularSpectrum::from_values(dense, label));
    }
    let mut blocks = components(a);
    // largest first for better load balance
    blocks.sort_by(|x, y| y.len().cmp(&x.len()).then(x[0].cmp(&y[0])));
    let parts: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|idx| block_values(a, idx, hermitian))
        .collect::<Result<_>>()?;
    Ok(SingularSpectrum::from_values(
        parts.into_iter().flatten(),
        label,
    ))
}

/// The trusted rank window and slope acceptance for Weyl estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowPolicy {
    pub lo_floor: usize,
    pub lo_frac: f64,
    pub hi_frac: f64,
    pub slope_tol: f64,
    /// Explicit `[lo, hi]` ranks (zero-based, inclusive), replacing the fractions.
    pub explicit: Option<(usize, usize)>,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            lo_floor: 20,
            lo_frac: 0.02,
            hi_frac: 0.20,
            slope_tol: 0.1,
            explicit: None,
        }
    }
}

impl WindowPolicy {
    pub fn with_window(lo: usize, hi: usize) -> Self {
        Self {
            explicit: Some((lo, hi)),
            ..Self::default()
        }
    }

    /// Inclusive `[lo, hi]` for a spectrum of length `len`.
    pub fn window(&self, len: usize) -> Result<(usize, usize)> {
        let (lo, hi) = match self.explicit {
            Some(w) => w,
            None => (
                self.lo_floor
                    .max((self.lo_frac * len as f64).ceil() as usize),
                (self.hi_frac * len as f64).floor() as usize,
            ),
        };
        if lo > hi || hi >= len {
            return Err(Error::EmptyWindow { lo, hi, len });
        }
        Ok((lo, hi))
    }
}

pub const FLAG_SLOPE: &str = "asymptotic regime not reached";
pub const FLAG_ZERO: &str = "zero spectrum in window";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylEstimate {
    pub p: f64,
    pub coefficient: f64,
    pub spread: f64,
    pub window: [usize; 2],
    pub slope: Option<f64>,
    pub flags: Vec<String>,
}

impl WeylEstimate {
    pub fn slope_ok(&self) -> bool {
        !self.flags.iter().any(|f| f == FLAG_SLOPE)
    }
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

fn sorted_slice(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Least-squares slope of `log μ(k)` against `log(k+1)` over positive entries.
fn loglog_slope(values: &[f64], lo: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| (((lo + j + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Windowed median of `(k+1)^{1/p} μ(k)`, with spread `(P90 − P10)/2` and a log-log slope.
pub fn weyl_estimate(s: &SingularSpectrum, p: f64, policy: &WindowPolicy) -> Result<WeylEstimate> {
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let (lo, hi) = policy.window(s.dim())?;
    let scaled = scaled_sequence(s, p);
    let window = sorted_slice(&scaled[lo..=hi]);
    let mut flags = Vec::new();
    if window.iter().all(|&v| v == 0.0) {
        flags.push(FLAG_ZERO.to_string());
        return Ok(WeylEstimate {
            p,
            coefficient: 0.0,
            spread: 0.0,
            window: [lo, hi],
            slope: None,
            flags,
        });
    }
    let coefficient = percentile(&window, 0.5);
    let spread = (percentile(&window, 0.9) - percentile(&window, 0.1)) / 2.0;
    let slope = loglog_slope(&s.values[lo..=hi], lo);
    if slope.map_or(true, |m| (m + 1.0 / p).abs() > policy.slope_tol) {
        flags.push(FLAG_SLOPE.to_string());
    }
    Ok(WeylEstimate {
        p,
        coefficient,
        spread,
        window: [lo, hi],
        slope,
        flags,
    })
}

/// Early and late windows of the little-ideal diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticPolicy {
    /// Inclusive zero-based ranks of the early window.
    pub early: (usize, usize),
    /// The late window is `[late_start · hi, hi]`, `hi` from the trusted window.
    pub late_start: f64,
    pub trusted: WindowPolicy,
}

impl Default for DiagnosticPolicy {
    fn default() -> Self {
        Self {
            early: (20, 40),
            late_start: 0.5,
            trusted: WindowPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rho: f64,
    pub early_median: f64,
    pub late_median: f64,
    pub early: [usize; 2],
    pub late: [usize; 2],
    /// Early-window median is zero; `rho` is then 0 for an all-zero late window.
    pub degenerate: bool,
}

impl DecayReport {
    /// Little-ideal verdict: decaying scaled sequence, or nothing to decay.
    pub fn is_little(&self, threshold: f64) -> bool {
        self.degenerate || self.rho < threshold
    }
}

pub fn little_ideal_diagnostic(s: &SingularSpectrum, p: f64) -> Result<DecayReport> {
    little_ideal_diagnostic_with(s, p, &DiagnosticPolicy::default())
}

/// `ρ` = late-window median over early-window median of the scaled sequence.
pub fn little_ideal_diagnostic_with(
    s: &SingularSpectrum,
    p: f64,
    policy: &DiagnosticPolicy,
) -> Result<DecayReport> {
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let len = s.dim();
    let (_, hi) = policy.trusted.window(len)?;
    let (e_lo, e_hi) = policy.early;
    let l_lo = ((policy.late_start * hi as f64).floor() as usize).max(e_hi + 1);
    if e_lo > e_hi || l_lo > hi {
        return Err(Error::EmptyWindow { lo: l_lo, hi, len });
    }
    let scaled = scaled_sequence(s, p);
    let early_median = percentile(&sorted_slice(&scaled[e_lo..=e_hi]), 0.5);
    let late_median = percentile(&sorted_slice(&scaled[l_lo..=hi]), 0.5);
    let degenerate = early_median == 0.0;
    let rho = match (degenerate, late_median == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        _ => late_median / early_median,
    };
    Ok(DecayReport {
        rho,
        early_median,
        late_median,
        early: [e_lo, e_hi],
        late: [l_lo, hi],
        degenerate,
    })
}

/// Right-continuous nonincreasing step function `μ(t)`: value `values[k]` on
/// `[ends[k−1], ends[k])`, zero from `total_measure` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangementFunction {
    ends: Vec<f64>,
    values: Vec<f64>,
    total_measure: f64,
}

/// Nonincreasing rearrangement of `|value|` under the weights.
pub fn decreasing_rearrangement(samples: &[(f64, f64)]) -> Result<RearrangementFunction> {
    if let Some(&(_, w)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "sample weight {w} is not positive"
        )));
    }
    let mut sorted: Vec<(f64, f64)> = samples.iter().map(|&(v, w)| (v.abs(), w)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut ends: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut t = 0.0;
    for (v, w) in sorted {
        t += w;
        if values.last() == Some(&v) {
            *ends.last_mut().unwrap() = t;
        } else {
            values.push(v);
            ends.push(t);
        }
    }
    Ok(RearrangementFunction {
        ends,
        values,
        total_measure: t,
    })
}

impl RearrangementFunction {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.ends.partition_point(|&e| e <= t);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    /// `(t_end, μ)` for every step.
    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ends.iter().copied().zip(self.values.iter().copied())
    }

    /// The steps as `(value, length)` samples.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut start = 0.0;
        self.breakpoints()
            .map(|(end, v)| {
                let s = (v, end - start);
                start = end;
                s
            })
            .collect()
    }

    /// `sup_t t^{1/p} μ(t)`.
    pub fn weak_norm(&self, p: f64) -> f64 {
        self.breakpoints()
            .map(|(e, v)| e.powf(1.0 / p) * v)
            .fold(0.0, f64::max)
    }
}
