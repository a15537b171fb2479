//! Truncated Fourier basis on the torus: all `n ∈ Z^d` with `|n| <= R`.
//!
//! Points are ordered by `|n|²` and then lexicographically, so the position of
//! a frequency depends only on `(d, R)`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default refusal threshold for [`LatticeBasis::enumerate`].
pub const DEFAULT_POINT_BUDGET: usize = 200_000;

/// Volume of the unit ball in `R^d`, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2π/d · V_{d-2}
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Clone, Debug)]
pub struct LatticeBasis {
    dim: usize,
    radius: f64,
    coords: Vec<i32>,
    norm_sq: Vec<i64>,
    index: HashMap<Box<[i32]>, usize>,
}

impl LatticeBasis {
    /// Enumerates the ball with the default point budget.
    pub fn enumerate(d: usize, radius: f64) -> Result<Self> {
        Self::enumerate_with_budget(d, radius, DEFAULT_POINT_BUDGET)
    }

    pub fn enumerate_with_budget(d: usize, radius: f64, budget: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidDimension { got: d, min: 1 });
        }
        if !(radius >= 1.0) || !radius.is_finite() {
            return Err(Error::InvalidRadius(radius));
        }
        // Cheap pre-check before walking the bounding box.
        let estimate = unit_ball_volume(d) * radius.powi(d as i32);
        if estimate > 1.5 * budget as f64 + 1000.0 {
            return Err(Error::BasisTooLarge {
                estimate: estimate.round() as usize,
                budget,
            });
        }

        let r = radius.floor() as i32;
        let cap = radius * radius * (1.0 + 1e-12);
        let side = (2 * r + 1) as usize;
        let mut found: Vec<(i64, Vec<i32>)> = Vec::new();
        let mut cursor = vec![-r; d];
        let total = side.pow(d as u32);
        for _ in 0..total {
            let n2: i64 = cursor.iter().map(|&c| (c as i64) * (c as i64)).sum();
            if (n2 as f64) <= cap {
                found.push((n2, cursor.clone()));
                if found.len() > budget {
                    return Err(Error::BasisTooLarge {
                        estimate: estimate.round() as usize,
                        budget,
                    });
                }
            }
            for c in cursor.iter_mut().rev() {
                if *c < r {
                    *c += 1;
                    break;
                }
                *c = -r;
            }
        }
        found.sort();

        let mut coords = Vec::with_capacity(found.len() * d);
        let mut norm_sq = Vec::with_capacity(found.len());
        let mut index = HashMap::with_capacity(found.len());
        for (i, (n2, p)) in found.into_iter().enumerate() {
            coords.extend_from_slice(&p);
            norm_sq.push(n2);
            index.insert(p.into_boxed_slice(), i);
        }
        Ok(Self {
            dim: d,
            radius,
            coords,
            norm_sq,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn size(&self) -> usize {
        self.norm_sq.len()
    }

    pub fn point(&self, i: usize) -> &[i32] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn norm_sq(&self, i: usize) -> i64 {
        self.norm_sq[i]
    }

    pub fn norm(&self, i: usize) -> f64 {
        (self.norm_sq[i] as f64).sqrt()
    }

    /// `n / |n|`, or `None` at the origin.
    pub fn direction(&self, i: usize) -> Option<Vec<f64>> {
        if self.norm_sq[i] == 0 {
            return None;
        }
        let r = self.norm(i);
        Some(self.point(i).iter().map(|&c| c as f64 / r).collect())
    }

    pub fn index_of(&self, n: &[i32]) -> Option<usize> {
        self.index.get(n).copied()
    }

    /// Largest `|n_j|` over the basis.
    pub fn band_limit(&self) -> usize {
        self.coords
            .iter()
            .map(|c| c.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

impl PartialEq for LatticeBasis {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.radius == other.radius && self.coords == other.coords
    }
}
