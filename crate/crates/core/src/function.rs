//! Two concrete representations of finite convex functions on R^n.
//!
//! [`MaxAffineFunction`] is the exact pathway: `v(x) = max_i ⟨a_i, x⟩ + b_i`.
//! [`GridFunction`] stores dense samples on a regular box grid and is the
//! quadrature pathway. [`FunctionSpec`] is a small declarative vocabulary
//! that can produce either one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, AffineFrame};
use crate::polytope::Polytope;

const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl AffinePiece {
    pub fn new(slope: Vec<f64>, offset: f64) -> Self {
        AffinePiece { slope, offset }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.slope, x) + self.offset
    }
}

/// `v(x) = max_i (⟨a_i, x⟩ + b_i)`, kept canonical: no duplicate slopes and
/// every piece strictly maximal on an open set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxAffineFunction {
    dim: usize,
    pieces: Vec<AffinePiece>,
}

impl<'de> Deserialize<'de> for MaxAffineFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dim: usize,
            pieces: Vec<AffinePiece>,
        }
        let r = Repr::deserialize(d)?;
        MaxAffineFunction::new(
            r.dim,
            r.pieces.into_iter().map(|p| (p.slope, p.offset)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl MaxAffineFunction {
    pub fn new(dim: usize, pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidArgument(
                "a max-affine function needs at least one piece".into(),
            ));
        }
        for (a, b) in &pieces {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite affine piece".into()));
            }
        }
        Ok(MaxAffineFunction {
            dim,
            pieces: canonical_pieces(pieces),
        })
    }

    /// Skips canonicalization; callers guarantee distinct, non-redundant pieces.
    pub(crate) fn from_canonical_pieces(dim: usize, pieces: Vec<(Vec<f64>, f64)>) -> Self {
        MaxAffineFunction {
            dim,
            pieces: pieces
                .into_iter()
                .map(|(a, b)| AffinePiece::new(a, b))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn slopes(&self) -> Vec<Vec<f64>> {
        self.pieces.iter().map(|p| p.slope.clone()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of the pieces attaining the maximum at `x` up to `tol`.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.pieces.iter().map(|p| p.eval(x)).collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&i| m - vals[i] <= tol).collect()
    }

    fn map_pieces(&self, f: impl Fn(&AffinePiece) -> (Vec<f64>, f64)) -> Result<Self> {
        MaxAffineFunction::new(self.dim, self.pieces.iter().map(f).collect())
    }

    /// `v + ⟨y, ·⟩`.
    pub fn add_linear(&self, y: &[f64]) -> Result<Self> {
        self.check_len(y)?;
        self.map_pieces(|p| (linalg::add(&p.slope, y), p.offset))
    }

    pub fn add_constant(&self, c: f64) -> Result<Self> {
        self.map_pieces(|p| (p.slope.clone(), p.offset + c))
    }

    /// `v ∘ ϑ⁻¹` for an orthogonal `ϑ`: slopes map to `ϑ a_i`.
    pub fn rotate(&self, m: &[Vec<f64>]) -> Result<Self> {
        check_orthogonal(m, self.dim)?;
        self.map_pieces(|p| (linalg::mat_vec(m, &p.slope), p.offset))
    }

    /// `λ v`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor {lambda} must be > 0"
            )));
        }
        self.map_pieces(|p| (linalg::scale(&p.slope, lambda), lambda * p.offset))
    }

    /// `v ∘ τ_t⁻¹`, i.e. `x ↦ v(x − t)`.
    pub fn translate(&self, t: &[f64]) -> Result<Self> {
        self.check_len(t)?;
        self.map_pieces(|p| (p.slope.clone(), p.offset - linalg::dot(&p.slope, t)))
    }

    /// Pointwise sum; the pieces are all pairwise sums.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for p in &self.pieces {
            for q in &other.pieces {
                pieces.push((linalg::add(&p.slope, &q.slope), p.offset + q.offset));
            }
        }
        MaxAffineFunction::new(self.dim, pieces)
    }

    /// Pointwise maximum `v ∨ w`.
    pub fn max(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let pieces = self
            .pieces
            .iter()
            .chain(&other.pieces)
            .map(|p| (p.slope.clone(), p.offset))
            .collect();
        MaxAffineFunction::new(self.dim, pieces)
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_orthogonal(m: &[Vec<f64>], dim: usize) -> Result<()> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.len(),
        });
    }
    let mtm = linalg::mat_mul(&linalg::transpose(m), m);
    for (i, row) in mtm.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            if (v - e).abs() > 1e-9 {
                return Err(Error::InvalidArgument("matrix is not orthogonal".into()));
            }
        }
    }
    Ok(())
}

fn canonical_pieces(mut pieces: Vec<(Vec<f64>, f64)>) -> Vec<AffinePiece> {
    // Coincident slopes: the larger offset dominates.
    pieces.sort_by(|a, b| linalg::lex_cmp(&a.0, &b.0).then(b.1.total_cmp(&a.1)));
    let scale = linalg::extent(&pieces.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pieces.len());
    for (a, b) in pieces {
        match merged
            .iter_mut()
            .find(|(m, _)| linalg::dist(m, &a) <= MERGE_TOL * scale)
        {
            Some(m) => m.1 = m.1.max(b),
            None => merged.push((a, b)),
        }
    }
    if merged.len() > 1 {
        let keep = non_redundant(&merged);
        merged = merged
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
    }
    merged
        .into_iter()
        .map(|(a, b)| AffinePiece::new(a, b))
        .collect()
}

/// A piece is kept iff its slope is an extreme point of the active slope set
/// at some vertex of the arrangement, computed in the affine hull of the slopes
/// (where the arrangement is pointed).
fn non_redundant(pieces: &[(Vec<f64>, f64)]) -> Vec<bool> {
    let slopes: Vec<Vec<f64>> = pieces.iter().map(|p| p.0.clone()).collect();
    let frame = AffineFrame::of(&slopes, 1e-10 * linalg::extent(&slopes));
    let coords: Vec<Vec<f64>> = slopes.iter().map(|a| frame.coords(a)).collect();
    let offsets: Vec<f64> = pieces.iter().map(|p| p.1).collect();
    let mut keep = vec![false; pieces.len()];
    for vtx in crate::transform::enumerate_vertices(&coords, &offsets) {
        let act: Vec<Vec<f64>> = vtx.active.iter().map(|&i| coords[i].clone()).collect();
        let extreme = Polytope::new(act).expect("active slope set is non-empty");
        for &i in &vtx.active {
            if extreme.vertices().iter().any(|v| v == &coords[i]) {
                keep[i] = true;
            }
        }
    }
    keep
}

/// Regular box grid `[lo_1, hi_1] × … × [lo_n, hi_n]` with `resolution[k]`
/// nodes per axis, stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if upper.len() != n || resolution.len() != n {
            return Err(Error::InvalidGrid(
                "box and resolution lengths differ".into(),
            ));
        }
        for k in 0..n {
            if resolution[k] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} nodes; at least 3 are required",
                    resolution[k]
                )));
            }
            if !(lower[k].is_finite() && upper[k].is_finite() && upper[k] > lower[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has an empty or non-finite extent"
                )));
            }
        }
        Ok(Grid {
            lower,
            upper,
            resolution,
        })
    }

    /// `[-half_width, half_width]^n` with `nodes` per axis.
    pub fn symmetric(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        Grid::new(
            vec![-half_width; dim],
            vec![half_width; dim],
            vec![nodes; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.spacing(k)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.resolution[k + 1];
        }
        s
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.spacing(axis)
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0; n];
        for k in (0..n).rev() {
            idx[k] = flat % self.resolution[k];
            flat /= self.resolution[k];
        }
        idx
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(k, &v)| v >= self.lower[k] && v <= self.upper[k])
    }

    /// Every other node; requires an odd node count on each axis.
    pub fn coarsen(&self) -> Option<Grid> {
        if self
            .resolution
            .iter()
            .any(|&r| r % 2 == 0 || r.div_ceil(2) < 3)
        {
            return None;
        }
        Some(Grid {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            resolution: self.resolution.iter().map(|r| r.div_ceil(2)).collect(),
        })
    }

    pub fn scaled(&self, lambda: f64) -> Grid {
        Grid {
            lower: self.lower.iter().map(|v| v * lambda).collect(),
            upper: self.upper.iter().map(|v| v * lambda).collect(),
            resolution: self.resolution.clone(),
        }
    }
}

/// Dense samples of a finite convex function on a [`Grid`].
///
/// `smooth` records whether the sampled function is C² on the box; it selects
/// the quadrature scheme for Monge–Ampère-type integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    smooth: bool,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, smooth: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(GridFunction {
            grid,
            values,
            smooth,
        })
    }

    pub fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64 + Sync, smooth: bool) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.unravel(flat);
                for (k, &i) in idx.iter().enumerate() {
                    x[k] = grid.coord(k, i);
                }
                f(&x)
            })
            .collect();
        GridFunction::new(grid.clone(), values, smooth)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn with_smoothness(mut self, smooth: bool) -> Self {
        self.smooth = smooth;
        self
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        let s = self.grid.strides();
        self.values[idx.iter().zip(&s).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Multilinear interpolation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if !self.grid.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let strides = self.grid.strides();
        let mut base = 0usize;
        let mut frac = [0.0f64; 3];
        for k in 0..n {
            let h = self.grid.spacing(k);
            let t = (x[k] - self.grid.lower[k]) / h;
            let i = (t.floor() as usize).min(self.grid.resolution[k] - 2);
            frac[k] = t - i as f64;
            base += i * strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0usize;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    off += strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[base + off];
            }
        }
        Ok(acc)
    }

    /// Checks second differences along every axis and both diagonals of every
    /// coordinate plane against `-rel_tol · max|values|`.
    pub fn check_convexity(&self, rel_tol: f64) -> Result<()> {
        let n = self.dim();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = rel_tol * scale;
        let dirs = stencil_directions(n);
        let strides = self.grid.strides();
        let res = &self.grid.resolution;
        for flat in 0..self.grid.len() {
            let idx = self.grid.unravel(flat);
            for d in &dirs {
                if (0..n).any(|k| {
                    let i = idx[k] as i64;
                    i - d[k].abs() < 0 || i + d[k].abs() >= res[k] as i64
                }) {
                    continue;
                }
                let off: i64 = (0..n).map(|k| d[k] * strides[k] as i64).sum();
                let f0 = self.values[flat];
                let fp = self.values[(flat as i64 + off) as usize];
                let fm = self.values[(flat as i64 - off) as usize];
                let sd = fp - 2.0 * f0 + fm;
                if sd < -tol {
                    return Err(Error::NotConvex {
                        node: idx,
                        direction: d.clone(),
                        value: sd,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_discretely_convex(&self) -> bool {
        self.check_convexity(1e-9).is_ok()
    }

    fn map_nodes(&self, smooth: bool, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let mut x = vec![0.0; self.dim()];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(flat, &v)| {
                let idx = self.grid.unravel(flat);
                for (k, &i) in idx.iter().enumerate() {
                    x[k] = self.grid.coord(k, i);
                }
                f(&x, v)
            })
            .collect();
        GridFunction::new(self.grid.clone(), values, smooth)
    }

    pub fn add_linear(&self, y: &[f64]) -> Result<Self> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        self.map_nodes(self.smooth, |x, v| v + linalg::dot(x, y))
    }

    pub fn add_constant(&self, c: f64) -> Result<Self> {
        self.map_nodes(self.smooth, |_, v| v + c)
    }

    /// `v + r q` with `q(x) = |x|²/2`.
    pub fn add_quadratic(&self, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadratic weight {r} must be ≥ 0"
            )));
        }
        self.map_nodes(self.smooth, |x, v| v + 0.5 * r * linalg::dot(x, x))
    }

    /// `λ v` on the same box.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor {lambda} must be > 0"
            )));
        }
        self.map_nodes(self.smooth, |_, v| lambda * v)
    }

    /// Pointwise maximum with a function sampled on the same grid.
    pub fn pointwise_max(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridFunction::new(self.grid.clone(), values, false)
    }

    /// Restriction to every other node (see [`Grid::coarsen`]).
    pub fn coarsen(&self) -> Option<Self> {
        let coarse = self.grid.coarsen()?;
        let n = self.dim();
        let fine_strides = self.grid.strides();
        let values = (0..coarse.len())
            .map(|flat| {
                let idx = coarse.unravel(flat);
                let f: usize = (0..n).map(|k| 2 * idx[k] * fine_strides[k]).sum();
                self.values[f]
            })
            .collect();
        Some(GridFunction {
            grid: coarse,
            values,
            smooth: self.smooth,
        })
    }

    /// Restriction to every other node starting at node 1 on the axes set in
    /// `mask` and at node 0 elsewhere. Odd-start axes lose one fine spacing
    /// per side. Needs an odd count of at least 7 per axis.
    pub fn coarsen_phase(&self, mask: usize) -> Option<Self> {
        let g = &self.grid;
        if g.resolution.iter().any(|&r| r % 2 == 0 || r < 7) {
            return None;
        }
        let n = self.dim();
        let h = g.spacings();
        let odd = |k: usize| mask >> k & 1 == 1;
        let coarse = Grid {
            lower: (0..n)
                .map(|k| {
                    if odd(k) {
                        g.lower[k] + h[k]
                    } else {
                        g.lower[k]
                    }
                })
                .collect(),
            upper: (0..n)
                .map(|k| {
                    if odd(k) {
                        g.upper[k] - h[k]
                    } else {
                        g.upper[k]
                    }
                })
                .collect(),
            resolution: (0..n)
                .map(|k| {
                    if odd(k) {
                        (g.resolution[k] - 1) / 2
                    } else {
                        g.resolution[k].div_ceil(2)
                    }
                })
                .collect(),
        };
        let fine_strides = g.strides();
        let values = (0..coarse.len())
            .map(|flat| {
                let idx = coarse.unravel(flat);
                let f: usize = (0..n)
                    .map(|k| (2 * idx[k] + odd(k) as usize) * fine_strides[k])
                    .sum();
                self.values[f]
            })
            .collect();
        Some(GridFunction {
            grid: coarse,
            values,
            smooth: self.smooth,
        })
    }

    /// Replaces the box by `λ·box` keeping node values scaled by λ:
    /// node `λx` carries `λ u(x)`, i.e. the samples of `λ ⊙ u`.
    pub fn epi_multiply(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epi-multiplication factor {lambda} must be > 0"
            )));
        }
        GridFunction::new(
            self.grid.scaled(lambda),
            self.values.iter().map(|v| lambda * v).collect(),
            self.smooth,
        )
    }
}

/// Axis directions plus both diagonals `e_i ± e_j` of every coordinate plane.
pub(crate) fn stencil_directions(n: usize) -> Vec<Vec<i64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut d = vec![0; n];
        d[i] = 1;
        dirs.push(d);
    }
    for i in 0..n {
        for j in i + 1..n {
            for s in [1, -1] {
                let mut d = vec![0; n];
                d[i] = 1;
                d[j] = s;
                dirs.push(d);
            }
        }
    }
    dirs
}

/// Declarative description of a convex function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `(scale/2)·|x − center|²`.
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `½ xᵀ A x` for a symmetric positive semidefinite `A`.
    QuadraticForm {
        matrix: Vec<Vec<f64>>,
    },
    /// `⟨slope, x⟩ + offset`.
    Linear {
        slope: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    MaxAffine {
        pieces: Vec<AffinePiece>,
    },
    /// `h_K(x − translate)` for `K = conv(vertices)`.
    Support {
        vertices: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translate: Option<Vec<f64>>,
    },
    /// `(coefficient/exponent)·|x − center|^exponent`, exponent ≥ 1.
    RadialPower {
        #[serde(default = "one")]
        coefficient: f64,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Sum {
        terms: Vec<FunctionSpec>,
    },
}

fn one() -> f64 {
    1.0
}

fn centered(x: &[f64], c: &Option<Vec<f64>>) -> Vec<f64> {
    match c {
        Some(c) => linalg::sub(x, c),
        None => x.to_vec(),
    }
}

impl FunctionSpec {
    /// Validates dimensions and convexity of every term for functions on R^dim.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let len = |v: &[f64]| -> Result<()> {
            if v.len() != dim {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            FunctionSpec::Quadratic { scale, center } => {
                if !(*scale >= 0.0) {
                    return Err(Error::InvalidArgument("quadratic scale must be ≥ 0".into()));
                }
                if let Some(c) = center {
                    len(c)?;
                }
            }
            FunctionSpec::QuadraticForm { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: matrix.len(),
                    });
                }
                let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]);
                if (&m - m.transpose()).abs().max() > 1e-12 {
                    return Err(Error::InvalidArgument(
                        "quadratic form is not symmetric".into(),
                    ));
                }
                let ev = m.symmetric_eigenvalues();
                if ev.iter().any(|&l| l < -1e-12) {
                    return Err(Error::InvalidArgument(
                        "quadratic form is not positive semidefinite".into(),
                    ));
                }
            }
            FunctionSpec::Linear { slope, .. } => len(slope)?,
            FunctionSpec::MaxAffine { pieces } => {
                if pieces.is_empty() {
                    return Err(Error::InvalidArgument("max_affine needs pieces".into()));
                }
                for p in pieces {
                    len(&p.slope)?;
                }
            }
            FunctionSpec::Support {
                vertices,
                translate,
            } => {
                if vertices.is_empty() {
                    return Err(Error::InvalidArgument("support needs vertices".into()));
                }
                for v in vertices {
                    len(v)?;
                }
                if let Some(t) = translate {
                    len(t)?;
                }
            }
            FunctionSpec::RadialPower {
                coefficient,
                exponent,
                center,
            } => {
                if !(*exponent >= 1.0) || !(*coefficient >= 0.0) {
                    return Err(Error::InvalidArgument(
                        "radial power needs exponent ≥ 1 and coefficient ≥ 0".into(),
                    ));
                }
                if let Some(c) = center {
                    len(c)?;
                }
            }
            FunctionSpec::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidArgument("empty sum".into()));
                }
                for t in terms {
                    t.validate(dim)?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionSpec::Quadratic { scale, center } => {
                let d = centered(x, center);
                0.5 * scale * linalg::dot(&d, &d)
            }
            FunctionSpec::QuadraticForm { matrix } => {
                0.5 * linalg::dot(x, &linalg::mat_vec(matrix, x))
            }
            FunctionSpec::Linear { slope, offset } => linalg::dot(slope, x) + offset,
            FunctionSpec::MaxAffine { pieces } => pieces
                .iter()
                .map(|p| p.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
            FunctionSpec::Support {
                vertices,
                translate,
            } => {
                let d = centered(x, translate);
                vertices
                    .iter()
                    .map(|v| linalg::dot(v, &d))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            FunctionSpec::RadialPower {
                coefficient,
                exponent,
                center,
            } => {
                let d = centered(x, center);
                coefficient / exponent * linalg::norm(&d).powf(*exponent)
            }
            FunctionSpec::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Whether the function is C² everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            FunctionSpec::Quadratic { .. }
            | FunctionSpec::QuadraticForm { .. }
            | FunctionSpec::Linear { .. } => true,
            FunctionSpec::MaxAffine { pieces } => pieces.len() == 1,
            FunctionSpec::Support { vertices, .. } => vertices.len() == 1,
            FunctionSpec::RadialPower {
                exponent,
                coefficient,
                ..
            } => *exponent >= 2.0 || *coefficient == 0.0,
            FunctionSpec::Sum { terms } => terms.iter().all(|t| t.is_smooth()),
        }
    }

    pub fn is_piecewise_linear(&self) -> bool {
        match self {
            FunctionSpec::Linear { .. }
            | FunctionSpec::MaxAffine { .. }
            | FunctionSpec::Support { .. } => true,
            FunctionSpec::Quadratic { scale, .. } => *scale == 0.0,
            FunctionSpec::QuadraticForm { matrix } => matrix.iter().flatten().all(|&v| v == 0.0),
            FunctionSpec::RadialPower { coefficient, .. } => *coefficient == 0.0,
            FunctionSpec::Sum { terms } => terms.iter().all(|t| t.is_piecewise_linear()),
        }
    }

    /// Exact representation, available for sums of affine, max-affine and
    /// support-function terms.
    pub fn to_max_affine(&self, dim: usize) -> Result<MaxAffineFunction> {
        self.validate(dim)?;
        let zero = || MaxAffineFunction::new(dim, vec![(vec![0.0; dim], 0.0)]);
        match self {
            FunctionSpec::Linear { slope, offset } => {
                MaxAffineFunction::new(dim, vec![(slope.clone(), *offset)])
            }
            FunctionSpec::MaxAffine { pieces } => MaxAffineFunction::new(
                dim,
                pieces.iter().map(|p| (p.slope.clone(), p.offset)).collect(),
            ),
            FunctionSpec::Support {
                vertices,
                translate,
            } => {
                let h = Polytope::new(vertices.clone())?.support_function();
                match translate {
                    Some(t) => h.translate(t),
                    None => Ok(h),
                }
            }
            FunctionSpec::Sum { terms } => {
                let mut acc = zero()?;
                for t in terms {
                    acc = acc.sum(&t.to_max_affine(dim)?)?;
                }
                Ok(acc)
            }
            _ if self.is_piecewise_linear() => zero(),
            _ => Err(Error::UnsupportedRepresentation(
                "function is not piecewise linear".into(),
            )),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        self.validate(grid.dim())?;
        GridFunction::sample(grid, |x| self.eval(x), self.is_smooth())
    }

    /// `v ∘ ϑ⁻¹` for an orthogonal `ϑ`.
    pub fn rotate(&self, m: &[Vec<f64>]) -> FunctionSpec {
        let rot = |v: &Vec<f64>| linalg::mat_vec(m, v);
        match self {
            FunctionSpec::Quadratic { scale, center } => FunctionSpec::Quadratic {
                scale: *scale,
                center: center.as_ref().map(rot),
            },
            FunctionSpec::QuadraticForm { matrix } => FunctionSpec::QuadraticForm {
                matrix: linalg::mat_mul(&linalg::mat_mul(m, matrix), &linalg::transpose(m)),
            },
            FunctionSpec::Linear { slope, offset } => FunctionSpec::Linear {
                slope: rot(slope),
                offset: *offset,
            },
            FunctionSpec::MaxAffine { pieces } => FunctionSpec::MaxAffine {
                pieces: pieces
                    .iter()
                    .map(|p| AffinePiece::new(rot(&p.slope), p.offset))
                    .collect(),
            },
            FunctionSpec::Support {
                vertices,
                translate,
            } => FunctionSpec::Support {
                vertices: vertices.iter().map(rot).collect(),
                translate: translate.as_ref().map(rot),
            },
            FunctionSpec::RadialPower {
                coefficient,
                exponent,
                center,
            } => FunctionSpec::RadialPower {
                coefficient: *coefficient,
                exponent: *exponent,
                center: center.as_ref().map(rot),
            },
            FunctionSpec::Sum { terms } => FunctionSpec::Sum {
                terms: terms.iter().map(|t| t.rotate(m)).collect(),
            },
        }
    }

    /// `λ v`.
    pub fn scaled(&self, lambda: f64) -> FunctionSpec {
        match self {
            FunctionSpec::Quadratic { scale, center } => FunctionSpec::Quadratic {
                scale: scale * lambda,
                center: center.clone(),
            },
            FunctionSpec::QuadraticForm { matrix } => FunctionSpec::QuadraticForm {
                matrix: matrix.iter().map(|r| linalg::scale(r, lambda)).collect(),
            },
            FunctionSpec::Linear { slope, offset } => FunctionSpec::Linear {
                slope: linalg::scale(slope, lambda),
                offset: offset * lambda,
            },
            FunctionSpec::MaxAffine { pieces } => FunctionSpec::MaxAffine {
                pieces: pieces
                    .iter()
                    .map(|p| AffinePiece::new(linalg::scale(&p.slope, lambda), p.offset * lambda))
                    .collect(),
            },
            FunctionSpec::Support {
                vertices,
                translate,
            } => FunctionSpec::Support {
                vertices: vertices.iter().map(|v| linalg::scale(v, lambda)).collect(),
                translate: translate.clone(),
            },
            FunctionSpec::RadialPower {
                coefficient,
                exponent,
                center,
            } => FunctionSpec::RadialPower {
                coefficient: coefficient * lambda,
                exponent: *exponent,
                center: center.clone(),
            },
            FunctionSpec::Sum { terms } => FunctionSpec::Sum {
                terms: terms.iter().map(|t| t.scaled(lambda)).collect(),
            },
        }
    }

    pub fn plus(self, other: FunctionSpec) -> FunctionSpec {
        match self {
            FunctionSpec::Sum { mut terms } => {
                terms.push(other);
                FunctionSpec::Sum { terms }
            }
            s => FunctionSpec::Sum {
                terms: vec![s, other],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_value_evaluates_exactly() {
        let v = MaxAffineFunction::new(1, vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)]).unwrap();
        assert_eq!(v.eval(&[0.5]), 0.5);
        assert_eq!(v.eval(&[0.0]), 0.0);
    }

    #[test]
    fn redundant_and_duplicate_pieces_are_dropped() {
        // |x| with a dominated middle piece and a duplicated slope.
        let v = MaxAffineFunction::new(
            1,
            vec![
                (vec![1.0], 0.0),
                (vec![-1.0], 0.0),
                (vec![0.0], -1.0),
                (vec![1.0], -3.0),
            ],
        )
        .unwrap();
        assert_eq!(v.pieces().len(), 2);
        // A piece active only at a single point is redundant too.
        let w = MaxAffineFunction::new(
            1,
            vec![(vec![1.0], 0.0), (vec![-1.0], 0.0), (vec![0.0], 0.0)],
        )
        .unwrap();
        assert_eq!(w.pieces().len(), 2);
        // Lower-dimensional slope sets keep their pieces.
        let r =
            MaxAffineFunction::new(2, vec![(vec![1.0, 0.0], 0.0), (vec![-1.0, 0.0], 0.0)]).unwrap();
        assert_eq!(r.pieces().len(), 2);
    }

    #[test]
    fn add_linear_shifts_slopes() {
        let v = MaxAffineFunction::new(1, vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)]).unwrap();
        let w = v.add_linear(&[1.0]).unwrap();
        let mut slopes = w.slopes();
        slopes.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(slopes, vec![vec![0.0], vec![2.0]]);
    }

    #[test]
    fn grid_interpolation_is_exact_at_nodes() {
        let g = Grid::symmetric(1, 2.0, 65).unwrap();
        let q = FunctionSpec::Quadratic {
            scale: 1.0,
            center: None,
        }
        .sample(&g)
        .unwrap();
        assert_eq!(q.eval(&[1.0]).unwrap(), 0.5);
        assert!((q.eval(&[1.01]).unwrap() - 0.5 * 1.01 * 1.01).abs() < 1e-3);
        assert!(matches!(q.eval(&[2.5]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn convexity_validator() {
        let g = Grid::symmetric(2, 1.0, 17).unwrap();
        let q = GridFunction::sample(&g, |x| 0.5 * linalg::dot(x, x), true).unwrap();
        assert!(q.is_discretely_convex());
        let a = GridFunction::sample(&g, linalg::norm, false).unwrap();
        assert!(a.is_discretely_convex());
        let neg = GridFunction::sample(&g, |x| -linalg::dot(x, x), true).unwrap();
        assert!(matches!(
            neg.check_convexity(1e-9),
            Err(Error::NotConvex { .. })
        ));
        // Convex along the axes but not along a diagonal.
        let saddle =
            GridFunction::sample(&g, |x| x[0] * x[0] + x[1] * x[1] - 3.0 * x[0] * x[1], true)
                .unwrap();
        assert!(!saddle.is_discretely_convex());
    }

    #[test]
    fn coarsen_keeps_every_other_node() {
        let g = Grid::symmetric(2, 1.0, 9).unwrap();
        let f = GridFunction::sample(&g, |x| x[0] + 10.0 * x[1], true).unwrap();
        let c = f.coarsen().unwrap();
        assert_eq!(c.grid().resolution, vec![5, 5]);
        assert_eq!(c.value_at(&[1, 2]), f.value_at(&[2, 4]));
        assert!(Grid::symmetric(1, 1.0, 8).unwrap().coarsen().is_none());
    }

    #[test]
    fn spec_rotation_matches_composition() {
        let spec = FunctionSpec::Sum {
            terms: vec![
                FunctionSpec::QuadraticForm {
                    matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
                },
                FunctionSpec::Linear {
                    slope: vec![0.3, -0.2],
                    offset: 0.0,
                },
                FunctionSpec::Support {
                    vertices: vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.1, 0.9]],
                    translate: Some(vec![0.2, 0.1]),
                },
            ],
        };
        let (c, s) = (0.6f64, 0.8f64);
        let m = vec![vec![c, -s], vec![s, c]];
        let mt = linalg::transpose(&m);
        let rotated = spec.rotate(&m);
        for x in [[0.3, -0.7], [1.2, 0.4], [-0.5, -0.5]] {
            let pre = linalg::mat_vec(&mt, &x);
            assert!((rotated.eval(&x) - spec.eval(&pre)).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_to_max_affine() {
        let spec = FunctionSpec::Support {
            vertices: vec![
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
            ],
            translate: None,
        };
        let h = spec.to_max_affine(2).unwrap();
        assert_eq!(h.pieces().len(), 4);
        assert_eq!(h.eval(&[0.3, -0.5]), 0.8);
        let bad = FunctionSpec::Quadratic {
            scale: 1.0,
            center: None,
        };
        assert!(matches!(
            bad.to_max_affine(2),
            Err(Error::UnsupportedRepresentation(_))
        ));
    }
}
