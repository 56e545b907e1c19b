//! Legendre–Fenchel conjugation and the epi-algebra on both representations.
//!
//! For a max-affine `v` the conjugate `u = v*` is the lower convex envelope of
//! the lifted slopes `(a_i, −b_i)`. Its cells are found from the primal side:
//! every vertex `x_k` of the arrangement of pieces carries the cell
//! `C_k = conv{a_i : i active at x_k} = ∂v(x_k)`, and `u` is affine on `C_k`
//! with gradient `x_k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{check_orthogonal, FunctionSpec, Grid, GridFunction, MaxAffineFunction};
use crate::linalg::{self, AffineFrame};
use crate::polytope::Polytope;

/// A vertex of the arrangement `max_i ⟨c_i, z⟩ + b_i` together with its
/// active pieces.
#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    pub point: Vec<f64>,
    pub active: Vec<usize>,
}

/// Vertices of the arrangement in `R^d`, `d = slopes[0].len()`, assuming the
/// slopes affinely span `R^d`. Each `(d+1)`-subset whose pieces agree at a
/// unique point that is also maximal yields a vertex; duplicates are merged.
pub(crate) fn enumerate_vertices(slopes: &[Vec<f64>], offsets: &[f64]) -> Vec<Vertex> {
    let m = slopes.len();
    let d = slopes.first().map_or(0, |s| s.len());
    if m < d + 1 || d == 0 {
        return Vec::new();
    }
    let slope_scale = linalg::extent(slopes);
    let off_scale = offsets.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let mut out: Vec<Vertex> = Vec::new();
    for subset in linalg::all_subsets(m, d + 1) {
        if out
            .iter()
            .any(|v| subset.iter().all(|i| v.active.binary_search(i).is_ok()))
        {
            continue;
        }
        let s0 = subset[0];
        let rows: Vec<Vec<f64>> = subset[1..]
            .iter()
            .map(|&i| linalg::sub(&slopes[i], &slopes[s0]))
            .collect();
        let rhs: Vec<f64> = subset[1..]
            .iter()
            .map(|&i| offsets[s0] - offsets[i])
            .collect();
        let z = match linalg::solve(&rows, &rhs, 1e-10) {
            Some(z) => z,
            None => continue,
        };
        let zmax = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = 1e-9 * (off_scale + slope_scale * zmax);
        let vals: Vec<f64> = (0..m)
            .map(|i| linalg::dot(&slopes[i], &z) + offsets[i])
            .collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if subset.iter().any(|&i| top - vals[i] > tol) {
            continue;
        }
        let active: Vec<usize> = (0..m).filter(|&i| top - vals[i] <= tol).collect();
        let ztol = 1e-9 * (1.0 + zmax);
        if out.iter().any(|v| linalg::dist(&v.point, &z) <= ztol) {
            continue;
        }
        out.push(Vertex { point: z, active });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCell {
    /// `x_k`, the gradient of `u` on the cell.
    pub gradient_point: Vec<f64>,
    /// `C_k = ∂v(x_k)`.
    pub cell: Polytope,
    /// `v(x_k)`, so that `u(y) = ⟨x_k, y⟩ − v(x_k)` on `C_k`.
    pub primal_value: f64,
}

/// The conjugate of a max-affine function as a polyhedral subdivision of its
/// domain `conv{a_i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCellComplex {
    dim: usize,
    cells: Vec<DualCell>,
    domain: Polytope,
}

pub fn conjugate_max_affine(v: &MaxAffineFunction) -> DualCellComplex {
    let n = v.dim();
    let slopes = v.slopes();
    let offsets: Vec<f64> = v.pieces().iter().map(|p| p.offset).collect();
    let domain = Polytope::new(slopes.clone()).expect("max-affine functions have pieces");
    let frame = AffineFrame::of(&slopes, 1e-10 * linalg::extent(&slopes));
    let mut cells = Vec::new();
    if frame.dim() == 0 {
        cells.push(DualCell {
            gradient_point: vec![0.0; n],
            cell: domain.clone(),
            primal_value: offsets[0],
        });
    } else {
        let coords: Vec<Vec<f64>> = slopes.iter().map(|a| frame.coords(a)).collect();
        for vtx in enumerate_vertices(&coords, &offsets) {
            let mut x = vec![0.0; n];
            for (zl, b) in vtx.point.iter().zip(&frame.basis) {
                linalg::axpy(&mut x, *zl, b);
            }
            let cell = Polytope::new(vtx.active.iter().map(|&i| slopes[i].clone()).collect())
                .expect("active set is non-empty");
            let primal_value = v.eval(&x);
            cells.push(DualCell {
                gradient_point: x,
                cell,
                primal_value,
            });
        }
    }
    cells.sort_by(|a, b| linalg::lex_cmp(&a.gradient_point, &b.gradient_point));
    DualCellComplex {
        dim: n,
        cells,
        domain,
    }
}

impl DualCellComplex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[DualCell] {
        &self.cells
    }

    pub fn domain(&self) -> &Polytope {
        &self.domain
    }

    /// `u(y)`, `+∞` outside the domain.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let tol = 1e-9 * linalg::extent(self.domain.vertices());
        if !self.domain.contains(y, tol) {
            return f64::INFINITY;
        }
        self.max_over_cells(y)
    }

    fn max_over_cells(&self, y: &[f64]) -> f64 {
        self.cells
            .iter()
            .map(|c| linalg::dot(&c.gradient_point, y) - c.primal_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The pre-conjugate `u*` rebuilt from the complex alone: one piece
    /// `⟨·, a⟩ − u(a)` per cell vertex `a`.
    pub fn preconjugate(&self) -> Result<MaxAffineFunction> {
        let mut pieces = Vec::new();
        for c in &self.cells {
            for a in c.cell.vertices() {
                pieces.push((a.clone(), -self.max_over_cells(a)));
            }
        }
        MaxAffineFunction::new(self.dim, pieces)
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.cell.volume()).sum()
    }

    /// `u ∘ ϑ⁻¹`: gradient points and cells are mapped by `ϑ`.
    pub fn rotate(&self, m: &[Vec<f64>]) -> Result<Self> {
        check_orthogonal(m, self.dim)?;
        let mut cells: Vec<DualCell> = self
            .cells
            .iter()
            .map(|c| {
                Ok(DualCell {
                    gradient_point: linalg::mat_vec(m, &c.gradient_point),
                    cell: c.cell.transform(m)?,
                    primal_value: c.primal_value,
                })
            })
            .collect::<Result<_>>()?;
        cells.sort_by(|a, b| linalg::lex_cmp(&a.gradient_point, &b.gradient_point));
        Ok(DualCellComplex {
            dim: self.dim,
            cells,
            domain: self.domain.transform(m)?,
        })
    }

    /// `λ ⊙ u`: cells scale by λ, gradient points are kept.
    pub fn epi_multiply(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let cells = self
            .cells
            .iter()
            .map(|c| {
                Ok(DualCell {
                    gradient_point: c.gradient_point.clone(),
                    cell: c.cell.scale(lambda)?,
                    primal_value: lambda * c.primal_value,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DualCellComplex {
            dim: self.dim,
            cells,
            domain: self.domain.scale(lambda)?,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epi-multiplication factor {lambda} must be > 0"
        )));
    }
    Ok(())
}

/// Representations on which `λ ⊙ ·` is implemented.
pub trait EpiMultiply: Sized {
    fn epi_multiply_by(&self, lambda: f64) -> Result<Self>;
}

impl EpiMultiply for DualCellComplex {
    fn epi_multiply_by(&self, lambda: f64) -> Result<Self> {
        self.epi_multiply(lambda)
    }
}

/// A max-affine `v` stands for `u = v*`; `λ ⊙ u` has conjugate `λ v`.
impl EpiMultiply for MaxAffineFunction {
    fn epi_multiply_by(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.scale(lambda)
    }
}

impl EpiMultiply for GridFunction {
    fn epi_multiply_by(&self, lambda: f64) -> Result<Self> {
        self.epi_multiply(lambda)
    }
}

pub fn epi_multiply<T: EpiMultiply>(u: &T, lambda: f64) -> Result<T> {
    u.epi_multiply_by(lambda)
}

/// Either representation of a finite convex function.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    MaxAffine(MaxAffineFunction),
    Grid(GridFunction),
}

impl ConvexFunction {
    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::MaxAffine(v) => v.dim(),
            ConvexFunction::Grid(g) => g.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ConvexFunction::MaxAffine(v) => Ok(v.eval(x)),
            ConvexFunction::Grid(g) => g.eval(x),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ConvexFunction::MaxAffine(_))
    }
}

/// Whether an orthogonal matrix preserves orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Proper,
    Improper,
}

pub fn orientation(m: &[Vec<f64>]) -> Result<Orientation> {
    check_orthogonal(m, m.len())?;
    Ok(if linalg::det(m) > 0.0 {
        Orientation::Proper
    } else {
        Orientation::Improper
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    AddLinear(Vec<f64>),
    AddConstant(f64),
    Rotate(Vec<Vec<f64>>),
    AddQuadratic(f64),
    Scale(f64),
}

/// Applies an action to a function on the primal side. Rotating a grid needs
/// samples outside the original box, so grids are rotated by resampling a
/// [`FunctionSpec`] instead (see [`rotate_spec_on_grid`]).
pub fn transform_fconvf(v: &ConvexFunction, action: &Action) -> Result<ConvexFunction> {
    match (v, action) {
        (ConvexFunction::MaxAffine(f), Action::AddLinear(y)) => {
            Ok(ConvexFunction::MaxAffine(f.add_linear(y)?))
        }
        (ConvexFunction::MaxAffine(f), Action::AddConstant(c)) => {
            Ok(ConvexFunction::MaxAffine(f.add_constant(*c)?))
        }
        (ConvexFunction::MaxAffine(f), Action::Rotate(m)) => {
            Ok(ConvexFunction::MaxAffine(f.rotate(m)?))
        }
        (ConvexFunction::MaxAffine(f), Action::Scale(l)) => {
            Ok(ConvexFunction::MaxAffine(f.scale(*l)?))
        }
        (ConvexFunction::MaxAffine(_), Action::AddQuadratic(_)) => {
            Err(Error::UnsupportedRepresentation(
                "v + r·q is not piecewise linear; sample v on a grid first".into(),
            ))
        }
        (ConvexFunction::Grid(g), Action::AddLinear(y)) => {
            Ok(ConvexFunction::Grid(g.add_linear(y)?))
        }
        (ConvexFunction::Grid(g), Action::AddConstant(c)) => {
            Ok(ConvexFunction::Grid(g.add_constant(*c)?))
        }
        (ConvexFunction::Grid(g), Action::AddQuadratic(r)) => {
            Ok(ConvexFunction::Grid(g.add_quadratic(*r)?))
        }
        (ConvexFunction::Grid(g), Action::Scale(l)) => Ok(ConvexFunction::Grid(g.scale(*l)?)),
        (ConvexFunction::Grid(_), Action::Rotate(_)) => Err(Error::UnsupportedRepresentation(
            "grid samples cannot be rotated in place; resample the rotated spec".into(),
        )),
    }
}

/// Samples `spec ∘ ϑ⁻¹` on `grid`.
pub fn rotate_spec_on_grid(
    spec: &FunctionSpec,
    m: &[Vec<f64>],
    grid: &Grid,
) -> Result<GridFunction> {
    check_orthogonal(m, grid.dim())?;
    spec.rotate(m).sample(grid)
}

/// Result of a discrete Legendre transform on a dual grid, with the primal
/// node attaining each maximum.
#[derive(Debug, Clone)]
pub struct DiscreteConjugate {
    pub dual: Grid,
    pub values: Vec<f64>,
    /// Flat index of the maximizing primal node for every dual node.
    pub argmax: Vec<usize>,
}

/// `out[t] = max_i s[t]·x[i] − y[i]` for increasing `x` and `s`, in linear
/// time: lower hull of `(x_i, y_i)`, then a monotone walk over slopes.
fn llt_1d(
    x: &[f64],
    y: &[f64],
    s: &[f64],
    out: &mut [f64],
    arg: &mut [usize],
    hull: &mut Vec<usize>,
) {
    hull.clear();
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut k = 0;
    for t in 0..s.len() {
        while k + 1 < hull.len()
            && s[t] * x[hull[k + 1]] - y[hull[k + 1]] >= s[t] * x[hull[k]] - y[hull[k]]
        {
            k += 1;
        }
        out[t] = s[t] * x[hull[k]] - y[hull[k]];
        arg[t] = hull[k];
    }
}

struct Passes {
    shape: Vec<usize>,
    values: Vec<f64>,
    /// `stages[axis]` holds the shape after that axis' pass and the argmax
    /// (primal index along `axis`) for every entry of that shape.
    stages: Vec<Option<(Vec<usize>, Vec<usize>)>>,
}

/// 1D transforms along axes `n-1, …, stop`. Each pass computes
/// `max_x s·x − y(x)`, with `y = f` for the first pass and `y = −previous`
/// afterwards.
fn conjugate_passes(f: &GridFunction, dual: &Grid, stop: usize) -> Passes {
    let n = f.dim();
    let primal = f.grid();
    let mut shape: Vec<usize> = primal.resolution.clone();
    let mut cur: Vec<f64> = f.values().to_vec();
    let mut stages = vec![None; n];
    for axis in (stop..n).rev() {
        let first = axis == n - 1;
        let xs: Vec<f64> = (0..primal.resolution[axis])
            .map(|i| primal.coord(axis, i))
            .collect();
        let ss: Vec<f64> = (0..dual.resolution[axis])
            .map(|i| dual.coord(axis, i))
            .collect();
        let in_len = shape[axis];
        let out_len = ss.len();
        let mut out_shape = shape.clone();
        out_shape[axis] = out_len;
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let total_out: usize = out_shape.iter().product();
        let results: Vec<(Vec<f64>, Vec<usize>)> = (0..outer * inner)
            .into_par_iter()
            .map(|line| {
                let (o, i) = (line / inner, line % inner);
                let y: Vec<f64> = (0..in_len)
                    .map(|t| {
                        let v = cur[(o * in_len + t) * inner + i];
                        if first {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect();
                let mut out = vec![0.0; out_len];
                let mut arg = vec![0usize; out_len];
                let mut hull = Vec::with_capacity(in_len);
                llt_1d(&xs, &y, &ss, &mut out, &mut arg, &mut hull);
                (out, arg)
            })
            .collect();
        let mut next = vec![0.0; total_out];
        let mut args = vec![0usize; total_out];
        for (line, (out, arg)) in results.into_iter().enumerate() {
            let (o, i) = (line / inner, line % inner);
            for t in 0..out_len {
                let idx = (o * out_len + t) * inner + i;
                next[idx] = out[t];
                args[idx] = arg[t];
            }
        }
        stages[axis] = Some((out_shape.clone(), args));
        shape = out_shape;
        cur = next;
    }
    Passes {
        shape,
        values: cur,
        stages,
    }
}

impl Passes {
    /// Replaces dual indices on axes `from..n` of `idx` by primal ones.
    fn backtrack(&self, idx: &mut [usize], from: usize) {
        for axis in from..idx.len() {
            let (shape, args) = self.stages[axis].as_ref().expect("axis was transformed");
            idx[axis] = args[ravel(idx, shape)];
        }
    }
}

/// Separable discrete conjugate: one 1D transform per axis, last axis first.
pub fn discrete_conjugate(f: &GridFunction, dual: &Grid) -> Result<DiscreteConjugate> {
    let n = f.dim();
    if dual.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dual.dim(),
        });
    }
    let passes = conjugate_passes(f, dual, 0);
    let strides = f.grid().strides();
    let argmax: Vec<usize> = (0..dual.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = dual.unravel(flat);
            passes.backtrack(&mut idx, 0);
            idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
        })
        .collect();
    Ok(DiscreteConjugate {
        dual: dual.clone(),
        values: passes.values,
        argmax,
    })
}

/// An interval `[lo, hi]` of the axis-0 dual coordinate on which the
/// maximizing primal node is constant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub primal: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Exact partition of every axis-0 dual line. The dual grid fixes the
/// coordinates on axes `1..n`; its axis-0 entry is ignored. Lines are
/// returned in row-major order of the dual indices on axes `1..n`.
pub(crate) fn dual_segments(f: &GridFunction, dual: &Grid) -> Vec<Vec<Segment>> {
    let n = f.dim();
    let primal = f.grid();
    let passes = conjugate_passes(f, dual, 1);
    let n0 = primal.resolution[0];
    let rest: usize = passes.shape[1..].iter().product();
    let xs: Vec<f64> = (0..n0).map(|i| primal.coord(0, i)).collect();
    let strides = primal.strides();
    (0..rest)
        .into_par_iter()
        .map(|line| {
            let y: Vec<f64> = (0..n0)
                .map(|i| {
                    let v = passes.values[i * rest + line];
                    if n == 1 {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let mut hull: Vec<usize> = Vec::with_capacity(n0);
            for i in 0..n0 {
                while hull.len() >= 2 {
                    let a = hull[hull.len() - 2];
                    let b = hull[hull.len() - 1];
                    if (y[b] - y[a]) * (xs[i] - xs[a]) >= (y[i] - y[a]) * (xs[b] - xs[a]) {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(i);
            }
            let mut tail = vec![0usize; n];
            let mut rem = line;
            for k in (1..n).rev() {
                tail[k] = rem % passes.shape[k];
                rem /= passes.shape[k];
            }
            let mut segs = Vec::with_capacity(hull.len());
            for (k, &i) in hull.iter().enumerate() {
                let lo = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    let a = hull[k - 1];
                    (y[i] - y[a]) / (xs[i] - xs[a])
                };
                let hi = if k + 1 == hull.len() {
                    f64::INFINITY
                } else {
                    let b = hull[k + 1];
                    (y[b] - y[i]) / (xs[b] - xs[i])
                };
                let mut idx = tail.clone();
                idx[0] = i;
                passes.backtrack(&mut idx, 1);
                let flat = idx.iter().zip(&strides).map(|(a, s)| a * s).sum();
                segs.push(Segment {
                    primal: flat,
                    lo,
                    hi,
                });
            }
            segs
        })
        .collect()
}

fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, s)| acc * s + i)
}

/// Per-axis range of forward differences, a discrete stand-in for the range
/// of `∂_k v` over the box.
pub fn gradient_range(f: &GridFunction) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let n = g.dim();
    let strides = g.strides();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let vals = f.values();
    for flat in 0..g.len() {
        let idx = g.unravel(flat);
        for k in 0..n {
            if idx[k] + 1 < g.resolution[k] {
                let d = (vals[flat + strides[k]] - vals[flat]) / g.spacing(k);
                lo[k] = lo[k].min(d);
                hi[k] = hi[k].max(d);
            }
        }
    }
    (lo, hi)
}

/// Whether the gradient range is a single value on some axis (relative to
/// the overall gradient scale).
pub(crate) fn degenerate_axis(lo: &[f64], hi: &[f64]) -> Option<usize> {
    let scale = lo.iter().chain(hi).fold(1.0f64, |m, v| m.max(v.abs()));
    (0..lo.len()).find(|&k| hi[k] - lo[k] <= 1e-9 * scale)
}

/// Dual box covering the gradient range padded by one dual spacing per side
/// (±1 around degenerate axes), with `nodes` per axis.
pub fn default_dual_grid(f: &GridFunction, nodes: &[usize]) -> Result<Grid> {
    let (lo, hi) = gradient_range(f);
    let n = f.dim();
    let mut glo = vec![0.0; n];
    let mut ghi = vec![0.0; n];
    let scale = lo.iter().chain(&hi).fold(1.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        if nodes[k] < 5 {
            return Err(Error::InvalidGrid(
                "dual grid needs at least 5 nodes per axis".into(),
            ));
        }
        let w = hi[k] - lo[k];
        if w <= 1e-9 * scale {
            glo[k] = lo[k] - 1.0;
            ghi[k] = hi[k] + 1.0;
        } else {
            let h = w / (nodes[k] - 3) as f64;
            glo[k] = lo[k] - h;
            ghi[k] = hi[k] + h;
        }
    }
    Grid::new(glo, ghi, nodes.to_vec())
}

/// Grid samples of `f*`. Without a requested box the dual box is
/// [`default_dual_grid`] with the primal resolution; a requested box that
/// does not contain the gradient range is a clipping error.
pub fn conjugate_grid(f: &GridFunction, dual: Option<&Grid>) -> Result<GridFunction> {
    let dual = match dual {
        Some(d) => {
            if d.dim() != f.dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.dim(),
                    found: d.dim(),
                });
            }
            let (lo, hi) = gradient_range(f);
            for k in 0..f.dim() {
                let slack = 1e-9 * (1.0 + lo[k].abs().max(hi[k].abs()));
                if lo[k] < d.lower[k] - slack || hi[k] > d.upper[k] + slack {
                    return Err(Error::Clipping {
                        axis: k,
                        lo: lo[k],
                        hi: hi[k],
                        box_lo: d.lower[k],
                        box_hi: d.upper[k],
                    });
                }
            }
            d.clone()
        }
        None => default_dual_grid(f, &f.grid().resolution)?,
    };
    let c = discrete_conjugate(f, &dual)?;
    GridFunction::new(dual, c.values, f.is_smooth())
}
