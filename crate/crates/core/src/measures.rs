//! Monge–Ampère and Hessian-measure integrals.
//!
//! Exact pathway: atoms of the dual cell complex. Grid pathway: centered
//! finite differences on interior nodes, or for top-degree integrals of
//! non-smooth samples in n ≥ 2, an integral over the discrete conjugate
//! (`∫ζ(x) dMA(v) = ∫_{dom u} ζ(∇u(p)) dp` with `∇u(p)` the maximizing node),
//! exact along axis 0 where the maximizer is piecewise constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::function::{Grid, GridFunction, MaxAffineFunction};
use crate::linalg;
use crate::result::{Pathway, ScalarResult, Scheme, VectorResult};
use crate::transform::{
    conjugate_max_affine, default_dual_grid, degenerate_axis, dual_segments, gradient_range,
    ConvexFunction,
};

/// A scalar weight with compact support in the centered ball of the given radius.
pub trait Weight: Sync {
    fn at(&self, x: &[f64]) -> f64;
    fn support_radius(&self) -> f64;
}

impl Weight for RadialDensity {
    fn at(&self, x: &[f64]) -> f64 {
        RadialDensity::at(self, x)
    }
    fn support_radius(&self) -> f64 {
        RadialDensity::support_radius(self)
    }
}

/// A user weight with a declared support radius.
pub struct FnWeight<F> {
    pub f: F,
    pub radius: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Weight for FnWeight<F> {
    fn at(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn support_radius(&self) -> f64 {
        self.radius
    }
}

/// The vector factor multiplying `weight(x)·[Hess v]_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    One,
    Gradient,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// Dual quadrature for top degree on non-smooth samples in n ≥ 2, finite
    /// differences otherwise.
    Auto,
    FiniteDifference,
    DualQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
    pub cell_moment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

/// `MA(v; ·)` for max-affine `v`: one atom per full-dimensional dual cell.
pub fn ma_atoms(v: &MaxAffineFunction) -> AtomicMeasure {
    let complex = conjugate_max_affine(v);
    let atoms = complex
        .cells()
        .iter()
        .filter(|c| c.cell.volume() > 0.0)
        .map(|c| Atom {
            location: c.gradient_point.clone(),
            mass: c.cell.volume(),
            cell_moment: c.cell.moment_vector(),
        })
        .collect();
    AtomicMeasure {
        dim: v.dim(),
        atoms,
    }
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `Σ_k ζ(x_k) mass_k`.
    pub fn integrate(&self, zeta: &dyn Weight) -> f64 {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += zeta.at(&a.location) * a.mass;
        }
        acc
    }

    /// `Σ_k ψ(x_k) mass_k`.
    pub fn integrate_vec(&self, psi: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for a in &self.atoms {
            let p = psi(&a.location);
            for (s, v) in acc.iter_mut().zip(&p) {
                *s += v * a.mass;
            }
        }
        acc
    }

    /// `Σ_k ζ(x_k) m(C_k)`.
    pub fn theta0(&self, zeta: &dyn Weight) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for a in &self.atoms {
            let w = zeta.at(&a.location);
            for (s, m) in acc.iter_mut().zip(&a.cell_moment) {
                *s += w * m;
            }
        }
        acc
    }
}

pub fn ma_integrate(v: &ConvexFunction, zeta: &dyn Weight) -> Result<ScalarResult> {
    match v {
        ConvexFunction::MaxAffine(f) => Ok(ScalarResult::exact(ma_atoms(f).integrate(zeta))),
        ConvexFunction::Grid(g) => {
            let r = hess_j_integrate(g, g.dim(), zeta, Factor::One)?;
            Ok(ScalarResult {
                value: r.value[0],
                error_estimate: r.error_estimate,
                pathway: r.pathway,
                scheme: r.scheme,
            })
        }
    }
}

/// `∫ψ dMA(v)` for a vector weight supported in the ball of radius `radius`.
pub fn ma_integrate_vec(
    v: &ConvexFunction,
    psi: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    radius: f64,
) -> Result<VectorResult> {
    match v {
        ConvexFunction::MaxAffine(f) => Ok(VectorResult::exact(ma_atoms(f).integrate_vec(psi))),
        ConvexFunction::Grid(g) => {
            let n = g.dim();
            grid_integral(g, n, n, radius, GridScheme::Auto, &|x, _grad, e, out| {
                let p = psi(x);
                for (o, v) in out.iter_mut().zip(&p) {
                    *o = v * e;
                }
            })
        }
    }
}

pub fn theta0_integrate(v: &ConvexFunction, zeta: &dyn Weight) -> Result<VectorResult> {
    match v {
        ConvexFunction::MaxAffine(f) => Ok(VectorResult::exact(ma_atoms(f).theta0(zeta))),
        ConvexFunction::Grid(g) => hess_j_integrate(g, g.dim(), zeta, Factor::Gradient),
    }
}

/// `∫ zeta(x)·F(x)·[Hess v(x)]_j dx` with `F ∈ {1, ∇v, x}`.
pub fn hess_j_integrate(
    v: &GridFunction,
    j: usize,
    zeta: &dyn Weight,
    factor: Factor,
) -> Result<VectorResult> {
    hess_j_integrate_with(v, j, zeta, factor, GridScheme::Auto)
}

pub fn hess_j_integrate_with(
    v: &GridFunction,
    j: usize,
    zeta: &dyn Weight,
    factor: Factor,
    scheme: GridScheme,
) -> Result<VectorResult> {
    let n = v.dim();
    if j > n {
        return Err(Error::DegreeOutOfRange { j, dim: n });
    }
    let len = if factor == Factor::One { 1 } else { n };
    grid_integral(
        v,
        j,
        len,
        zeta.support_radius(),
        scheme,
        &|x, grad, e, out| {
            let w = zeta.at(x);
            if w == 0.0 || e == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            match factor {
                Factor::One => out[0] = w * e,
                Factor::Gradient => {
                    for (o, g) in out.iter_mut().zip(grad) {
                        *o = w * g * e;
                    }
                }
                Factor::Position => {
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o = w * xi * e;
                    }
                }
            }
        },
    )
}

/// `e_j` of the eigenvalues of a symmetric `n×n` matrix in closed form.
pub fn elementary_symmetric(h: &[[f64; 3]; 3], n: usize, j: usize) -> f64 {
    match (n, j) {
        (_, 0) => 1.0,
        (1, 1) => h[0][0],
        (2, 1) => h[0][0] + h[1][1],
        (2, 2) => h[0][0] * h[1][1] - h[0][1] * h[1][0],
        (3, 1) => h[0][0] + h[1][1] + h[2][2],
        (3, 2) => {
            h[0][0] * h[1][1] - h[0][1] * h[1][0] + h[0][0] * h[2][2] - h[0][2] * h[2][0]
                + h[1][1] * h[2][2]
                - h[1][2] * h[2][1]
        }
        (3, 3) => {
            h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
                - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
                + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
        }
        _ => 0.0,
    }
}

/// Integrand callback: `(x, ∇v(x), [Hess v(x)]_j, out)`. On the dual
/// pathway `x` is the maximizing primal node, `∇v(x)` the dual node, and the
/// Hessian factor is 1 (the Jacobian is absorbed by the change of variables).
type Integrand<'a> = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Sync + 'a;

const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

fn grid_integral(
    v: &GridFunction,
    j: usize,
    len: usize,
    radius: f64,
    scheme: GridScheme,
    f: &Integrand<'_>,
) -> Result<VectorResult> {
    let n = v.dim();
    let coarse = v.coarsen().ok_or_else(|| {
        Error::InvalidGrid("quadrature needs an odd node count of at least 5 per axis".into())
    })?;
    check_coverage(coarse.grid(), radius)?;
    let dual = match scheme {
        GridScheme::FiniteDifference => false,
        GridScheme::DualQuadrature => true,
        GridScheme::Auto => j == n && n >= 2 && !v.is_smooth(),
    };
    if dual && j != n {
        return Err(Error::InvalidArgument(
            "dual quadrature applies only to the top degree j = n".into(),
        ));
    }
    // A second coarsening guards against lattice effects making a single
    // difference accidentally small.
    let coarse2 = coarse
        .coarsen()
        .filter(|c| check_coverage(c.grid(), radius).is_ok());
    // Restrictions with odd starting nodes see kinks at other lattice phases.
    let shifted: Vec<GridFunction> = (1..1usize << n)
        .filter_map(|mask| v.coarsen_phase(mask))
        .filter(|c| check_coverage(c.grid(), radius).is_ok())
        .collect();
    let (fine, fine_abs, coarse_val, coarse2_val, shifted_val, scheme) = if dual {
        let (lo, hi) = gradient_range(v);
        if degenerate_axis(&lo, &hi).is_some() {
            // The gradient image lies in a hyperplane: the Monge–Ampère measure vanishes.
            return Ok(VectorResult {
                value: vec![0.0; len],
                error_estimate: 0.0,
                pathway: Pathway::Grid,
                scheme: Scheme::DualQuadrature,
            });
        }
        let dual_fine = default_dual_grid(v, &v.grid().resolution)?;
        let halve = |g: &Grid| {
            Grid::new(
                g.lower.clone(),
                g.upper.clone(),
                g.resolution.iter().map(|r| r.div_ceil(2)).collect(),
            )
        };
        let dual_coarse = halve(&dual_fine)?;
        let (a, abs) = dual_sum(v, &dual_fine, len, f)?;
        let (b, _) = dual_sum(&coarse, &dual_coarse, len, f)?;
        let c = match &coarse2 {
            Some(c2) => Some(dual_sum(c2, &halve(&dual_coarse)?, len, f)?.0),
            None => None,
        };
        let d = shifted
            .iter()
            .map(|s| Ok(dual_sum(s, &dual_coarse, len, f)?.0))
            .collect::<Result<Vec<_>>>()?;
        (a, abs, b, c, d, Scheme::DualQuadrature)
    } else {
        let (a, abs) = fd_sum(v, j, len, f);
        let (b, _) = fd_sum(&coarse, j, len, f);
        let c = coarse2.as_ref().map(|c2| fd_sum(c2, j, len, f).0);
        let d: Vec<Vec<f64>> = shifted.iter().map(|s| fd_sum(s, j, len, f).0).collect();
        (a, abs, b, c, d, Scheme::FiniteDifference)
    };
    let d1 = shifted_val
        .iter()
        .map(|s| linalg::dist(&fine, s))
        .fold(linalg::dist(&fine, &coarse_val), f64::max);
    let d2 = coarse2_val.map_or(f64::NAN, |c| linalg::dist(&coarse_val, &c));
    let est = richardson(d1, d2) + ROUNDING_FLOOR * fine_abs;
    Ok(VectorResult {
        value: fine,
        error_estimate: est,
        pathway: Pathway::Grid,
        scheme,
    })
}

/// Error at the fine level from successive differences `d1 = |I_h − I_2h|`
/// and `d2 = |I_2h − I_4h|`, with the observed order clamped to `[1/2, 1]`
/// so that slow (singular-weight) convergence is not underestimated. Kinks
/// between nodes make the error oscillate with the lattice phase, hence the
/// safety factor.
fn richardson(d1: f64, d2: f64) -> f64 {
    const SAFETY: f64 = 2.0;
    let order = if d1 > 0.0 && d2.is_finite() {
        (d2 / d1).log2().clamp(0.5, 1.0)
    } else {
        1.0
    };
    let e = d1 / (order.exp2() - 1.0);
    SAFETY * if d2.is_finite() { e.max(0.5 * d2) } else { e }
}

/// The support ball must sit strictly inside the box trimmed by one node of
/// the coarse grid.
fn check_coverage(coarse: &Grid, radius: f64) -> Result<()> {
    for k in 0..coarse.dim() {
        let h = coarse.spacing(k);
        if !(coarse.lower[k] + h < -radius && coarse.upper[k] - h > radius) {
            return Err(Error::Coverage { axis: k, radius });
        }
    }
    Ok(())
}

/// Returns the integral and the sum of absolute contributions (for the
/// rounding floor). Slabs along axis 0 are reduced pairwise in index order.
fn fd_sum(v: &GridFunction, j: usize, len: usize, f: &Integrand<'_>) -> (Vec<f64>, f64) {
    let g = v.grid();
    let n = g.dim();
    let res = g.resolution.clone();
    let strides = g.strides();
    let h: Vec<f64> = g.spacings();
    let vals = v.values();
    let cell = g.cell_volume();
    let inner_count: usize = res[1..].iter().map(|r| r - 2).product();
    let parts: Vec<Vec<f64>> = (1..res[0] - 1)
        .into_par_iter()
        .map(|i0| {
            let mut acc = vec![0.0; len + 1];
            let mut out = vec![0.0; len];
            let mut idx = [i0, 1, 1];
            let mut x = [0.0; 3];
            let mut grad = [0.0; 3];
            let mut hess = [[0.0; 3]; 3];
            for c in 0..inner_count {
                let mut rem = c;
                for k in (1..n).rev() {
                    idx[k] = 1 + rem % (res[k] - 2);
                    rem /= res[k] - 2;
                }
                let flat: usize = (0..n).map(|k| idx[k] * strides[k]).sum();
                for k in 0..n {
                    x[k] = g.lower[k] + idx[k] as f64 * h[k];
                }
                let f0 = vals[flat];
                for k in 0..n {
                    let (p, m) = (vals[flat + strides[k]], vals[flat - strides[k]]);
                    grad[k] = (p - m) / (2.0 * h[k]);
                    hess[k][k] = (p - 2.0 * f0 + m) / (h[k] * h[k]);
                    for l in k + 1..n {
                        let (sk, sl) = (strides[k], strides[l]);
                        let d = vals[flat + sk + sl] - vals[flat + sk - sl] - vals[flat - sk + sl]
                            + vals[flat - sk - sl];
                        let hkl = d / (4.0 * h[k] * h[l]);
                        hess[k][l] = hkl;
                        hess[l][k] = hkl;
                    }
                }
                let e = elementary_symmetric(&hess, n, j);
                f(&x[..n], &grad[..n], e, &mut out);
                for (a, o) in acc.iter_mut().zip(&out) {
                    *a += o * cell;
                }
                acc[len] += out.iter().map(|o| o.abs()).sum::<f64>() * cell;
            }
            acc
        })
        .collect();
    let total = linalg::pairwise_sum(&parts, len + 1);
    (total[..len].to_vec(), total[len])
}

/// Axis 0 of the dual is integrated exactly over the segments of constant
/// argmax; the remaining axes use the nodes of `dual` with full weights.
fn dual_sum(
    v: &GridFunction,
    dual: &Grid,
    len: usize,
    f: &Integrand<'_>,
) -> Result<(Vec<f64>, f64)> {
    let primal = v.grid();
    let n = primal.dim();
    let lines = dual_segments(v, dual);
    let cross: f64 = (1..n).map(|k| dual.spacing(k)).product();
    let parts: Vec<Vec<f64>> = lines
        .par_iter()
        .enumerate()
        .map(|(line, segs)| {
            let mut acc = vec![0.0; len + 1];
            let mut out = vec![0.0; len];
            let mut p = vec![0.0; n];
            let mut rem = line;
            for k in (1..n).rev() {
                p[k] = dual.coord(k, rem % dual.resolution[k]);
                rem /= dual.resolution[k];
            }
            for seg in segs {
                let x = primal.node(&primal.unravel(seg.primal));
                let width = seg.hi - seg.lo;
                if !(width > 0.0) {
                    continue;
                }
                if !width.is_finite() {
                    // Unbounded end segments maximize on the box boundary,
                    // outside every admissible weight support.
                    continue;
                }
                p[0] = 0.5 * (seg.lo + seg.hi);
                f(&x, &p, 1.0, &mut out);
                for (a, o) in acc.iter_mut().zip(&out) {
                    *a += o * width * cross;
                }
                acc[len] += out.iter().map(|o| o.abs()).sum::<f64>() * width * cross;
            }
            acc
        })
        .collect();
    let total = linalg::pairwise_sum(&parts, len + 1);
    Ok((total[..len].to_vec(), total[len]))
}
