//! Vector-valued valuations on convex functions: functional intrinsic
//! moments `z*`, Minkowski vectors `t*`, intrinsic volumes `V*`, their
//! dual-side forms, a rotation-field variant in the plane, and the Steiner
//! expansion of `m*_α(v + r q)`.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::density::{make_radial_density, DensityKind, DensitySpec, RadialDensity};
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::linalg;
use crate::measures::{
    hess_j_integrate_with, ma_atoms, ma_integrate, ma_integrate_vec, Factor, GridScheme,
};
use crate::result::{Pathway, ScalarResult, Scheme, VectorResult};
use crate::transform::{ConvexFunction, DualCellComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    MAlpha,
    TJXi,
    ZJAlpha,
    VJAlpha,
    So2Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Primal,
    Dual,
}

/// `Φ(t)` = rotation by `base_angle + rate·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationField {
    pub base_angle: f64,
    #[serde(default)]
    pub rate: f64,
}

impl RotationField {
    pub fn identity() -> Self {
        RotationField {
            base_angle: 0.0,
            rate: 0.0,
        }
    }

    pub fn constant(angle: f64) -> Self {
        RotationField {
            base_angle: angle,
            rate: 0.0,
        }
    }

    pub fn apply(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let a = self.base_angle + self.rate * t;
        if a == 0.0 {
            return y.to_vec();
        }
        let (s, c) = a.sin_cos();
        vec![c * y[0] - s * y[1], s * y[0] + c * y[1]]
    }
}

/// Serializable operator descriptor, resolved into a [`ValuationSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    pub family: Family,
    /// Degree index; `None` means the top degree `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    pub density: DensitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_field: Option<RotationField>,
    #[serde(default)]
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct ValuationSpec {
    pub family: Family,
    pub j: Option<usize>,
    pub density: RadialDensity,
    pub rotation_field: Option<RotationField>,
    pub side: Side,
}

impl ValuationSpec {
    pub fn resolve(d: &OperatorDescriptor) -> Result<Self> {
        let density = make_radial_density(d.density.kind, d.density.profile.clone())?;
        let spec = ValuationSpec {
            family: d.family,
            j: d.j,
            density,
            rotation_field: d.rotation_field,
            side: d.side,
        };
        spec.check_kind(None)?;
        Ok(spec)
    }

    pub fn new(family: Family, j: Option<usize>, density: RadialDensity) -> Self {
        ValuationSpec {
            family,
            j,
            density,
            rotation_field: None,
            side: Side::Primal,
        }
    }

    pub fn with_rotation_field(mut self, phi: RotationField) -> Self {
        self.rotation_field = Some(phi);
        self
    }

    pub fn on_dual_side(mut self) -> Self {
        self.side = Side::Dual;
        self
    }

    /// Degree resolved against a dimension.
    pub fn degree(&self, n: usize) -> usize {
        self.j.unwrap_or(n)
    }

    /// Density-kind rules; with `dim` known also the degree range.
    pub fn check_kind(&self, dim: Option<usize>) -> Result<()> {
        let xi_ok = match self.family {
            Family::TJXi => match (self.j, dim) {
                (None, _) => true,
                (Some(j), Some(n)) => j == n,
                (Some(_), None) => true,
            },
            Family::So2Variant => true,
            _ => false,
        };
        if self.density.kind() == DensityKind::Xi {
            if !xi_ok {
                return Err(Error::InvalidArgument(format!(
                    "{:?} needs a kind-alpha density at this degree",
                    self.family
                )));
            }
            if !self.density.is_admissible() {
                return Err(Error::Inadmissible(
                    "ξ(t)·t must vanish as t → 0⁺ for top-degree Minkowski-type operators".into(),
                ));
            }
        }
        if let (Some(n), Some(j)) = (dim, self.j) {
            if j > n {
                return Err(Error::DegreeOutOfRange { j, dim: n });
            }
        }
        if self.family == Family::So2Variant {
            if let Some(n) = dim {
                if n != 2 {
                    return Err(Error::UnsupportedDimension(n));
                }
            }
        }
        Ok(())
    }

    /// Whether the operator is of the top degree, the range in which it is
    /// dually simple and available on the exact pathway.
    pub fn is_top_degree(&self, n: usize) -> bool {
        self.degree(n) == n
    }

    /// Evaluates on the primal side (the dual side is reached via
    /// [`dual_side`] with a conjugate representation).
    pub fn evaluate(&self, v: &ConvexFunction) -> Result<VectorResult> {
        let n = v.dim();
        self.check_kind(Some(n))?;
        let j = self.degree(n);
        match self.family {
            Family::MAlpha => m_alpha_star(v, &self.density),
            Family::TJXi => t_j_xi_star(v, &self.density, j),
            Family::ZJAlpha => z_j_alpha_star(v, &self.density, j),
            Family::VJAlpha => v_j_alpha_star(v, &self.density, j).map(ScalarResult::into_vector),
            Family::So2Variant => {
                let phi = self.rotation_field.unwrap_or_else(RotationField::identity);
                match v {
                    ConvexFunction::MaxAffine(f) => so2_variant(
                        &DualRepresentation::Complex(crate::transform::conjugate_max_affine(f)),
                        &self.density,
                        &phi,
                    ),
                    ConvexFunction::Grid(_) => {
                        let d = &self.density;
                        ma_integrate_vec(
                            v,
                            &|x: &[f64]| {
                                let t = linalg::norm(x);
                                if t == 0.0 {
                                    vec![0.0; 2]
                                } else {
                                    linalg::scale(&phi.apply(t, x), d.eval(t))
                                }
                            },
                            d.support_radius(),
                        )
                    }
                }
            }
        }
    }

    pub fn label(&self) -> String {
        let fam = match self.family {
            Family::MAlpha => "m_alpha",
            Family::TJXi => "t_j_xi",
            Family::ZJAlpha => "z_j_alpha",
            Family::VJAlpha => "V_j_alpha",
            Family::So2Variant => "so2_variant",
        };
        match self.j {
            Some(j) => format!("{fam}[j={j}]"),
            None => format!("{fam}[j=n]"),
        }
    }
}

fn require_alpha(d: &RadialDensity) -> Result<()> {
    if d.kind() != DensityKind::Alpha {
        return Err(Error::InvalidArgument(
            "this operator needs a kind-alpha density".into(),
        ));
    }
    Ok(())
}

fn grid_only(what: &str) -> Error {
    Error::UnsupportedRepresentation(format!(
        "{what} for 0 < j < n has no exact pathway; sample the function on a grid"
    ))
}

fn closed_zero(n: usize) -> VectorResult {
    VectorResult {
        value: vec![0.0; n],
        error_estimate: 0.0,
        pathway: Pathway::Exact,
        scheme: Scheme::Closed,
    }
}

/// `m*_α(v) = ∫ α(|x|) ∇v det(Hess v) dx`.
pub fn m_alpha_star(v: &ConvexFunction, alpha: &RadialDensity) -> Result<VectorResult> {
    require_alpha(alpha)?;
    crate::measures::theta0_integrate(v, alpha)
}

/// `t*_{j}(v) = ∫ density(|x|) x [Hess v]_j dx`; for `j = n` this is
/// `∫ ψ dMA(v)` with `ψ(x) = ξ(|x|) x`, `ψ(o) = o`.
pub fn t_j_xi_star(v: &ConvexFunction, density: &RadialDensity, j: usize) -> Result<VectorResult> {
    let n = v.dim();
    if j > n {
        return Err(Error::DegreeOutOfRange { j, dim: n });
    }
    if j == n {
        if density.kind() == DensityKind::Xi && !density.is_admissible() {
            return Err(Error::Inadmissible(
                "ξ(t)·t must vanish as t → 0⁺ for t*_{n,ξ}".into(),
            ));
        }
        return ma_integrate_vec(v, &|x: &[f64]| density.psi(x), density.support_radius());
    }
    require_alpha(density)?;
    match v {
        ConvexFunction::MaxAffine(_) if j == 0 => Ok(closed_zero(n)),
        ConvexFunction::MaxAffine(_) => Err(grid_only("t*_j")),
        ConvexFunction::Grid(g) => t_j_grid(g, density, j, GridScheme::Auto),
    }
}

fn t_j_grid(
    g: &GridFunction,
    density: &RadialDensity,
    j: usize,
    scheme: GridScheme,
) -> Result<VectorResult> {
    let n = g.dim();
    if j == n {
        let psi_weight = PsiComponentWeight { d: density };
        // x·ξ(|x|) at the origin is o by admissibility; Position factor with a
        // weight that is zero at o reproduces that without evaluating ξ(0).
        return hess_j_integrate_with(g, j, &psi_weight, Factor::Position, scheme);
    }
    hess_j_integrate_with(g, j, density, Factor::Position, scheme)
}

struct PsiComponentWeight<'a> {
    d: &'a RadialDensity,
}

impl crate::measures::Weight for PsiComponentWeight<'_> {
    fn at(&self, x: &[f64]) -> f64 {
        let t = linalg::norm(x);
        if t == 0.0 {
            0.0
        } else {
            self.d.eval(t)
        }
    }
    fn support_radius(&self) -> f64 {
        self.d.support_radius()
    }
}

/// `z*_{j+1,α}(v) = ∫ α(|x|) ∇v [Hess v]_j dx`.
pub fn z_j_alpha_star(v: &ConvexFunction, alpha: &RadialDensity, j: usize) -> Result<VectorResult> {
    let n = v.dim();
    if j > n {
        return Err(Error::DegreeOutOfRange { j, dim: n });
    }
    if j == n {
        return m_alpha_star(v, alpha);
    }
    require_alpha(alpha)?;
    match v {
        ConvexFunction::MaxAffine(_) => Err(grid_only("z*_{j+1}")),
        ConvexFunction::Grid(g) => {
            hess_j_integrate_with(g, j, alpha, Factor::Gradient, GridScheme::Auto)
        }
    }
}

/// `V*_{j,α}(v) = ∫ α(|x|) [Hess v]_j dx`.
pub fn v_j_alpha_star(v: &ConvexFunction, alpha: &RadialDensity, j: usize) -> Result<ScalarResult> {
    let n = v.dim();
    if j > n {
        return Err(Error::DegreeOutOfRange { j, dim: n });
    }
    require_alpha(alpha)?;
    if j == n {
        return ma_integrate(v, alpha);
    }
    match v {
        ConvexFunction::MaxAffine(_) if j == 0 => Ok(ScalarResult {
            value: alpha.radial_integral(n),
            error_estimate: 0.0,
            pathway: Pathway::Exact,
            scheme: Scheme::Closed,
        }),
        ConvexFunction::MaxAffine(_) => Err(grid_only("V*_j")),
        ConvexFunction::Grid(g) => {
            let r = hess_j_integrate_with(g, j, alpha, Factor::One, GridScheme::Auto)?;
            Ok(ScalarResult {
                value: r.value[0],
                error_estimate: r.error_estimate,
                pathway: r.pathway,
                scheme: r.scheme,
            })
        }
    }
}

/// A super-coercive function on the dual side.
#[derive(Debug, Clone, PartialEq)]
pub enum DualRepresentation {
    Complex(DualCellComplex),
    /// Samples of `u` on a box taken as its effective domain.
    Grid(GridFunction),
}

impl DualRepresentation {
    pub fn dim(&self) -> usize {
        match self {
            DualRepresentation::Complex(c) => c.dim(),
            DualRepresentation::Grid(g) => g.dim(),
        }
    }
}

/// Dual-side operators: `m_α(u) = ∫ α(|∇u|) y dy`, `t_{n,ξ}(u) = ∫ ξ(|∇u|) ∇u dy`,
/// and `V_{n,α}(u) = ∫ α(|∇u|) dy`. Only top-degree families have a dual
/// form here.
pub fn dual_side(spec: &ValuationSpec, u: &DualRepresentation) -> Result<VectorResult> {
    let n = u.dim();
    spec.check_kind(Some(n))?;
    if !spec.is_top_degree(n) {
        return Err(Error::UnsupportedRepresentation(
            "dual-side forms are implemented for the top degree j = n".into(),
        ));
    }
    let d = &spec.density;
    match spec.family {
        Family::MAlpha | Family::ZJAlpha => {
            dual_integral(u, &|x, _y| d.at(x), DualFactor::Position)
        }
        Family::TJXi => dual_integral(
            u,
            &|x, _y| if linalg::norm(x) == 0.0 { 0.0 } else { d.at(x) },
            DualFactor::Gradient,
        ),
        Family::VJAlpha => dual_integral(u, &|x, _y| d.at(x), DualFactor::One),
        Family::So2Variant => so2_variant(
            u,
            d,
            &spec.rotation_field.unwrap_or_else(RotationField::identity),
        ),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DualFactor {
    One,
    /// `∇u(y)`.
    Gradient,
    /// `y`.
    Position,
}

/// `∫_{dom u} w(∇u(y)) F dy`. For grids the gradient is taken per cell from
/// its corner values and the cell center stands for `y`.
fn dual_integral(
    u: &DualRepresentation,
    w: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    factor: DualFactor,
) -> Result<VectorResult> {
    let len = if factor == DualFactor::One {
        1
    } else {
        u.dim()
    };
    match u {
        DualRepresentation::Complex(c) => {
            let mut acc = vec![0.0; len];
            for cell in c.cells() {
                let vol = cell.cell.volume();
                if vol == 0.0 {
                    continue;
                }
                let x = &cell.gradient_point;
                let wt = w(x, &[]);
                match factor {
                    DualFactor::One => acc[0] += wt * vol,
                    DualFactor::Gradient => {
                        for (a, xi) in acc.iter_mut().zip(x) {
                            *a += wt * xi * vol;
                        }
                    }
                    DualFactor::Position => {
                        for (a, m) in acc.iter_mut().zip(cell.cell.moment_vector()) {
                            *a += wt * m;
                        }
                    }
                }
            }
            Ok(VectorResult::exact(acc))
        }
        DualRepresentation::Grid(g) => {
            let fine = cell_sum(g, w, factor, len);
            let est = match g.coarsen() {
                Some(c) => linalg::dist(&fine.0, &cell_sum(&c, w, factor, len).0),
                None => f64::INFINITY,
            };
            Ok(VectorResult {
                value: fine.0,
                error_estimate: est + 64.0 * f64::EPSILON * fine.1,
                pathway: Pathway::Grid,
                scheme: Scheme::FiniteDifference,
            })
        }
    }
}

fn cell_sum(
    g: &GridFunction,
    w: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    factor: DualFactor,
    len: usize,
) -> (Vec<f64>, f64) {
    let grid = g.grid();
    let n = grid.dim();
    let strides = grid.strides();
    let h = grid.spacings();
    let cells: Vec<usize> = grid.resolution.iter().map(|r| r - 1).collect();
    let count: usize = cells.iter().product();
    let vol = grid.cell_volume();
    let vals = g.values();
    let mut acc = vec![0.0; len];
    let mut abs = 0.0;
    let mut idx = vec![0usize; n];
    let mut grad = vec![0.0; n];
    let mut y = vec![0.0; n];
    for c in 0..count {
        let mut rem = c;
        for k in (0..n).rev() {
            idx[k] = rem % cells[k];
            rem /= cells[k];
        }
        let base: usize = (0..n).map(|k| idx[k] * strides[k]).sum();
        for k in 0..n {
            y[k] = grid.lower[k] + (idx[k] as f64 + 0.5) * h[k];
            // Average of the 2^{n-1} edge differences along axis k.
            let mut s = 0.0;
            let mut m = 0;
            for corner in 0..(1usize << n) {
                if corner >> k & 1 == 1 {
                    continue;
                }
                let off: usize = (0..n)
                    .filter(|&l| corner >> l & 1 == 1)
                    .map(|l| strides[l])
                    .sum();
                s += vals[base + off + strides[k]] - vals[base + off];
                m += 1;
            }
            grad[k] = s / (m as f64 * h[k]);
        }
        let wt = w(&grad, &y);
        if wt == 0.0 {
            continue;
        }
        match factor {
            DualFactor::One => acc[0] += wt * vol,
            DualFactor::Gradient => {
                for (a, gk) in acc.iter_mut().zip(&grad) {
                    *a += wt * gk * vol;
                }
            }
            DualFactor::Position => {
                for (a, yk) in acc.iter_mut().zip(&y) {
                    *a += wt * yk * vol;
                }
            }
        }
        abs += wt.abs() * vol * (1.0 + linalg::norm(&grad) + linalg::norm(&y));
    }
    (acc, abs)
}

/// `∫ ξ(|∇u|) Φ(|∇u|) ∇u dy` in the plane.
pub fn so2_variant(
    u: &DualRepresentation,
    xi: &RadialDensity,
    phi: &RotationField,
) -> Result<VectorResult> {
    if u.dim() != 2 {
        return Err(Error::UnsupportedDimension(u.dim()));
    }
    if xi.kind() == DensityKind::Xi && !xi.is_admissible() {
        return Err(Error::Inadmissible("ξ(t)·t must vanish as t → 0⁺".into()));
    }
    match u {
        DualRepresentation::Complex(c) => {
            let mut acc = vec![0.0; 2];
            for cell in c.cells() {
                let vol = cell.cell.volume();
                if vol == 0.0 {
                    continue;
                }
                let x = &cell.gradient_point;
                let t = linalg::norm(x);
                if t == 0.0 {
                    continue;
                }
                let r = phi.apply(t, x);
                let wt = xi.eval(t);
                for (a, ri) in acc.iter_mut().zip(&r) {
                    *a += wt * ri * vol;
                }
            }
            Ok(VectorResult::exact(acc))
        }
        DualRepresentation::Grid(_) => {
            // Components of Φ(|g|) g: integrate each against the gradient factor.
            let comp = |k: usize| {
                dual_integral(
                    u,
                    &move |g: &[f64], _y: &[f64]| {
                        let t = linalg::norm(g);
                        if t == 0.0 {
                            return 0.0;
                        }
                        let r = phi.apply(t, g);
                        xi.eval(t) * r[k]
                    },
                    DualFactor::One,
                )
            };
            let a = comp(0)?;
            let b = comp(1)?;
            Ok(VectorResult {
                value: vec![a.value[0], b.value[0]],
                error_estimate: a.error_estimate + b.error_estimate,
                pathway: Pathway::Grid,
                scheme: a.scheme,
            })
        }
    }
}

/// One coefficient `c_k` of `r^k` and the summands it aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attribution {
    pub power: usize,
    /// `(j, z*_{j+1,α}(v))` with `j = n − k`.
    pub z_part: Option<(usize, Vec<f64>)>,
    /// `(j, t*_{j,α}(v))` with `j = n − k + 1`.
    pub t_part: Option<(usize, Vec<f64>)>,
    /// `|c_k − (z_part + t_part)|`.
    pub cross_check_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinerExpansion {
    pub dim: usize,
    pub degree: usize,
    pub r_values: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// `coefficients[k]` multiplies `r^k`.
    pub coefficients: Vec<Vec<f64>>,
    pub fit_residual: f64,
    pub condition_number: f64,
    pub attributed: Vec<Attribution>,
    /// Largest quadrature error estimate over samples and direct evaluations.
    pub error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl SteinerExpansion {
    pub fn max_cross_check_residual(&self) -> f64 {
        self.attributed
            .iter()
            .map(|a| a.cross_check_residual)
            .fold(0.0, f64::max)
    }
}

pub fn default_r_values(n: usize) -> Vec<f64> {
    (0..n + 4).map(|i| i as f64 / 4.0).collect()
}

/// Samples `m*_α(v + r q)`, fits a vector polynomial of degree `n + 1`, and
/// compares each coefficient with the direct `z*`/`t*` parts. All grid
/// integrals use finite differences so that the samples are exactly
/// polynomial in `r` up to rounding.
pub fn steiner_expand(
    v: &GridFunction,
    alpha: &RadialDensity,
    r_values: &[f64],
) -> Result<SteinerExpansion> {
    require_alpha(alpha)?;
    let n = v.dim();
    let k = n + 2;
    if r_values.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need at least {k} r values for n = {n}, got {}",
            r_values.len()
        )));
    }
    let mut sorted = r_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.iter().any(|r| !(*r >= 0.0 && r.is_finite()))
        || sorted.windows(2).any(|w| w[0] == w[1])
    {
        return Err(Error::InvalidArgument(
            "r values must be distinct, finite and ≥ 0".into(),
        ));
    }
    let fd = GridScheme::FiniteDifference;
    let mut err: f64 = 0.0;
    let mut samples = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let w = v.add_quadratic(r)?;
        let s = hess_j_integrate_with(&w, n, alpha, Factor::Gradient, fd)?;
        err = err.max(s.error_estimate);
        samples.push(s.value);
    }
    // Least squares by SVD of the Vandermonde matrix.
    let vm = DMatrix::from_fn(r_values.len(), k, |i, p| r_values[i].powi(p as i32));
    let rhs = DMatrix::from_fn(r_values.len(), n, |i, c| samples[i][c]);
    let svd = SVD::new(vm.clone(), true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let sol = svd
        .solve(&rhs, 1e-14 * smax)
        .map_err(|e| Error::InvalidArgument(format!("least-squares fit failed: {e}")))?;
    let fitted = &vm * &sol;
    let fit_residual = (0..r_values.len())
        .map(|i| {
            (0..n)
                .map(|c| (fitted[(i, c)] - rhs[(i, c)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let coefficients: Vec<Vec<f64>> = (0..k)
        .map(|p| (0..n).map(|c| sol[(p, c)]).collect())
        .collect();

    let mut attributed = Vec::with_capacity(k);
    for (p, c) in coefficients.iter().enumerate() {
        let z_part = if p <= n {
            let j = n - p;
            let r = hess_j_integrate_with(v, j, alpha, Factor::Gradient, fd)?;
            err = err.max(r.error_estimate);
            Some((j, r.value))
        } else {
            None
        };
        let t_part = if p >= 1 {
            let j = n + 1 - p;
            let r = t_j_grid(v, alpha, j, fd)?;
            err = err.max(r.error_estimate);
            Some((j, r.value))
        } else {
            None
        };
        let mut sum = vec![0.0; n];
        for part in [&z_part, &t_part].into_iter().flatten() {
            linalg::axpy(&mut sum, 1.0, &part.1);
        }
        attributed.push(Attribution {
            power: p,
            z_part,
            t_part,
            cross_check_residual: linalg::dist(c, &sum),
        });
    }
    let warning = (condition_number > 1e8).then(|| {
        format!("ill-conditioned fit: condition number {condition_number:.3e}, residual {fit_residual:.3e}")
    });
    Ok(SteinerExpansion {
        dim: n,
        degree: n + 1,
        r_values: r_values.to_vec(),
        samples,
        coefficients,
        fit_residual,
        condition_number,
        attributed,
        error_estimate: err,
        warning,
    })
}

/// The associated scalar `z⁰(v)` of a translation-covariant `z`, recovered
/// from `z(v + ⟨y_i, ·⟩) − z(v) = z⁰ y_i` by least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociatedScalar {
    pub value: f64,
    /// RMS misfit of the isotropic model over the probes.
    pub residual: f64,
    pub error_estimate: f64,
}

pub fn extract_associated_scalar(
    z: &dyn Fn(&ConvexFunction) -> Result<VectorResult>,
    v: &ConvexFunction,
    probes: &[Vec<f64>],
) -> Result<AssociatedScalar> {
    let n = v.dim();
    if probes.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: probes
                .iter()
                .map(|p| p.len())
                .find(|&l| l != n)
                .unwrap_or(0),
        });
    }
    let gram = DMatrix::from_fn(n, probes.len(), |i, k| probes[k][i]);
    let sv = SVD::new(gram, false, false).singular_values;
    if probes.len() < n || sv.min() <= 1e-12 * sv.max().max(1e-300) {
        return Err(Error::SingularProbes(
            "probe directions do not span R^n".into(),
        ));
    }
    let base = z(v)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut diffs = Vec::with_capacity(probes.len());
    let mut est = base.error_estimate;
    for y in probes {
        let shifted = match v {
            ConvexFunction::MaxAffine(f) => ConvexFunction::MaxAffine(f.add_linear(y)?),
            ConvexFunction::Grid(g) => ConvexFunction::Grid(g.add_linear(y)?),
        };
        let zy = z(&shifted)?;
        est = est.max(zy.error_estimate);
        let d = linalg::sub(&zy.value, &base.value);
        num += linalg::dot(&d, y);
        den += linalg::dot(y, y);
        diffs.push(d);
    }
    let value = num / den;
    let ss: f64 = diffs
        .iter()
        .zip(probes)
        .map(|(d, y)| {
            let r = linalg::sub(d, &linalg::scale(y, value));
            linalg::dot(&r, &r)
        })
        .sum();
    Ok(AssociatedScalar {
        value,
        residual: (ss / probes.len() as f64).sqrt(),
        error_estimate: est,
    })
}

/// Atom-level shortcut used by tests and the CLI: `Σ ψ(x_k) vol(C_k)`.
pub fn atom_sum(
    v: &crate::function::MaxAffineFunction,
    psi: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    ma_atoms(v).integrate_vec(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ProfileSpec;
    use crate::function::{FunctionSpec, Grid, MaxAffineFunction};
    use crate::polytope::Polytope;
    use crate::transform::conjugate_max_affine;
    use std::f64::consts::PI;

    fn hat(kind: DensityKind, r: f64) -> RadialDensity {
        make_radial_density(kind, ProfileSpec::Hat { radius: r }).unwrap()
    }

    #[test]
    fn moment_vector_retrieval_on_a_square() {
        let k = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let v = ConvexFunction::MaxAffine(k.support_function());
        let r = m_alpha_star(&v, &hat(DensityKind::Alpha, 1.0)).unwrap();
        assert_eq!(r.value, vec![0.5, 0.5]);
        let t = t_j_xi_star(&v, &hat(DensityKind::Xi, 1.0), 2).unwrap();
        assert_eq!(t.value, vec![0.0, 0.0]);
    }

    #[test]
    fn shifted_abs_value() {
        let v = ConvexFunction::MaxAffine(
            MaxAffineFunction::new(1, vec![(vec![1.0], -1.0), (vec![-1.0], 1.0)]).unwrap(),
        );
        let t = t_j_xi_star(&v, &hat(DensityKind::Xi, 2.0), 1).unwrap();
        assert_eq!(t.value, vec![1.0]);
    }

    #[test]
    fn steiner_worked_example() {
        let g = Grid::symmetric(1, 2.0, 257).unwrap();
        let v = FunctionSpec::Quadratic {
            scale: 1.0,
            center: Some(vec![1.0]),
        }
        .sample(&g)
        .unwrap();
        let s = steiner_expand(&v, &hat(DensityKind::Alpha, 1.0), &default_r_values(1)).unwrap();
        let want = [-1.0, -1.0, 0.0];
        for (c, w) in s.coefficients.iter().zip(want) {
            assert!((c[0] - w).abs() < 1e-9, "{:?}", s.coefficients);
        }
        assert!(s.max_cross_check_residual() < 1e-9);
    }

    #[test]
    fn grid_intrinsic_volumes_of_q() {
        let g = Grid::symmetric(2, 2.0, 129).unwrap();
        let q = ConvexFunction::Grid(
            FunctionSpec::Quadratic {
                scale: 1.0,
                center: None,
            }
            .sample(&g)
            .unwrap(),
        );
        let a = hat(DensityKind::Alpha, 1.0);
        let v0 = v_j_alpha_star(&q, &a, 0).unwrap();
        let v1 = v_j_alpha_star(&q, &a, 1).unwrap();
        let v2 = v_j_alpha_star(&q, &a, 2).unwrap();
        assert!((v0.value - PI / 3.0).abs() < 1e-3);
        assert!((v1.value - 2.0 * PI / 3.0).abs() < 2e-3);
        assert!((v2.value - PI / 3.0).abs() < 1e-3);
    }

    #[test]
    fn so2_atom_witness() {
        let k = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let v = k.support_function().translate(&[1.0, 0.0]).unwrap();
        let u = DualRepresentation::Complex(conjugate_max_affine(&v));
        let xi = hat(DensityKind::Xi, 2.0);
        let r = so2_variant(&u, &xi, &RotationField::constant(PI / 2.0)).unwrap();
        assert!(r.value[0].abs() < 1e-15 && (r.value[1] - 0.5).abs() < 1e-15);
        let id = so2_variant(&u, &xi, &RotationField::identity()).unwrap();
        let spec = ValuationSpec::new(Family::TJXi, None, xi.clone());
        assert_eq!(id.value, dual_side(&spec, &u).unwrap().value);
    }

    #[test]
    fn degree_and_kind_gates() {
        let v = ConvexFunction::MaxAffine(
            MaxAffineFunction::new(2, vec![(vec![1.0, 0.0], 0.0)]).unwrap(),
        );
        let xi = hat(DensityKind::Xi, 1.0);
        assert!(t_j_xi_star(&v, &xi, 1).is_err());
        assert!(matches!(
            t_j_xi_star(&v, &xi, 3),
            Err(Error::DegreeOutOfRange { .. })
        ));
        let a = hat(DensityKind::Alpha, 1.0);
        assert!(matches!(
            z_j_alpha_star(&v, &a, 1),
            Err(Error::UnsupportedRepresentation(_))
        ));
        assert_eq!(t_j_xi_star(&v, &a, 0).unwrap().value, vec![0.0, 0.0]);
    }
}
