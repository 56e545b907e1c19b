//! Valuations on finite convex functions, evaluated on two representations:
//! exact max-affine functions and dense grid samples.

pub mod density;
pub mod error;
pub mod function;
pub mod harness;
pub mod linalg;
pub mod measures;
pub mod polytope;
pub mod result;
pub mod transform;
pub mod valuations;

pub use density::{make_radial_density, DensityKind, DensitySpec, ProfileSpec, RadialDensity};
pub use error::{Error, Result};
pub use function::{AffinePiece, FunctionSpec, Grid, GridFunction, MaxAffineFunction};
pub use harness::{run_suite, HarnessConfig, PropertyReport, Suite};
pub use polytope::Polytope;
pub use result::{Pathway, ScalarResult, Scheme, VectorResult};
pub use transform::{
    conjugate_grid, conjugate_max_affine, epi_multiply, transform_fconvf, Action, ConvexFunction,
    DualCell, DualCellComplex,
};
pub use valuations::{
    dual_side, m_alpha_star, so2_variant, steiner_expand, t_j_xi_star, v_j_alpha_star,
    z_j_alpha_star, DualRepresentation, Family, OperatorDescriptor, RotationField, Side,
    SteinerExpansion, ValuationSpec,
};
