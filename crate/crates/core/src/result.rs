use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathway {
    Exact,
    Grid,
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Sum over the atoms of a dual cell complex.
    Atomic,
    /// Analytic value that needs no quadrature (e.g. a vanishing operator).
    Closed,
    /// Centered finite-difference Hessian on primal nodes.
    FiniteDifference,
    /// Riemann sum over a discrete conjugate with argmax tracking.
    DualQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorResult {
    pub value: Vec<f64>,
    /// On grids, a Richardson-style bound built from the spread over the
    /// coarse sublattices and one further coarsening, plus a rounding floor.
    /// 0 on the exact pathway.
    pub error_estimate: f64,
    pub pathway: Pathway,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarResult {
    pub value: f64,
    pub error_estimate: f64,
    pub pathway: Pathway,
    pub scheme: Scheme,
}

impl VectorResult {
    pub fn exact(value: Vec<f64>) -> Self {
        VectorResult {
            value,
            error_estimate: 0.0,
            pathway: Pathway::Exact,
            scheme: Scheme::Atomic,
        }
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.value)
    }
}

impl ScalarResult {
    pub fn exact(value: f64) -> Self {
        ScalarResult {
            value,
            error_estimate: 0.0,
            pathway: Pathway::Exact,
            scheme: Scheme::Atomic,
        }
    }

    pub fn into_vector(self) -> VectorResult {
        VectorResult {
            value: vec![self.value],
            error_estimate: self.error_estimate,
            pathway: self.pathway,
            scheme: self.scheme,
        }
    }
}
