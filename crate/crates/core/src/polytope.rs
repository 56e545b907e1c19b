//! Convex polytopes in V-representation for n ≤ 3.
//!
//! The canonical form keeps only extreme points, sorted lexicographically.
//! Volume and moment vector are computed once at construction from a fan
//! triangulation around the vertex centroid; lower-dimensional bodies have
//! zero volume and zero moment vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::MaxAffineFunction;
use crate::linalg::{self, AffineFrame};

const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeRepr", into = "PolytopeRepr")]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    affine_dim: usize,
    volume: f64,
    moment: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeRepr {
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<PolytopeRepr> for Polytope {
    type Error = Error;
    fn try_from(r: PolytopeRepr) -> Result<Self> {
        Polytope::new(r.vertices)
    }
}

impl From<Polytope> for PolytopeRepr {
    fn from(p: Polytope) -> Self {
        PolytopeRepr {
            vertices: p.vertices,
        }
    }
}

impl Polytope {
    /// Convex hull of `points`, reduced to its extreme points. Volume and
    /// moment are computed from the sorted extreme points, so they do not
    /// depend on the order or redundancy of the input.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = Self::hull(points)?;
        let canonical = Self::hull(first.vertices.clone())?;
        debug_assert_eq!(canonical.vertices, first.vertices);
        Ok(canonical)
    }

    fn hull(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match points.first() {
            Some(p) => p.len(),
            None => return Err(Error::InvalidArgument("empty vertex list".into())),
        };
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "non-finite vertex coordinate".into(),
                ));
            }
        }
        let tol = REL_TOL * linalg::extent(&points);
        let frame = AffineFrame::of(&points, tol);
        let affine_dim = frame.dim();
        let coords: Vec<Vec<f64>> = points.iter().map(|p| frame.coords(p)).collect();

        let (mut vertices, volume, moment) = match affine_dim {
            0 => {
                let best = lex_min(&points);
                (vec![points[best].clone()], 0.0, vec![0.0; dim])
            }
            1 => {
                let (lo, hi) = extremes_1d(&coords);
                let verts = vec![points[lo].clone(), points[hi].clone()];
                if dim == 1 {
                    let (a, b) = (points[lo][0], points[hi][0]);
                    (verts, b - a, vec![0.5 * (b * b - a * a)])
                } else {
                    (verts, 0.0, vec![0.0; dim])
                }
            }
            2 => {
                let ring = hull_2d(&coords, tol);
                let verts: Vec<Vec<f64>> = ring.iter().map(|&i| points[i].clone()).collect();
                if dim == 2 {
                    // The frame may be left-handed, so the ring can come out clockwise.
                    let (v, m) = polygon_fan(&verts);
                    if v < 0.0 {
                        (verts, -v, m.iter().map(|c| -c).collect())
                    } else {
                        (verts, v, m)
                    }
                } else {
                    (verts, 0.0, vec![0.0; dim])
                }
            }
            _ => {
                let facets = hull_3d(&points, tol);
                let mut used: Vec<usize> = facets.iter().flatten().copied().collect();
                used.sort_unstable();
                used.dedup();
                let verts: Vec<Vec<f64>> = used.iter().map(|&i| points[i].clone()).collect();
                let (v, m) = polyhedron_fan(&points, &verts, &facets);
                (verts, v, m)
            }
        };
        vertices.sort_by(|a, b| linalg::lex_cmp(a, b));
        vertices.dedup();
        Ok(Polytope {
            dim,
            vertices,
            affine_dim,
            volume,
            moment,
        })
    }

    /// Axis-parallel box `[lo_1, hi_1] × … × [lo_n, hi_n]`.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        let mut pts = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            pts.push(
                (0..n)
                    .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                    .collect(),
            );
        }
        Polytope::new(pts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.dim
    }

    /// n-dimensional Lebesgue measure.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `∫_K x dx`.
    pub fn moment_vector(&self) -> Vec<f64> {
        self.moment.clone()
    }

    /// `h_K(x) = max_{y∈K} ⟨x, y⟩` as a max-affine function with one piece per vertex.
    pub fn support_function(&self) -> MaxAffineFunction {
        MaxAffineFunction::from_canonical_pieces(
            self.dim,
            self.vertices.iter().map(|v| (v.clone(), 0.0)).collect(),
        )
    }

    pub fn translate(&self, x: &[f64]) -> Result<Polytope> {
        Polytope::new(self.vertices.iter().map(|v| linalg::add(v, x)).collect())
    }

    pub fn scale(&self, lambda: f64) -> Result<Polytope> {
        Polytope::new(
            self.vertices
                .iter()
                .map(|v| linalg::scale(v, lambda))
                .collect(),
        )
    }

    /// Image `ϑK` under a linear map given row-major.
    pub fn transform(&self, m: &[Vec<f64>]) -> Result<Polytope> {
        Polytope::new(
            self.vertices
                .iter()
                .map(|v| linalg::mat_vec(m, v))
                .collect(),
        )
    }

    /// Membership test with slack `tol` (absolute, in the units of the coordinates).
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.dim {
            return false;
        }
        let frame = AffineFrame::of(&self.vertices, REL_TOL * linalg::extent(&self.vertices));
        let c = frame.coords(y);
        let mut back = frame.origin.clone();
        for (ci, b) in c.iter().zip(&frame.basis) {
            linalg::axpy(&mut back, *ci, b);
        }
        if linalg::dist(&back, y) > tol {
            return false;
        }
        let coords: Vec<Vec<f64>> = self.vertices.iter().map(|v| frame.coords(v)).collect();
        match frame.dim() {
            0 => true,
            1 => {
                let (lo, hi) = extremes_1d(&coords);
                c[0] >= coords[lo][0] - tol && c[0] <= coords[hi][0] + tol
            }
            2 => {
                let mut ring = hull_2d(&coords, REL_TOL * linalg::extent(&coords));
                let ring_pts: Vec<Vec<f64>> = ring.iter().map(|&i| coords[i].clone()).collect();
                if polygon_fan(&ring_pts).0 < 0.0 {
                    ring.reverse();
                }
                (0..ring.len()).all(|i| {
                    let a = &coords[ring[i]];
                    let b = &coords[ring[(i + 1) % ring.len()]];
                    cross2(a, b, &c) >= -tol * linalg::dist(a, b)
                })
            }
            _ => {
                let facets = hull_3d(&self.vertices, REL_TOL * linalg::extent(&self.vertices));
                facets.iter().all(|ring| {
                    let p0 = &self.vertices[ring[0]];
                    let e1 = linalg::sub(&self.vertices[ring[1]], p0);
                    let e2 = linalg::sub(&self.vertices[ring[2]], p0);
                    let n = linalg::cross(&e1, &e2);
                    let nn = linalg::norm(&n);
                    linalg::dot(&n, &linalg::sub(y, p0)) <= tol * nn
                })
            }
        }
    }
}

fn lex_min(points: &[Vec<f64>]) -> usize {
    (0..points.len())
        .min_by(|&a, &b| linalg::lex_cmp(&points[a], &points[b]))
        .unwrap()
}

fn extremes_1d(coords: &[Vec<f64>]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, c) in coords.iter().enumerate() {
        if c[0] < coords[lo][0] {
            lo = i;
        }
        if c[0] > coords[hi][0] {
            hi = i;
        }
    }
    (lo, hi)
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone chain; returns indices of the strictly convex hull in
/// counter-clockwise order.
pub(crate) fn hull_2d(coords: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    idx.sort_by(|&a, &b| linalg::lex_cmp(&coords[a], &coords[b]));
    idx.dedup_by(|a, b| linalg::dist(&coords[*a], &coords[*b]) <= tol);
    if idx.len() < 3 {
        return idx;
    }
    let keep = |h: &[usize], p: usize| -> bool {
        let k = h.len();
        let (o, a, b) = (&coords[h[k - 2]], &coords[h[k - 1]], &coords[p]);
        let base = linalg::dist(o, b).max(tol);
        cross2(o, a, b) > tol * base
    };
    let mut lower: Vec<usize> = Vec::new();
    for &p in &idx {
        while lower.len() >= 2 && !keep(&lower, p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in idx.iter().rev() {
        while upper.len() >= 2 && !keep(&upper, p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Facets of a full-dimensional point set in R³, each as a counter-clockwise
/// (seen from outside) ring of point indices. Brute force over triples; the
/// inputs here have at most a few dozen points.
pub(crate) fn hull_3d(points: &[Vec<f64>], tol: f64) -> Vec<Vec<usize>> {
    let m = points.len();
    let mut facets: Vec<Vec<usize>> = Vec::new();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let e1 = linalg::sub(&points[j], &points[i]);
                let e2 = linalg::sub(&points[k], &points[i]);
                let c = linalg::cross(&e1, &e2);
                let nc = linalg::norm(&c);
                if nc <= tol * (linalg::norm(&e1) + linalg::norm(&e2)).max(tol) {
                    continue;
                }
                let mut normal: Vec<f64> = c.iter().map(|v| v / nc).collect();
                let mut off = linalg::dot(&normal, &points[i]);
                let side: Vec<f64> = points
                    .iter()
                    .map(|p| linalg::dot(&normal, p) - off)
                    .collect();
                if side.iter().all(|&s| s <= tol) {
                } else if side.iter().all(|&s| s >= -tol) {
                    normal.iter_mut().for_each(|v| *v = -*v);
                    off = -off;
                } else {
                    continue;
                }
                if planes.iter().any(|(nn, oo)| {
                    linalg::dist(nn, &normal) <= 1e3 * tol && (oo - off).abs() <= 1e3 * tol
                }) {
                    continue;
                }
                let on: Vec<usize> = (0..m)
                    .filter(|&l| (linalg::dot(&normal, &points[l]) - off).abs() <= tol)
                    .collect();
                let ring = planar_ring(points, &on, &normal, tol);
                planes.push((normal, off));
                facets.push(ring);
            }
        }
    }
    facets
}

fn planar_ring(points: &[Vec<f64>], on: &[usize], normal: &[f64], tol: f64) -> Vec<usize> {
    // Right-handed in-plane basis (u, w) with u × w = normal.
    let seed = if normal[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = linalg::cross(normal, &seed);
    let nu = linalg::norm(&u);
    let u: Vec<f64> = u.iter().map(|v| v / nu).collect();
    let w = linalg::cross(normal, &u).to_vec();
    let coords: Vec<Vec<f64>> = on
        .iter()
        .map(|&l| vec![linalg::dot(&points[l], &u), linalg::dot(&points[l], &w)])
        .collect();
    hull_2d(&coords, tol).into_iter().map(|r| on[r]).collect()
}

fn polygon_fan(ring: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let k = ring.len() as f64;
    let c = [
        ring.iter().map(|p| p[0]).sum::<f64>() / k,
        ring.iter().map(|p| p[1]).sum::<f64>() / k,
    ];
    let mut vol = 0.0;
    let mut mom = vec![0.0; 2];
    for i in 0..ring.len() {
        let a = &ring[i];
        let b = &ring[(i + 1) % ring.len()];
        let area = 0.5 * cross2(&c, a, b);
        vol += area;
        mom[0] += area * (c[0] + a[0] + b[0]) / 3.0;
        mom[1] += area * (c[1] + a[1] + b[1]) / 3.0;
    }
    (vol, mom)
}

fn polyhedron_fan(
    points: &[Vec<f64>],
    verts: &[Vec<f64>],
    facets: &[Vec<usize>],
) -> (f64, Vec<f64>) {
    let k = verts.len() as f64;
    let c: Vec<f64> = (0..3)
        .map(|d| verts.iter().map(|p| p[d]).sum::<f64>() / k)
        .collect();
    let mut vol = 0.0;
    let mut mom = vec![0.0; 3];
    for ring in facets {
        let p0 = &points[ring[0]];
        for t in 1..ring.len().saturating_sub(1) {
            let p1 = &points[ring[t]];
            let p2 = &points[ring[t + 1]];
            let a = linalg::sub(p0, &c);
            let b = linalg::sub(p1, &c);
            let d = linalg::sub(p2, &c);
            let v = linalg::dot(&a, &linalg::cross(&b, &d)) / 6.0;
            vol += v;
            for (ax, m) in mom.iter_mut().enumerate() {
                *m += v * (c[ax] + p0[ax] + p1[ax] + p2[ax]) / 4.0;
            }
        }
    }
    (vol, mom)
}
