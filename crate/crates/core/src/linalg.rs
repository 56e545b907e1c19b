//! Small dense helpers for vectors of length at most four.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(acc: &mut [f64], s: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += s * v;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `m · x` for a row-major square matrix.
pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j]).collect()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        n => {
            let mut a: Vec<Vec<f64>> = m.to_vec();
            let mut d = 1.0;
            for c in 0..n {
                let p = (c..n)
                    .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                    .unwrap();
                if a[p][c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    a.swap(p, c);
                    d = -d;
                }
                d *= a[c][c];
                for r in c + 1..n {
                    let f = a[r][c] / a[c][c];
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
            d
        }
    }
}

/// Solves `a x = b`. Returns `None` when a pivot falls below `rel_tol` times
/// the largest entry of `a`.
pub fn solve(a: &[Vec<f64>], b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return if n == 0 { Some(Vec::new()) } else { None };
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c].abs() <= rel_tol * scale {
            return None;
        }
        m.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Orthonormal frame of the affine hull of a point set.
#[derive(Debug, Clone)]
pub struct AffineFrame {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl AffineFrame {
    /// Greedy Gram–Schmidt: repeatedly adds the point farthest from the current
    /// flat, stopping once every residual is below `tol`.
    pub fn of(points: &[Vec<f64>], tol: f64) -> AffineFrame {
        let origin = points[0].clone();
        let dim = origin.len();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < dim {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for p in points.iter() {
                let mut r = sub(p, &origin);
                for b in &basis {
                    let c = dot(&r, b);
                    axpy(&mut r, -c, b);
                }
                let nr = norm(&r);
                if best.as_ref().is_none_or(|(bn, _)| nr > *bn) {
                    best = Some((nr, r));
                }
            }
            match best {
                Some((nr, r)) if nr > tol => basis.push(scale(&r, 1.0 / nr)),
                _ => break,
            }
        }
        AffineFrame { origin, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, p: &[f64]) -> Vec<f64> {
        let r = sub(p, &self.origin);
        self.basis.iter().map(|b| dot(&r, b)).collect()
    }
}

/// Scale of a point set used to make geometric tolerances relative.
pub fn extent(points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0)
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Fixed-order pairwise summation of per-slab partial vectors.
pub fn pairwise_sum(parts: &[Vec<f64>], len: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; len],
        1 => parts[0].clone(),
        k => {
            let mid = k / 2;
            let l = pairwise_sum(&parts[..mid], len);
            let r = pairwise_sum(&parts[mid..], len);
            add(&l, &r)
        }
    }
}

pub fn all_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_det_agree_on_small_systems() {
        let a = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        let x = solve(&a, &[1.0, 2.0, 3.0], 1e-14).unwrap();
        let back = mat_vec(&a, &x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-14);
        }
        assert!((det(&a) - 18.0).abs() < 1e-12);
        let sing = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(&sing, &[1.0, 1.0], 1e-12).is_none());
    }

    #[test]
    fn affine_frame_detects_collinear_points() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![2.0, 2.0, 2.0],
        ];
        assert_eq!(AffineFrame::of(&pts, 1e-12).dim(), 1);
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(AffineFrame::of(&pts, 1e-12).dim(), 2);
    }

    #[test]
    fn subsets_are_enumerated_once() {
        assert_eq!(all_subsets(5, 3).len(), 10);
        assert_eq!(all_subsets(3, 0), vec![Vec::<usize>::new()]);
    }
}
