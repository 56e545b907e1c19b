//! Independent geometry oracles for integration tests.
#![allow(dead_code)]

/// Monotone-chain hull, counter-clockwise.
pub fn hull_2d(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.iter().map(|q| [q[0], q[1]]).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn inside_2d(h: &[[f64; 2]], y: &[f64]) -> bool {
    (0..h.len()).all(|i| {
        let p = h[i];
        let q = h[(i + 1) % h.len()];
        (q[0] - p[0]) * (y[1] - p[1]) - (q[1] - p[1]) * (y[0] - p[0]) >= 0.0
    })
}

/// Shoelace area and first moment of a counter-clockwise ring.
pub fn shoelace(h: &[[f64; 2]]) -> (f64, [f64; 2]) {
    if h.len() < 3 {
        return (0.0, [0.0; 2]);
    }
    let mut a = 0.0;
    let mut m = [0.0; 2];
    for i in 0..h.len() {
        let p = h[i];
        let q = h[(i + 1) % h.len()];
        let c = p[0] * q[1] - q[0] * p[1];
        a += c;
        m[0] += (p[0] + q[0]) * c;
        m[1] += (p[1] + q[1]) * c;
    }
    (a / 2.0, [m[0] / 6.0, m[1] / 6.0])
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(u: [f64; 3], w: [f64; 3]) -> [f64; 3] {
    [
        u[1] * w[2] - u[2] * w[1],
        u[2] * w[0] - u[0] * w[2],
        u[0] * w[1] - u[1] * w[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Supporting planes `⟨n, y⟩ ≤ off` of a full-dimensional 3D point set, by
/// brute force over triples, without duplicates.
pub fn facets_3d(p: &[Vec<f64>]) -> Vec<([f64; 3], f64)> {
    let mut out: Vec<([f64; 3], f64)> = Vec::new();
    let m = p.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let nrm = cross3(sub3(&p[j], &p[i]), sub3(&p[k], &p[i]));
                let len = dot3(nrm, nrm).sqrt();
                if len < 1e-12 {
                    continue;
                }
                let mut nrm = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
                let mut off = dot3(nrm, [p[i][0], p[i][1], p[i][2]]);
                let side: Vec<f64> = p
                    .iter()
                    .map(|q| dot3(nrm, [q[0], q[1], q[2]]) - off)
                    .collect();
                if side.iter().all(|&s| s >= -1e-12) {
                    nrm = [-nrm[0], -nrm[1], -nrm[2]];
                    off = -off;
                } else if !side.iter().all(|&s| s <= 1e-12) {
                    continue;
                }
                let dup = out.iter().any(|(n2, o2)| {
                    dot3(sub3(&nrm, n2), sub3(&nrm, n2)) < 1e-18 && (off - o2).abs() < 1e-9
                });
                if !dup {
                    out.push((nrm, off));
                }
            }
        }
    }
    out
}

pub fn inside_3d(f: &[([f64; 3], f64)], y: &[f64]) -> bool {
    f.iter()
        .all(|(n, off)| dot3(*n, [y[0], y[1], y[2]]) <= *off)
}

/// Volume and first moment of the hull of a full-dimensional 3D point set:
/// every facet polygon is ordered by angle and coned to the vertex mean.
pub fn volume_moment_3d(p: &[Vec<f64>]) -> (f64, [f64; 3]) {
    let facets = facets_3d(p);
    let c: Vec<f64> = (0..3)
        .map(|k| p.iter().map(|q| q[k]).sum::<f64>() / p.len() as f64)
        .collect();
    let mut vol = 0.0;
    let mut mom = [0.0; 3];
    for (nrm, off) in facets {
        let mut on: Vec<&Vec<f64>> = p
            .iter()
            .filter(|q| (dot3(nrm, [q[0], q[1], q[2]]) - off).abs() <= 1e-10)
            .collect();
        on.dedup();
        if on.len() < 3 {
            continue;
        }
        let mid: Vec<f64> = (0..3)
            .map(|k| on.iter().map(|q| q[k]).sum::<f64>() / on.len() as f64)
            .collect();
        let e1 = {
            let d = sub3(on[0], &mid);
            let l = dot3(d, d).sqrt();
            [d[0] / l, d[1] / l, d[2] / l]
        };
        let e2 = cross3(nrm, e1);
        on.sort_by(|a, b| {
            let (da, db) = (sub3(a, &mid), sub3(b, &mid));
            let ta = dot3(da, e2).atan2(dot3(da, e1));
            let tb = dot3(db, e2).atan2(dot3(db, e1));
            ta.total_cmp(&tb)
        });
        for i in 1..on.len() - 1 {
            let (a, b, d) = (on[0], on[i], on[i + 1]);
            let v = dot3(sub3(a, &c), cross3(sub3(b, &c), sub3(d, &c))).abs() / 6.0;
            vol += v;
            for k in 0..3 {
                mom[k] += v * (c[k] + a[k] + b[k] + d[k]) / 4.0;
            }
        }
    }
    (vol, mom)
}

/// Exact volume and moment for n = 1, 2, 3.
pub fn volume_moment(points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    match points[0].len() {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points
                .iter()
                .map(|p| p[0])
                .fold(f64::NEG_INFINITY, f64::max);
            (hi - lo, vec![0.5 * (hi * hi - lo * lo)])
        }
        2 => {
            let (a, m) = shoelace(&hull_2d(points));
            (a, m.to_vec())
        }
        _ => {
            let (a, m) = volume_moment_3d(points);
            (a, m.to_vec())
        }
    }
}
