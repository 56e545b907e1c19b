use fconv_core::harness::{random_max_affine, random_polytope, random_rotation};
use fconv_core::transform::rotate_spec_on_grid;
use fconv_core::{
    conjugate_grid, conjugate_max_affine, epi_multiply, transform_fconvf, Action, ConvexFunction,
    FunctionSpec, Grid, GridFunction, MaxAffineFunction, Polytope,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ma(dim: usize, pieces: &[(&[f64], f64)]) -> MaxAffineFunction {
    MaxAffineFunction::new(dim, pieces.iter().map(|(a, b)| (a.to_vec(), *b)).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn conjugate_examples() {
    let abs = ma(1, &[(&[1.0], 0.0), (&[-1.0], 0.0)]);
    let c = conjugate_max_affine(&abs);
    assert_eq!(c.cells().len(), 1);
    assert_eq!(c.cells()[0].gradient_point, vec![0.0]);
    assert_eq!(
        sorted(c.cells()[0].cell.vertices().to_vec()),
        vec![vec![-1.0], vec![1.0]]
    );
    assert_eq!(c.eval(&[0.3]), 0.0);
    assert_eq!(c.eval(&[1.5]), f64::INFINITY);

    // sup_x xy − max(0, x − 1) = y on [0, 1].
    let hinge = ma(1, &[(&[0.0], 0.0), (&[1.0], -1.0)]);
    let c = conjugate_max_affine(&hinge);
    assert_eq!(
        sorted(c.domain().vertices().to_vec()),
        vec![vec![0.0], vec![1.0]]
    );
    assert_eq!(c.cells().len(), 1);
    assert_eq!(c.cells()[0].gradient_point, vec![1.0]);
    for y in [0.0, 0.25, 0.7, 1.0] {
        assert!((c.eval(&[y]) - y).abs() < 1e-15);
    }

    let square = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let c = conjugate_max_affine(&square.support_function());
    assert_eq!(c.cells().len(), 1);
    assert_eq!(c.cells()[0].gradient_point, vec![0.0, 0.0]);
    assert_eq!(c.cells()[0].cell, square);
}

#[test]
fn grid_conjugate_examples() {
    let g = Grid::symmetric(1, 2.0, 401).unwrap();
    let q = FunctionSpec::Quadratic {
        scale: 1.0,
        center: None,
    }
    .sample(&g)
    .unwrap();
    let u = conjugate_grid(&q, None).unwrap();
    for (i, v) in u.values().iter().enumerate() {
        let y = u.grid().coord(0, i);
        if y.abs() <= 1.5 {
            assert!((v - 0.5 * y * y).abs() < 1e-4, "y = {y}: {v}");
        }
    }

    // Conjugate of a linear function is the indicator of its slope.
    let lin = FunctionSpec::Linear {
        slope: vec![0.5],
        offset: 0.0,
    }
    .sample(&g)
    .unwrap();
    let u = conjugate_grid(&lin, None).unwrap();
    let at_c = u.eval(&[0.5]).unwrap();
    assert!(at_c.abs() < 1e-12);
    let lo = u.grid().lower[0];
    assert!(u.eval(&[lo]).unwrap() > 0.5);

    // |x| conjugates to the indicator of [−1, 1]: flat inside, steep outside.
    let abs = FunctionSpec::RadialPower {
        coefficient: 1.0,
        exponent: 1.0,
        center: None,
    }
    .sample(&g)
    .unwrap();
    let dual = Grid::symmetric(1, 1.5, 301).unwrap();
    let u = conjugate_grid(&abs, Some(&dual)).unwrap();
    for (i, v) in u.values().iter().enumerate() {
        let y = dual.coord(0, i);
        if y.abs() <= 1.0 {
            assert!(v.abs() < 1e-12, "y = {y}: {v}");
        } else if y.abs() >= 1.1 {
            assert!(*v >= 2.0 * (y.abs() - 1.0) - 1e-12, "y = {y}: {v}");
        }
    }
}

#[test]
fn grid_conjugate_reports_clipping() {
    let g = Grid::symmetric(1, 2.0, 129).unwrap();
    let q = FunctionSpec::Quadratic {
        scale: 1.0,
        center: None,
    }
    .sample(&g)
    .unwrap();
    let small = Grid::symmetric(1, 1.0, 65).unwrap();
    assert!(matches!(
        conjugate_grid(&q, Some(&small)),
        Err(fconv_core::Error::Clipping { .. })
    ));
}

#[test]
fn epi_multiply_examples() {
    let abs = ma(1, &[(&[1.0], 0.0), (&[-1.0], 0.0)]);
    let c = conjugate_max_affine(&abs);
    assert_eq!(epi_multiply(&c, 1.0).unwrap(), c);
    let c2 = epi_multiply(&c, 2.0).unwrap();
    assert_eq!(
        sorted(c2.domain().vertices().to_vec()),
        vec![vec![-2.0], vec![2.0]]
    );
    assert_eq!(c2.eval(&[1.9]), 0.0);
    assert_eq!(c2.eval(&[2.1]), f64::INFINITY);
    assert!(epi_multiply(&c, 0.0).is_err());
    assert!(epi_multiply(&c, -1.0).is_err());

    // (2 ⊙ q)* = 2 q: with q self-conjugate, 2 ⊙ q = 2 q(·/2) = q/2.
    let g = Grid::symmetric(2, 2.0, 65).unwrap();
    let q = FunctionSpec::Quadratic {
        scale: 1.0,
        center: None,
    }
    .sample(&g)
    .unwrap();
    let q2 = epi_multiply(&q, 2.0).unwrap();
    for x in [[0.3, -0.4], [1.1, 0.9], [-2.0, 1.5]] {
        let want = (x[0] * x[0] + x[1] * x[1]) / 4.0;
        assert!((q2.eval(&x).unwrap() - want).abs() < 1e-2, "{x:?}");
    }
    let dual = Grid::symmetric(2, 2.0, 65).unwrap();
    let back = conjugate_grid(&q2, Some(&dual)).unwrap();
    for flat in 0..dual.len() {
        let y = dual.node(&dual.unravel(flat));
        if y.iter().all(|t| t.abs() <= 1.5) {
            assert!((back.values()[flat] - dot(&y, &y)).abs() < 1e-2, "{y:?}");
        }
    }
}

#[test]
fn transform_examples() {
    let abs = ConvexFunction::MaxAffine(ma(1, &[(&[1.0], 0.0), (&[-1.0], 0.0)]));
    let ConvexFunction::MaxAffine(f) =
        transform_fconvf(&abs, &Action::AddLinear(vec![1.0])).unwrap()
    else {
        panic!("representation changed");
    };
    let mut pieces: Vec<(f64, f64)> = f.pieces().iter().map(|p| (p.slope[0], p.offset)).collect();
    pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(pieces, vec![(0.0, 0.0), (2.0, 0.0)]);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = random_polytope(&mut rng, 2);
    let m = random_rotation(&mut rng, 2, true);
    let hk = ConvexFunction::MaxAffine(k.support_function());
    let ConvexFunction::MaxAffine(r) = transform_fconvf(&hk, &Action::Rotate(m.clone())).unwrap()
    else {
        panic!("representation changed");
    };
    let rk = k.transform(&m).unwrap().support_function();
    for _ in 0..50 {
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        assert!((r.eval(&x) - rk.eval(&x)).abs() < 1e-12);
    }

    let g = Grid::symmetric(2, 2.0, 33).unwrap();
    let q = FunctionSpec::Quadratic {
        scale: 1.0,
        center: None,
    }
    .sample(&g)
    .unwrap();
    let ConvexFunction::Grid(q3) =
        transform_fconvf(&ConvexFunction::Grid(q.clone()), &Action::AddQuadratic(2.0)).unwrap()
    else {
        panic!("representation changed");
    };
    for (a, b) in q3.values().iter().zip(q.values()) {
        assert!((a - 3.0 * b).abs() <= 1e-14 * (1.0 + b.abs()));
    }
    assert!(
        transform_fconvf(&ConvexFunction::Grid(q.clone()), &Action::Rotate(m.clone())).is_err()
    );
    let spec = FunctionSpec::Support {
        vertices: k.vertices().to_vec(),
        translate: None,
    };
    let rotated = rotate_spec_on_grid(&spec, &m, &g).unwrap();
    let direct = FunctionSpec::Support {
        vertices: k.transform(&m).unwrap().vertices().to_vec(),
        translate: None,
    }
    .sample(&g)
    .unwrap();
    for (a, b) in rotated.values().iter().zip(direct.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

/// Biconjugate of sampled `q_c = (s/2)|x − c|²` against `q_c` at random
/// points of the inner box. At nodes the discrete biconjugate is exact.
fn biconjugation_error(nodes: usize, s: f64, c: &[f64], probes: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let g = Grid::symmetric(n, 2.0, nodes).unwrap();
    let spec = FunctionSpec::Quadratic {
        scale: s,
        center: Some(c.to_vec()),
    };
    let f = spec.sample(&g).unwrap();
    let u = conjugate_grid(&f, None).unwrap();
    let back = conjugate_grid(&u, None).unwrap();
    probes
        .iter()
        .map(|x| (back.eval(x).unwrap() - spec.eval(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn grid_biconjugation_converges_at_first_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [1, 2] {
        for _ in 0..3 {
            let s = rng.random_range(0.5..1.5);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-0.4..0.4)).collect();
            let probes: Vec<Vec<f64>> = (0..200)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let coarse = biconjugation_error(65, s, &c, &probes);
            let fine = biconjugation_error(129, s, &c, &probes);
            assert!(fine < coarse, "n = {n}: {coarse} → {fine}");
            // First order: halving h at least roughly halves the error.
            assert!(coarse / fine >= 1.6, "n = {n}: ratio {}", coarse / fine);
            assert!(fine < 0.05);
        }
    }
}

fn check_complex(v: &MaxAffineFunction, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let n = v.dim();
    let c = conjugate_max_affine(v);
    // v(x) = max over cell vertices a of ⟨x, a⟩ − u(a), u affine on each cell.
    let mut duals: Vec<(Vec<f64>, f64)> = Vec::new();
    for cell in c.cells() {
        for a in cell.cell.vertices() {
            duals.push((a.clone(), dot(&cell.gradient_point, a) - cell.primal_value));
        }
    }
    for _ in 0..100 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = duals
            .iter()
            .map(|(a, u)| dot(&x, a) - u)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((got - v.eval(&x)).abs() <= 1e-9 * (1.0 + v.eval(&x).abs()));
    }
    let pre = c.preconjugate().unwrap();
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        prop_assert!((pre.eval(&x) - v.eval(&x)).abs() <= 1e-9 * (1.0 + v.eval(&x).abs()));
    }
    let slopes = Polytope::new(v.slopes()).unwrap();
    let total = c.total_volume();
    prop_assert!((total - slopes.volume()).abs() <= 1e-9 * slopes.volume().max(1e-300));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn biconjugation_and_partition(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_max_affine(&mut rng, n);
        check_complex(&v, &mut rng)?;
    }

    #[test]
    fn support_function_conjugates_to_one_cell(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_polytope(&mut rng, n);
        let c = conjugate_max_affine(&k.support_function());
        prop_assert_eq!(c.cells().len(), 1);
        prop_assert!(c.cells()[0].gradient_point.iter().all(|t| *t == 0.0));
        prop_assert_eq!(&c.cells()[0].cell, &k);
    }

    #[test]
    fn epi_multiply_scales_the_conjugate(seed in any::<u64>(), lambda in 0.2f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_max_affine(&mut rng, 2);
        let c = conjugate_max_affine(&v);
        let cl = epi_multiply(&c, lambda).unwrap();
        let direct = conjugate_max_affine(&v.scale(lambda).unwrap());
        prop_assert!((cl.total_volume() - direct.total_volume()).abs() <= 1e-9 * (1.0 + direct.total_volume()));
        for _ in 0..20 {
            let y = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let (a, b) = (cl.eval(&y), direct.eval(&y));
            if a.is_finite() && b.is_finite() {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn grid_samples_interpolate_at_nodes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::symmetric(2, 2.0, 17).unwrap();
        let f = GridFunction::sample(&g, |x| x[0] * x[0] + 0.5 * x[1].abs(), false).unwrap();
        let idx = [rng.random_range(0..17), rng.random_range(0..17)];
        let x = g.node(&idx);
        prop_assert_eq!(f.eval(&x).unwrap(), f.value_at(&idx));
    }
}
