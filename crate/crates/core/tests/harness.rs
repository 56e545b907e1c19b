use std::collections::BTreeMap;

use fconv_core::harness::{gen_valid_pairs, PairWitness, Representation, ToleranceMode};
use fconv_core::{
    run_suite, ConvexFunction, DensityKind, DensitySpec, HarnessConfig, ProfileSpec, Suite,
};
use proptest::prelude::*;

fn small(dims: Vec<usize>, seed: u64) -> HarnessConfig {
    HarnessConfig {
        dims,
        seed,
        max_cases: Some(3),
        ..HarnessConfig::default()
    }
}

#[test]
fn identical_config_gives_identical_reports() {
    for suite in [
        "homogeneity",
        "conjugation_duality",
        "valuation_identity",
        "rotation_equivariance",
    ] {
        let cfg = small(vec![1, 2], 5);
        let a = run_suite(suite, &cfg).unwrap();
        let b = run_suite(suite, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "{suite}"
        );
        let c = run_suite(suite, &small(vec![1, 2], 6)).unwrap();
        assert_ne!(
            serde_json::to_string(&a.cases).unwrap(),
            serde_json::to_string(&c.cases).unwrap(),
            "{suite}: seed ignored"
        );
    }
}

#[test]
fn textbook_and_dominated_pairs() {
    let pairs = gen_valid_pairs(0, 10, 1, Representation::Exact);
    assert!(pairs
        .iter()
        .any(|p| matches!(p.witness, PairWitness::Dominated)));
    assert!(pairs
        .iter()
        .any(|p| matches!(p.witness, PairWitness::Template { .. })));
    for p in &pairs {
        for x in [-1.7, -0.3, 0.0, 0.4, 1.2] {
            let (v, w) = (p.v.eval(&[x]).unwrap(), p.w.eval(&[x]).unwrap());
            assert!((p.max.eval(&[x]).unwrap() - v.max(w)).abs() <= 1e-12);
            assert!((p.min.eval(&[x]).unwrap() - v.min(w)).abs() <= 1e-12);
        }
    }
}

#[test]
fn strict_and_credited_modes() {
    let mut cfg = small(vec![1], 42);
    let credited = run_suite("epi_continuity", &cfg).unwrap();
    assert_eq!(credited.mode, ToleranceMode::Credited);
    assert_eq!(credited.tolerance, 0.0);
    assert!(credited.pass);
    assert!(credited.max_raw_residual > 0.0);
    cfg.tolerances = BTreeMap::from([("epi_continuity".to_string(), 0.0)]);
    let strict = run_suite("epi_continuity", &cfg).unwrap();
    assert_eq!(strict.mode, ToleranceMode::Strict);
    assert!(!strict.pass);
    assert_eq!(strict.max_residual, strict.max_raw_residual);
    cfg.tolerances = BTreeMap::from([("epi_continuity".to_string(), 1.0)]);
    assert!(run_suite("epi_continuity", &cfg).unwrap().pass);
}

#[test]
fn config_validation() {
    let ok = HarnessConfig::default();
    assert!(ok.validate().is_ok());
    let bad = [
        HarnessConfig {
            dims: vec![],
            ..ok.clone()
        },
        HarnessConfig {
            dims: vec![4],
            ..ok.clone()
        },
        HarnessConfig {
            resolutions: vec![31],
            ..ok.clone()
        },
        HarnessConfig {
            resolutions: vec![64],
            ..ok.clone()
        },
        HarnessConfig {
            tolerances: BTreeMap::from([("nope".to_string(), 1.0)]),
            ..ok.clone()
        },
        HarnessConfig {
            tolerances: BTreeMap::from([("simplicity".to_string(), -1.0)]),
            ..ok.clone()
        },
        HarnessConfig {
            densities: vec![DensitySpec {
                kind: DensityKind::Xi,
                profile: ProfileSpec::Power {
                    p: 1.0,
                    radius: 1.0,
                },
            }],
            ..ok.clone()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
        assert!(run_suite("simplicity", &cfg).is_err());
    }
    assert!(run_suite("nope", &ok).is_err());
    let parsed: HarnessConfig = serde_json::from_str(r#"{"dims":[2],"seed":3}"#).unwrap();
    assert_eq!(parsed.resolutions, ok.resolutions);
    assert!(serde_json::from_str::<HarnessConfig>(r#"{"seeds":3}"#).is_err());
}

#[test]
fn default_operator_lists() {
    let cfg = HarnessConfig::default();
    for n in 1..=3 {
        let ops = cfg.operators_for(n).unwrap();
        let labels: Vec<String> = ops.iter().map(|o| o.label()).collect();
        assert_eq!(
            labels.iter().filter(|l| l.starts_with("so2")).count(),
            usize::from(n == 2),
            "{labels:?}"
        );
        for o in &ops {
            assert!(o.check_kind(Some(n)).is_ok());
        }
    }
    assert_eq!(Suite::ALL.len(), 11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_grid_pairs_are_discretely_convex(seed in any::<u64>(), n in 1usize..=2) {
        let resolution = if n == 1 { 257 } else { 65 };
        for p in gen_valid_pairs(seed, 5, n, Representation::Grid { resolution }) {
            for f in [&p.v, &p.w, &p.max, &p.min] {
                let ConvexFunction::Grid(g) = f else { panic!("wrong representation") };
                prop_assert!(g.check_convexity(1e-9).is_ok());
            }
        }
    }

    #[test]
    fn generated_exact_pairs_realize_max_and_min(seed in any::<u64>(), n in 1usize..=3) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for p in gen_valid_pairs(seed, 5, n, Representation::Exact) {
            for _ in 0..20 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let (v, w) = (p.v.eval(&x).unwrap(), p.w.eval(&x).unwrap());
                let scale = 1.0 + v.abs().max(w.abs());
                prop_assert!((p.max.eval(&x).unwrap() - v.max(w)).abs() <= 1e-12 * scale);
                prop_assert!((p.min.eval(&x).unwrap() - v.min(w)).abs() <= 1e-12 * scale);
            }
        }
    }
}
