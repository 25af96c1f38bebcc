//! Tensor assembly against an independent expansion, null structure and evaluation oracles.

use proptest::prelude::*;
use radelastic::nullform::*;
use radelastic::solver::Model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn golden(name: &str) -> NullFormTensor {
    let path = format!("{}/tests/golden/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    NullFormTensor::from_text(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn tensors_match_independent_expansion() {
    let cases = [
        ("tensor_e1_d0", CoefficientSet::reduced(0.0, 1.0, 0.0)),
        ("tensor_e0_d1", CoefficientSet::reduced(0.0, 0.0, 1.0)),
        ("tensor_e1_d1", CoefficientSet::reduced(0.0, 1.0, 1.0)),
        ("tensor_e1_d1_n1", CoefficientSet::reduced(1.0, 1.0, 1.0)),
    ];
    for (name, c) in cases {
        let want = golden(name);
        let got = build_tensor(&c);
        let err = want
            .entries()
            .iter()
            .zip(got.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("{name}: max entry error {err:.3e}");
        assert!(err <= 1e-14 * want.max_abs().max(1.0), "{name}");
    }
}

#[test]
fn radial_reductions() {
    let null = Model::new(CoefficientSet::reduced(0.0, 1.0, 1.0)).reduction();
    assert_eq!(null, [32.0, 4.0, 8.0, 0.0]);
    let non = Model::new(CoefficientSet::reduced(1.0, 1.0, 1.0)).reduction();
    assert_eq!(non, [104.0, 28.0, 26.0, 6.0]);
}

#[test]
fn nonnull_contraction_detected() {
    let t = build_tensor(&CoefficientSet::reduced(1.0, 0.0, 0.0));
    // g ω ω ω with only the d1 term is 3 d1 ω^i ω^j ω^k ω_i ω_j ω_k summed = 3 on the axis.
    let c = null_contraction(&t, &[1.0, 0.0, 0.0]).unwrap();
    assert!((c[0][0][0] - 3.0).abs() < 1e-14);
    assert!(max_null_contraction(&t, 10_000) / t.max_abs() > 0.1);
}

#[test]
fn d2_does_not_enter() {
    let a = build_tensor(&CoefficientSet::new(1.0, 0.5, [0.0, 0.0, 0.3, 0.2, 0.7]).unwrap());
    let b = build_tensor(&CoefficientSet::new(1.0, 0.5, [0.0, 5.0, 0.3, 0.2, 0.7]).unwrap());
    assert_eq!(a, b);
}

fn naive_n(t: &NullFormTensor, u: &VectorJet2, v: &VectorJet2) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        for n in 0..3 {
                            let g = t.get(i, j, k, l, m, n);
                            out[i] += g
                                * (u.ddu[l + 1][m + 1][j] * v.du[n + 1][k]
                                    + u.du[m + 1][j] * v.ddu[l + 1][n + 1][k]);
                        }
                    }
                }
            }
        }
    }
    out
}

fn coeffs() -> impl Strategy<Value = CoefficientSet> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(d2, d3, d4, d5)| CoefficientSet::new(1.0, 0.5, [0.0, d2, d3, d4, d5]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn null_sets_contract_to_zero(c in coeffs()) {
        let t = build_tensor(&c);
        prop_assume!(t.max_abs() > 0.0);
        prop_assert!(max_null_contraction(&t, 2000) <= 1e-12 * t.max_abs());
    }

    #[test]
    fn symmetry_is_exact(c in coeffs(), d1 in -2.0..2.0f64) {
        let mut c = c;
        c.d1 = d1;
        prop_assert_eq!(build_tensor(&c).symmetry_defect(), 0.0);
    }

    #[test]
    fn decomposition_closes(c in coeffs(), seed in 0u64..1000) {
        let t = build_tensor(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, cc) = (random_grad(&mut rng), random_grad(&mut rng), random_grad(&mut rng));
        let x = random_point(&mut rng, 0.1, 10.0);
        let parts = radial_angular_terms(&t, &a, &b, &cc, &x).unwrap();
        let whole = evaluate_trilinear(&t, &a, &b, &cc);
        let mag: f64 = parts.iter().map(|p| p.abs()).sum::<f64>().max(1e-300);
        prop_assert!((parts.iter().sum::<f64>() - whole).abs() <= 1e-10 * mag);
    }

    #[test]
    fn n_matches_index_loop(c in coeffs(), d1 in -2.0..2.0f64, seed in 0u64..1000) {
        let mut c = c;
        c.d1 = d1;
        let t = build_tensor(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = (random_jet(&mut rng), random_jet(&mut rng));
        let fast = evaluate_n(&t, &u, &v);
        let slow = naive_n(&t, &u, &v);
        let scale = t.l1_norm() * 10.0;
        for i in 0..3 {
            prop_assert!((fast[i] - slow[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn trilinear_is_linear_in_each_slot(c in coeffs(), seed in 0u64..1000, s in -3.0..3.0f64) {
        let t = build_tensor(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, cc, d) = (random_grad(&mut rng), random_grad(&mut rng), random_grad(&mut rng), random_grad(&mut rng));
        let mut ad = a;
        for l in 0..3 {
            for i in 0..3 {
                ad[l][i] = a[l][i] + s * d[l][i];
            }
        }
        let lhs = evaluate_trilinear(&t, &ad, &b, &cc);
        let rhs = evaluate_trilinear(&t, &a, &b, &cc) + s * evaluate_trilinear(&t, &d, &b, &cc);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * t.l1_norm() * 100.0);
    }

    #[test]
    fn text_roundtrip_is_lossless(c in coeffs(), d1 in -2.0..2.0f64) {
        let mut c = c;
        c.d1 = d1;
        let t = build_tensor(&c);
        prop_assert_eq!(NullFormTensor::from_text(&t.to_text()).unwrap(), t);
    }
}

#[test]
fn angular_bound_holds_for_null_sets() {
    let t = build_tensor(&CoefficientSet::reduced(0.0, 1.0, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b, c) = (random_grad(&mut rng), random_grad(&mut rng), random_grad(&mut rng));
        let x = random_point(&mut rng, 0.5, 5.0);
        if let Some(q) = angular_bound_ratio(&t, &a, &b, &c, &x).unwrap() {
            worst = worst.max(q);
        }
    }
    println!("largest |N|/(angular bound) over 1000 samples: {worst:.4}");
    assert!(worst.is_finite() && worst <= t.l1_norm());
}
