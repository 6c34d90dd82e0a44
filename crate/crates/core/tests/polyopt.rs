mod common;

use common::*;
use htensor::index::MultiIndex;
use htensor::polyopt::case_index;
use htensor::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn mi(raw: &[usize], n: usize) -> MultiIndex {
    MultiIndex::canonicalize(raw, n).unwrap()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_form(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SymmetricTensor {
    let terms: Vec<(Vec<u32>, f64)> = htensor::index::enumerate_all(n, m)
        .into_iter()
        .map(|idx| {
            let mut e = vec![0u32; n];
            idx.entries().iter().for_each(|&j| e[j - 1] += 1);
            (e, rng.sample(StandardNormal))
        })
        .collect();
    tensor_from_poly(&Poly::from_terms(m, n, terms).unwrap()).unwrap()
}

/// Weights per distinct index, chosen so every root the identities take
/// is rational: `beta_k = w_k r_k^4`.
fn rational_beta(rng: &mut ChaCha8Rng, case: u8) -> Vec<BigRational> {
    let w: &[i64] = match case {
        1 => &[1, 1, 1, 1],
        2 => &[2, 1, 1],
        3 => &[3, 1],
        _ => &[1, 1],
    };
    w.iter()
        .map(|&wk| {
            let r = q(rng.gen_range(0..20), rng.gen_range(1..20));
            q(wk, 1) * num_traits::pow(r, 4)
        })
        .collect()
}

#[test]
fn poly_of_worked_example() {
    let p = poly_from_tensor(&worked_example());
    assert_eq!(p.coef(&[4, 0]), 4.0);
    assert_eq!(p.coef(&[3, 1]), -8.0);
    assert_eq!(p.coef(&[2, 2]), -6.0);
    assert!((p.coef(&[1, 3]) - 256.0 / 3.0).abs() < 1e-12);
    assert_eq!(p.coef(&[0, 4]), 1000.0);
    let x = [0.7, -1.3];
    assert!((p.evaluate(&x).unwrap() - dense_evaluate(&worked_example(), &x)).abs() < 1e-9);
}

#[test]
fn poly_tensor_small_examples() {
    let id = SymmetricTensor::identity(4, 2).unwrap();
    let p = poly_from_tensor(&id);
    assert_eq!(p, Poly::from_terms(4, 2, vec![(vec![4, 0], 1.0), (vec![0, 4], 1.0)]).unwrap());
    let two_xy = Poly::from_terms(2, 2, vec![(vec![1, 1], 2.0)]).unwrap();
    let t = tensor_from_poly(&two_xy).unwrap();
    assert_eq!(t.get_raw(&[1, 2]).unwrap(), 1.0);
    assert_eq!(t.get_raw(&[2, 1]).unwrap(), 1.0);
    assert_eq!(t.nnz(), 1);
}

#[test]
fn basis_examples() {
    let p: Poly<f64> = basis_f(&mi(&[1, 2], 2), Sign::Plus, 2).unwrap();
    let expect = Poly::from_terms(2, 2, vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0), (vec![1, 1], 2.0)]).unwrap();
    assert_eq!(p, expect);
    assert!(basis_f::<f64>(&mi(&[1, 1], 2), Sign::Plus, 2).is_err());

    // weights equal to the slice counts give back basis_f
    for raw in [&[1, 2][..], &[1, 1, 2], &[1, 2, 2, 3], &[1, 1, 1, 2, 3, 3]] {
        let idx = mi(raw, 3);
        let counts: Vec<BigRational> =
            idx.tight_pair().slice_counts().into_iter().map(|c| q(c as i64, 1)).collect();
        for sign in [Sign::Plus, Sign::Minus] {
            let f: Poly<BigRational> = basis_f(&idx, sign, 3).unwrap();
            let g = basis_g(&idx, sign, &counts, 3).unwrap();
            assert_eq!(f, g, "{idx}");
        }
    }
    assert!(basis_g(&mi(&[1, 2], 2), Sign::Plus, &[-1.0, 1.0], 2).is_err());
}

#[test]
fn basis_f_minus_is_the_tight_dd_tensor() {
    for raw in [&[1, 2][..], &[1, 1, 2], &[1, 2, 3], &[1, 1, 2, 2], &[1, 1, 2, 3], &[1, 2, 2, 2, 3]] {
        let n = 3;
        let idx = mi(raw, n);
        let m = idx.order();
        let t = tensor_from_poly(&basis_f(&idx, Sign::Minus, n).unwrap()).unwrap();
        let tp = idx.tight_pair();
        let shares: Vec<(usize, f64)> =
            tp.distinct.iter().zip(tp.slice_counts()).map(|(&j, c)| (j, c as f64)).collect();
        let expect = component_tensor(m, n, &idx, -1.0, &shares);
        for tup in all_tuples(n, m) {
            assert!((t.get_raw(&tup).unwrap() - expect.get_raw(&tup).unwrap()).abs() < 1e-12, "{idx} {tup:?}");
        }
        // every row is exactly balanced
        for (j, margin) in t.dominance_margins().into_iter().enumerate() {
            if idx.contains(j + 1) {
                assert!(margin.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn ddth_and_gddth_membership() {
    let p = Poly::from_terms(4, 2, vec![(vec![4, 0], 1.0), (vec![0, 4], 1.0)]).unwrap();
    assert!(is_ddth(&p).unwrap());
    assert_eq!(is_gddth(&p, &cfg()).unwrap().kind, VerdictKind::Member);

    let ex = poly_from_tensor(&worked_example());
    assert!(!is_ddth(&ex).unwrap());
    assert_eq!(is_gddth(&ex, &cfg()).unwrap().kind, VerdictKind::Member);

    let odd = poly_from_tensor(&tensor(4, 2, &[(&[1, 1, 1, 1], 1.0), (&[1, 2, 2, 2], 1.0), (&[2, 2, 2, 2], 1.0)]));
    assert!(!is_ddth(&odd).unwrap());
    assert_eq!(is_gddth(&odd, &cfg()).unwrap().kind, VerdictKind::NotMember);
}

#[test]
fn bounds_on_identity() {
    let id = SymmetricTensor::identity(4, 3).unwrap();
    assert_eq!(lower_bound_ddth(&id).unwrap(), 1.0);
    assert!((lower_bound_ddth_lp(&id, &cfg()).unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(lower_bound_gddth(&id, &cfg()).unwrap(), 1.0);
    assert_eq!(sampled_upper_bound(&id, &SamplingConfig::default()).unwrap(), 1.0);
}

#[test]
fn worked_example_bounds() {
    let a = worked_example();
    let dd = lower_bound_ddth(&a).unwrap();
    assert!((dd + 79.0 / 3.0).abs() < 1e-12, "closed form {dd}");
    let lp = lower_bound_ddth_lp(&a, &cfg()).unwrap();
    assert!((lp - dd).abs() <= 1e-8 * (1.0 + dd.abs()), "lp {lp}");
    let gdd = lower_bound_gddth(&a, &cfg()).unwrap();
    let up = sampled_upper_bound(&a, &SamplingConfig::default()).unwrap();
    assert!(dd <= gdd && gdd <= up, "{dd} {gdd} {up}");
    // the example is H+, so the GDD+ shift is nonnegative
    assert!(gdd > 0.0);
}

#[test]
fn odd_degree_is_rejected() {
    let a = SymmetricTensor::identity(3, 2).unwrap();
    assert!(lower_bound_ddth(&a).is_err());
    assert!(lower_bound_ddth_lp(&a, &cfg()).is_err());
    assert!(lower_bound_gddth(&a, &cfg()).is_err());
}

#[test]
fn random_quartic_bound_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..3 {
        let a = random_form(&mut rng, 4, 5);
        let dd = lower_bound_ddth(&a).unwrap();
        let lp = lower_bound_ddth_lp(&a, &cfg()).unwrap();
        let gdd = lower_bound_gddth(&a, &cfg()).unwrap();
        let up = sampled_upper_bound(&a, &SamplingConfig::default()).unwrap();
        assert!((lp - dd).abs() <= 1e-8 * (1.0 + dd.abs()), "lp {lp} vs {dd}");
        assert!(dd <= gdd + 1e-8 && gdd <= up, "{dd} {gdd} {up}");
    }
}

#[test]
fn sampling_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_form(&mut rng, 4, 4);
    let c = SamplingConfig { samples: 500, refine_steps: 10, seed: 42 };
    assert_eq!(sampled_upper_bound(&a, &c).unwrap(), sampled_upper_bound(&a, &c).unwrap());
    assert!(sampled_upper_bound(&a, &SamplingConfig { samples: 0, ..c }).is_err());
}

#[test]
fn case_one_plus_squares() {
    let d = appendix_identity::<BigRational>(1, Sign::Plus, None).unwrap();
    let w: Vec<BigRational> = d.squares.iter().map(|s| s.0.clone()).collect();
    assert_eq!(w, vec![q(6, 1), q(6, 1), q(12, 1)]);
    assert!(d.is_exact());
    assert_eq!(d.target.coef(&[4, 0, 0, 0]), q(6, 1));
    assert_eq!(d.target.coef(&[1, 1, 1, 1]), q(24, 1));
}

#[test]
fn appendix_f_cases_are_exact() {
    for case in 1..=4 {
        for sign in [Sign::Plus, Sign::Minus] {
            let d = appendix_identity::<BigRational>(case, sign, None).unwrap();
            assert!(d.is_exact(), "case {case} {sign:?}");
            let f = appendix_identity::<f64>(case, sign, None).unwrap();
            assert!(f.relative_error() <= 1e-10);
        }
    }
    assert!(appendix_identity::<f64>(5, Sign::Plus, None).is_err());
    assert_eq!(case_index(3).unwrap(), mi(&[1, 1, 1, 2], 4));
}

#[test]
fn appendix_g_cases_exact_for_rational_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 1..=4 {
        for sign in [Sign::Plus, Sign::Minus] {
            for _ in 0..25 {
                let beta = rational_beta(&mut rng, case);
                let d = appendix_identity(case, sign, Some(&beta)).unwrap();
                assert!(d.is_exact(), "case {case} {sign:?} beta {beta:?}");
            }
        }
    }
    // irrational roots are refused in exact mode
    assert!(appendix_identity(4, Sign::Plus, Some(&[q(2, 1), q(1, 1)])).is_err());
}

#[test]
fn definition_built_forms_pass_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 3;
    let offs: Vec<MultiIndex> = enumerate_offdiagonal(n, 4).unwrap();
    for _ in 0..10 {
        let diag = |rng: &mut ChaCha8Rng| -> Poly<f64> {
            let terms = (0..n).map(|j| {
                let mut e = vec![0u32; n];
                e[j] = 4;
                (e, rng.gen_range(0.1..1.0))
            });
            Poly::from_terms(4, n, terms.collect::<Vec<_>>()).unwrap()
        };
        let mut pf = diag(&mut rng);
        let mut pg = diag(&mut rng);
        for idx in &offs {
            if rng.gen_bool(0.5) {
                let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
                let f: Poly<f64> = basis_f(idx, sign, n).unwrap();
                pf = pf.add(&f.scale(&rng.gen_range(0.0..2.0))).unwrap();
                let beta: Vec<f64> = (0..idx.tight_pair().len()).map(|_| rng.gen_range(0.1..5.0)).collect();
                let g = basis_g(idx, sign, &beta, n).unwrap();
                pg = pg.add(&g.scale(&rng.gen_range(0.0..2.0))).unwrap();
            }
        }
        assert!(is_ddth(&pf).unwrap());
        assert_eq!(is_gddth(&pf, &cfg()).unwrap().kind, VerdictKind::Member);
        assert_eq!(is_gddth(&pg, &cfg()).unwrap().kind, VerdictKind::Member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_entries_roundtrip(seed in any::<u64>(), m in 1usize..6, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<(Vec<usize>, f64)> = htensor::index::enumerate_all(n, m)
            .into_iter()
            .map(|i| (i.into(), rng.gen_range(-64i32..64) as f64 / 8.0))
            .collect();
        let a = SymmetricTensor::from_entries(m, n, entries).unwrap();
        prop_assert_eq!(tensor_from_poly(&poly_from_tensor(&a)).unwrap(), a);
    }

    #[test]
    fn poly_matches_dense_evaluation(seed in any::<u64>(), m in 2usize..5, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_tensor(&mut rng, m, n, 0.8);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = poly_from_tensor(&a).evaluate(&x).unwrap();
        prop_assert!((p - dense_evaluate(&a, &x)).abs() <= 1e-10 * (1.0 + p.abs()));
    }

    #[test]
    fn float_g_identities(case in 1u8..5, plus in any::<bool>(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = case_index(case).unwrap().tight_pair().len();
        let beta: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let d = appendix_identity(case, sign, Some(&beta)).unwrap();
        prop_assert!(d.relative_error() <= 1e-10);
    }

    #[test]
    fn ddth_lp_matches_closed_form(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, 4, n);
        let dd = lower_bound_ddth(&a).unwrap();
        let lp = lower_bound_ddth_lp(&a, &cfg()).unwrap();
        prop_assert!((lp - dd).abs() <= 1e-8 * (1.0 + dd.abs()));
    }
}
