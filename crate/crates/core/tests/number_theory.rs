use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use systole::interval::Round;
use systole::number_theory::*;
use systole::Dyadic;

// Reference values computed independently with mpmath at 4000 digits.
const TARGET_A: [u64; 40] = [
    1, 6, 16, 27, 39, 52, 65, 78, 92, 107, 121, 136, 152, 168, 184, 200, 217, 234, 252, 270, 288,
    306, 325, 344, 363, 383, 402, 422, 443, 463, 484, 505, 526, 548, 569, 591, 613, 636, 658, 681,
];
const TARGET_Q: [u64; 12] = [
    1,
    1,
    7,
    113,
    3058,
    119375,
    6210558,
    403805645,
    31503050868,
    2898684485501,
    310190742999475,
    37535978587421976,
];
const TARGET_S1: f64 = 0.301520737842896604053553645175;
const TARGET_S2: f64 = 0.0183291148035505343286564818623;
// (k, mantissa, decimal exponent) of beta_k
const TARGET_BETA: [(usize, f64, i32); 9] = [
    (0, 8.584_041_884_803_27, -1),
    (1, 1.415_958_115_196_730_4, -1),
    (2, 8.829_319_362_288_755, -3),
    (3, 3.267_017_230_529_394_7, -4),
    (5, 1.609_685_367_047_994_3, -7),
    (10, 2.663_948_778_864_933_4, -17),
    (50, 2.758_060_135_574_104, -123),
    (100, 2.508_390_819_941_698, -283),
    (200, 3.411_768_319_134_71, -643),
];

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    ((a - b) / b).abs() < tol
}

#[test]
fn quotients_match_reference() {
    let a = expand_partial_quotients(&AlphaSpec::paper(), 40).unwrap();
    assert_eq!(a, TARGET_A.to_vec());
    assert_eq!(&a[..5], &[1, 6, 16, 27, 39]);
}

#[test]
fn table_matches_reference() {
    let t = build_table(&AlphaSpec::paper(), 210, &TableOptions::default()).unwrap();
    for (k, q) in TARGET_Q.iter().enumerate() {
        assert_eq!(t.q(k), &BigInt::from(*q), "q_{k}");
    }
    for (k, m, e) in TARGET_BETA {
        let enc = t.beta(k);
        // ln of the enclosure must contain ln of the reference within f64 noise
        let l = enc.ln();
        let lb = m.ln() + e as f64 * 10f64.ln();
        assert!(
            l.lo - 1e-12 <= lb && lb <= l.hi + 1e-12,
            "beta_{k}: {enc} vs {m}e{e}"
        );
        assert!(
            !enc.width().is_zero() && enc.rel_width() <= 2f64.powi(-64),
            "beta_{k} width"
        );
    }
}

#[test]
fn slit_sums_match_reference() {
    let t = build_table(&AlphaSpec::paper(), 60, &TableOptions::default()).unwrap();
    let s1 = slit_tail_sum(&t, 1).unwrap();
    assert!(rel_close(s1.mid_f64(), TARGET_S1, 1e-14));
    assert!(s1.hi() < &Dyadic::from_int(1), "S_1 < 1");
    let s2 = slit_tail_sum(&t, 2).unwrap();
    assert!(rel_close(s2.mid_f64(), TARGET_S2, 1e-14));
    let (lo, hi) = slit_sum_comparison(&t, 2);
    assert!(lo.hi() < s2.lo(), "termwise lower comparison");
    let tail = t.beta_tail_bound().mul_pow2(1);
    assert!(s2.hi() < &hi.hi().add(&tail), "termwise upper comparison");
}

#[test]
fn golden_table() {
    let t = build_table(&AlphaSpec::golden(), 30, &TableOptions::default()).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    for k in 0..30 {
        // beta_k = phi^{-(k+1)}
        let expect = -(k as f64 + 1.0) * phi.ln();
        assert!((t.beta(k).ln().mid() - expect).abs() < 1e-12, "k={k}");
        assert!(check_good_bound(&t, k).unwrap().holds);
    }
    let v = veech_sum(&AlphaSpec::golden(), &t, 1e-3);
    assert_eq!(v.verdict, VeechVerdict::BoundDiverges);
}

#[test]
fn veech_sum_is_summable() {
    let t = build_table(&AlphaSpec::paper(), 120, &TableOptions::default()).unwrap();
    let v = veech_sum(&AlphaSpec::paper(), &t, 1e-3);
    assert!(v.terms_bounded);
    match v.verdict {
        VeechVerdict::Summable {
            tail_bound, log2_k, ..
        } => {
            assert!(tail_bound < 1e-3);
            // the tail bound is 2/ln(K+1); check it at the explicit K directly
            let ln_k = log2_k as f64 * std::f64::consts::LN_2;
            assert!(2.0 / ln_k < 1e-3);
        }
        other => panic!("unexpected verdict {other:?}"),
    }
    // partial sums increase and stay below the sum of the comparison terms
    for w in v.partial.windows(2) {
        assert!(w[0].lo() < w[1].lo());
    }
    let bound: f64 = (1..=t.depth().min(t.num_quotients() - 1))
        .map(|k| 2.0 / t.a(k + 1) as f64)
        .sum();
    assert!(v.partial.last().unwrap().hi().to_f64() < bound);
}

#[test]
fn rational_rejected_by_surface_but_expanded() {
    assert_eq!(
        expand_partial_quotients(&AlphaSpec::rational(3, 7), 50).unwrap(),
        vec![2, 3]
    );
    let err = build_table(&AlphaSpec::rational(3, 7), 5, &TableOptions::default()).unwrap_err();
    assert!(matches!(
        err,
        NumberTheoryError::InsufficientQuotients { .. }
    ));
}

#[test]
fn zero_quotient_rejected() {
    let spec = AlphaSpec::ExplicitQuotients {
        quotients: vec![2, 0],
        periodic: true,
    };
    assert!(build_table(&spec, 5, &TableOptions::default()).is_err());
}

#[test]
fn precision_ceiling_is_reported() {
    let opts = TableOptions {
        precision: 64,
        max_precision: 64,
        rel_tol_bits: 64,
    };
    let err = build_table(&AlphaSpec::paper(), 100, &opts).unwrap_err();
    assert!(matches!(err, NumberTheoryError::PrecisionExhausted { .. }));
}

/// `min_{0 < i < q_k} ||i alpha||` by enumeration, using the exact surrogate `P/Q`.
fn brute_min_distance(p_big: &BigInt, q_big: &BigInt, limit: u64) -> (u64, u128, u128) {
    let p = p_big.to_u128().unwrap();
    let q = q_big.to_u128().unwrap();
    let mut best = (0u64, u128::MAX);
    for i in 1..limit {
        let r = (i as u128 * p) % q;
        let d = r.min(q - r);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1, q)
}

fn check_separation(spec: &AlphaSpec, ks: &[usize]) {
    let t = build_table(spec, 60, &TableOptions::default()).unwrap();
    // deepest convergent denominator below 2^64 serves as surrogate
    let sur = (0..=t.num_quotients())
        .rev()
        .find(|&j| t.q(j).bits() <= 63)
        .unwrap();
    for &k in ks {
        let qk = t.q(k).to_u64().unwrap();
        assert!(
            t.q(sur).bits() as u64 >= 2 * (64 - qk.leading_zeros() as u64) + 8,
            "surrogate too shallow"
        );
        let (i, d, q) = brute_min_distance(t.p(sur), t.q(sur), qk);
        assert_eq!(BigInt::from(i), t.q(k - 1).clone(), "argmin for k = {k}");
        let approx = d as f64 / q as f64;
        assert!(
            rel_close(approx, t.beta(k - 1).mid_f64(), 1e-9),
            "value for k = {k}"
        );
    }
}

#[test]
fn separation_by_enumeration() {
    check_separation(&AlphaSpec::paper(), &[2, 3, 4, 5, 6]);
    check_separation(&AlphaSpec::golden(), &(2..=12).collect::<Vec<_>>());
    check_separation(&AlphaSpec::periodic(vec![2]), &(2..=12).collect::<Vec<_>>());
    check_separation(
        &AlphaSpec::periodic(vec![1, 3, 1, 7, 2]),
        &(2..=12).collect::<Vec<_>>(),
    );
}

#[test]
fn sci_strings_bracket_reference() {
    let t = build_table(&AlphaSpec::paper(), 20, &TableOptions::default()).unwrap();
    let rows = cf_rows(&t, 12);
    assert_eq!(rows[3].q_k, "113");
    assert_eq!(rows[3].a_k, Some(16));
    let lo: f64 = rows[3].beta_lower.parse().unwrap();
    let hi: f64 = rows[3].beta_upper.parse().unwrap();
    assert!(lo <= 0.000_326_701_723_052_939_45 && 0.000_326_701_723_052_939_45 <= hi);
    assert!(rows.iter().all(|r| r.good_bound_ok == Some(true)));
    assert_eq!(t.beta(3).lo().to_sci_string(6, Round::Down), "3.26701e-4");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn good_bound_holds_for_random_quotients(qs in prop::collection::vec(1u64..60, 1..6), k in 0usize..40) {
        let spec = AlphaSpec::periodic(qs);
        let t = build_table(&spec, 45, &TableOptions::default()).unwrap();
        let g = check_good_bound(&t, k).unwrap();
        prop_assert!(g.holds);
    }

    #[test]
    fn rational_values_inside_enclosures(qs in prop::collection::vec(1u64..30, 8..20)) {
        // a finite expansion is an exact rational; beta_k is exactly |q_k P/Q - p_k|
        let n = qs.len();
        let spec = AlphaSpec::ExplicitQuotients { quotients: qs, periodic: false };
        let k_max = n - 3;
        let t = build_table(&spec, k_max, &TableOptions { rel_tol_bits: 20, ..TableOptions::default() }).unwrap();
        let (p_n, q_n) = (t.p(n).clone(), t.q(n).clone());
        for k in 0..=k_max {
            let num = (t.q(k) * &p_n - t.p(k) * &q_n).abs();
            prop_assert!(t.beta(k).contains_rational(&num, &q_n), "k = {}", k);
        }
    }

    #[test]
    fn tail_sums_are_monotone(qs in prop::collection::vec(1u64..20, 1..4)) {
        let t = build_table_for_tails(&AlphaSpec::periodic(qs), 25, &TableOptions::default()).unwrap();
        let mut prev = slit_tail_sum(&t, 1).unwrap();
        for k in 2..25 {
            let s = slit_tail_sum(&t, k).unwrap();
            prop_assert!(s.hi() < prev.lo());
            prev = s;
        }
    }
}
