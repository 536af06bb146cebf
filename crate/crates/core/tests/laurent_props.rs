use chiralis::laurent::{expansion_bounds, mode_decompose, Location, MonomialKey, RationalSection};
use chiralis::Scalar;
use proptest::prelude::*;

fn raw_monomial(n: usize) -> impl Strategy<Value = (Vec<i64>, Vec<((usize, usize), i64)>, i64)> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    (
        prop::collection::vec(-3i64..=3, n),
        prop::collection::vec(-3i64..=2, pairs.len()),
        -4i64..=4,
    )
        .prop_map(move |(exps, diag, c)| {
            let diffs = pairs.iter().copied().zip(diag).collect();
            (exps, diffs, c)
        })
}

fn section(n: usize) -> impl Strategy<Value = RationalSection> {
    prop::collection::vec(raw_monomial(n), 1..4).prop_map(move |terms| {
        let mut s = RationalSection::zero(n);
        for (exps, diffs, c) in terms {
            s.add_scaled(&RationalSection::general_monomial(n, &exps, &diffs), &Scalar::from_int(c));
        }
        s
    })
}

fn sample_points(n: usize) -> Vec<Vec<Scalar>> {
    let base = [Scalar::new(2, 1), Scalar::new(-3, 5), Scalar::new(7, 3), Scalar::new(5, 11), Scalar::new(-13, 4)];
    (0..3)
        .map(|shift| (0..n).map(|i| base[(i + shift) % base.len()].clone()).collect())
        .collect()
}

/// Evaluates the raw, uncanonicalized monomial directly.
fn eval_raw(exps: &[i64], diffs: &[((usize, usize), i64)], x: &[Scalar]) -> Scalar {
    let mut v = Scalar::one();
    for (i, e) in exps.iter().enumerate() {
        v = v * x[i].pow(*e as i32);
    }
    for ((i, j), e) in diffs {
        v = v * (&x[*i] - &x[*j]).pow(*e as i32);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Canonical form is sound: the canonical expansion of a raw monomial
    // agrees with the raw rational function, i.e. the cleared numerator of
    // their difference vanishes at generic points.
    #[test]
    fn canonicalization_preserves_values((exps, diffs, _) in raw_monomial(3)) {
        let f = RationalSection::general_monomial(3, &exps, &diffs);
        for x in sample_points(3) {
            prop_assert_eq!(f.evaluate(&x).unwrap(), eval_raw(&exps, &diffs, &x));
        }
    }

    #[test]
    fn product_matches_pointwise_product(f in section(2), g in section(2)) {
        let fg = &f * &g;
        for x in sample_points(2) {
            prop_assert_eq!(fg.evaluate(&x).unwrap(), f.evaluate(&x).unwrap() * g.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn product_is_commutative_and_associative_in_three_points(f in section(3), g in section(3), h in section(3)) {
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
    }

    #[test]
    fn leibniz(f in section(3), g in section(3), i in 0usize..3) {
        let lhs = (&f * &g).derive(i).unwrap();
        let rhs = &(&f.derive(i).unwrap() * &g) + &(&f * &g.derive(i).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_round_trip(f in section(3)) {
        prop_assert_eq!(RationalSection::parse(&f.to_string(), 3).unwrap(), f);
    }

    // Multiplying by (z1-z2)^k shifts the diagonal expansion by k.
    #[test]
    fn diagonal_shift(f in section(2), k in -3i64..=3) {
        let g = &f * &RationalSection::diff_power(2, 0, 1, k);
        let lo = -12;
        let hi = 6;
        let df = mode_decompose(&f, 0, Location::Diagonal(1), (lo - 3, hi + 3)).unwrap();
        let dg = mode_decompose(&g, 0, Location::Diagonal(1), (lo, hi)).unwrap();
        for m in lo..=hi {
            prop_assert_eq!(dg.get(m), df.get(m - k));
        }
    }

    #[test]
    fn laurent_polynomials_expand_identically_at_zero_and_infinity(
        terms in prop::collection::vec((-3i64..=3, -3i64..=3, -3i64..=3), 1..5)
    ) {
        let mut f = RationalSection::zero(2);
        for (a, b, c) in terms {
            f.add_term(MonomialKey::new(&[chiralis::laurent::Factor::Pow(a), chiralis::laurent::Factor::Pow(b)]), Scalar::from_int(c));
        }
        let z = mode_decompose(&f, 0, Location::AtZero, (-4, 4)).unwrap();
        let w = mode_decompose(&f, 0, Location::AtInfinity, (-4, 4)).unwrap();
        prop_assert_eq!(&z.entries, &w.entries);
        prop_assert!(!z.discarded);
    }

    #[test]
    fn no_modes_below_the_lowest_exponent(f in section(2)) {
        prop_assume!(!f.is_zero());
        let (lo, _) = expansion_bounds(&f, 0, Location::AtZero);
        let lo = lo.unwrap();
        let d = mode_decompose(&f, 0, Location::AtZero, (lo - 5, lo + 5)).unwrap();
        prop_assert!(d.entries.iter().all(|(m, _)| *m >= lo));
    }
}

// Series oracle for the expansion at zero: the coefficient of z1^m of
// (z1-z2)^-q is (-1)^q C(q+m-1, m) z2^{-q-m}.
#[test]
fn pole_expansions_match_binomial_series() {
    for q in 1..=3i64 {
        let f = RationalSection::diff_power(2, 0, 1, -q);
        let d = mode_decompose(&f, 0, Location::AtZero, (0, 5)).unwrap();
        for m in 0..=5 {
            let want = RationalSection::var_power(1, 0, -q - m)
                .scaled(&(Scalar::sign(q) * chiralis::scalar::binomial(q + m - 1, m)));
            assert_eq!(d.get(m), Some(&want));
        }
        let d = mode_decompose(&f, 0, Location::AtInfinity, (-8, 0)).unwrap();
        for k in 0..=(8 - q) {
            let want = RationalSection::var_power(1, 0, k).scaled(&chiralis::scalar::binomial(q + k - 1, k));
            assert_eq!(d.get(-q - k), Some(&want));
        }
    }
}

// Expanding z2 around z3 in a three-point section and summing the series at
// a small offset must reproduce the exact value up to the truncation error.
#[test]
fn three_point_diagonal_expansion_reassembles() {
    let f = RationalSection::parse("(z1-z2)^-1*(z2-z3)^-2*z3", 3).unwrap();
    let d = mode_decompose(&f, 1, Location::Diagonal(2), (-2, 30)).unwrap();
    let z1 = Scalar::new(5, 1);
    let z3 = Scalar::new(3, 1);
    let w = Scalar::new(1, 1000);
    let mut approx = Scalar::zero();
    for (m, c) in &d.entries {
        approx += c.evaluate(&[z1.clone(), z3.clone()]).unwrap() * w.pow(*m as i32);
    }
    let exact = f.evaluate(&[z1, &z3 + &w, z3]).unwrap();
    let err = (exact - approx).abs();
    assert!(err < Scalar::new(1, 10i64.pow(15)), "series truncation error too large: {err}");
}
