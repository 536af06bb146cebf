use chiralis::complex::{
    check_quotient_invariance, check_weight_homogeneity, d_squared_check, homology, Chain, ComplexData,
    DifferentialPart, Term, TranslationSpan, WeightIndex,
};
use chiralis::laurent::MonomialKey;
use chiralis::linalg::SparseVec;
use chiralis::vertex::{fock_module, heisenberg_va, trivial_va, ModuleData};
use chiralis::Scalar;
use proptest::prelude::*;

fn trivial() -> ComplexData {
    let (_, m) = trivial_va();
    ComplexData::new(m.clone(), m).unwrap()
}

fn heisenberg(la: Scalar, lc: Scalar, d: i64, n: i64) -> ComplexData {
    let v = heisenberg_va(d).unwrap();
    let a: ModuleData = fock_module(&v, &la, n).unwrap();
    let c = fock_module(&v, &lc, n).unwrap();
    ComplexData::new(a, c).unwrap()
}

#[test]
fn trivial_window_has_one_translation_class() {
    // z^m 1⊗v*⊗v has weight -1-m, so the window [-3,3] spreads over weights -4..=2
    let cx = trivial();
    let caps = cx.caps((-3, 3), 2);
    let mut total = 0;
    let mut quotient = 0;
    for w in -4..=2 {
        let basis = cx.enumerate_basis(1, w, &caps).unwrap();
        let span = TranslationSpan::new(&cx, 1, w, &caps.bumped()).unwrap();
        total += basis.len();
        quotient += basis.len() - span.restricted_to(&basis).len();
    }
    assert_eq!((total, quotient), (7, 1));
    // z^{-1} 1⊗v*⊗v is the one term no translate reaches
    let rep = Chain::from_term(Term { key: MonomialKey::power(-1), labels: vec![0], phi: 0, c: 0 });
    assert!(!TranslationSpan::new(&cx, 1, 0, &caps.bumped()).unwrap().contains(&rep));
    let other = cx.parse_chain("1*z1^2|1|v*|v", 1).unwrap();
    assert!(TranslationSpan::new(&cx, 1, -3, &caps.bumped()).unwrap().contains(&other));
}

#[test]
fn slices_below_the_lowest_weight_are_empty() {
    let cx = heisenberg(Scalar::zero(), Scalar::zero(), 2, 2);
    let caps = cx.caps((-4, 4), 2);
    for n in 1..=2 {
        // weight >= -n - n*window_hi - N_A
        let lowest = -(n as i64) * (caps.window.1 + 1) - caps.n_a;
        assert!(cx.enumerate_basis(n, lowest - 1, &caps).unwrap().is_empty());
        assert!(!cx.enumerate_basis(n, lowest, &caps).unwrap().is_empty());
    }
}

#[test]
fn heisenberg_degree_one_slice_matches_direct_count() {
    let cx = heisenberg(Scalar::zero(), Scalar::new(1, 2), 2, 2);
    let caps = cx.caps((-4, 4), 2);
    let mut count = 0;
    for a in 0..cx.alg.dim() {
        for phi in 0..cx.a.dim() {
            for c in 0..cx.c.dim() {
                let m = cx.alg.degree(a) - 1 - cx.a.degree(phi) + cx.c.degree(c);
                if (-4..=4).contains(&m) {
                    count += 1;
                }
            }
        }
    }
    assert_eq!(cx.enumerate_basis(1, 0, &caps).unwrap().len(), count);
}

#[test]
fn d1_is_action_on_c_minus_action_on_dual() {
    // d1(z^m a⊗φ⊗c) = φ⊗a_(m)c − φ∘a_(m)⊗c, read off in C_0 = A∨ ⊗ C
    let cx = heisenberg(Scalar::new(1, 2), Scalar::new(1, 2), 2, 3);
    let caps = cx.caps((-5, 5), 2);
    for t in cx.enumerate_basis(1, 0, &caps).unwrap() {
        let m = cx.parse_chain(&cx.format_chain(&Chain::from_term(t.clone())), 1).unwrap();
        assert_eq!(m, Chain::from_term(t.clone()));
        let d = cx.differential(&m).unwrap();
        if !d.is_exact() {
            continue;
        }
        let e = match t.key.factors()[0] {
            chiralis::laurent::Factor::Pow(e) => e,
            _ => unreachable!(),
        };
        let a = SparseVec::unit(t.labels[0]);
        let ac = cx.c.mode_apply(&a, e, &SparseVec::unit(t.c));
        for x in cx.enumerate_basis(0, 0, &caps).unwrap() {
            // (φ∘a_(m))(x.phi) = φ(a_(m) x.phi)
            let phi_a = cx.a.mode_apply(&a, e, &SparseVec::unit(x.phi)).get(t.phi);
            let mut expect = Scalar::zero();
            if x.phi == t.phi {
                expect += ac.get(x.c);
            }
            if x.c == t.c {
                expect -= &phi_a;
            }
            assert_eq!(d.chain.coeff(&x), expect, "{}", cx.format_chain(&m));
        }
    }
}

#[test]
fn d2_on_the_trivial_algebra() {
    // signed residue at infinity: collision −1, infinity in z1 +1, zero in z2 +1
    let cx = trivial();
    let x = cx.parse_chain("1*z2^-1*(z1-z2)^-1|1,1|v*|v", 2).unwrap();
    let d = cx.differential(&x).unwrap();
    assert!(d.is_exact());
    assert_eq!(d.chain, cx.parse_chain("1*z1^-1|1|v*|v", 1).unwrap());
    let part = |p| cx.differential_part(&x, p).unwrap().chain;
    let rep = cx.parse_chain("1*z1^-1|1|v*|v", 1).unwrap();
    assert_eq!(part(DifferentialPart::Collision(0, 1)), rep);
    assert_eq!(part(DifferentialPart::AtZero(0)), Chain::new());
    assert_eq!(part(DifferentialPart::AtInfinity(0)), rep.scaled(&-Scalar::one()));
    assert_eq!(part(DifferentialPart::AtZero(1)), rep);
    assert_eq!(part(DifferentialPart::AtInfinity(1)), Chain::new());
    assert!(cx.differential(&d.chain).unwrap().chain.is_zero());
}

#[test]
fn known_homology_values() {
    let cx = trivial();
    let h = homology(&cx, &WeightIndex { weight: 0, caps: cx.caps((-3, 3), 2) }).unwrap();
    assert_eq!((h.dim_h0, h.dim_h1, h.leakage), (1, 0, 0));

    let cx = heisenberg(Scalar::zero(), Scalar::one(), 2, 2);
    let h = homology(&cx, &WeightIndex { weight: 0, caps: cx.caps((-4, 4), 2) }).unwrap();
    assert_eq!((h.dim_h0, h.dim_h1, h.zone_leakage), (0, 0, 0));

    let cx = heisenberg(Scalar::zero(), Scalar::zero(), 2, 2);
    let h = homology(&cx, &WeightIndex { weight: 0, caps: cx.caps((-4, 4), 2) }).unwrap();
    assert_eq!((h.dim_h0, h.dim_h1, h.zone_leakage), (1, 1, 0));
    assert_eq!(h.cycles.len(), 1);
    let z = cx.parse_chain(&h.cycles[0], 1).unwrap();
    assert_eq!(z, h.cycle_chains[0]);
    assert!(cx.differential(&z).unwrap().chain.is_zero());
}

#[test]
fn d_squared_vanishes_on_trivial_slices() {
    let cx = trivial();
    let idx = WeightIndex { weight: 0, caps: cx.caps((-3, 3), 2) };
    for n in 2..=3 {
        let r = d_squared_check(&cx, n, &idx, None).unwrap();
        assert!(r.passed() && r.checked > 0 && r.skipped == 0, "{r:?}");
    }
}

#[test]
fn d1_d2_vanishes_on_heisenberg_slice() {
    let cx = heisenberg(Scalar::zero(), Scalar::zero(), 2, 2);
    let idx = WeightIndex { weight: 0, caps: cx.caps((-4, 4), 2) };
    let r = d_squared_check(&cx, 2, &idx, None).unwrap();
    assert!(r.passed() && r.checked > 500, "{r:?}");
}

#[test]
fn d2_d3_vanishes_on_sampled_heisenberg_chains() {
    let cx = heisenberg(Scalar::zero(), Scalar::zero(), 2, 2);
    let idx = WeightIndex { weight: 0, caps: cx.caps((-4, 4), 2) };
    let r = d_squared_check(&cx, 3, &idx, Some(3000)).unwrap();
    assert!(r.passed() && r.checked > 100, "{r:?}");
}

#[test]
fn differentials_are_homogeneous_and_descend() {
    let cx = heisenberg(Scalar::new(1, 2), Scalar::new(1, 2), 2, 2);
    let idx = WeightIndex { weight: 0, caps: cx.caps((-3, 3), 2) };
    for n in 1..=2 {
        assert!(check_weight_homogeneity(&cx, n, &idx).unwrap().passed());
        assert!(check_quotient_invariance(&cx, n, &idx).unwrap().passed());
    }
}

#[test]
fn homology_is_stable_under_bumped_caps() {
    let cx = heisenberg(Scalar::zero(), Scalar::zero(), 2, 2);
    let caps = cx.caps((-4, 4), 2);
    let h = homology(&cx, &WeightIndex { weight: 0, caps }).unwrap();
    let b = caps.bumped();
    let cx2 = heisenberg(Scalar::zero(), Scalar::zero(), 2, b.n_a);
    let h2 = homology(&cx2, &WeightIndex { weight: 0, caps: b }).unwrap();
    assert_eq!((h.dim_h0, h.dim_h1), (h2.dim_h0, h2.dim_h1));
    assert_eq!(h2.zone_leakage, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_raises_weight_by_one(pick in 0usize..10_000) {
        let cx = heisenberg(Scalar::zero(), Scalar::new(1, 2), 2, 2);
        let caps = cx.caps((-3, 3), 2);
        let basis = cx.enumerate_basis(2, 0, &caps).unwrap();
        let t = &basis[pick % basis.len()];
        let x = Chain::from_term(t.clone());
        for i in 0..2 {
            let y = cx.translate(i, &x).unwrap();
            for (s, _) in y.chain.terms() {
                prop_assert_eq!(cx.weight(s), 1);
            }
        }
        for (s, _) in cx.differential(&x).unwrap().chain.terms() {
            prop_assert_eq!(cx.weight(s), 0);
        }
    }

    #[test]
    fn chain_text_round_trips(pick in 0usize..10_000, coef in -20i64..20) {
        let cx = heisenberg(Scalar::new(1, 2), Scalar::zero(), 2, 2);
        let caps = cx.caps((-3, 3), 2);
        let basis = cx.enumerate_basis(2, 0, &caps).unwrap();
        let mut x = Chain::new();
        x.add_term(basis[pick % basis.len()].clone(), Scalar::from_int(coef));
        x.add_term(basis[(pick * 7 + 3) % basis.len()].clone(), Scalar::new(1, 3));
        let text = cx.format_chain(&x);
        prop_assert_eq!(cx.parse_chain(&text, 2).unwrap(), x);
    }
}
