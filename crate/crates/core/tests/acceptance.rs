//! Acceptance suite. Runs each criterion in turn, prints one pass/fail line
//! per criterion and exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use chiralis::complex::{
    check_quotient_invariance, check_weight_homogeneity, d_squared_check, homology, ComplexData, HomologyResult,
    WeightIndex,
};
use chiralis::contragredient::{check_fhl, duality_sides, DualModule};
use chiralis::ext::{
    build_extension, coboundary, is_shear_isomorphism, pairing_matrix, psi_from_extension, psi_on_basis,
    solve_ext1, xi_from_psi, CocycleXi, ExtContext, ExtOptions, GradedMap, Retraction,
};
use chiralis::jobs::{self, AlgebraKind, CapsConfig, Command, JobConfig};
use chiralis::laurent::RationalSection;
use chiralis::linalg::SparseVec;
use chiralis::vertex::axioms::{axiom_check_algebra, axiom_check_module, check_borcherds, AxiomKind};
use chiralis::vertex::{fock_module, heisenberg_va, trivial_va};
use chiralis::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn s(text: &str) -> Scalar {
    text.parse().unwrap()
}

fn lambdas() -> Vec<Scalar> {
    ["0", "1", "1/2", "-2"].iter().map(|x| s(x)).collect()
}

fn axiom_suite() -> Outcome {
    let v = heisenberg_va(4).map_err(e)?;
    let mut checked = 0;
    for kind in AxiomKind::ALL {
        let r = axiom_check_algebra(&v, kind, 3).map_err(e)?;
        ensure!(r.passed(), "algebra {kind:?}: {:?}", r.violations.first());
        checked += r.checked;
        for lambda in lambdas() {
            let m = fock_module(&v, &lambda, 4).map_err(e)?;
            let r = axiom_check_module(&m, kind, 3).map_err(e)?;
            ensure!(r.passed(), "F_{lambda} {kind:?}: {:?}", r.violations.first());
            checked += r.checked;
        }
    }
    let mut bad = (*v).clone();
    let b = v.basis_index("b-1").map_err(e)?;
    bad.modes.insert(b, 1, b, SparseVec::unit(v.vacuum).scaled(&Scalar::from_int(2)));
    let r = check_borcherds(&Arc::new(bad).adjoint(), 3).map_err(e)?;
    ensure!(!r.violations.is_empty(), "perturbed b_(1)b not detected");
    Ok(format!("{checked} instances pass; perturbation caught by {} violations", r.violations.len()))
}

fn duality_suite() -> Outcome {
    let v = heisenberg_va(4).map_err(e)?;
    for a in 0..v.dim() {
        ensure!(check_fhl(&v, &SparseVec::unit(a)), "FHL fails on {}", v.space.label(a));
    }
    let mut checked = 0;
    for lambda in lambdas() {
        let f = fock_module(&v, &lambda, 4).map_err(e)?;
        let dual = DualModule::new(f.clone());
        for n in -5..=5 {
            let g = RationalSection::var_power(1, 0, n);
            for a in 0..v.dim() {
                for phi in 0..f.dim() {
                    for m in 0..f.dim() {
                        let (l, r) = duality_sides(&dual, &g, a, phi, m).map_err(e)?;
                        ensure!(l == r, "F_{lambda}, z^{n}, a={}: {l} != {r}", v.space.label(a));
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("FHL on {} vectors; duality on {checked} instances", v.dim()))
}

fn complex_suite() -> Outcome {
    let (_, t) = trivial_va();
    let v = heisenberg_va(2).map_err(e)?;
    let f0 = fock_module(&v, &Scalar::zero(), 2).map_err(e)?;
    let cases = [
        ("trivial", ComplexData::new(t.clone(), t).map_err(e)?),
        ("heisenberg F0/F0", ComplexData::new(f0.clone(), f0).map_err(e)?),
    ];
    let mut summary = Vec::new();
    for (name, cx) in &cases {
        let idx = WeightIndex { weight: 0, caps: cx.caps((-4, 4), 2) };
        for n in 2..=3 {
            let r = d_squared_check(cx, n, &idx, None).map_err(e)?;
            ensure!(r.passed(), "{name}: d∘d fails from degree {n}: {:?}", r.failures.first());
            ensure!(r.checked > 0, "{name}: no chains checked in degree {n}");
            summary.push(format!("{name} n={n}: {}/{} checked", r.checked, r.checked + r.skipped));
        }
        for n in 1..=3 {
            let h = check_weight_homogeneity(cx, n, &idx).map_err(e)?;
            ensure!(h.passed(), "{name}: d_{n} not homogeneous: {:?}", h.failures.first());
            let q = check_quotient_invariance(cx, n, &idx).map_err(e)?;
            ensure!(q.passed(), "{name}: d_{n} does not descend: {:?}", q.failures.first());
        }
    }
    Ok(summary.join("; "))
}

fn heisenberg_complex(la: &Scalar, lc: &Scalar, n: i64) -> Result<ComplexData, String> {
    let v = heisenberg_va(2).map_err(e)?;
    ComplexData::new(fock_module(&v, la, n).map_err(e)?, fock_module(&v, lc, n).map_err(e)?).map_err(e)
}

fn known_values() -> Outcome {
    let (_, t) = trivial_va();
    let cx = ComplexData::new(t.clone(), t).map_err(e)?;
    let h = homology(&cx, &WeightIndex { weight: 0, caps: cx.caps((-3, 3), 2) }).map_err(e)?;
    ensure!((h.dim_h0, h.dim_h1) == (1, 0), "trivial: H0={} H1={}", h.dim_h0, h.dim_h1);
    for mu in ["1", "1/2", "-2"] {
        let cx = heisenberg_complex(&Scalar::zero(), &s(mu), 3)?;
        let caps = cx.caps((-5, 5), 2);
        let h = homology(&cx, &WeightIndex { weight: 0, caps }).map_err(e)?;
        let ext = solve_ext1(&ExtContext::from_complex(&cx).map_err(e)?, &caps, &ExtOptions::default()).map_err(e)?;
        ensure!(
            (h.dim_h0, h.dim_h1, ext.dim) == (0, 0, 0),
            "F0/F{mu}: H0={} H1={} Ext1={}",
            h.dim_h0,
            h.dim_h1,
            ext.dim
        );
    }
    Ok("trivial H0=1 H1=0; F0/Fμ (μ=1,1/2,-2) H0=H1=Ext1=0".into())
}

fn certificate() -> Outcome {
    let mut summary = Vec::new();
    for lambda in [Scalar::zero(), Scalar::new(1, 2)] {
        let cx = heisenberg_complex(&lambda, &lambda, 3)?;
        let caps = cx.caps((-5, 5), 2);
        let hom = homology(&cx, &WeightIndex { weight: 0, caps }).map_err(e)?;
        let ctx = ExtContext::from_complex(&cx).map_err(e)?;
        let ext = solve_ext1(&ctx, &caps, &ExtOptions::default()).map_err(e)?;
        let p = pairing_matrix(&ctx, &ext, &hom).map_err(e)?;
        ensure!(
            p.certificate,
            "F{lambda}: dim Ext1={} dim H1={} rank={}",
            ext.dim,
            hom.dim_h1,
            p.rank
        );
        let j = ctx.jordan_block().map_err(e)?;
        ensure!(!ext.is_coboundary(&ctx, &j), "F{lambda}: Jordan cocycle is a coboundary");
        let b = build_extension(&ctx, &j, 3).map_err(e)?;
        ensure!(
            !psi_from_extension(&b, &GradedMap::new(), &hom).map_err(e)?.is_zero(),
            "F{lambda}: Jordan extension pairs to zero"
        );
        summary.push(format!("F{lambda}: Ext1=H1=rank={}", p.rank));
    }
    Ok(summary.join("; ") + "; Jordan class nontrivial")
}

fn random_section(ctx: &ExtContext, seed: u64) -> Result<GradedMap, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = GradedMap::new();
    for c in 0..ctx.c.dim() {
        let image: SparseVec =
            ctx.a.space.range_at(ctx.c.degree(c)).map(|x| (x, Scalar::from_int(rng.gen_range(-3..=3)))).collect();
        map.set(ctx, c, image).map_err(e)?;
    }
    Ok(map)
}

fn mechanics_for(lambda: &Scalar, hom: &HomologyResult, ctx: &Arc<ExtContext>) -> Outcome {
    let det = &hom.details;
    let ext = solve_ext1(ctx, &hom.caps, &ExtOptions::default()).map_err(e)?;
    let j = ctx.jordan_block().map_err(e)?;
    let b = build_extension(ctx, &j, 3).map_err(e)?;
    let p1 = psi_on_basis(&b, &random_section(ctx, 11)?, &det.c1_basis).map_err(e)?;
    let p2 = psi_on_basis(&b, &random_section(ctx, 12)?, &det.c1_basis).map_err(e)?;
    ensure!(p1 != p2, "F{lambda}: the two sections give the same slice functional");
    for psi in [&p1, &p2] {
        ensure!(det.translations.iter().all(|t| psi.dot(t).is_zero()), "F{lambda}: ψ̃ nonzero on a translate");
        ensure!(det.exact_boundaries.iter().all(|x| psi.dot(x).is_zero()), "F{lambda}: ψ̃ nonzero on im d2");
    }
    ensure!(det.kernel.iter().all(|k| p1.dot(k) == p2.dot(k)), "F{lambda}: ψ̃ depends on the section on ker d1");

    let psi = psi_from_extension(&b, &GradedMap::new(), hom).map_err(e)?;
    for r in [Retraction::pivot(hom), Retraction::reversed(hom)] {
        let xi = xi_from_psi(ctx, hom, &psi, &r).map_err(e)?;
        let b2 = build_extension(ctx, &xi, 3).map_err(e)?;
        ensure!(ext.same_class(ctx, &xi.generator_part(&ctx.alg), &j), "F{lambda}: ξ(ψ(B)) left the class of B");
        ensure!(psi_from_extension(&b2, &GradedMap::new(), hom).map_err(e)? == psi, "F{lambda}: ψ(B(ψ)) != ψ");
    }

    let direct = build_extension(ctx, &CocycleXi::zero(), 3).map_err(e)?;
    for seed in [21, 22] {
        let eta = random_section(ctx, seed)?;
        let bc = build_extension(ctx, &coboundary(ctx, &eta), 3).map_err(e)?;
        ensure!(is_shear_isomorphism(&bc, &direct, &eta), "F{lambda}: coboundary extension does not split");
    }
    Ok(format!(
        "F{lambda}: {} translates, {} boundaries, {} kernel vectors",
        det.translations.len(),
        det.exact_boundaries.len(),
        det.kernel.len()
    ))
}

fn proof_mechanics() -> Outcome {
    let mut summary = Vec::new();
    for lambda in [Scalar::zero(), Scalar::new(1, 2)] {
        let cx = heisenberg_complex(&lambda, &lambda, 3)?;
        let hom = homology(&cx, &WeightIndex { weight: 0, caps: cx.caps((-5, 5), 2) }).map_err(e)?;
        summary.push(mechanics_for(&lambda, &hom, &ExtContext::from_complex(&cx).map_err(e)?)?);
    }
    Ok(summary.join("; "))
}

fn stabilization() -> Outcome {
    let mut summary = Vec::new();
    let configs = [
        (AlgebraKind::Trivial, "0", "0"),
        (AlgebraKind::Heisenberg, "0", "1"),
        (AlgebraKind::Heisenberg, "0", "0"),
        (AlgebraKind::Heisenberg, "1/2", "1/2"),
    ];
    for (algebra, la, lc) in configs {
        let cfg = JobConfig {
            algebra,
            lambda_a: s(la),
            lambda_c: s(lc),
            caps: CapsConfig { d: 2, n: 3, window_lo: -5, window_hi: 5, q: 2 },
            ..JobConfig::default()
        };
        let report = jobs::run(Command::Stabilize, &cfg).map_err(e)?;
        let st = &report.results["stabilize"];
        let runs = st["runs"].as_array().ok_or("stabilize report has no runs")?;
        let name = format!("{algebra:?}({la},{lc})");
        ensure!(st["stable"] == true, "{name}: dimensions move under bumped caps: {runs:?}");
        ensure!(st["zoneClean"] == true, "{name}: leakage inside the leakage-free zone: {runs:?}");
        let h1 = &runs[0]["dimH1"];
        if la != lc {
            ensure!(*h1 == 0, "{name}: H1={h1}, expected 0 for non-isomorphic Fock modules");
        }
        if algebra == AlgebraKind::Trivial {
            ensure!(*h1 == 0, "{name}: H1={h1}, expected 0");
        }
        summary.push(format!("{name} H1={h1}"));
    }
    Ok(summary.join("; ") + "; all stable with zero zone leakage")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("axiom suite", axiom_suite),
        ("duality suite", duality_suite),
        ("complex suite", complex_suite),
        ("known-value homology", known_values),
        ("Ext/H1 pairing certificate", certificate),
        ("proof mechanics", proof_mechanics),
        ("stabilization", stabilization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
