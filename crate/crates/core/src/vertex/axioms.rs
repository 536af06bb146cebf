//! Axiom checkers for truncated vertex algebras and modules.
//!
//! The Borcherds identity is checked in residue form: for
//! `f = z1^k z2^l (z1-z2)^p`,
//!
//! `Res_{z2} Res_{z1-z2} f Y(Y(a, z1-z2) b, z2) c
//!    = Res_{z2} Res_{z1} f Y(a, z1) Y(b, z2) c   (|z1| > |z2|)
//!    - Res_{z2} Res_{z1} f Y(b, z2) Y(a, z1) c   (|z2| > |z1|)`.
//!
//! An instance is only evaluated when every intermediate vector stays
//! within the truncation; other instances are skipped and counted.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{mode_decompose, Factor, Location, RationalSection};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::Scalar;

use super::{ModeValue, ModuleData, VertexAlgebraData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomKind {
    Borcherds,
    Vacuum,
    Translation,
    Virasoro,
    Admissible,
}

impl AxiomKind {
    pub const ALL: [AxiomKind; 5] =
        [AxiomKind::Borcherds, AxiomKind::Vacuum, AxiomKind::Translation, AxiomKind::Virasoro, AxiomKind::Admissible];
}

impl FromStr for AxiomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "borcherds" => Ok(AxiomKind::Borcherds),
            "vacuum" => Ok(AxiomKind::Vacuum),
            "translation" => Ok(AxiomKind::Translation),
            "virasoro" => Ok(AxiomKind::Virasoro),
            "admissible" => Ok(AxiomKind::Admissible),
            _ => Err(Error::Parse(format!("unknown axiom kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub instance: String,
    /// Nonzero coefficients of `lhs - rhs`, by target basis label.
    pub residual: Vec<(String, Scalar)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub kind: AxiomKind,
    pub checked: usize,
    /// Instances left out because an intermediate leaves the truncation.
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A truncated module over a truncated vertex algebra, as seen by the
/// checkers.
pub trait ModuleAction: Sync {
    fn algebra(&self) -> &VertexAlgebraData;
    fn space(&self) -> &GradedSpace;
    fn cap(&self) -> i64;
    /// `a_(m) v` for a basis vector `a`; `None` if the result degree exceeds
    /// the cap.
    fn act_basis(&self, a: usize, m: i64, v: &SparseVec) -> Option<SparseVec>;

    /// `x_(m) v` for any `x` in the algebra.
    fn act(&self, x: &SparseVec, m: i64, v: &SparseVec) -> Option<SparseVec> {
        let mut out = SparseVec::new();
        for (a, c) in x.iter() {
            out.add_scaled(&self.act_basis(a, m, v)?, c);
        }
        Some(out)
    }
}

impl<T: ModuleAction + Send> ModuleAction for std::sync::Arc<T> {
    fn algebra(&self) -> &VertexAlgebraData {
        (**self).algebra()
    }

    fn space(&self) -> &GradedSpace {
        (**self).space()
    }

    fn cap(&self) -> i64 {
        (**self).cap()
    }

    fn act_basis(&self, a: usize, m: i64, v: &SparseVec) -> Option<SparseVec> {
        (**self).act_basis(a, m, v)
    }
}

impl ModuleAction for ModuleData {
    fn algebra(&self) -> &VertexAlgebraData {
        &self.algebra
    }

    fn space(&self) -> &GradedSpace {
        &self.space
    }

    fn cap(&self) -> i64 {
        self.cap
    }

    fn act_basis(&self, a: usize, m: i64, v: &SparseVec) -> Option<SparseVec> {
        let mut out = SparseVec::new();
        for (j, c) in v.iter() {
            match self.mode(a, m, j) {
                ModeValue::Vanishes | ModeValue::Value(None) => {}
                ModeValue::Truncated => return None,
                ModeValue::Value(Some(r)) => out.add_scaled(r, c),
            }
        }
        Some(out)
    }
}

fn residual(space: &GradedSpace, v: &SparseVec) -> Vec<(String, Scalar)> {
    v.iter().map(|(i, c)| (space.label(i).to_string(), c.clone())).collect()
}

/// Mode expansions of the three sides of the Borcherds identity for
/// `f = z1^k z2^l (z1-z2)^p`, as `(first mode, second mode, coefficient)`.
pub struct BorcherdsTerms {
    label: String,
    total_degree: i64,
    lhs: Vec<(i64, i64, Scalar)>,
    rhs_inf: Vec<(i64, i64, Scalar)>,
    rhs_zero: Vec<(i64, i64, Scalar)>,
}

fn split_terms(f: &RationalSection, loc: Location, window: (i64, i64)) -> Result<Vec<(i64, i64, Scalar)>> {
    let d = mode_decompose(f, 0, loc, window)?;
    let mut out = Vec::new();
    for (m, g) in d.entries {
        for (key, c) in g.terms() {
            match key.factors()[0] {
                Factor::Pow(e) => out.push((m, e, c.clone())),
                Factor::Pole { .. } => unreachable!("one-variable sections have no poles"),
            }
        }
    }
    Ok(out)
}

impl BorcherdsTerms {
    /// Terms for `z1^k z2^l (z1-z2)^p`, with modes kept in a window wide
    /// enough for modules truncated at `cap`.
    pub fn new(k: i64, l: i64, p: i64, cap: i64) -> Result<Self> {
        let w = 2 * cap + 3 * k.abs().max(l.abs()).max(p.abs()) + 8;
        borcherds_terms(k, l, p, (-w, w))
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Residual `lhs - rhs` of one Borcherds instance on basis vectors; zero
/// when it holds, `None` when an intermediate vector would leave the caps.
pub fn borcherds_residual<M: ModuleAction + ?Sized>(
    module: &M,
    t: &BorcherdsTerms,
    a: usize,
    b: usize,
    c: usize,
) -> Option<SparseVec> {
    match borcherds_instance(module, t, a, b, c) {
        Instance::Vanishes | Instance::Holds => Some(SparseVec::new()),
        Instance::Unsafe => None,
        Instance::Fails(r) => Some(r),
    }
}

fn borcherds_terms(k: i64, l: i64, p: i64, window: (i64, i64)) -> Result<BorcherdsTerms> {
    let f = RationalSection::general_monomial(2, &[k, l], &[((0, 1), p)]);
    Ok(BorcherdsTerms {
        label: format!("z1^{k}*z2^{l}*(z1-z2)^{p}"),
        total_degree: k + l + p,
        lhs: split_terms(&f, Location::Diagonal(1), window)?,
        rhs_inf: split_terms(&f, Location::AtInfinity, window)?,
        rhs_zero: split_terms(&f, Location::AtZero, window)?,
    })
}

enum Instance {
    Vanishes,
    Unsafe,
    Holds,
    Fails(SparseVec),
}

fn borcherds_instance<M: ModuleAction + ?Sized>(
    module: &M,
    t: &BorcherdsTerms,
    a: usize,
    b: usize,
    c: usize,
) -> Instance {
    let alg = module.algebra();
    let ra = alg.degree(a);
    let rb = alg.degree(b);
    let dc = module.space().degree(c);
    let final_degree = ra + rb + dc - t.total_degree - 2;
    if final_degree < 0 {
        return Instance::Vanishes;
    }
    if final_degree > module.cap() {
        return Instance::Unsafe;
    }
    let cv = SparseVec::unit(c);
    let av = SparseVec::unit(a);
    let bv = SparseVec::unit(b);

    let mut lhs = SparseVec::new();
    for (j, e, coef) in &t.lhs {
        let d_ab = ra + rb - j - 1;
        if d_ab < 0 {
            continue;
        }
        if d_ab > alg.cap {
            return Instance::Unsafe;
        }
        let ab = alg.mode_apply(&av, *j, &bv);
        if ab.is_zero() {
            continue;
        }
        match module.act(&ab, *e, &cv) {
            Some(x) => lhs.add_scaled(&x, coef),
            None => return Instance::Unsafe,
        }
    }
    let mut rhs = SparseVec::new();
    for (m, e, coef) in &t.rhs_inf {
        let d_bc = rb + dc - e - 1;
        if d_bc < 0 || ra + d_bc - m - 1 < 0 {
            continue;
        }
        if d_bc > module.cap() {
            return Instance::Unsafe;
        }
        let Some(bc) = module.act_basis(b, *e, &cv) else { return Instance::Unsafe };
        if bc.is_zero() {
            continue;
        }
        match module.act_basis(a, *m, &bc) {
            Some(x) => rhs.add_scaled(&x, coef),
            None => return Instance::Unsafe,
        }
    }
    for (m, e, coef) in &t.rhs_zero {
        let d_ac = ra + dc - m - 1;
        if d_ac < 0 || rb + d_ac - e - 1 < 0 {
            continue;
        }
        if d_ac > module.cap() {
            return Instance::Unsafe;
        }
        let Some(ac) = module.act_basis(a, *m, &cv) else { return Instance::Unsafe };
        if ac.is_zero() {
            continue;
        }
        match module.act_basis(b, *e, &ac) {
            Some(x) => rhs.add_scaled(&x, &-coef),
            None => return Instance::Unsafe,
        }
    }
    lhs.add_scaled(&rhs, &-Scalar::one());
    if lhs.is_zero() {
        Instance::Holds
    } else {
        Instance::Fails(lhs)
    }
}

/// Borcherds identity for all basis triples and all `f = z1^k z2^l (z1-z2)^p`
/// with `k, l, p` in `[-bound, bound]`.
pub fn check_borcherds<M: ModuleAction + ?Sized>(module: &M, bound: i64) -> Result<AxiomReport> {
    let alg = module.algebra();
    let cap = alg.cap.max(module.cap());
    let w = 2 * cap + 3 * bound + 8;
    let mut terms = Vec::new();
    for k in -bound..=bound {
        for l in -bound..=bound {
            for p in -bound..=bound {
                terms.push(borcherds_terms(k, l, p, (-w, w))?);
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..alg.dim()).flat_map(|a| (0..alg.dim()).map(move |b| (a, b))).collect();
    let results: Vec<(usize, usize, Vec<Violation>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut checked = 0;
            let mut skipped = 0;
            let mut bad = Vec::new();
            for c in 0..module.space().dim() {
                for t in &terms {
                    match borcherds_instance(module, t, a, b, c) {
                        Instance::Vanishes => {}
                        Instance::Unsafe => skipped += 1,
                        Instance::Holds => checked += 1,
                        Instance::Fails(r) => {
                            checked += 1;
                            bad.push(Violation {
                                instance: format!(
                                    "f={} a={} b={} c={}",
                                    t.label,
                                    alg.space.label(a),
                                    alg.space.label(b),
                                    module.space().label(c)
                                ),
                                residual: residual(module.space(), &r),
                            });
                        }
                    }
                }
            }
            (checked, skipped, bad)
        })
        .collect();
    let mut report = AxiomReport { kind: AxiomKind::Borcherds, checked: 0, skipped: 0, violations: Vec::new() };
    for (c, s, v) in results {
        report.checked += c;
        report.skipped += s;
        report.violations.extend(v);
    }
    report.violations.sort();
    Ok(report)
}

fn new_report(kind: AxiomKind) -> AxiomReport {
    AxiomReport { kind, checked: 0, skipped: 0, violations: Vec::new() }
}

fn record(report: &mut AxiomReport, space: &GradedSpace, instance: String, diff: Option<SparseVec>) {
    match diff {
        None => report.skipped += 1,
        Some(d) => {
            report.checked += 1;
            if !d.is_zero() {
                report.violations.push(Violation { instance, residual: residual(space, &d) });
            }
        }
    }
}

fn sub(x: Option<SparseVec>, y: Option<SparseVec>) -> Option<SparseVec> {
    let mut x = x?;
    x.add_scaled(&y?, &-Scalar::one());
    Some(x)
}

/// `1_(m) v = δ_{m,-1} v` on the module.
pub fn check_vacuum<M: ModuleAction + ?Sized>(module: &M, bound: i64) -> AxiomReport {
    let alg = module.algebra();
    let one = alg.vacuum_vec();
    let mut report = new_report(AxiomKind::Vacuum);
    for v in 0..module.space().dim() {
        let vv = SparseVec::unit(v);
        for m in (-bound - 1)..=bound {
            let want = if m == -1 { vv.clone() } else { SparseVec::new() };
            let got = module.act(&one, m, &vv);
            record(&mut report, module.space(), format!("1_({m}) {}", module.space().label(v)), sub(got, Some(want)));
        }
    }
    report
}

/// `(T a)_(m) v = -m a_(m-1) v` on the module.
pub fn check_translation<M: ModuleAction + ?Sized>(module: &M, bound: i64) -> AxiomReport {
    let alg = module.algebra();
    let mut report = new_report(AxiomKind::Translation);
    for a in 0..alg.dim() {
        if alg.degree(a) + 1 > alg.cap {
            report.skipped += 1;
            continue;
        }
        let ta = alg.translation(&SparseVec::unit(a));
        for v in 0..module.space().dim() {
            let vv = SparseVec::unit(v);
            for m in -bound..=bound {
                let lhs = module.act(&ta, m, &vv);
                let rhs = module.act_basis(a, m - 1, &vv).map(|x| x.scaled(&Scalar::from_int(-m)));
                record(
                    &mut report,
                    module.space(),
                    format!("(T {})_({m}) {}", alg.space.label(a), module.space().label(v)),
                    sub(lhs, rhs),
                );
            }
        }
    }
    report
}

/// `[L_m, L_n] = (m-n) L_{m+n} + c/12 (m^3-m) δ_{m+n,0}` on the module.
pub fn check_virasoro<M: ModuleAction + ?Sized>(module: &M, bound: i64) -> AxiomReport {
    let alg = module.algebra();
    let mut report = new_report(AxiomKind::Virasoro);
    let l = |n: i64, v: &SparseVec| module.act(&alg.omega, n + 1, v);
    for v in 0..module.space().dim() {
        let vv = SparseVec::unit(v);
        for m in -bound..=bound {
            for n in -bound..=bound {
                let lhs = sub(l(n, &vv).and_then(|x| l(m, &x)), l(m, &vv).and_then(|x| l(n, &x)));
                let mut rhs = l(m + n, &vv).map(|x| x.scaled(&Scalar::from_int(m - n)));
                if m + n == 0 {
                    if let Some(r) = rhs.as_mut() {
                        let c = &alg.central_charge * Scalar::new(m * m * m - m, 12);
                        r.add_scaled(&vv, &c);
                    }
                }
                record(
                    &mut report,
                    module.space(),
                    format!("[L_{m}, L_{n}] {}", module.space().label(v)),
                    sub(lhs, rhs),
                );
            }
        }
    }
    report
}

/// Every stored mode obeys `a_(m) M_n ⊆ M_{r+n-m-1}` within the cap.
pub fn check_admissible(module: &ModuleData) -> AxiomReport {
    let mut report = new_report(AxiomKind::Admissible);
    report.checked = module.modes.len();
    if let Err(e) = module.validate() {
        report.violations.push(Violation { instance: e.to_string(), residual: Vec::new() });
    }
    report
}

/// Runs one kind of check on a module.
pub fn axiom_check_module(module: &ModuleData, kind: AxiomKind, bound: i64) -> Result<AxiomReport> {
    Ok(match kind {
        AxiomKind::Borcherds => check_borcherds(module, bound)?,
        AxiomKind::Vacuum => check_vacuum(module, bound),
        AxiomKind::Translation => check_translation(module, bound),
        AxiomKind::Virasoro => check_virasoro(module, bound),
        AxiomKind::Admissible => check_admissible(module),
    })
}

/// Runs one kind of check on an algebra: the module checks on the adjoint
/// module plus the algebra-only conditions (creation, `[T, Y(a,z)] = Y(Ta,z)`,
/// `L_0` = degree and `L_{-1} = T`).
pub fn axiom_check_algebra(alg: &std::sync::Arc<VertexAlgebraData>, kind: AxiomKind, bound: i64) -> Result<AxiomReport> {
    let adj = alg.adjoint();
    let mut report = axiom_check_module(&adj, kind, bound)?;
    let space = &alg.space;
    match kind {
        AxiomKind::Vacuum => {
            let one = alg.vacuum_vec();
            for a in 0..alg.dim() {
                let av = SparseVec::unit(a);
                for m in -1..=bound {
                    let want = if m == -1 { av.clone() } else { SparseVec::new() };
                    let got = adj.act_basis(a, m, &one);
                    record(&mut report, space, format!("{}_({m}) 1", space.label(a)), sub(got, Some(want)));
                }
            }
        }
        AxiomKind::Translation => {
            record(&mut report, space, "T 1".into(), Some(alg.translation(&alg.vacuum_vec())));
            for a in 0..alg.dim() {
                let ta = alg.translation(&SparseVec::unit(a));
                for b in 0..alg.dim() {
                    let bv = SparseVec::unit(b);
                    for m in -bound..=bound {
                        let d = alg.degree(a) + alg.degree(b) - m;
                        let diff = if d > alg.cap || alg.degree(a) + 1 > alg.cap || alg.degree(b) + 1 > alg.cap {
                            None
                        } else {
                            let ab = alg.mode_apply(&SparseVec::unit(a), m, &bv);
                            let lhs = sub(Some(alg.translation(&ab)), adj.act_basis(a, m, &alg.translation(&bv)));
                            sub(lhs, adj.act(&ta, m, &bv))
                        };
                        record(
                            &mut report,
                            space,
                            format!("[T, {}_({m})] {}", space.label(a), space.label(b)),
                            diff,
                        );
                    }
                }
            }
        }
        AxiomKind::Virasoro => {
            for a in 0..alg.dim() {
                let av = SparseVec::unit(a);
                let l0 = sub(Some(alg.virasoro(0, &av)), Some(av.scaled(&Scalar::from_int(alg.degree(a)))));
                record(&mut report, space, format!("L_0 {}", space.label(a)), l0);
                let l1 = if alg.degree(a) + 1 > alg.cap {
                    None
                } else {
                    sub(Some(alg.virasoro(-1, &av)), Some(alg.translation(&av)))
                };
                record(&mut report, space, format!("L_-1 {}", space.label(a)), l1);
            }
        }
        AxiomKind::Borcherds | AxiomKind::Admissible => {}
    }
    report.violations.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::trivial_va;

    #[test]
    fn trivial_algebra_passes_everything() {
        let (v, m) = trivial_va();
        for kind in AxiomKind::ALL {
            assert!(axiom_check_algebra(&v, kind, 3).unwrap().passed(), "{kind:?}");
            assert!(axiom_check_module(&m, kind, 3).unwrap().passed(), "{kind:?}");
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in AxiomKind::ALL {
            let s = serde_json::to_string(&kind).unwrap();
            assert_eq!(s.trim_matches('"').parse::<AxiomKind>().unwrap(), kind);
        }
    }
}
