//! Graded extensions `0 → A → B → C → 0`: cocycles `ξ(a, z)`, coboundaries,
//! `Ext¹` at weight zero, the extension module built from a cocycle, and the
//! functional `ψ̃_B(z^m a ⊗ φ ⊗ c) = φ(ξ_(m)(a) c)` it induces on the weight-0
//! slice of `C̃_1`.
//!
//! Unknowns of the Ext solver are the modes of `ξ` on the strong generators;
//! modes on composite vectors follow by closing the action of `B = A ⊕ C`
//! with the iterate formula.

pub mod pairing;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{Caps, ComplexData};
use crate::error::{Error, Result};
use crate::linalg::{nullspace, Echelon, GradedSpace, SparseVec};
use crate::scalar::Scalar;
use crate::vertex::axioms::{borcherds_residual, check_borcherds, BorcherdsTerms};
use crate::vertex::closure::close_modes;
use crate::vertex::{ModeTable, ModuleData, VertexAlgebraData};

pub use pairing::{
    pairing_matrix, psi_from_extension, psi_on_basis, psi_tilde, xi_from_psi, xi_from_slice_functional, Pairing,
    PsiFunctional, Retraction,
};

/// Which summand of `B = A ⊕ C` a basis vector of `B` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    A(usize),
    C(usize),
}

/// The pair `(A, C)` and the graded space `A ⊕ C`, with basis labels
/// `A.<label>` and `C.<label>`.
#[derive(Debug)]
pub struct ExtContext {
    pub alg: Arc<VertexAlgebraData>,
    pub a: Arc<ModuleData>,
    pub c: Arc<ModuleData>,
    space: GradedSpace,
    from_a: Vec<usize>,
    from_c: Vec<usize>,
    parts: Vec<Part>,
}

impl ExtContext {
    pub fn new(a: Arc<ModuleData>, c: Arc<ModuleData>) -> Result<Arc<Self>> {
        if a.algebra.name != c.algebra.name || a.algebra.cap != c.algebra.cap {
            return Err(Error::InvalidArgument("A and C are modules over different algebras".into()));
        }
        if a.cap != c.cap {
            return Err(Error::InvalidArgument(format!("A and C have different caps ({} and {})", a.cap, c.cap)));
        }
        let mut comps: BTreeMap<i64, Vec<String>> = BTreeMap::new();
        for (d, labels) in a.space.components() {
            comps.entry(d).or_default().extend(labels.iter().map(|l| format!("A.{l}")));
        }
        for (d, labels) in c.space.components() {
            comps.entry(d).or_default().extend(labels.iter().map(|l| format!("C.{l}")));
        }
        let space = GradedSpace::new(comps);
        let index = |l: String| space.index_of(&l).expect("label of A ⊕ C");
        let from_a: Vec<usize> = (0..a.dim()).map(|i| index(format!("A.{}", a.space.label(i)))).collect();
        let from_c: Vec<usize> = (0..c.dim()).map(|i| index(format!("C.{}", c.space.label(i)))).collect();
        let mut parts = vec![Part::A(0); space.dim()];
        for (i, &j) in from_a.iter().enumerate() {
            parts[j] = Part::A(i);
        }
        for (i, &j) in from_c.iter().enumerate() {
            parts[j] = Part::C(i);
        }
        Ok(Arc::new(ExtContext { alg: Arc::clone(&a.algebra), a, c, space, from_a, from_c, parts }))
    }

    pub fn from_complex(cx: &ComplexData) -> Result<Arc<Self>> {
        ExtContext::new(Arc::clone(&cx.a), Arc::clone(&cx.c))
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn cap(&self) -> i64 {
        self.a.cap
    }

    pub fn part(&self, i: usize) -> Part {
        self.parts[i]
    }

    pub fn embed_a(&self, v: &SparseVec) -> SparseVec {
        v.remap(|i| self.from_a[i])
    }

    pub fn embed_c(&self, v: &SparseVec) -> SparseVec {
        v.remap(|i| self.from_c[i])
    }

    /// `A`-component of a vector of `B`, in `A` coordinates.
    pub fn project_a(&self, v: &SparseVec) -> SparseVec {
        v.iter()
            .filter_map(|(i, x)| match self.parts[i] {
                Part::A(j) => Some((j, x.clone())),
                Part::C(_) => None,
            })
            .collect()
    }

    pub fn project_c(&self, v: &SparseVec) -> SparseVec {
        v.iter()
            .filter_map(|(i, x)| match self.parts[i] {
                Part::C(j) => Some((j, x.clone())),
                Part::A(_) => None,
            })
            .collect()
    }

    /// Unknown entries of `ξ` on generators: `⟨x*, ξ_m(g) c⟩` for every
    /// generator `g`, `c` in `C` and `x` in `A`, with `m` fixed by degree.
    pub fn unknowns(&self) -> Vec<Unknown> {
        let mut out = Vec::new();
        for &g in &self.alg.generators {
            for c in 0..self.c.dim() {
                for x in 0..self.a.dim() {
                    let m = self.alg.degree(g) + self.c.degree(c) - 1 - self.a.degree(x);
                    out.push(Unknown { g, m, c, x });
                }
            }
        }
        out
    }

    /// Generator part of a cocycle as a vector over [`ExtContext::unknowns`].
    pub fn xi_to_vector(&self, xi: &CocycleXi, unknowns: &[Unknown]) -> SparseVec {
        unknowns.iter().enumerate().map(|(i, u)| (i, xi.get(u.g, u.m, u.c).get(u.x))).collect()
    }

    pub fn xi_from_vector(&self, v: &SparseVec, unknowns: &[Unknown]) -> CocycleXi {
        let mut xi = CocycleXi::zero();
        for (i, x) in v.iter() {
            let u = &unknowns[i];
            xi.add(u.g, u.m, u.c, &SparseVec::unit(u.x), x);
        }
        xi
    }

    /// Module structure on `A ⊕ C` from the generator modes of `ξ`, with no
    /// axiom check. Entries of `ξ` on non-generators are ignored here.
    pub fn assemble(self: &Arc<Self>, xi: &CocycleXi) -> Result<ExtensionModule> {
        let gens = &self.alg.generators;
        let mut table = ModeTable::new();
        for ((g, m, x), r) in self.a.modes.sorted() {
            if gens.contains(&g) {
                table.insert(g, m, self.from_a[x], self.embed_a(r));
            }
        }
        let mut from_c: BTreeMap<(usize, i64, usize), SparseVec> = BTreeMap::new();
        for ((g, m, c), r) in self.c.modes.sorted() {
            if gens.contains(&g) {
                from_c.entry((g, m, c)).or_default().add(&self.embed_c(r));
            }
        }
        for ((g, m, c), r) in xi.modes.sorted() {
            if !gens.contains(&g) {
                continue;
            }
            for x in r.indices() {
                let d = self.alg.degree(g) + self.c.degree(c) - m - 1;
                if self.a.degree(x) != d {
                    return Err(Error::InvalidArgument(format!(
                        "ξ_({m})({}) sends {} off degree {d}",
                        self.alg.space.label(g),
                        self.c.space.label(c)
                    )));
                }
            }
            from_c.entry((g, m, c)).or_default().add(&self.embed_a(r));
        }
        for ((g, m, c), r) in from_c {
            table.insert(g, m, self.from_c[c], r);
        }
        let modes = close_modes(&self.alg, &self.space, self.cap(), &table)?;
        let mut full = CocycleXi::zero();
        for ((u, m, w), r) in modes.sorted() {
            if let Part::C(c) = self.parts[w] {
                let x = self.project_a(r);
                if !x.is_zero() {
                    full.modes.insert(u, m, c, x);
                }
            }
        }
        let mut params = BTreeMap::new();
        params.insert("A".to_string(), self.a.name.clone());
        params.insert("C".to_string(), self.c.name.clone());
        let module = ModuleData {
            name: "extension".into(),
            params,
            algebra: Arc::clone(&self.alg),
            space: self.space.clone(),
            cap: self.cap(),
            modes,
        };
        Ok(ExtensionModule { ctx: Arc::clone(self), module, xi: full })
    }

    /// The identity `C → A` when both have the same basis labels.
    pub fn identity_map(&self) -> Result<GradedMap> {
        let mut eta = GradedMap::new();
        for c in 0..self.c.dim() {
            let label = self.c.space.label(c);
            let x = self.a.space.index_of(label).ok_or_else(|| {
                Error::InvalidArgument(format!("A has no basis vector {label:?} matching C"))
            })?;
            eta.set(self, c, SparseVec::unit(x))?;
        }
        Ok(eta)
    }

    /// `ξ_0(g) = id` for the first generator `g` and all other generator
    /// modes zero: the Jordan-block self-extension when `A = C`.
    pub fn jordan_block(&self) -> Result<CocycleXi> {
        let g = *self.alg.generators.first().ok_or_else(|| Error::InvalidArgument("algebra has no generators".into()))?;
        if self.alg.degree(g) != 1 {
            return Err(Error::InvalidArgument("Jordan-block cocycle needs a degree-one generator".into()));
        }
        let id = self.identity_map()?;
        let mut xi = CocycleXi::zero();
        for c in 0..self.c.dim() {
            xi.add(g, 0, c, &id.image(c), &Scalar::one());
        }
        Ok(xi)
    }
}

/// One unknown `⟨x*, ξ_m(g) c⟩` of the Ext solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unknown {
    pub g: usize,
    pub m: i64,
    pub c: usize,
    pub x: usize,
}

/// A graded (degree-preserving) linear map `C → A`, stored on basis vectors.
/// Used both for `η` in coboundaries and for sections `s(c) = (σ(c), c)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradedMap {
    images: BTreeMap<usize, SparseVec>,
}

impl GradedMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, ctx: &ExtContext, c: usize, image: SparseVec) -> Result<()> {
        let d = ctx.c.degree(c);
        if image.indices().any(|x| x >= ctx.a.dim() || ctx.a.degree(x) != d) {
            return Err(Error::InvalidArgument(format!("image of {} is not in degree {d}", ctx.c.space.label(c))));
        }
        if image.is_zero() {
            self.images.remove(&c);
        } else {
            self.images.insert(c, image);
        }
        Ok(())
    }

    pub fn image(&self, c: usize) -> SparseVec {
        self.images.get(&c).cloned().unwrap_or_default()
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (c, x) in v.iter() {
            if let Some(r) = self.images.get(&c) {
                out.add_scaled(r, x);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.images.is_empty()
    }
}

/// Modes `ξ_m(a)` as a table `(a, m, c) ↦ ξ_m(a) c ∈ A`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CocycleXi {
    pub modes: ModeTable,
}

/// One serialized entry of a cocycle table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiEntry {
    pub a: String,
    pub m: i64,
    pub c: String,
    pub value: Vec<(String, Scalar)>,
}

impl CocycleXi {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, a: usize, m: i64, c: usize) -> SparseVec {
        self.modes.get(a, m, c).cloned().unwrap_or_default()
    }

    pub fn add(&mut self, a: usize, m: i64, c: usize, v: &SparseVec, coef: &Scalar) {
        let mut x = self.get(a, m, c);
        x.add_scaled(v, coef);
        self.modes.insert(a, m, c, x);
    }

    /// `ξ_m(a) c` for a vector `c` of `C`.
    pub fn apply(&self, a: usize, m: i64, c: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, x) in c.iter() {
            if let Some(r) = self.modes.get(a, m, j) {
                out.add_scaled(r, x);
            }
        }
        out
    }

    /// Entries on generators only.
    pub fn generator_part(&self, alg: &VertexAlgebraData) -> CocycleXi {
        let mut out = CocycleXi::zero();
        for ((a, m, c), r) in self.modes.sorted() {
            if alg.generators.contains(&a) {
                out.modes.insert(a, m, c, r.clone());
            }
        }
        out
    }

    pub fn entries(&self, ctx: &ExtContext) -> Vec<XiEntry> {
        self.modes
            .sorted()
            .into_iter()
            .map(|((a, m, c), r)| XiEntry {
                a: ctx.alg.space.label(a).to_string(),
                m,
                c: ctx.c.space.label(c).to_string(),
                value: r.iter().map(|(x, v)| (ctx.a.space.label(x).to_string(), v.clone())).collect(),
            })
            .collect()
    }
}

/// `B = A ⊕ C` with `Y_B(a, z)(x, c) = (Y_A(a, z) x + ξ(a, z) c, Y_C(a, z) c)`.
#[derive(Clone, Debug)]
pub struct ExtensionModule {
    pub ctx: Arc<ExtContext>,
    pub module: ModuleData,
    /// `ξ` on every basis vector of the algebra, read off from `module`.
    pub xi: CocycleXi,
}

impl ExtensionModule {
    /// The `A`-component of the Borcherds residual of `B` on `(0, c)`: the
    /// cocycle condition, i.e. the diagonal term in `ξ(Y(a, z1 - z2) b, z2)`
    /// against the two `Y_A ∘ ξ` and two `ξ ∘ Y_C` terms. `None` when not
    /// truncation-safe.
    pub fn cocycle_residual(&self, t: &BorcherdsTerms, a: usize, b: usize, c: usize) -> Option<SparseVec> {
        borcherds_residual(&self.module, t, a, b, self.ctx.from_c[c]).map(|r| self.ctx.project_a(&r))
    }

    /// Is `x` in the image of `A`?
    pub fn in_a(&self, v: &SparseVec) -> bool {
        v.indices().all(|i| matches!(self.ctx.parts[i], Part::A(_)))
    }
}

/// Assembles `B` from `ξ` and checks it: entries of `ξ` given on composite
/// vectors must agree with the closure, and `B` must pass the Borcherds
/// identity for monomials with exponents in `[-bound, bound]`.
pub fn build_extension(ctx: &Arc<ExtContext>, xi: &CocycleXi, bound: i64) -> Result<ExtensionModule> {
    let ext = ctx.assemble(xi)?;
    for ((a, m, c), r) in xi.modes.sorted() {
        if ext.xi.get(a, m, c) != *r {
            return Err(Error::Invariant(format!(
                "ξ_({m})({}) on {} disagrees with the value forced by the generators",
                ctx.alg.space.label(a),
                ctx.c.space.label(c)
            )));
        }
    }
    let report = check_borcherds(&ext.module, bound)?;
    if let Some(v) = report.violations.first() {
        return Err(Error::Invariant(format!(
            "extension module fails the Borcherds identity ({} violations), first at {}: not a cocycle",
            report.violations.len(),
            v.instance
        )));
    }
    Ok(ext)
}

/// `ξ_m(a) = a^A_(m) ∘ η - η ∘ a^C_(m)` on every basis vector `a`.
///
/// With this sign `B(ξ) → A ⊕ C`, `(x, c) ↦ (x + η(c), c)` is an isomorphism
/// of modules.
pub fn coboundary(ctx: &ExtContext, eta: &GradedMap) -> CocycleXi {
    let mut xi = CocycleXi::zero();
    if eta.is_zero() {
        return xi;
    }
    let cap = ctx.cap();
    for a in 0..ctx.alg.dim() {
        let av = SparseVec::unit(a);
        for c in 0..ctx.c.dim() {
            let cv = SparseVec::unit(c);
            let top = ctx.alg.degree(a) + ctx.c.degree(c) - 1;
            for m in (top - cap)..=top {
                let mut v = ctx.a.mode_apply(&av, m, &eta.image(c));
                v.add_scaled(&eta.apply(&ctx.c.mode_apply(&av, m, &cv)), &-Scalar::one());
                xi.modes.insert(a, m, c, v);
            }
        }
    }
    xi
}

/// Knobs for [`solve_ext1`].
#[derive(Clone, Debug)]
pub struct ExtOptions {
    /// Constraints use `f = z1^k z2^l (z1-z2)^p` with `k, l, p` in
    /// `[-bound, bound]`.
    pub bound: i64,
    /// Bound used when certifying class representatives with the full
    /// Borcherds check.
    pub certify_bound: i64,
    /// Stop adding constraint tuples after this many; the result is then
    /// flagged tentative.
    pub max_constraints: Option<usize>,
}

impl Default for ExtOptions {
    fn default() -> Self {
        ExtOptions { bound: 3, certify_bound: 3, max_constraints: None }
    }
}

/// A class in `Ext¹(C, A)`.
#[derive(Clone, Debug)]
pub struct ExtClass {
    pub representative: CocycleXi,
    pub caps: Caps,
}

/// Weight-0 graded `Ext¹(C, A)` at given caps.
#[derive(Clone, Debug)]
pub struct Ext1Result {
    pub caps: Caps,
    pub dim: usize,
    pub classes: Vec<ExtClass>,
    pub unknowns: Vec<Unknown>,
    pub constraints: usize,
    pub dim_cocycles: usize,
    pub rank_coboundaries: usize,
    /// Set when the constraint count was capped.
    pub tentative: bool,
    coboundaries: Echelon,
}

impl Ext1Result {
    pub fn is_coboundary(&self, ctx: &ExtContext, xi: &CocycleXi) -> bool {
        self.coboundaries.contains(&ctx.xi_to_vector(xi, &self.unknowns))
    }

    pub fn same_class(&self, ctx: &ExtContext, x: &CocycleXi, y: &CocycleXi) -> bool {
        let mut d = ctx.xi_to_vector(x, &self.unknowns);
        d.add_scaled(&ctx.xi_to_vector(y, &self.unknowns), &-Scalar::one());
        self.coboundaries.contains(&d)
    }
}

/// Solves the cocycle condition for the generator modes of `ξ` exactly,
/// quotients by coboundaries of graded `η: C → A` and certifies each class
/// representative with the full Borcherds check on `B`.
pub fn solve_ext1(ctx: &Arc<ExtContext>, caps: &Caps, opts: &ExtOptions) -> Result<Ext1Result> {
    let unknowns = ctx.unknowns();
    let cap = ctx.cap();
    let b = opts.bound;
    let mut terms = Vec::new();
    for k in -b..=b {
        for l in -b..=b {
            for p in -b..=b {
                terms.push(BorcherdsTerms::new(k, l, p, cap)?);
            }
        }
    }
    let mut tuples = Vec::new();
    'outer: for &g in &ctx.alg.generators {
        for v in 0..ctx.alg.dim() {
            for c in 0..ctx.c.dim() {
                for t in 0..terms.len() {
                    if opts.max_constraints.is_some_and(|mx| tuples.len() >= mx) {
                        break 'outer;
                    }
                    tuples.push((t, g, v, c));
                }
            }
        }
    }
    let tentative = opts
        .max_constraints
        .is_some_and(|mx| tuples.len() >= mx && tuples.len() < ctx.alg.generators.len() * ctx.alg.dim() * ctx.c.dim() * terms.len());
    log::info!("ext: {} unknowns, {} constraint tuples", unknowns.len(), tuples.len());

    // residual of each unit cocycle, keyed by (tuple, A coordinate)
    let columns: Vec<Vec<((usize, usize), Scalar)>> = unknowns
        .par_iter()
        .enumerate()
        .map(|(i, _)| {
            let ext = ctx.assemble(&ctx.xi_from_vector(&SparseVec::unit(i), &unknowns))?;
            let mut col = Vec::new();
            for (ti, &(t, g, v, c)) in tuples.iter().enumerate() {
                if let Some(r) = ext.cocycle_residual(&terms[t], g, v, c) {
                    col.extend(r.iter().map(|(x, y)| ((ti, x), y.clone())));
                }
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let mut row_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: Vec<SparseVec> = Vec::new();
    for (j, col) in columns.into_iter().enumerate() {
        for (key, y) in col {
            let r = *row_index.entry(key).or_insert_with(|| {
                rows.push(SparseVec::new());
                rows.len() - 1
            });
            rows[r].add_term(j, y);
        }
    }
    let cocycles = nullspace(&rows, unknowns.len());

    let mut coboundaries = Echelon::new(unknowns.len());
    for c in 0..ctx.c.dim() {
        for x in ctx.a.space.range_at(ctx.c.degree(c)) {
            let mut eta = GradedMap::new();
            eta.set(ctx, c, SparseVec::unit(x))?;
            let v = ctx.xi_to_vector(&coboundary(ctx, &eta), &unknowns);
            if rows.iter().any(|r| !r.dot(&v).is_zero()) {
                return Err(Error::Invariant(format!(
                    "coboundary of {} ↦ {} violates the cocycle constraints",
                    ctx.c.space.label(c),
                    ctx.a.space.label(x)
                )));
            }
            coboundaries.insert(v);
        }
    }
    let rank_coboundaries = coboundaries.rank();
    let mut quotient = coboundaries.clone();
    let mut reps = Vec::new();
    for z in &cocycles {
        if quotient.insert(z.clone()) {
            reps.push(ctx.xi_from_vector(z, &unknowns));
        }
    }
    if rank_coboundaries + reps.len() != cocycles.len() {
        return Err(Error::Invariant("coboundaries are not contained in the cocycle space".into()));
    }
    let classes = reps
        .par_iter()
        .map(|xi| {
            build_extension(ctx, xi, opts.certify_bound)?;
            Ok(ExtClass { representative: xi.clone(), caps: *caps })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ext1Result {
        caps: *caps,
        dim: classes.len(),
        classes,
        unknowns,
        constraints: rows.len(),
        dim_cocycles: cocycles.len(),
        rank_coboundaries,
        tentative,
        coboundaries,
    })
}

/// Does `(x, c) ↦ (x + η(c), c)` intertwine `B` with `target` on every mode
/// within the caps?
pub fn is_shear_isomorphism(b: &ExtensionModule, target: &ExtensionModule, eta: &GradedMap) -> bool {
    let ctx = &b.ctx;
    let shear = |v: &SparseVec| {
        let mut out = v.clone();
        out.add(&ctx.embed_a(&eta.apply(&ctx.project_c(v))));
        out
    };
    let cap = ctx.cap();
    (0..ctx.alg.dim()).all(|u| {
        let uv = SparseVec::unit(u);
        (0..ctx.space.dim()).all(|w| {
            let wv = SparseVec::unit(w);
            let top = ctx.alg.degree(u) + ctx.space.degree(w) - 1;
            ((top - cap)..=top).all(|m| {
                shear(&b.module.mode_apply(&uv, m, &wv)) == target.module.mode_apply(&uv, m, &shear(&wv))
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::{fock_module, heisenberg_va, trivial_va};

    #[test]
    fn sum_space_labels_are_prefixed() {
        let v = heisenberg_va(2).unwrap();
        let f = Arc::new(fock_module(&v, &Scalar::zero(), 2).unwrap());
        let ctx = ExtContext::new(Arc::clone(&f), f).unwrap();
        assert_eq!(ctx.space().dim(), 8);
        assert!(ctx.space().labels().iter().all(|l| l.starts_with("A.") || l.starts_with("C.")));
    }

    #[test]
    fn trivial_coboundary_vanishes() {
        let (_, m) = trivial_va();
        let m = Arc::new(m);
        let ctx = ExtContext::new(Arc::clone(&m), m).unwrap();
        let eta = ctx.identity_map().unwrap();
        assert!(coboundary(&ctx, &eta).is_zero());
    }
}
