//! The chain spaces `C̃_n = Γ_n ⊗ V^{⊗n} ⊗ A∨ ⊗ C` for `n <= 3`, their
//! weight slices, the translation operators `∂_i + T_i` and the residue
//! differentials `d_n`.
//!
//! The weight of a term `f a^1 ⊗ ... ⊗ a^n ⊗ φ ⊗ c` is
//! `Σ deg a^i - n - totaldeg f - deg φ + deg c`. Differentials preserve it and
//! `∂_i + T_i` raises it by one.

pub mod homology;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contragredient::DualModule;
use crate::error::{Error, Result};
use crate::laurent::{expansion_bounds, mode_decompose, Location, MonomialKey, RationalSection};
use crate::linalg::SparseVec;
use crate::scalar::Scalar;
use crate::vertex::axioms::ModuleAction;
use crate::vertex::{ModuleData, VertexAlgebraData};

pub use homology::{
    check_quotient_invariance, check_weight_homogeneity, d_squared_check, homology, DSquaredReport, HomologyResult,
    InvariantReport, TranslationSpan,
};

/// Truncation caps of a slice computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Degree cap of the algebra.
    pub d: i64,
    /// Degree cap of `A` (and so of `A∨`).
    pub n_a: i64,
    /// Degree cap of `C`.
    pub n_c: i64,
    /// Laurent exponents allowed in slice bases, inclusive.
    pub window: (i64, i64),
    /// Largest diagonal pole order allowed in slice bases.
    pub pole: u32,
}

impl Caps {
    /// Every cap except the algebra cap raised by one.
    pub fn bumped(&self) -> Caps {
        Caps {
            d: self.d,
            n_a: self.n_a + 1,
            n_c: self.n_c + 1,
            window: (self.window.0 - 1, self.window.1 + 1),
            pole: self.pole + 1,
        }
    }
}

/// A weight slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightIndex {
    pub weight: i64,
    pub caps: Caps,
}

/// Basis element `key · a^1 ⊗ ... ⊗ a^n ⊗ φ ⊗ c`, ordered lexicographically
/// by `(key, labels, φ, c)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub key: MonomialKey,
    pub labels: Vec<usize>,
    pub phi: usize,
    pub c: usize,
}

impl Term {
    pub fn arity(&self) -> usize {
        self.labels.len()
    }
}

/// Finite linear combination of terms of one arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    terms: BTreeMap<Term, Scalar>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_term(t: Term) -> Self {
        let mut c = Chain::new();
        c.add_term(t, Scalar::one());
        c
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &Scalar)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, t: &Term) -> Scalar {
        self.terms.get(t).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add_term(&mut self, t: Term, x: Scalar) {
        if x.is_zero() {
            return;
        }
        match self.terms.entry(t) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(x);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += x;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Chain, c: &Scalar) {
        for (t, x) in &other.terms {
            self.add_term(t.clone(), x * c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> Chain {
        let mut out = Chain::new();
        out.add_scaled(self, c);
        out
    }

    /// Coordinates in a basis; `None` if some term is missing from it.
    pub fn coordinates(&self, index: &HashMap<Term, usize>) -> Option<SparseVec> {
        let mut v = SparseVec::new();
        for (t, x) in &self.terms {
            v.add_term(*index.get(t)?, x.clone());
        }
        Some(v)
    }

    pub fn from_coordinates(basis: &[Term], v: &SparseVec) -> Chain {
        let mut out = Chain::new();
        for (i, x) in v.iter() {
            out.add_term(basis[i].clone(), x.clone());
        }
        out
    }
}

/// Result of applying an operator to a chain: the image, and the number of
/// contributions dropped because they left a degree cap.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Applied {
    pub chain: Chain,
    pub leaked: usize,
    /// The part of `leaked` due to the module caps (as opposed to the
    /// algebra cap).
    pub leaked_module: usize,
}

impl Applied {
    pub fn is_exact(&self) -> bool {
        self.leaked == 0
    }
}

/// The data `(V, A, C)` of a complex, with `A∨` derived from `A`.
pub struct ComplexData {
    pub alg: Arc<VertexAlgebraData>,
    pub a: Arc<ModuleData>,
    pub c: Arc<ModuleData>,
    pub dual: DualModule<Arc<ModuleData>>,
}

impl ComplexData {
    pub fn new(a: ModuleData, c: ModuleData) -> Result<Self> {
        if !Arc::ptr_eq(&a.algebra, &c.algebra) && a.algebra.name != c.algebra.name {
            return Err(Error::InvalidArgument("A and C are modules over different algebras".into()));
        }
        let alg = Arc::clone(&a.algebra);
        let a = Arc::new(a);
        let dual = DualModule::new(Arc::clone(&a));
        Ok(ComplexData { alg, a, c: Arc::new(c), dual })
    }

    /// Caps of this data with the given window and pole cap.
    pub fn caps(&self, window: (i64, i64), pole: u32) -> Caps {
        Caps { d: self.alg.cap, n_a: self.a.cap, n_c: self.c.cap, window, pole }
    }

    /// Chains on which the truncated differential provably agrees with the
    /// untruncated one: module degrees at most `N - D`, Laurent exponents in
    /// `[-1, D - 1]`, and `Σ deg a^i + q - 1 <= D` for the pole order `q`.
    pub fn in_leakage_free_zone(&self, t: &Term, caps: &Caps) -> bool {
        let degs: i64 = t.labels.iter().map(|a| self.alg.degree(*a)).sum();
        self.a.degree(t.phi) <= caps.n_a - caps.d
            && self.c.degree(t.c) <= caps.n_c - caps.d
            && t.key.within(-1, caps.d - 1, u32::MAX)
            && degs + t.key.max_pole_order() as i64 - 1 <= caps.d
    }

    pub fn weight(&self, t: &Term) -> i64 {
        let n = t.arity() as i64;
        let degs: i64 = t.labels.iter().map(|a| self.alg.degree(*a)).sum();
        degs - n - t.key.total_degree() - self.a.degree(t.phi) + self.c.degree(t.c)
    }

    /// Ordered basis of the weight slice of `C̃_n`, restricted to the degree
    /// caps of the data and to the window and pole cap of `caps`.
    pub fn enumerate_basis(&self, n: usize, weight: i64, caps: &Caps) -> Result<Vec<Term>> {
        if n > 3 {
            return Err(Error::InvalidArgument(format!("chain arity {n} outside 0..=3")));
        }
        let vdim = self.alg.dim();
        let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..n {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..vdim).filter(|a| self.alg.degree(*a) <= caps.d).map(move |a| {
                        let mut t = t.clone();
                        t.push(a);
                        t
                    })
                })
                .collect();
        }
        let mut keys_by_total: HashMap<i64, Vec<MonomialKey>> = HashMap::new();
        let mut out = Vec::new();
        for labels in &tuples {
            let degs: i64 = labels.iter().map(|a| self.alg.degree(*a)).sum();
            for phi in 0..self.a.dim() {
                if self.a.degree(phi) > caps.n_a {
                    continue;
                }
                for c in 0..self.c.dim() {
                    if self.c.degree(c) > caps.n_c {
                        continue;
                    }
                    let total = degs - n as i64 - self.a.degree(phi) + self.c.degree(c) - weight;
                    let keys = keys_by_total
                        .entry(total)
                        .or_insert_with(|| MonomialKey::enumerate(n, total, caps.window.0, caps.window.1, caps.pole));
                    for key in keys.iter() {
                        out.push(Term { key: *key, labels: labels.clone(), phi, c });
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// `(∂_i + T_i)` on a chain.
    pub fn translate(&self, i: usize, chain: &Chain) -> Result<Applied> {
        let mut out = Applied::default();
        for (t, x) in chain.terms() {
            if i >= t.arity() {
                return Err(Error::InvalidArgument(format!("no variable z{} in arity {}", i + 1, t.arity())));
            }
            let f = RationalSection::monomial(t.key, x.clone());
            for (key, y) in f.derive(i)?.terms() {
                out.chain.add_term(Term { key: *key, ..t.clone() }, y.clone());
            }
            let a = t.labels[i];
            if a == self.alg.vacuum {
                continue;
            }
            if self.alg.degree(a) + 1 > self.alg.cap {
                out.leaked += 1;
                continue;
            }
            let ta = self.alg.translation(&SparseVec::unit(a));
            for (b, y) in ta.iter() {
                let mut labels = t.labels.clone();
                labels[i] = b;
                out.chain.add_term(Term { labels, ..t.clone() }, x * y);
            }
        }
        Ok(out)
    }

    /// `d_n = Σ_{i<j} (-1)^{n-i} d^{(ij)} + Σ_i (-1)^{n-i} (p_C^{(i)} + p_{A∨}^{(i)})`
    /// (1-based `i`), applied termwise. Results are exact except for the
    /// counted contributions that leave a degree cap.
    pub fn differential(&self, chain: &Chain) -> Result<Applied> {
        let mut out = Applied::default();
        for (t, x) in chain.terms() {
            let n = t.arity();
            if !(1..=3).contains(&n) {
                return Err(Error::InvalidArgument(format!("differential needs arity 1..=3, got {n}")));
            }
            let f = RationalSection::monomial(t.key, x.clone());
            for i in 0..n {
                let sign = Scalar::sign((n - 1 - i) as i64);
                for j in i + 1..n {
                    self.collision(&f, t, i, j, &sign, &mut out)?;
                }
                self.at_zero(&f, t, i, &sign, &mut out)?;
                self.at_infinity(&f, t, i, &sign, &mut out)?;
            }
        }
        Ok(out)
    }

    /// Only `d^{(ij)}`, `p_C^{(i)}` or `p_{A∨}^{(i)}` alone, unsigned; used by
    /// tests to evaluate the differential piece by piece.
    pub fn differential_part(&self, chain: &Chain, part: DifferentialPart) -> Result<Applied> {
        let mut out = Applied::default();
        let one = Scalar::one();
        for (t, x) in chain.terms() {
            let f = RationalSection::monomial(t.key, x.clone());
            match part {
                DifferentialPart::Collision(i, j) => self.collision(&f, t, i, j, &one, &mut out)?,
                DifferentialPart::AtZero(i) => self.at_zero(&f, t, i, &one, &mut out)?,
                DifferentialPart::AtInfinity(i) => self.at_infinity(&f, t, i, &one, &mut out)?,
            }
        }
        Ok(out)
    }

    /// `Res_{z_i = z_j} f ... Y(a^i, z_i - z_j) a^j ...`, result in slot `j`.
    fn collision(&self, f: &RationalSection, t: &Term, i: usize, j: usize, sign: &Scalar, out: &mut Applied) -> Result<()> {
        let (ai, aj) = (t.labels[i], t.labels[j]);
        let (ri, rj) = (self.alg.degree(ai), self.alg.degree(aj));
        let (Some(lo), _) = expansion_bounds(f, i, Location::Diagonal(j)) else {
            return Err(Error::Invariant("diagonal expansion unbounded below".into()));
        };
        let hi = ri + rj - 1;
        if lo > hi {
            return Ok(());
        }
        let dec = mode_decompose(f, i, Location::Diagonal(j), (lo, hi))?;
        let (av, bv) = (SparseVec::unit(ai), SparseVec::unit(aj));
        for (k, g) in dec.entries {
            if g.is_zero() {
                continue;
            }
            if ai == self.alg.vacuum && k != -1 {
                continue;
            }
            if ri + rj - k - 1 > self.alg.cap {
                out.leaked += 1;
                continue;
            }
            let ab = self.alg.mode_apply(&av, k, &bv);
            for (b, y) in ab.iter() {
                let mut labels = t.labels.clone();
                labels[j] = b;
                labels.remove(i);
                let coef = sign * y;
                for (key, z) in g.terms() {
                    out.chain.add_term(Term { key: *key, labels: labels.clone(), phi: t.phi, c: t.c }, z * &coef);
                }
            }
        }
        Ok(())
    }

    /// `Res_{z_i = 0} f ... φ ⊗ Y_C(a^i, z_i) c`.
    fn at_zero(&self, f: &RationalSection, t: &Term, i: usize, sign: &Scalar, out: &mut Applied) -> Result<()> {
        let a = t.labels[i];
        let (ra, dc) = (self.alg.degree(a), self.c.degree(t.c));
        let (Some(lo), _) = expansion_bounds(f, i, Location::AtZero) else {
            return Err(Error::Invariant("expansion at 0 unbounded below".into()));
        };
        let hi = ra + dc - 1;
        if lo > hi {
            return Ok(());
        }
        let dec = mode_decompose(f, i, Location::AtZero, (lo, hi))?;
        let (av, cv) = (SparseVec::unit(a), SparseVec::unit(t.c));
        let mut labels = t.labels.clone();
        labels.remove(i);
        for (k, g) in dec.entries {
            if g.is_zero() {
                continue;
            }
            if a == self.alg.vacuum {
                // 1_(k) = δ_{k,-1} at any cap
                if k == -1 {
                    for (key, z) in g.terms() {
                        out.chain.add_term(Term { key: *key, labels: labels.clone(), phi: t.phi, c: t.c }, z * sign);
                    }
                }
                continue;
            }
            if ra + dc - k - 1 > self.c.cap {
                out.leaked += 1;
                out.leaked_module += 1;
                continue;
            }
            for (c, y) in self.c.mode_apply(&av, k, &cv).iter() {
                let coef = sign * y;
                for (key, z) in g.terms() {
                    out.chain.add_term(Term { key: *key, labels: labels.clone(), phi: t.phi, c }, z * &coef);
                }
            }
        }
        Ok(())
    }

    /// `Res_{z_i = ∞} f ... Y_{A∨}(𝓡(z_i) a^i, z_i^{-1}) φ ⊗ c`, with `f`
    /// expanded where `|z_i|` is largest. With `f = Σ g_k z_i^k` and
    /// `𝓡(z) a = Σ_e z^e u_e` this is `-Σ_k g_k Σ_e (u_e)_(-k-e) φ`.
    fn at_infinity(&self, f: &RationalSection, t: &Term, i: usize, sign: &Scalar, out: &mut Applied) -> Result<()> {
        let a = t.labels[i];
        let (ra, dphi) = (self.alg.degree(a), self.a.degree(t.phi));
        let (_, Some(hi)) = expansion_bounds(f, i, Location::AtInfinity) else {
            return Err(Error::Invariant("expansion at infinity unbounded above".into()));
        };
        // below this the dual mode lands in negative degree
        let lo = ra - 1 - dphi;
        if lo > hi {
            return Ok(());
        }
        let dec = mode_decompose(f, i, Location::AtInfinity, (lo, hi))?;
        let phiv = SparseVec::unit(t.phi);
        let mut labels = t.labels.clone();
        labels.remove(i);
        for (k, g) in dec.entries {
            if g.is_zero() {
                continue;
            }
            if a == self.alg.vacuum {
                // 𝓡(z) 1 = z^2 1, so only z_i^{-1} survives, with the residue sign
                if k == -1 {
                    for (key, z) in g.terms() {
                        out.chain.add_term(Term { key: *key, labels: labels.clone(), phi: t.phi, c: t.c }, -(z * sign));
                    }
                }
                continue;
            }
            let mut value = SparseVec::new();
            let mut truncated = false;
            for (e, u) in self.dual.rz_terms(a) {
                match self.dual.act(u, -k - e, &phiv) {
                    Some(w) => value.add(&w),
                    None => truncated = true,
                }
            }
            if truncated {
                out.leaked += 1;
                out.leaked_module += 1;
                continue;
            }
            for (phi, y) in value.iter() {
                let coef = -(sign * y);
                for (key, z) in g.terms() {
                    out.chain.add_term(Term { key: *key, labels: labels.clone(), phi, c: t.c }, z * &coef);
                }
            }
        }
        Ok(())
    }

    /// Text form `coef*monomial|a1,a2|phi|c`, terms joined by ` + `.
    pub fn format_chain(&self, chain: &Chain) -> String {
        if chain.is_zero() {
            return "0".into();
        }
        chain
            .terms()
            .map(|(t, x)| {
                let labels: Vec<&str> = t.labels.iter().map(|a| self.alg.space.label(*a)).collect();
                format!(
                    "{x}*{}|{}|{}|{}",
                    t.key,
                    labels.join(","),
                    self.dual.space().label(t.phi),
                    self.c.space.label(t.c)
                )
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Inverse of [`ComplexData::format_chain`].
    pub fn parse_chain(&self, text: &str, arity: usize) -> Result<Chain> {
        let mut out = Chain::new();
        let text = text.trim();
        if text == "0" {
            return Ok(out);
        }
        for part in text.split(" + ") {
            let mut fields = part.trim().split('|');
            let (Some(sec), Some(labels), Some(phi), Some(c), None) =
                (fields.next(), fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::Parse(format!("chain term {part:?} needs four |-separated fields")));
            };
            let labels: Vec<usize> = if labels.is_empty() {
                Vec::new()
            } else {
                labels.split(',').map(|l| self.alg.basis_index(l.trim())).collect::<Result<_>>()?
            };
            if labels.len() != arity {
                return Err(Error::Parse(format!("chain term {part:?} has {} labels, expected {arity}", labels.len())));
            }
            let phi = self
                .dual
                .space()
                .index_of(phi.trim())
                .ok_or_else(|| Error::Parse(format!("unknown dual basis label {phi:?}")))?;
            let c = self.c.space.index_of(c.trim()).ok_or_else(|| Error::Parse(format!("unknown basis label {c:?}")))?;
            let f = if arity == 0 {
                let coef = sec.trim().trim_end_matches("*1");
                RationalSection::constant(0, coef.parse()?)
            } else {
                RationalSection::parse(sec, arity)?
            };
            for (key, x) in f.terms() {
                out.add_term(Term { key: *key, labels: labels.clone(), phi, c }, x.clone());
            }
        }
        Ok(out)
    }
}

/// One summand of the differential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferentialPart {
    Collision(usize, usize),
    AtZero(usize),
    AtInfinity(usize),
}

impl fmt::Display for Caps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D={} N_A={} N_C={} W=[{},{}] Q={}",
            self.d, self.n_a, self.n_c, self.window.0, self.window.1, self.pole
        )
    }
}
