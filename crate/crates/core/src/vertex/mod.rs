//! Truncated graded vertex algebras and admissible modules stored as
//! structure-constant tables `a_(m) v`.

pub mod axioms;
pub mod cache;
pub mod closure;
pub mod heisenberg;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::Scalar;

pub use heisenberg::{fock_module, heisenberg_va};

/// Table of modes `a_(m) v` for basis `a` of the algebra and basis `v` of the
/// target, keyed by `(a, m, v)`. A missing key whose result degree lies in
/// `[0, cap]` means the mode is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeTable {
    entries: HashMap<(usize, i64, usize), SparseVec>,
}

impl ModeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: usize, m: i64, v: usize) -> Option<&SparseVec> {
        self.entries.get(&(a, m, v))
    }

    pub fn insert(&mut self, a: usize, m: i64, v: usize, value: SparseVec) {
        if value.is_zero() {
            self.entries.remove(&(a, m, v));
        } else {
            self.entries.insert((a, m, v), value);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by key.
    pub fn sorted(&self) -> Vec<((usize, i64, usize), &SparseVec)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, x)| (*k, x)).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }
}

/// Outcome of looking up a basis mode.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeValue<'a> {
    /// The result degree is negative, so the mode vanishes identically.
    Vanishes,
    /// The result degree exceeds the truncation cap.
    Truncated,
    Value(Option<&'a SparseVec>),
}

/// Vertex algebra `V` truncated to degrees `0..=cap`.
#[derive(Clone, Debug)]
pub struct VertexAlgebraData {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub space: GradedSpace,
    pub cap: i64,
    pub vacuum: usize,
    pub omega: SparseVec,
    pub central_charge: Scalar,
    /// Strong generators (basis indices).
    pub generators: Vec<usize>,
    /// For each non-vacuum basis vector `u`, a triple `(g, k, v)` with
    /// `u = g_(-k) v`, `g` a generator and `k >= 1`.
    pub construction: Vec<Option<(usize, i64, usize)>>,
    pub modes: ModeTable,
}

/// Admissible module over a truncated vertex algebra, truncated to
/// degrees `0..=cap`.
#[derive(Clone, Debug)]
pub struct ModuleData {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub algebra: Arc<VertexAlgebraData>,
    pub space: GradedSpace,
    pub cap: i64,
    pub modes: ModeTable,
}

impl VertexAlgebraData {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn degree(&self, a: usize) -> i64 {
        self.space.degree(a)
    }

    pub fn vacuum_vec(&self) -> SparseVec {
        SparseVec::unit(self.vacuum)
    }

    pub fn basis_index(&self, label: &str) -> Result<usize> {
        self.space
            .index_of(label)
            .ok_or_else(|| Error::InvalidArgument(format!("no basis vector {label:?} in {}", self.name)))
    }

    pub fn mode(&self, a: usize, m: i64, b: usize) -> ModeValue<'_> {
        lookup(&self.space, &self.space, self.cap, &self.modes, a, m, b)
    }

    /// `a_(m) b`, with anything beyond the cap projected away.
    pub fn mode_apply(&self, a: &SparseVec, m: i64, b: &SparseVec) -> SparseVec {
        apply(&self.space, &self.space, self.cap, &self.modes, a, m, b)
    }

    /// `T a = a_(-2) 1`.
    pub fn translation(&self, a: &SparseVec) -> SparseVec {
        self.mode_apply(a, -2, &self.vacuum_vec())
    }

    /// `L_n = ω_(n+1)` on the algebra.
    pub fn virasoro(&self, n: i64, a: &SparseVec) -> SparseVec {
        self.mode_apply(&self.omega, n + 1, a)
    }

    /// The algebra as a module over itself.
    pub fn adjoint(self: &Arc<Self>) -> ModuleData {
        ModuleData {
            name: self.name.clone(),
            params: self.params.clone(),
            algebra: Arc::clone(self),
            space: self.space.clone(),
            cap: self.cap,
            modes: self.modes.clone(),
        }
    }

    /// Checks that every stored entry obeys the degree law.
    pub fn validate(&self) -> Result<()> {
        validate_table(&self.space, &self.space, self.cap, &self.modes)
    }
}

impl ModuleData {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn degree(&self, v: usize) -> i64 {
        self.space.degree(v)
    }

    pub fn mode(&self, a: usize, m: i64, v: usize) -> ModeValue<'_> {
        lookup(&self.algebra.space, &self.space, self.cap, &self.modes, a, m, v)
    }

    /// `a_(m) v`, with anything beyond the cap projected away.
    pub fn mode_apply(&self, a: &SparseVec, m: i64, v: &SparseVec) -> SparseVec {
        apply(&self.algebra.space, &self.space, self.cap, &self.modes, a, m, v)
    }

    /// Nonzero modes of `Y(a, z) v` whose results lie within the cap.
    pub fn field_apply(&self, a: &SparseVec, v: &SparseVec) -> Vec<(i64, SparseVec)> {
        let (Some(ra), Some(dv)) = (max_deg(&self.algebra.space, a), max_deg(&self.space, v)) else {
            return Vec::new();
        };
        let lo = ra + dv - 1 - self.cap;
        let hi = ra + dv - 1;
        (lo..=hi)
            .map(|m| (m, self.mode_apply(a, m, v)))
            .filter(|(_, x)| !x.is_zero())
            .collect()
    }

    /// `L_n = ω_(n+1)` on the module.
    pub fn virasoro(&self, n: i64, v: &SparseVec) -> SparseVec {
        self.mode_apply(&self.algebra.omega, n + 1, v)
    }

    pub fn validate(&self) -> Result<()> {
        validate_table(&self.algebra.space, &self.space, self.cap, &self.modes)
    }
}

fn max_deg(space: &GradedSpace, v: &SparseVec) -> Option<i64> {
    v.indices().map(|i| space.degree(i)).max()
}

fn lookup<'a>(
    alg: &GradedSpace,
    target: &GradedSpace,
    cap: i64,
    table: &'a ModeTable,
    a: usize,
    m: i64,
    v: usize,
) -> ModeValue<'a> {
    let d = alg.degree(a) + target.degree(v) - m - 1;
    if d < 0 {
        ModeValue::Vanishes
    } else if d > cap {
        ModeValue::Truncated
    } else {
        ModeValue::Value(table.get(a, m, v))
    }
}

fn apply(
    alg: &GradedSpace,
    target: &GradedSpace,
    cap: i64,
    table: &ModeTable,
    a: &SparseVec,
    m: i64,
    v: &SparseVec,
) -> SparseVec {
    let mut out = SparseVec::new();
    for (i, x) in a.iter() {
        for (j, y) in v.iter() {
            if let ModeValue::Value(Some(r)) = lookup(alg, target, cap, table, i, m, j) {
                out.add_scaled(r, &(x * y));
            }
        }
    }
    out
}

fn validate_table(alg: &GradedSpace, target: &GradedSpace, cap: i64, table: &ModeTable) -> Result<()> {
    for ((a, m, v), r) in table.sorted() {
        if a >= alg.dim() || v >= target.dim() {
            return Err(Error::Corrupted(format!("mode entry ({a}, {m}, {v}) refers to a missing basis vector")));
        }
        let d = alg.degree(a) + target.degree(v) - m - 1;
        if d < 0 || d > cap {
            return Err(Error::Corrupted(format!("mode entry ({a}, {m}, {v}) lands in degree {d} outside 0..={cap}")));
        }
        for i in r.indices() {
            if i >= target.dim() || target.degree(i) != d {
                return Err(Error::Corrupted(format!(
                    "mode entry ({}, {m}, {}) has a component off degree {d}",
                    alg.label(a),
                    target.label(v)
                )));
            }
        }
    }
    Ok(())
}

/// The one-dimensional vertex algebra spanned by the vacuum, with its
/// one-dimensional module.
pub fn trivial_va() -> (Arc<VertexAlgebraData>, ModuleData) {
    let space = GradedSpace::new(BTreeMap::from([(0, vec!["1".to_string()])]));
    let mut modes = ModeTable::new();
    modes.insert(0, -1, 0, SparseVec::unit(0));
    let alg = Arc::new(VertexAlgebraData {
        name: "trivial".into(),
        params: BTreeMap::new(),
        space,
        cap: 0,
        vacuum: 0,
        omega: SparseVec::new(),
        central_charge: Scalar::zero(),
        generators: Vec::new(),
        construction: vec![None],
        modes,
    });
    let module = trivial_module(&alg);
    (alg, module)
}

/// The one-dimensional module of the trivial algebra.
pub fn trivial_module(alg: &Arc<VertexAlgebraData>) -> ModuleData {
    let mut modes = ModeTable::new();
    modes.insert(0, -1, 0, SparseVec::unit(0));
    ModuleData {
        name: "trivial".into(),
        params: BTreeMap::new(),
        algebra: Arc::clone(alg),
        space: GradedSpace::new(BTreeMap::from([(0, vec!["v".to_string()])])),
        cap: 0,
        modes,
    }
}
