//! Exact sparse linear algebra over ℚ: graded spaces, degree-shifting maps,
//! reduced row-echelon forms, kernels and quotients.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sparse vector with exact coefficients, indexed by basis position.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseVec {
    entries: BTreeMap<usize, Scalar>,
}

impl std::fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        let mut v = Self::new();
        v.entries.insert(i, Scalar::one());
        v
    }

    pub fn from_dense(values: &[Scalar]) -> Self {
        let mut v = Self::new();
        for (i, x) in values.iter().enumerate() {
            v.add_term(i, x.clone());
        }
        v
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, Scalar)>>(pairs: I) -> Self {
        let mut v = Self::new();
        for (i, x) in pairs {
            v.add_term(i, x);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.entries.get(&i).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn coeff(&self, i: usize) -> Option<&Scalar> {
        self.entries.get(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> + '_ {
        self.entries.iter().map(|(i, x)| (*i, x))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn leading(&self) -> Option<(usize, &Scalar)> {
        self.entries.iter().next().map(|(i, x)| (*i, x))
    }

    pub fn add_term(&mut self, i: usize, x: Scalar) {
        if x.is_zero() {
            return;
        }
        match self.entries.entry(i) {
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

    /// `self += coef * other`
    pub fn add_scaled(&mut self, other: &SparseVec, coef: &Scalar) {
        if coef.is_zero() {
            return;
        }
        for (i, x) in other.iter() {
            self.add_term(i, x * coef);
        }
    }

    pub fn add(&mut self, other: &SparseVec) {
        for (i, x) in other.iter() {
            self.add_term(i, x.clone());
        }
    }

    pub fn scaled(&self, coef: &Scalar) -> SparseVec {
        if coef.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, x)| (*i, x * coef)).collect(),
        }
    }

    pub fn negated(&self) -> SparseVec {
        SparseVec {
            entries: self.entries.iter().map(|(i, x)| (*i, -x)).collect(),
        }
    }

    pub fn dot(&self, other: &SparseVec) -> Scalar {
        let (small, large) = if self.nnz() <= other.nnz() { (self, other) } else { (other, self) };
        let mut acc = Scalar::zero();
        for (i, x) in small.iter() {
            if let Some(y) = large.coeff(i) {
                acc += x * y;
            }
        }
        acc
    }

    /// Re-index through `f`; entries mapped to the same index are summed.
    pub fn remap<F: Fn(usize) -> usize>(&self, f: F) -> SparseVec {
        SparseVec::from_pairs(self.iter().map(|(i, x)| (f(i), x.clone())))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); dim];
        for (i, x) in self.iter() {
            out[i] = x.clone();
        }
        out
    }
}

impl FromIterator<(usize, Scalar)> for SparseVec {
    fn from_iter<I: IntoIterator<Item = (usize, Scalar)>>(iter: I) -> Self {
        SparseVec::from_pairs(iter)
    }
}

/// Finite-dimensional ℤ-graded vector space with named basis vectors.
///
/// Basis vectors are indexed globally, ordered by degree and then by the
/// order given for each degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GradedSpaceRepr", into = "GradedSpaceRepr")]
pub struct GradedSpace {
    labels: Vec<String>,
    degrees: Vec<i64>,
    blocks: BTreeMap<i64, Range<usize>>,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct GradedSpaceRepr {
    components: BTreeMap<i64, Vec<String>>,
}

impl From<GradedSpaceRepr> for GradedSpace {
    fn from(r: GradedSpaceRepr) -> Self {
        GradedSpace::new(r.components)
    }
}

impl From<GradedSpace> for GradedSpaceRepr {
    fn from(g: GradedSpace) -> Self {
        GradedSpaceRepr { components: g.components() }
    }
}

impl GradedSpace {
    /// Panics if a label repeats.
    pub fn new(components: BTreeMap<i64, Vec<String>>) -> Self {
        let mut labels = Vec::new();
        let mut degrees = Vec::new();
        let mut blocks = BTreeMap::new();
        let mut lookup = HashMap::new();
        for (deg, names) in components {
            if names.is_empty() {
                continue;
            }
            let start = labels.len();
            for name in names {
                let prev = lookup.insert(name.clone(), labels.len());
                assert!(prev.is_none(), "duplicate basis label {name}");
                labels.push(name);
                degrees.push(deg);
            }
            blocks.insert(deg, start..labels.len());
        }
        GradedSpace { labels, degrees, blocks, lookup }
    }

    pub fn zero() -> Self {
        GradedSpace::new(BTreeMap::new())
    }

    pub fn components(&self) -> BTreeMap<i64, Vec<String>> {
        self.blocks
            .iter()
            .map(|(d, r)| (*d, self.labels[r.clone()].to_vec()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn dim_at(&self, degree: i64) -> usize {
        self.blocks.get(&degree).map_or(0, |r| r.len())
    }

    pub fn range_at(&self, degree: i64) -> Range<usize> {
        self.blocks.get(&degree).cloned().unwrap_or(0..0)
    }

    pub fn degree(&self, index: usize) -> i64 {
        self.degrees[index]
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.blocks.keys().copied()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.blocks.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.blocks.keys().next_back().copied()
    }

    /// Degree of a homogeneous vector, `None` for zero; errors on mixed degrees.
    pub fn homogeneous_degree(&self, v: &SparseVec) -> Result<Option<i64>> {
        let mut deg = None;
        for i in v.indices() {
            let d = self.degree(i);
            match deg {
                None => deg = Some(d),
                Some(e) if e != d => {
                    return Err(Error::InvalidArgument("vector is not homogeneous".into()))
                }
                _ => {}
            }
        }
        Ok(deg)
    }
}

/// Linear map between graded spaces raising degree by `shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMap {
    source: GradedSpace,
    target: GradedSpace,
    shift: i64,
    // keyed by (source, target) for column access
    entries: BTreeMap<(usize, usize), Scalar>,
}

impl SparseMap {
    pub fn new(source: GradedSpace, target: GradedSpace, shift: i64) -> Self {
        SparseMap { source, target, shift, entries: BTreeMap::new() }
    }

    pub fn source(&self) -> &GradedSpace {
        &self.source
    }

    pub fn target(&self) -> &GradedSpace {
        &self.target
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Scalar)> + '_ {
        self.entries.iter().map(|((s, t), x)| (*t, *s, x))
    }

    /// Adds `value` to the (target, source) entry, enforcing the degree shift.
    pub fn add_entry(&mut self, target: usize, source: usize, value: Scalar) -> Result<()> {
        let (ds, dt) = (self.source.degree(source), self.target.degree(target));
        if dt != ds + self.shift {
            return Err(Error::InvalidArgument(format!(
                "entry ({target},{source}) maps degree {ds} to {dt}, expected shift {}",
                self.shift
            )));
        }
        if value.is_zero() {
            return Ok(());
        }
        let e = self.entries.entry((source, target)).or_insert_with(Scalar::zero);
        *e += value;
        if e.is_zero() {
            self.entries.remove(&(source, target));
        }
        Ok(())
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (s, x) in v.iter() {
            for ((_, t), a) in self.entries.range((s, 0)..(s + 1, 0)) {
                out.add_term(*t, a * x);
            }
        }
        out
    }

    /// Column of the map at a source basis vector.
    pub fn column(&self, source: usize) -> SparseVec {
        self.entries
            .range((source, 0)..(source + 1, 0))
            .map(|((_, t), x)| (*t, x.clone()))
            .collect()
    }

    /// `other ∘ self`
    pub fn then(&self, other: &SparseMap) -> Result<SparseMap> {
        if self.target != other.source {
            return Err(Error::InvalidArgument("composition of incompatible maps".into()));
        }
        let mut out = SparseMap::new(self.source.clone(), other.target.clone(), self.shift + other.shift);
        for ((s, mid), x) in self.entries.iter() {
            for ((_, t), y) in other.entries.range((*mid, 0)..(*mid + 1, 0)) {
                out.add_entry(*t, *s, x * y)?;
            }
        }
        Ok(out)
    }

    /// Matrix of the degree slice `source_degree -> source_degree + shift`,
    /// as rows over local source coordinates.
    pub fn slice_rows(&self, source_degree: i64) -> Vec<SparseVec> {
        let src = self.source.range_at(source_degree);
        let tgt = self.target.range_at(source_degree + self.shift);
        let mut rows = vec![SparseVec::new(); tgt.len()];
        for ((s, t), x) in self.entries.iter() {
            if src.contains(s) && tgt.contains(t) {
                rows[t - tgt.start].add_term(s - src.start, x.clone());
            }
        }
        rows
    }

    /// Null space of the degree slice, in local source coordinates.
    pub fn kernel(&self, source_degree: i64) -> SubspacePresentation {
        let n = self.source.dim_at(source_degree);
        let basis = nullspace(&self.slice_rows(source_degree), n);
        echelonize(n, basis)
    }
}

/// Span of vectors in reduced row-echelon form (leading coefficient 1,
/// pivot columns cleared in every other row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspacePresentation {
    pub ambient_dim: usize,
    pub rows: Vec<SparseVec>,
    pub pivots: Vec<usize>,
}

impl SubspacePresentation {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Non-pivot coordinates; their unit vectors span a complement.
    pub fn complement(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.ambient_dim];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.ambient_dim).filter(|i| !is_pivot[*i]).collect()
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Reduces `v` modulo the span; the result vanishes on pivot columns.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut out = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = out.get(p);
            if !c.is_zero() {
                out.add_scaled(row, &-c);
            }
        }
        out
    }
}

/// Reduced row-echelon basis of the span of `rows`.
pub fn echelonize<I: IntoIterator<Item = SparseVec>>(ambient_dim: usize, rows: I) -> SubspacePresentation {
    let mut e = Echelon::new(ambient_dim);
    for r in rows {
        e.insert(r);
    }
    e.into_presentation()
}

/// Basis of `{x : rows · x = 0}`, one vector per free column, with a 1 in
/// that column and zeros in the other free columns.
pub fn nullspace(rows: &[SparseVec], ncols: usize) -> Vec<SparseVec> {
    nullspace_with_free(rows, ncols).into_iter().map(|(_, v)| v).collect()
}

/// [`nullspace`] together with the free column of each basis vector.
pub fn nullspace_with_free(rows: &[SparseVec], ncols: usize) -> Vec<(usize, SparseVec)> {
    let rref = echelonize(ncols, rows.iter().cloned());
    let mut out = Vec::new();
    for f in rref.complement() {
        let mut v = SparseVec::unit(f);
        for (row, &p) in rref.rows.iter().zip(&rref.pivots) {
            let c = row.get(f);
            if !c.is_zero() {
                v.add_term(p, -c);
            }
        }
        out.push((f, v));
    }
    out
}

/// Dimension of `ambient / sub` with the deterministic complement basis of
/// non-pivot coordinates.
pub fn quotient_dim(ambient_dim: usize, sub: &SubspacePresentation) -> (usize, Vec<usize>) {
    assert_eq!(ambient_dim, sub.ambient_dim, "subspace lives in a different ambient space");
    let comp = sub.complement();
    (ambient_dim - sub.rank(), comp)
}

/// Coordinates of the class of `v` in `ambient / sub` w.r.t. the complement
/// basis returned by [`quotient_dim`].
pub fn project_to_quotient(sub: &SubspacePresentation, complement: &[usize], v: &SparseVec) -> SparseVec {
    let r = sub.reduce(v);
    let pos: HashMap<usize, usize> = complement.iter().enumerate().map(|(k, i)| (*i, k)).collect();
    r.iter().map(|(i, x)| (pos[&i], x.clone())).collect()
}

/// Incremental Gaussian elimination. Rows are kept in semi-echelon form with
/// distinct pivots; [`Echelon::into_presentation`] finishes the reduction.
///
/// With tracking enabled each row remembers which combination of inserted
/// vectors produced it.
#[derive(Clone, Debug)]
pub struct Echelon {
    dim: usize,
    rows: BTreeMap<usize, SparseVec>,
    combos: BTreeMap<usize, SparseVec>,
    track: bool,
    inserted: usize,
}

impl Echelon {
    pub fn new(dim: usize) -> Self {
        Echelon { dim, rows: BTreeMap::new(), combos: BTreeMap::new(), track: false, inserted: 0 }
    }

    pub fn tracked(dim: usize) -> Self {
        Echelon { track: true, ..Echelon::new(dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    fn reduce_inner(&self, v: &SparseVec, want_combo: bool) -> (SparseVec, SparseVec) {
        let mut v = v.clone();
        let mut combo = SparseVec::new();
        let mut cursor = 0usize;
        loop {
            let next = v
                .entries
                .range(cursor..)
                .find(|(k, _)| self.rows.contains_key(k))
                .map(|(k, x)| (*k, x.clone()));
            let Some((p, c)) = next else { break };
            v.add_scaled(&self.rows[&p], &-&c);
            if want_combo {
                combo.add_scaled(&self.combos[&p], &c);
            }
            cursor = p + 1;
        }
        (v, combo)
    }

    /// Residual of `v` after elimination against the current rows.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        self.reduce_inner(v, false).0
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Writes `v = residual + Σ coeffs[j] · inserted_j`. Requires tracking.
    pub fn express(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        assert!(self.track, "express() needs a tracked echelon");
        let (res, combo) = self.reduce_inner(v, true);
        (res, combo)
    }

    /// Inserts `v`; returns whether it was independent of the current rows.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let id = self.inserted;
        self.inserted += 1;
        let (r, combo) = self.reduce_inner(&v, self.track);
        let Some((p, lead)) = r.leading().map(|(p, x)| (p, x.clone())) else {
            return false;
        };
        debug_assert!(p < self.dim, "vector index {p} outside ambient dimension {}", self.dim);
        let inv = lead.recip();
        self.rows.insert(p, r.scaled(&inv));
        if self.track {
            let mut c = SparseVec::unit(id);
            c.add_scaled(&combo, &-Scalar::one());
            self.combos.insert(p, c.scaled(&inv));
        }
        true
    }

    pub fn into_presentation(self) -> SubspacePresentation {
        let pivots: Vec<usize> = self.rows.keys().copied().collect();
        let mut done: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for &p in pivots.iter().rev() {
            let mut row = self.rows[&p].clone();
            let later: Vec<(usize, Scalar)> = row
                .iter()
                .filter(|(k, _)| *k > p && done.contains_key(k))
                .map(|(k, x)| (k, x.clone()))
                .collect();
            for (k, c) in later {
                row.add_scaled(&done[&k], &-c);
            }
            done.insert(p, row);
        }
        SubspacePresentation {
            ambient_dim: self.dim,
            rows: pivots.iter().map(|p| done[p].clone()).collect(),
            pivots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> SparseVec {
        SparseVec::from_dense(&xs.iter().map(|x| Scalar::from_int(*x)).collect::<Vec<_>>())
    }

    /// Determinant by cofactor expansion; test oracle only.
    fn det(m: &[Vec<i64>]) -> i64 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|j| {
                let minor: Vec<Vec<i64>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x).collect()).collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det(&minor)
            })
            .sum()
    }

    #[test]
    fn proportional_rows_collapse() {
        let p = echelonize(2, [v(&[1, 2]), v(&[2, 4])]);
        assert_eq!(p.rows, vec![v(&[1, 2])]);
        assert_eq!(p.pivots, vec![0]);
    }

    #[test]
    fn empty_input_has_rank_zero() {
        let p = echelonize(5, Vec::<SparseVec>::new());
        assert_eq!(p.rank(), 0);
    }

    #[test]
    fn dependent_triple() {
        let m = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 2]];
        assert_eq!(det(&m), 0);
        let p = echelonize(3, m.iter().map(|r| v(r)));
        assert_eq!(p.rank(), 2);
        assert_eq!(p.rows, vec![v(&[1, 0, 1]), v(&[0, 1, 1])]);
    }

    #[test]
    fn rref_clears_pivot_columns() {
        let p = echelonize(3, [v(&[1, 1, 0]), v(&[0, 1, 1])]);
        assert_eq!(p.rows, vec![v(&[1, 0, -1]), v(&[0, 1, 1])]);
    }

    fn space(dims: &[(i64, usize)]) -> GradedSpace {
        let mut c = BTreeMap::new();
        for (d, n) in dims {
            c.insert(*d, (0..*n).map(|i| format!("e{d}_{i}")).collect());
        }
        GradedSpace::new(c)
    }

    #[test]
    fn kernels() {
        let s = space(&[(0, 3)]);
        let zero = SparseMap::new(s.clone(), s.clone(), 0);
        assert_eq!(zero.kernel(0).rank(), 3);

        let mut id = SparseMap::new(s.clone(), s.clone(), 0);
        for i in 0..3 {
            id.add_entry(i, i, Scalar::one()).unwrap();
        }
        assert_eq!(id.kernel(0).rank(), 0);

        let s2 = space(&[(0, 2)]);
        let mut m = SparseMap::new(s2.clone(), s2.clone(), 0);
        for (t, s, x) in [(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 4)] {
            m.add_entry(t, s, Scalar::from_int(x)).unwrap();
        }
        let k = m.kernel(0);
        assert_eq!(k.rank(), 1);
        let kv = &k.rows[0];
        // (2,-1) up to scale
        assert_eq!(kv.get(0) * Scalar::from_int(-1), kv.get(1) * Scalar::from_int(2));
        assert!(m.apply(kv).is_zero());
    }

    #[test]
    fn quotients() {
        let sub = echelonize(4, [v(&[1, 0, 0, 0])]);
        assert_eq!(quotient_dim(4, &sub).0, 3);
        let full = echelonize(2, [v(&[1, 0]), v(&[0, 1])]);
        assert_eq!(quotient_dim(2, &full).0, 0);
        let sub = echelonize(3, [v(&[1, 1, 0]), v(&[0, 1, 1])]);
        let (d, comp) = quotient_dim(3, &sub);
        assert_eq!(d, 1);
        assert_eq!(comp, vec![2]);
        // lift of a complement coordinate projects back to itself
        let lifted = SparseVec::unit(2);
        assert_eq!(project_to_quotient(&sub, &comp, &lifted), SparseVec::unit(0));
    }

    #[test]
    fn shift_is_enforced() {
        let s = space(&[(0, 1), (1, 1)]);
        let mut m = SparseMap::new(s.clone(), s.clone(), 1);
        assert!(m.add_entry(1, 0, Scalar::one()).is_ok());
        assert!(m.add_entry(0, 0, Scalar::one()).is_err());
    }

    #[test]
    fn tracked_expression() {
        let mut e = Echelon::tracked(3);
        e.insert(v(&[1, 1, 0]));
        e.insert(v(&[0, 1, 1]));
        let (res, c) = e.express(&v(&[1, 2, 1]));
        assert!(res.is_zero());
        assert_eq!(c, v(&[1, 1]));
    }
}
