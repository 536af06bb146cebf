//! `H_0` and `H_1` of weight slices, and the structural checks on the
//! differentials.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{nullspace_with_free, Echelon, SparseVec};

use super::{Applied, Caps, Chain, ComplexData, Term, WeightIndex};

/// Span of the translates `(∂_i + T_i) y` for `y` in a weight slice,
/// indexed over whatever terms appear.
pub struct TranslationSpan {
    index: HashMap<Term, usize>,
    terms: Vec<Term>,
    echelon: Echelon,
    /// Translates dropped because `T` left the algebra cap.
    pub leaked: usize,
}

impl TranslationSpan {
    /// Span of translates of the weight `weight - 1` slice of `C̃_n`.
    pub fn new(cx: &ComplexData, n: usize, weight: i64, caps: &Caps) -> Result<Self> {
        let sources = cx.enumerate_basis(n, weight - 1, caps)?;
        let images: Vec<Result<Vec<Applied>>> = sources
            .par_iter()
            .map(|y| (0..n).map(|i| cx.translate(i, &Chain::from_term(y.clone()))).collect())
            .collect();
        let mut span = TranslationSpan { index: HashMap::new(), terms: Vec::new(), echelon: Echelon::new(usize::MAX), leaked: 0 };
        let mut vectors = Vec::new();
        for r in images {
            for img in r? {
                if !img.is_exact() {
                    span.leaked += 1;
                    continue;
                }
                let v = span.intern(&img.chain);
                vectors.push(v);
            }
        }
        for v in vectors {
            span.echelon.insert(v);
        }
        Ok(span)
    }

    fn intern(&mut self, chain: &Chain) -> SparseVec {
        let mut v = SparseVec::new();
        for (t, x) in chain.terms() {
            let next = self.terms.len();
            let i = *self.index.entry(t.clone()).or_insert(next);
            if i == next {
                self.terms.push(t.clone());
            }
            v.add_term(i, x.clone());
        }
        v
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    pub fn contains(&self, chain: &Chain) -> bool {
        let mut v = SparseVec::new();
        for (t, x) in chain.terms() {
            match self.index.get(t) {
                Some(i) => v.add_term(*i, x.clone()),
                None => return false,
            }
        }
        self.echelon.contains(&v)
    }

    /// Basis of the intersection of the span with the span of `basis`, in
    /// coordinates of `basis`.
    pub fn restricted_to(&self, basis: &[Term]) -> Vec<SparseVec> {
        // order outside terms first so rows pivoting inside stay inside
        let inside: HashMap<&Term, usize> = basis.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let outside: Vec<usize> = (0..self.terms.len()).filter(|i| !inside.contains_key(&self.terms[*i])).collect();
        let k = outside.len();
        let mut renumber = vec![0usize; self.terms.len()];
        for (pos, i) in outside.iter().enumerate() {
            renumber[*i] = pos;
        }
        for (i, t) in self.terms.iter().enumerate() {
            if let Some(j) = inside.get(t) {
                renumber[i] = k + j;
            }
        }
        let mut e = Echelon::new(k + basis.len());
        for p in self.echelon.clone().into_presentation().rows {
            e.insert(p.remap(|i| renumber[i]));
        }
        e.into_presentation()
            .rows
            .into_iter()
            .filter(|r| r.leading().is_some_and(|(p, _)| p >= k))
            .map(|r| r.iter().map(|(i, x)| (i - k, x.clone())).collect())
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomologyResult {
    pub weight: i64,
    pub caps: Caps,
    #[serde(rename = "dimH0")]
    pub dim_h0: usize,
    #[serde(rename = "dimH1")]
    pub dim_h1: usize,
    /// Contributions dropped at a degree cap, plus boundary columns whose
    /// image left the slice.
    pub leakage: usize,
    /// Contributions dropped at a degree cap by the differential of a chain
    /// in the leakage-free zone (see [`ComplexData::in_leakage_free_zone`]).
    /// Images that are exact but leave the slice window are not counted.
    pub zone_leakage: usize,
    pub cycles: Vec<String>,
    #[serde(skip)]
    pub cycle_chains: Vec<Chain>,
    #[serde(skip)]
    pub details: HomologyDetails,
}

/// Slice dimensions behind a [`HomologyResult`].
#[derive(Clone, Debug, Default)]
pub struct HomologyDetails {
    pub dim_c0: usize,
    pub dim_c1_tilde: usize,
    pub dim_c2_tilde: usize,
    pub translations_in_slice: usize,
    pub dim_ker_d1: usize,
    pub rank_boundaries: usize,
    pub leaky_boundary_columns: usize,
    /// The weight-`w` slice basis of `C̃_1`, in which cycles are expressed.
    pub c1_basis: Vec<Term>,
    /// Basis of `ker d1` in `c1_basis` coordinates, one vector per free
    /// column (1 there, 0 in the other free columns).
    pub kernel: Vec<SparseVec>,
    /// Free column of each kernel vector.
    pub kernel_free: Vec<usize>,
    /// Rows of `d1` over `c1_basis` coordinates.
    pub d1_rows: Vec<SparseVec>,
    /// Cycle basis of `H_1` in `c1_basis` coordinates.
    pub cycle_vectors: Vec<SparseVec>,
    /// Translation span restricted to the slice.
    pub translations: Vec<SparseVec>,
    /// Images of the non-leaking `C̃_2` basis chains.
    pub exact_boundaries: Vec<SparseVec>,
}

fn columns(cx: &ComplexData, basis: &[Term]) -> Result<Vec<Applied>> {
    basis.par_iter().map(|t| cx.differential(&Chain::from_term(t.clone()))).collect()
}

/// `H_0` and `H_1` of the weight slice, computed on the quotient by the
/// translation span. Boundary columns that leak out of the slice are left
/// out of the image and counted in `leakage`.
pub fn homology(cx: &ComplexData, idx: &WeightIndex) -> Result<HomologyResult> {
    let w = idx.weight;
    let caps = &idx.caps;
    let b0 = cx.enumerate_basis(0, w, caps)?;
    let b1 = cx.enumerate_basis(1, w, caps)?;
    let b2 = cx.enumerate_basis(2, w, caps)?;
    let i0: HashMap<Term, usize> = b0.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let i1: HashMap<Term, usize> = b1.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let mut leakage = 0;

    // translations: the weight w-1 slice of C̃_1 only needs its exponent to fit
    let wide = Caps { window: (caps.window.0 - 1, caps.window.1 + 1), ..*caps };
    let span = TranslationSpan::new(cx, 1, w, &wide)?;
    let translations = span.restricted_to(&b1);

    // d1 as rows over C̃_1 coordinates
    let in_zone = |t: &Term| cx.in_leakage_free_zone(t, caps);
    let mut zone_leakage = 0;
    let d1 = columns(cx, &b1)?;
    let mut rows = vec![SparseVec::new(); b0.len()];
    let mut rank_d1 = Echelon::new(b0.len());
    for (j, col) in d1.iter().enumerate() {
        leakage += col.leaked;
        if in_zone(&b1[j]) {
            zone_leakage += col.leaked;
        }
        let v = col.chain.coordinates(&i0).expect("d1 stays in the weight slice of C_0");
        for (i, x) in v.iter() {
            rows[i].add_term(j, x.clone());
        }
        rank_d1.insert(v);
    }
    let (kernel_free, kernel): (Vec<usize>, Vec<SparseVec>) = nullspace_with_free(&rows, b1.len()).into_iter().unzip();

    let d2 = columns(cx, &b2)?;
    let mut boundaries = Echelon::new(b1.len());
    for t in &translations {
        boundaries.insert(t.clone());
    }
    let mut leaky = 0;
    let mut exact_boundaries = Vec::new();
    for (col, t) in d2.iter().zip(&b2) {
        match (col.is_exact(), col.chain.coordinates(&i1)) {
            (true, Some(v)) => {
                boundaries.insert(v.clone());
                exact_boundaries.push(v);
            }
            _ => {
                leaky += 1;
                if in_zone(t) {
                    zone_leakage += col.leaked;
                }
            }
        }
    }
    leakage += leaky;
    let rank_boundaries = boundaries.rank();

    let mut cycles = Vec::new();
    let mut cycle_vectors = Vec::new();
    for k in &kernel {
        if !k.is_zero() && boundaries.insert(k.clone()) {
            cycle_vectors.push(k.clone());
            cycles.push(Chain::from_coordinates(&b1, k));
        }
    }
    if leakage > 0 {
        log::info!("weight {w} slice at {caps}: {leakage} contributions leaked at the caps");
    }
    Ok(HomologyResult {
        weight: w,
        caps: *caps,
        dim_h0: b0.len() - rank_d1.rank(),
        dim_h1: cycles.len(),
        leakage,
        zone_leakage,
        cycles: cycles.iter().map(|c| cx.format_chain(c)).collect(),
        cycle_chains: cycles,
        details: HomologyDetails {
            dim_c0: b0.len(),
            dim_c1_tilde: b1.len(),
            dim_c2_tilde: b2.len(),
            translations_in_slice: translations.len(),
            dim_ker_d1: kernel.len(),
            rank_boundaries,
            leaky_boundary_columns: leaky,
            c1_basis: b1,
            kernel,
            kernel_free,
            d1_rows: rows,
            cycle_vectors,
            translations,
            exact_boundaries,
        },
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DSquaredReport {
    pub n: usize,
    pub checked: usize,
    /// Basis chains skipped because a composite left a degree cap.
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl DSquaredReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `d_{n-1} ∘ d_n` on every basis chain of the weight slice of `C̃_n`
/// (or on the first `limit` of them): exactly zero for `n = 2`, and zero in
/// `C_1` (a sum of translates) for `n = 3`.
pub fn d_squared_check(cx: &ComplexData, n: usize, idx: &WeightIndex, limit: Option<usize>) -> Result<DSquaredReport> {
    if !(2..=3).contains(&n) {
        return Err(crate::Error::InvalidArgument(format!("d² check needs n = 2 or 3, got {n}")));
    }
    let mut basis = cx.enumerate_basis(n, idx.weight, &idx.caps)?;
    if let Some(l) = limit {
        basis.truncate(l);
    }
    let composites: Vec<Result<Option<(Term, Chain)>>> = basis
        .par_iter()
        .map(|t| {
            let first = cx.differential(&Chain::from_term(t.clone()))?;
            if !first.is_exact() {
                return Ok(None);
            }
            let second = cx.differential(&first.chain)?;
            Ok(second.is_exact().then(|| (t.clone(), second.chain)))
        })
        .collect();
    let mut report = DSquaredReport { n, ..Default::default() };
    let mut pending = Vec::new();
    for r in composites {
        match r? {
            None => report.skipped += 1,
            Some((t, z)) => pending.push((t, z)),
        }
    }
    let span = if n == 3 && pending.iter().any(|(_, z)| !z.is_zero()) {
        Some(TranslationSpan::new(cx, 1, idx.weight, &span_caps(cx, pending.iter().map(|(_, z)| z), &idx.caps))?)
    } else {
        None
    };
    for (t, z) in pending {
        report.checked += 1;
        let ok = z.is_zero() || span.as_ref().is_some_and(|s| s.contains(&z));
        if !ok {
            report.failures.push(format!("{} -> {}", cx.format_chain(&Chain::from_term(t)), cx.format_chain(&z)));
        }
    }
    Ok(report)
}

/// Caps whose window covers every exponent and pole order in `chains`, with
/// one unit of margin.
fn span_caps<'a>(cx: &ComplexData, chains: impl Iterator<Item = &'a Chain>, base: &Caps) -> Caps {
    let _ = cx;
    let (mut lo, mut hi, mut pole) = (base.window.0, base.window.1, base.pole);
    for ch in chains {
        for (t, _) in ch.terms() {
            for f in t.key.factors() {
                match f {
                    crate::laurent::Factor::Pow(a) => {
                        lo = lo.min(*a);
                        hi = hi.max(*a);
                    }
                    crate::laurent::Factor::Pole { order, .. } => pole = pole.max(*order),
                }
            }
        }
    }
    Caps { window: (lo - 1, hi + 1), pole: pole + 1, ..*base }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every basis chain of the slice maps under `d_n` to weight `w`, and under
/// each `∂_i + T_i` to weight `w + 1`.
pub fn check_weight_homogeneity(cx: &ComplexData, n: usize, idx: &WeightIndex) -> Result<InvariantReport> {
    let basis = cx.enumerate_basis(n, idx.weight, &idx.caps)?;
    let results: Vec<Result<Vec<String>>> = basis
        .par_iter()
        .map(|t| {
            let mut bad = Vec::new();
            let x = Chain::from_term(t.clone());
            if n >= 1 {
                for (s, _) in cx.differential(&x)?.chain.terms() {
                    if cx.weight(s) != idx.weight {
                        bad.push(format!("d{n} of {} has a term of weight {}", cx.format_chain(&x), cx.weight(s)));
                    }
                }
            }
            for i in 0..n {
                for (s, _) in cx.translate(i, &x)?.chain.terms() {
                    if cx.weight(s) != idx.weight + 1 {
                        bad.push(format!("translate {i} of {} has a term of weight {}", cx.format_chain(&x), cx.weight(s)));
                    }
                }
            }
            Ok(bad)
        })
        .collect();
    let mut report = InvariantReport::default();
    for r in results {
        report.checked += 1;
        report.failures.extend(r?);
    }
    Ok(report)
}

/// `d_n` maps translates of the weight `w-1` slice of `C̃_n` into the
/// translation span of `C̃_{n-1}` (zero when `n = 1`).
pub fn check_quotient_invariance(cx: &ComplexData, n: usize, idx: &WeightIndex) -> Result<InvariantReport> {
    let sources = cx.enumerate_basis(n, idx.weight - 1, &idx.caps)?;
    let images: Vec<Result<Vec<Option<(String, Chain)>>>> = sources
        .par_iter()
        .map(|y| {
            let x = Chain::from_term(y.clone());
            (0..n)
                .map(|i| {
                    let t = cx.translate(i, &x)?;
                    if !t.is_exact() {
                        return Ok(None);
                    }
                    let d = cx.differential(&t.chain)?;
                    Ok(d.is_exact().then(|| (format!("d{n}(translate {i} of {})", cx.format_chain(&x)), d.chain)))
                })
                .collect()
        })
        .collect();
    let mut report = InvariantReport::default();
    let mut pending = Vec::new();
    for r in images {
        for item in r? {
            match item {
                None => report.skipped += 1,
                Some(p) => pending.push(p),
            }
        }
    }
    let span = if n >= 2 {
        Some(TranslationSpan::new(cx, n - 1, idx.weight, &span_caps(cx, pending.iter().map(|(_, z)| z), &idx.caps))?)
    } else {
        None
    };
    for (label, z) in pending {
        report.checked += 1;
        let ok = z.is_zero() || span.as_ref().is_some_and(|s| s.contains(&z));
        if !ok {
            report.failures.push(format!("{label} = {} is not a sum of translates", cx.format_chain(&z)));
        }
    }
    Ok(report)
}
