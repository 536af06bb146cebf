//! Coordinate rings of configuration spaces of up to three points of ℂ^×,
//! `ℚ[z_i^{±1}, (z_i - z_j)^{-1}]`, in partial-fraction canonical form,
//! together with the expansions used to pair sections against fields.
//!
//! Variables are 0-based: index 0 is `z1`. A canonical monomial carries one
//! factor per variable. Variable `i` either appears as a Laurent power
//! `z_i^a`, or as a single pole `(z_i - z_j)^{-q}` at a later variable
//! `j > i`. This is the iterated partial-fraction basis (poles of `z1` at
//! `0, z2, z3`, then poles of `z2` at `0, z3`), so two sections are equal
//! iff their term tables are equal.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{binomial, Scalar};

pub const MAX_ARITY: usize = 3;

/// Widest mode window [`mode_decompose`] accepts by default.
pub const DEFAULT_MAX_WINDOW: i64 = 4096;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Factor {
    /// `z_i^a`
    Pow(i64),
    /// `(z_i - z_to)^{-order}` with `to > i` and `order >= 1`.
    Pole { to: u8, order: u32 },
}

/// Canonical monomial of arity `n <= 3`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialKey {
    arity: u8,
    factors: [Factor; MAX_ARITY],
}

impl MonomialKey {
    pub fn constant(arity: usize) -> Self {
        assert!(arity <= MAX_ARITY);
        MonomialKey { arity: arity as u8, factors: [Factor::Pow(0); MAX_ARITY] }
    }

    /// Panics on a non-canonical factor list.
    pub fn new(factors: &[Factor]) -> Self {
        assert!(factors.len() <= MAX_ARITY);
        let mut k = MonomialKey::constant(factors.len());
        for (i, f) in factors.iter().enumerate() {
            if let Factor::Pole { to, order } = f {
                assert!((*to as usize) > i && (*to as usize) < factors.len() && *order >= 1, "bad pole factor");
            }
            k.factors[i] = *f;
        }
        k
    }

    /// `z1^a` in one variable.
    pub fn power(a: i64) -> Self {
        MonomialKey::new(&[Factor::Pow(a)])
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors[..self.arity()]
    }

    /// Homogeneous degree: `+a` for `z_i^a`, `-q` for a pole of order `q`.
    pub fn total_degree(&self) -> i64 {
        self.factors()
            .iter()
            .map(|f| match f {
                Factor::Pow(a) => *a,
                Factor::Pole { order, .. } => -(*order as i64),
            })
            .sum()
    }

    /// Every Laurent exponent in `[lo, hi]` and every pole order `<= max_pole`.
    pub fn within(&self, lo: i64, hi: i64, max_pole: u32) -> bool {
        self.factors().iter().all(|f| match f {
            Factor::Pow(a) => lo <= *a && *a <= hi,
            Factor::Pole { order, .. } => *order <= max_pole,
        })
    }

    pub fn max_pole_order(&self) -> u32 {
        self.factors()
            .iter()
            .map(|f| match f {
                Factor::Pole { order, .. } => *order,
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    fn to_raw(self) -> Raw {
        let mut r = Raw::one(self.arity());
        for (i, f) in self.factors().iter().enumerate() {
            match *f {
                Factor::Pow(a) => r.exps[i] += a,
                Factor::Pole { to, order } => r.diag[pair(i, to as usize)] -= order as i64,
            }
        }
        r
    }

    /// All canonical keys of the given arity and total degree with Laurent
    /// exponents in `[lo, hi]` and pole orders `<= max_pole`, sorted.
    pub fn enumerate(arity: usize, total: i64, lo: i64, hi: i64, max_pole: u32) -> Vec<MonomialKey> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        enumerate_rec(arity, 0, total, lo, hi, max_pole, &mut cur, &mut out);
        out.sort();
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    n: usize,
    i: usize,
    remaining: i64,
    lo: i64,
    hi: i64,
    max_pole: u32,
    cur: &mut Vec<Factor>,
    out: &mut Vec<MonomialKey>,
) {
    if i == n {
        if remaining == 0 {
            out.push(MonomialKey::new(cur));
        }
        return;
    }
    let left = (n - i - 1) as i64;
    // bounds on what the later variables can still contribute
    let later_min = left * lo.min(-(max_pole as i64));
    let later_max = left * hi.max(0);
    for a in lo..=hi {
        let rest = remaining - a;
        if rest < later_min || rest > later_max {
            continue;
        }
        cur.push(Factor::Pow(a));
        enumerate_rec(n, i + 1, rest, lo, hi, max_pole, cur, out);
        cur.pop();
    }
    for to in (i + 1)..n {
        for q in 1..=max_pole {
            let rest = remaining + q as i64;
            if rest < later_min || rest > later_max {
                continue;
            }
            cur.push(Factor::Pole { to: to as u8, order: q });
            enumerate_rec(n, i + 1, rest, lo, hi, max_pole, cur, out);
            cur.pop();
        }
    }
}

impl fmt::Debug for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, fac) in self.factors().iter().enumerate() {
            match *fac {
                Factor::Pow(0) => {}
                Factor::Pow(1) => parts.push(format!("z{}", i + 1)),
                Factor::Pow(a) => parts.push(format!("z{}^{}", i + 1, a)),
                Factor::Pole { to, order } => parts.push(format!("(z{}-z{})^-{}", i + 1, to as usize + 1, order)),
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Index of the unordered pair `{i, j}` in the diagonal-exponent array.
fn pair(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => panic!("variable pair ({a},{b}) out of range"),
    }
}

fn pair_vars(p: usize) -> (usize, usize) {
    [(0, 1), (0, 2), (1, 2)][p]
}

/// Not-necessarily-canonical monomial `Π z_i^{e_i} Π_{i<j} (z_i - z_j)^{d_ij}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Raw {
    n: usize,
    exps: [i64; MAX_ARITY],
    diag: [i64; MAX_ARITY],
}

impl Raw {
    fn one(n: usize) -> Self {
        Raw { n, exps: [0; MAX_ARITY], diag: [0; MAX_ARITY] }
    }

    fn mul(mut self, o: &Raw) -> Raw {
        debug_assert_eq!(self.n, o.n);
        for k in 0..MAX_ARITY {
            self.exps[k] += o.exps[k];
            self.diag[k] += o.diag[k];
        }
        self
    }

    /// Multiplies by `(z_u - z_v)^e`, normalising the orientation; returns the sign.
    fn mul_diff(&mut self, u: usize, v: usize, e: i64) -> Scalar {
        self.diag[pair(u, v)] += e;
        if u < v {
            Scalar::one()
        } else {
            Scalar::sign(e)
        }
    }

    /// Drops variable `i` (which must not occur) and renumbers the rest.
    fn drop_var(&self, i: usize) -> Raw {
        debug_assert_eq!(self.exps[i], 0);
        let keep: Vec<usize> = (0..self.n).filter(|k| *k != i).collect();
        let mut r = Raw::one(self.n - 1);
        for (new, old) in keep.iter().enumerate() {
            r.exps[new] = self.exps[*old];
        }
        for p in 0..MAX_ARITY {
            let e = self.diag[p];
            if e == 0 {
                continue;
            }
            let (a, b) = pair_vars(p);
            debug_assert!(a != i && b != i);
            let na = keep.iter().position(|k| *k == a).unwrap();
            let nb = keep.iter().position(|k| *k == b).unwrap();
            r.diag[pair(na, nb)] += e;
        }
        r
    }
}

type Reduction = Vec<(Factor, Raw, Scalar)>;

thread_local! {
    static CANON_CACHE: RefCell<HashMap<Raw, Vec<(MonomialKey, Scalar)>>> = RefCell::new(HashMap::new());
    static REDUCE_CACHE: RefCell<HashMap<(usize, usize, i64, Vec<(usize, i64)>), Reduction>> =
        RefCell::new(HashMap::new());
}

/// Expands a raw monomial in the canonical basis.
fn canonicalize(raw: Raw) -> Vec<(MonomialKey, Scalar)> {
    if let Some(hit) = CANON_CACHE.with(|c| c.borrow().get(&raw).cloned()) {
        return hit;
    }
    let mut acc: BTreeMap<MonomialKey, Scalar> = BTreeMap::new();
    canon_from(raw, 0, MonomialKey::constant(raw.n), Scalar::one(), &mut acc);
    let out: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    CANON_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 1 << 20 {
            c.clear();
        }
        c.insert(raw, out.clone());
    });
    out
}

/// Eliminates variables `var..n` one at a time.
fn canon_from(raw: Raw, var: usize, prefix: MonomialKey, coef: Scalar, out: &mut BTreeMap<MonomialKey, Scalar>) {
    if coef.is_zero() {
        return;
    }
    if var == raw.n {
        debug_assert!(raw.exps.iter().all(|e| *e == 0) && raw.diag.iter().all(|e| *e == 0));
        *out.entry(prefix).or_insert_with(Scalar::zero) += coef;
        return;
    }
    for k in 0..var {
        debug_assert_eq!(raw.diag[pair(k, var)], 0, "earlier variable not eliminated");
    }
    let mut rest = raw;
    rest.exps[var] = 0;
    let mut poles = Vec::new();
    for j in (var + 1)..raw.n {
        let p = pair(var, j);
        if raw.diag[p] != 0 {
            poles.push((j, raw.diag[p]));
            rest.diag[p] = 0;
        }
    }
    for (factor, r, c) in reduce_var(raw.n, var, raw.exps[var], &poles) {
        let mut key = prefix;
        key.factors[var] = factor;
        canon_from(rest.mul(&r), var + 1, key, &coef * &c, out);
    }
}

/// Partial fractions of `x^a Π_j (x - z_j)^{e_j}` in `x = z_var`: a list of
/// canonical factors in `x`, each with a coefficient monomial in the later
/// variables.
fn reduce_var(n: usize, var: usize, a: i64, poles: &[(usize, i64)]) -> Reduction {
    let cache_key = (n, var, a, poles.to_vec());
    if let Some(hit) = REDUCE_CACHE.with(|c| c.borrow().get(&cache_key).cloned()) {
        return hit;
    }
    // expand positive powers of differences binomially
    let mut expanded: Vec<(i64, Raw, Scalar)> = vec![(a, Raw::one(n), Scalar::one())];
    let mut neg = Vec::new();
    for &(j, e) in poles {
        if e < 0 {
            neg.push((j, -e));
            continue;
        }
        let mut next = Vec::new();
        for (x, r, c) in &expanded {
            for k in 0..=e {
                let mut r2 = *r;
                r2.exps[j] += e - k;
                next.push((x + k, r2, c * binomial(e, k) * Scalar::sign(e - k)));
            }
        }
        expanded = next;
    }
    let mut acc: BTreeMap<(Factor, Raw), Scalar> = BTreeMap::new();
    for (x, r, c) in expanded {
        for (f, r2, c2) in reduce_negative(n, x, &neg) {
            *acc.entry((f, r.mul(&r2))).or_insert_with(Scalar::zero) += c2 * &c;
        }
    }
    let out: Reduction = acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|((f, r), c)| (f, r, c)).collect();
    REDUCE_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 1 << 18 {
            c.clear();
        }
        c.insert(cache_key, out.clone());
    });
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Point {
    Zero,
    Var(usize),
}

/// Partial fractions of `x^a Π_j (x - z_j)^{-s_j}` with every `s_j >= 1`.
/// The principal part at each pole `p` of order `s` has coefficients
/// `[(x-p)^{s-k}]` of the cofactor expanded around `p`; when `a` is large
/// enough the polynomial part is read off from the expansion at infinity.
fn reduce_negative(n: usize, a: i64, neg: &[(usize, i64)]) -> Reduction {
    if neg.is_empty() {
        return vec![(Factor::Pow(a), Raw::one(n), Scalar::one())];
    }
    let mut points: Vec<(Point, i64)> = neg.iter().map(|&(j, s)| (Point::Var(j), s)).collect();
    if a < 0 {
        points.insert(0, (Point::Zero, -a));
    }
    let mut out: Reduction = Vec::new();
    for &(p, s) in &points {
        // Taylor coefficients up to order s-1 of the cofactor around p
        let mut series: Vec<BTreeMap<Raw, Scalar>> = vec![BTreeMap::new(); s as usize];
        series[0].insert(Raw::one(n), Scalar::one());
        let mut cofactors: Vec<Box<dyn Fn(i64) -> (Scalar, Raw)>> = Vec::new();
        if let Point::Var(j) = p {
            if a != 0 {
                // x^a = (z_j + (x - z_j))^a
                cofactors.push(Box::new(move |r| {
                    let mut m = Raw::one(n);
                    m.exps[j] += a - r;
                    (binomial(a, r), m)
                }));
            }
        }
        for &(q, t) in &points {
            if q == p {
                continue;
            }
            match (p, q) {
                (Point::Var(j), Point::Var(k)) => cofactors.push(Box::new(move |r| {
                    // (x - z_k)^{-t} = ((z_j - z_k) + (x - z_j))^{-t}
                    let mut m = Raw::one(n);
                    let sgn = m.mul_diff(j, k, -t - r);
                    (binomial(-t, r) * sgn, m)
                })),
                (Point::Zero, Point::Var(k)) => cofactors.push(Box::new(move |r| {
                    // (x - z_k)^{-t} = (-z_k + x)^{-t}
                    let mut m = Raw::one(n);
                    m.exps[k] += -t - r;
                    (binomial(-t, r) * Scalar::sign(-t - r), m)
                })),
                // the x^a factor at a Var point is handled above
                (Point::Var(_), Point::Zero) => {}
                (Point::Zero, Point::Zero) => unreachable!(),
            }
        }
        for cof in &cofactors {
            let terms: Vec<(Scalar, Raw)> = (0..s).map(cof).collect();
            let mut next: Vec<BTreeMap<Raw, Scalar>> = vec![BTreeMap::new(); s as usize];
            for (d, poly) in series.iter().enumerate() {
                for (r, (c, m)) in terms.iter().enumerate() {
                    if d + r >= s as usize || c.is_zero() {
                        continue;
                    }
                    for (mono, x) in poly {
                        *next[d + r].entry(mono.mul(m)).or_insert_with(Scalar::zero) += x * c;
                    }
                }
            }
            series = next;
        }
        for k in 1..=s {
            let factor = match p {
                Point::Zero => Factor::Pow(-k),
                Point::Var(j) => Factor::Pole { to: j as u8, order: k as u32 },
            };
            for (mono, c) in &series[(s - k) as usize] {
                if !c.is_zero() {
                    out.push((factor, *mono, c.clone()));
                }
            }
        }
    }
    // polynomial part: x^{a-S} Π_j (1 - z_j/x)^{-s_j}, nonnegative powers only
    let total: i64 = neg.iter().map(|(_, s)| s).sum();
    if a >= total {
        let top = a - total;
        let mut series: Vec<BTreeMap<Raw, Scalar>> = vec![BTreeMap::new(); (top + 1) as usize];
        series[0].insert(Raw::one(n), Scalar::one());
        for &(j, s) in neg {
            let mut next: Vec<BTreeMap<Raw, Scalar>> = vec![BTreeMap::new(); (top + 1) as usize];
            for (d, poly) in series.iter().enumerate() {
                for r in 0..=(top as usize - d) {
                    let c = binomial(s + r as i64 - 1, r as i64);
                    let mut m = Raw::one(n);
                    m.exps[j] += r as i64;
                    for (mono, x) in poly {
                        *next[d + r].entry(mono.mul(&m)).or_insert_with(Scalar::zero) += x * &c;
                    }
                }
            }
            series = next;
        }
        for (r, poly) in series.into_iter().enumerate() {
            for (mono, c) in poly {
                if !c.is_zero() {
                    out.push((Factor::Pow(top - r as i64), mono, c));
                }
            }
        }
    }
    out
}

/// Element of `Γ_n` stored as a sparse table over canonical monomials.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalSection {
    arity: usize,
    terms: BTreeMap<MonomialKey, Scalar>,
}

impl RationalSection {
    pub fn zero(arity: usize) -> Self {
        assert!(arity <= MAX_ARITY, "arity above {MAX_ARITY}");
        RationalSection { arity, terms: BTreeMap::new() }
    }

    pub fn one(arity: usize) -> Self {
        RationalSection::monomial(MonomialKey::constant(arity), Scalar::one())
    }

    pub fn constant(arity: usize, c: Scalar) -> Self {
        RationalSection::monomial(MonomialKey::constant(arity), c)
    }

    pub fn monomial(key: MonomialKey, coef: Scalar) -> Self {
        let mut s = RationalSection::zero(key.arity());
        s.add_term(key, coef);
        s
    }

    /// `z_var^e` in `arity` variables.
    pub fn var_power(arity: usize, var: usize, e: i64) -> Self {
        let mut r = Raw::one(arity);
        r.exps[var] = e;
        RationalSection::from_raw(r, Scalar::one())
    }

    /// `(z_i - z_j)^e` for any integer `e` and `i != j`.
    pub fn diff_power(arity: usize, i: usize, j: usize, e: i64) -> Self {
        let mut r = Raw::one(arity);
        let s = r.mul_diff(i, j, e);
        RationalSection::from_raw(r, s)
    }

    /// General monomial `Π z_i^{exps[i]} Π_{i<j} (z_i - z_j)^{diffs(i,j)}`.
    pub fn general_monomial(arity: usize, exps: &[i64], diffs: &[((usize, usize), i64)]) -> Self {
        let mut r = Raw::one(arity);
        for (i, e) in exps.iter().enumerate() {
            r.exps[i] += e;
        }
        let mut sign = Scalar::one();
        for ((i, j), e) in diffs {
            sign = sign * r.mul_diff(*i, *j, *e);
        }
        RationalSection::from_raw(r, sign)
    }

    fn from_raw(raw: Raw, coef: Scalar) -> Self {
        let mut s = RationalSection::zero(raw.n);
        for (k, c) in canonicalize(raw) {
            s.add_term(k, c * &coef);
        }
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &Scalar)> + '_ {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add_term(&mut self, key: MonomialKey, coef: Scalar) {
        assert_eq!(key.arity(), self.arity, "arity mismatch");
        if coef.is_zero() {
            return;
        }
        let e = self.terms.entry(key).or_insert_with(Scalar::zero);
        *e += coef;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &RationalSection, c: &Scalar) {
        for (k, x) in other.terms() {
            self.add_term(*k, x * c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> RationalSection {
        let mut s = RationalSection::zero(self.arity);
        s.add_scaled(self, c);
        s
    }

    /// Exact product, re-expressed canonically.
    pub fn multiply(&self, other: &RationalSection) -> Result<RationalSection> {
        if self.arity != other.arity {
            return Err(Error::InvalidArgument(format!(
                "product of sections of arity {} and {}",
                self.arity, other.arity
            )));
        }
        let mut out = RationalSection::zero(self.arity);
        for (k1, c1) in self.terms() {
            let r1 = k1.to_raw();
            for (k2, c2) in other.terms() {
                let c = c1 * c2;
                for (k, x) in canonicalize(r1.mul(&k2.to_raw())) {
                    out.add_term(k, x * &c);
                }
            }
        }
        Ok(out)
    }

    /// Formal partial derivative in variable `var`.
    pub fn derive(&self, var: usize) -> Result<RationalSection> {
        if var >= self.arity {
            return Err(Error::InvalidArgument(format!("variable z{} outside arity {}", var + 1, self.arity)));
        }
        let mut out = RationalSection::zero(self.arity);
        for (k, c) in self.terms() {
            let raw = k.to_raw();
            let mut pieces: Vec<(Raw, Scalar)> = Vec::new();
            if raw.exps[var] != 0 {
                let mut r = raw;
                r.exps[var] -= 1;
                pieces.push((r, Scalar::from_int(raw.exps[var])));
            }
            for other in 0..self.arity {
                if other == var {
                    continue;
                }
                let p = pair(var, other);
                let e = raw.diag[p];
                if e == 0 {
                    continue;
                }
                let mut r = raw;
                r.diag[p] -= 1;
                // d/dz_var (z_a - z_b)^e = ±e (z_a - z_b)^{e-1}
                let s = if var < other { Scalar::from_int(e) } else { Scalar::from_int(-e) };
                pieces.push((r, s));
            }
            for (r, s) in pieces {
                let coef = &s * c;
                for (kk, x) in canonicalize(r) {
                    out.add_term(kk, x * &coef);
                }
            }
        }
        Ok(out)
    }

    /// Re-expresses a section that only involves the variables in `keep` as
    /// a section in `keep.len()` variables, renumbered in order.
    pub fn restrict_variables(&self, keep: &[usize]) -> Result<RationalSection> {
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|k| *k >= self.arity) {
            return Err(Error::InvalidArgument("relabeling must be order preserving".into()));
        }
        let mut out = RationalSection::zero(keep.len());
        for (k, c) in self.terms() {
            let mut raw = k.to_raw();
            for v in (0..self.arity).rev() {
                if keep.contains(&v) {
                    continue;
                }
                let involved = raw.exps[v] != 0
                    || (0..self.arity).any(|o| o != v && raw.diag[pair(v, o)] != 0);
                if involved {
                    return Err(Error::InvalidArgument(format!("section depends on dropped variable z{}", v + 1)));
                }
                raw = raw.drop_var(v);
            }
            for (kk, x) in canonicalize(raw) {
                out.add_term(kk, x * c);
            }
        }
        Ok(out)
    }

    /// Value at a point of the configuration space (distinct nonzero coordinates).
    pub fn evaluate(&self, point: &[Scalar]) -> Result<Scalar> {
        if point.len() != self.arity {
            return Err(Error::InvalidArgument(format!("point of length {} for arity {}", point.len(), self.arity)));
        }
        for (i, x) in point.iter().enumerate() {
            if x.is_zero() || point[..i].contains(x) {
                return Err(Error::InvalidArgument("point not in the configuration space".into()));
            }
        }
        let mut total = Scalar::zero();
        for (k, c) in self.terms() {
            let mut v = c.clone();
            for (i, f) in k.factors().iter().enumerate() {
                match *f {
                    Factor::Pow(a) => v = v * point[i].pow(a as i32),
                    Factor::Pole { to, order } => {
                        v = v * (&point[i] - &point[to as usize]).pow(-(order as i32))
                    }
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Smallest and largest total degree over the terms, `None` for zero.
    pub fn degree_range(&self) -> Option<(i64, i64)> {
        let degs: Vec<i64> = self.terms.keys().map(|k| k.total_degree()).collect();
        Some((*degs.iter().min()?, *degs.iter().max()?))
    }

    /// Parses the text syntax, e.g. `"2*z1^-2*z2^3 + -1/2*(z1-z2)^-1"`.
    /// Non-canonical input is canonicalized.
    pub fn parse(text: &str, arity: usize) -> Result<RationalSection> {
        if arity > MAX_ARITY {
            return Err(Error::Parse(format!("arity {arity} above {MAX_ARITY}")));
        }
        let mut out = RationalSection::zero(arity);
        let text = text.trim();
        if text == "0" {
            return Ok(out);
        }
        for term in text.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::Parse(format!("empty term in {text:?}")));
            }
            let mut raw = Raw::one(arity);
            let mut coef = Scalar::one();
            for piece in term.split('*') {
                let piece = piece.trim();
                if let Ok(c) = piece.parse::<Scalar>() {
                    coef = coef * c;
                } else if piece == "-1" {
                    coef = -coef;
                } else if let Some(rest) = piece.strip_prefix('(') {
                    let (inner, exp) = rest
                        .split_once(')')
                        .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in {piece:?}")))?;
                    let e = parse_exponent(exp)?;
                    let (a, b) = inner
                        .split_once('-')
                        .ok_or_else(|| Error::Parse(format!("expected (zi-zj) in {piece:?}")))?;
                    let i = parse_var(a, arity)?;
                    let j = parse_var(b, arity)?;
                    if i == j {
                        return Err(Error::Parse(format!("degenerate difference {piece:?}")));
                    }
                    coef = coef * raw.mul_diff(i, j, e);
                } else if let Some(neg) = piece.strip_prefix('-') {
                    // "-z1" style negation
                    let (v, e) = parse_power(neg, arity)?;
                    raw.exps[v] += e;
                    coef = -coef;
                } else {
                    let (v, e) = parse_power(piece, arity)?;
                    raw.exps[v] += e;
                }
            }
            for (k, x) in canonicalize(raw) {
                out.add_term(k, x * &coef);
            }
        }
        Ok(out)
    }
}

fn parse_var(s: &str, arity: usize) -> Result<usize> {
    let s = s.trim();
    let n: usize = s
        .strip_prefix('z')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse(format!("expected variable, got {s:?}")))?;
    if n == 0 || n > arity {
        return Err(Error::Parse(format!("variable {s} outside arity {arity}")));
    }
    Ok(n - 1)
}

fn parse_exponent(s: &str) -> Result<i64> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(1);
    }
    s.strip_prefix('^')
        .and_then(|e| e.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad exponent {s:?}")))
}

fn parse_power(s: &str, arity: usize) -> Result<(usize, i64)> {
    match s.split_once('^') {
        Some((v, e)) => Ok((parse_var(v, arity)?, e.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?)),
        None => Ok((parse_var(s, arity)?, 1)),
    }
}

impl fmt::Display for RationalSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| if c.is_one() { k.to_string() } else { format!("{c}*{k}") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for RationalSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Γ{}[{}]", self.arity, self)
    }
}

impl Add for &RationalSection {
    type Output = RationalSection;
    fn add(self, rhs: &RationalSection) -> RationalSection {
        assert_eq!(self.arity, rhs.arity);
        let mut s = self.clone();
        s.add_scaled(rhs, &Scalar::one());
        s
    }
}

impl Sub for &RationalSection {
    type Output = RationalSection;
    fn sub(self, rhs: &RationalSection) -> RationalSection {
        assert_eq!(self.arity, rhs.arity);
        let mut s = self.clone();
        s.add_scaled(rhs, &-Scalar::one());
        s
    }
}

impl Mul for &RationalSection {
    type Output = RationalSection;
    fn mul(self, rhs: &RationalSection) -> RationalSection {
        self.multiply(rhs).expect("arity mismatch in product")
    }
}

impl Neg for &RationalSection {
    type Output = RationalSection;
    fn neg(self) -> RationalSection {
        self.scaled(&-Scalar::one())
    }
}

/// Where a field in variable `z_i` is paired against a section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Expand every `(z_i - z_j)^{-1}` in `|z_i| < |z_j|`; entries are the
    /// coefficients of `z_i^m`.
    AtZero,
    /// Expand in `|z_i| > |z_j|`; entries are the coefficients of `z_i^m`,
    /// i.e. of `x^{-m}` after substituting `x = z_i^{-1}`.
    AtInfinity,
    /// Substitute `z_i = z_j + w`; entries are the coefficients of `w^m`.
    Diagonal(usize),
}

/// Coefficients `c_m` of a section expanded in one variable, each a section
/// in the remaining variables (renumbered in order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDecomposition {
    pub entries: Vec<(i64, RationalSection)>,
    /// Set when nonzero coefficients may exist outside the window.
    pub discarded: bool,
}

impl ModeDecomposition {
    pub fn get(&self, m: i64) -> Option<&RationalSection> {
        self.entries.iter().find(|(k, _)| *k == m).map(|(_, s)| s)
    }
}

/// One factor of an expansion: `Σ_k coef(k) · t^{offset + step·k} · monomial(k)`.
struct Series {
    offset: i64,
    step: i64,
    /// `None` means infinitely many terms.
    len: Option<i64>,
    term: Box<dyn Fn(i64) -> (Scalar, Raw)>,
}

/// Exponent bounds of the expansion of `f` in `var`: `(min, max)`, with
/// `None` meaning unbounded in that direction.
pub fn expansion_bounds(f: &RationalSection, var: usize, loc: Location) -> (Option<i64>, Option<i64>) {
    let mut lo: Option<i64> = None;
    let mut hi: Option<i64> = None;
    let mut lo_inf = false;
    let mut hi_inf = false;
    for (k, _) in f.terms() {
        let (fixed, series) = series_of(k, var, loc);
        let base: i64 = fixed.0 + series.iter().map(|s| s.offset).sum::<i64>();
        let mut top = base;
        let mut bot = base;
        for s in &series {
            match s.len {
                None => {
                    if s.step > 0 {
                        hi_inf = true
                    } else {
                        lo_inf = true
                    }
                }
                Some(l) => {
                    if s.step > 0 {
                        top += s.step * (l - 1).max(0)
                    } else {
                        bot += s.step * (l - 1).max(0)
                    }
                }
            }
        }
        lo = Some(lo.map_or(bot, |x| x.min(bot)));
        hi = Some(hi.map_or(top, |x| x.max(top)));
    }
    (if lo_inf { None } else { lo }, if hi_inf { None } else { hi })
}

/// Splits a canonical monomial into the part fixed under expansion in `var`
/// (exponent, coefficient, remaining monomial) and a list of series factors.
fn series_of(key: &MonomialKey, var: usize, loc: Location) -> ((i64, Scalar, Raw), Vec<Series>) {
    let n = key.arity();
    let mut fixed_exp = 0i64;
    let mut fixed_coef = Scalar::one();
    let mut rest = Raw::one(n);
    let mut series: Vec<Series> = Vec::new();

    for (i, f) in key.factors().iter().enumerate() {
        match *f {
            Factor::Pow(a) if i == var => match loc {
                Location::AtZero | Location::AtInfinity => fixed_exp += a,
                Location::Diagonal(j) => {
                    // (z_j + w)^a
                    series.push(Series {
                        offset: 0,
                        step: 1,
                        len: if a >= 0 { Some(a + 1) } else { None },
                        term: Box::new(move |k| {
                            let mut r = Raw::one(n);
                            r.exps[j] += a - k;
                            (binomial(a, k), r)
                        }),
                    });
                }
            },
            Factor::Pow(a) => rest.exps[i] += a,
            Factor::Pole { to, order } => {
                let to = to as usize;
                let q = order as i64;
                if i == var {
                    series_for_pole(&mut series, &mut fixed_exp, &mut fixed_coef, n, var, to, q, true, loc);
                } else if to == var {
                    series_for_pole(&mut series, &mut fixed_exp, &mut fixed_coef, n, var, i, q, false, loc);
                } else {
                    rest.diag[pair(i, to)] -= q;
                }
            }
        }
    }
    ((fixed_exp, fixed_coef, rest), series)
}

/// Expansion of `(z_var - z_other)^{-q}` (if `own`) or `(z_other - z_var)^{-q}`.
#[allow(clippy::too_many_arguments)]
fn series_for_pole(
    series: &mut Vec<Series>,
    fixed_exp: &mut i64,
    fixed_coef: &mut Scalar,
    n: usize,
    var: usize,
    other: usize,
    q: i64,
    own: bool,
    loc: Location,
) {
    // orientation sign turning the factor into (z_var - z_other)^{-q}
    let orient = if own { Scalar::one() } else { Scalar::sign(q) };
    match loc {
        Location::AtZero => {
            // (z_var - z_o)^{-q} = (-1)^q Σ_k C(q+k-1,k) z_var^k z_o^{-q-k}
            let c0 = &orient * Scalar::sign(q);
            series.push(Series {
                offset: 0,
                step: 1,
                len: None,
                term: Box::new(move |k| {
                    let mut r = Raw::one(n);
                    r.exps[other] -= q + k;
                    (&c0 * binomial(q + k - 1, k), r)
                }),
            });
        }
        Location::AtInfinity => {
            // (z_var - z_o)^{-q} = Σ_k C(q+k-1,k) z_o^k z_var^{-q-k}
            series.push(Series {
                offset: -q,
                step: -1,
                len: None,
                term: Box::new(move |k| {
                    let mut r = Raw::one(n);
                    r.exps[other] += k;
                    (&orient * binomial(q + k - 1, k), r)
                }),
            });
        }
        Location::Diagonal(j) => {
            if other == j {
                // (z_var - z_j)^{-q} = w^{-q}
                *fixed_exp -= q;
                *fixed_coef = &*fixed_coef * &orient;
            } else {
                // (z_var - z_o)^{-q} = (z_j - z_o + w)^{-q} = Σ_t C(-q,t) (z_j - z_o)^{-q-t} w^t
                series.push(Series {
                    offset: 0,
                    step: 1,
                    len: None,
                    term: Box::new(move |t| {
                        let mut r = Raw::one(n);
                        let s = r.mul_diff(j, other, -q - t);
                        (&orient * binomial(-q, t) * s, r)
                    }),
                });
            }
        }
    }
    let _ = var;
}

/// Coefficients of the expansion of `f` in variable `var` at `loc`, for
/// exponents in `window` (inclusive). The coefficients are sections in the
/// remaining variables, renumbered in order.
pub fn mode_decompose(
    f: &RationalSection,
    var: usize,
    loc: Location,
    window: (i64, i64),
) -> Result<ModeDecomposition> {
    mode_decompose_with_limit(f, var, loc, window, DEFAULT_MAX_WINDOW)
}

pub fn mode_decompose_with_limit(
    f: &RationalSection,
    var: usize,
    loc: Location,
    window: (i64, i64),
    max_width: i64,
) -> Result<ModeDecomposition> {
    let n = f.arity();
    if var >= n {
        return Err(Error::InvalidArgument(format!("variable z{} outside arity {n}", var + 1)));
    }
    if let Location::Diagonal(j) = loc {
        if j == var || j >= n {
            return Err(Error::InvalidArgument(format!("bad diagonal z{}=z{}", var + 1, j + 1)));
        }
    }
    let (lo, hi) = window;
    if hi - lo + 1 > max_width {
        return Err(Error::WindowTooWide { lo, hi, max: max_width });
    }
    let mut acc: BTreeMap<i64, RationalSection> = BTreeMap::new();
    let mut discarded = false;
    for (key, c) in f.terms() {
        let ((fexp, fcoef, rest), series) = series_of(key, var, loc);
        let base = fexp + series.iter().map(|s| s.offset).sum::<i64>();
        // all steps share a sign: +1 for AtZero/Diagonal, -1 for AtInfinity
        let dir = if matches!(loc, Location::AtInfinity) { -1 } else { 1 };
        let budget = if dir > 0 { hi - base } else { base - lo };
        // support check for the discarded flag
        let infinite = series.iter().any(|s| s.len.is_none());
        let span: i64 = series.iter().map(|s| s.len.map_or(0, |l| (l - 1).max(0))).sum();
        if dir > 0 {
            if base < lo || infinite || base + span > hi {
                discarded = true;
            }
        } else if base > hi || infinite || base - span < lo {
            discarded = true;
        }
        if budget < 0 {
            continue;
        }
        let coef0 = c * &fcoef;
        let mut idx = vec![0i64; series.len()];
        enumerate_compositions(&series, 0, budget, &mut idx, &mut |ks| {
            let total: i64 = ks.iter().sum();
            let m = base + dir * total;
            if m < lo || m > hi {
                return;
            }
            let mut coef = coef0.clone();
            let mut raw = rest;
            for (s, k) in series.iter().zip(ks) {
                let (x, r) = (s.term)(*k);
                if x.is_zero() {
                    return;
                }
                coef = coef * x;
                raw = raw.mul(&r);
            }
            let reduced = raw.drop_var(var);
            let entry = acc.entry(m).or_insert_with(|| RationalSection::zero(n - 1));
            for (kk, x) in canonicalize(reduced) {
                entry.add_term(kk, x * &coef);
            }
        });
    }
    Ok(ModeDecomposition {
        entries: acc.into_iter().filter(|(_, s)| !s.is_zero()).collect(),
        discarded,
    })
}

fn enumerate_compositions(series: &[Series], i: usize, budget: i64, idx: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
    if i == series.len() {
        f(idx);
        return;
    }
    let max_k = match series[i].len {
        Some(l) => (l - 1).min(budget),
        None => budget,
    };
    for k in 0..=max_k {
        idx[i] = k;
        enumerate_compositions(series, i + 1, budget - k, idx, f);
    }
    idx[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> RationalSection {
        RationalSection::parse(s, n).unwrap()
    }

    #[test]
    fn products() {
        assert_eq!(&p("z1^2", 1) * &p("z1^-2", 1), RationalSection::one(1));
        assert_eq!(&p("(z1-z2)^-1", 2) * &p("(z1-z2)^1", 2), RationalSection::one(2));
        assert_eq!(&p("z1", 2) * &p("(z1-z2)^-1", 2), p("1 + z2*(z1-z2)^-1", 2));
    }

    #[test]
    fn derivatives() {
        assert_eq!(p("z1^5", 1).derive(0).unwrap(), p("5*z1^4", 1));
        assert_eq!(p("(z1-z2)^-1", 2).derive(0).unwrap(), p("-1*(z1-z2)^-2", 2));
        assert_eq!(p("z2*(z1-z2)^-1", 2).derive(1).unwrap(), p("z1*(z1-z2)^-2", 2));
        // the canonical form of z1 (z1-z2)^-2
        assert_eq!(p("z1*(z1-z2)^-2", 2), p("(z1-z2)^-1 + z2*(z1-z2)^-2", 2));
    }

    #[test]
    fn pure_power_at_zero() {
        let d = mode_decompose(&p("z1^3", 1), 0, Location::AtZero, (-5, 5)).unwrap();
        assert_eq!(d.entries, vec![(3, RationalSection::one(0))]);
        assert!(!d.discarded);
    }

    #[test]
    fn geometric_series_at_zero() {
        let d = mode_decompose(&p("(z1-z2)^-1", 2), 0, Location::AtZero, (0, 3)).unwrap();
        let expected: Vec<(i64, RationalSection)> =
            (0..=3).map(|k| (k, p(&format!("-1*z1^{}", -k - 1), 1))).collect();
        assert_eq!(d.entries, expected);
        assert!(d.discarded);
    }

    #[test]
    fn diagonal_of_z1() {
        let d = mode_decompose(&p("z1", 2), 0, Location::Diagonal(1), (-2, 1)).unwrap();
        assert_eq!(d.entries, vec![(0, p("z1", 1)), (1, RationalSection::one(1))]);
    }

    #[test]
    fn relabeling() {
        assert_eq!(p("z2^-1", 2).restrict_variables(&[1]).unwrap(), p("z1^-1", 1));
        assert_eq!(p("z1^3", 2).restrict_variables(&[0]).unwrap(), p("z1^3", 1));
        assert_eq!(p("(z2-z3)^-1", 3).restrict_variables(&[1, 2]).unwrap(), p("(z1-z2)^-1", 2));
        assert!(p("z1*z2", 2).restrict_variables(&[1]).is_err());
    }

    #[test]
    fn three_point_partial_fractions() {
        let f = p("(z1-z2)^-1*(z1-z3)^-1", 3);
        assert_eq!(f, p("(z2-z3)^-1*(z1-z2)^-1 + -1*(z2-z3)^-1*(z1-z3)^-1", 3));
        for (k, _) in f.terms() {
            assert!(k.factors().iter().filter(|x| matches!(x, Factor::Pole { .. })).count() <= 2);
        }
    }

    #[test]
    fn display_parse_round_trip() {
        let f = p("3/2*z1^-2*z2^3 + -1*(z1-z2)^-2*z2 + 7", 2);
        assert_eq!(p(&f.to_string(), 2), f);
    }

    #[test]
    fn rejects_wide_windows() {
        assert!(mode_decompose_with_limit(&p("z1", 1), 0, Location::AtZero, (-10, 10), 5).is_err());
    }

    #[test]
    fn enumerate_counts() {
        // arity 2, total degree 0, window [-1,1], poles <= 1:
        // z1^a z2^-a for a in -1..=1 and z2 (z1-z2)^-1
        let keys = MonomialKey::enumerate(2, 0, -1, 1, 1);
        assert_eq!(keys.len(), 4);
    }
}
