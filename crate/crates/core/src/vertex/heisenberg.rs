//! Rank-one Heisenberg vertex algebra and its Fock modules.
//!
//! States are polynomials in `x_1, x_2, ...` indexed by partitions: the
//! partition `(k_1 >= k_2 >= ...)` stands for `b_{-k_1} b_{-k_2} ... |λ>`.
//! `b_{-n}` multiplies by `x_n`, `b_n` acts as `n ∂/∂x_n` for `n > 0`, and
//! `b_0` acts by `λ`. Modes of composite states come from the iterate
//! formula
//!
//! `(b_(-k) v)_(q) w = Σ_{j>=0} C(k+j-1, j) [b_(-k-j) v_(q+j) w - (-1)^k v_(-k+q-j) b_(j) w]`,
//!
//! evaluated on untruncated polynomials, so every stored entry is exact.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::{binomial, Scalar};

use super::{ModeTable, ModuleData, VertexAlgebraData};

type Partition = Vec<i64>;
type State = BTreeMap<Partition, Scalar>;

/// Partitions of `n`, largest first part first.
pub fn partitions(n: i64) -> Vec<Partition> {
    fn rec(n: i64, max: i64, cur: &mut Partition, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            cur.push(k);
            rec(n - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

fn label(p: &Partition, vacuum: &str) -> String {
    if p.is_empty() {
        return vacuum.to_string();
    }
    let mut s = String::new();
    let mut i = 0;
    while i < p.len() {
        let k = p[i];
        let mult = p[i..].iter().take_while(|x| **x == k).count();
        if mult == 1 {
            s.push_str(&format!("b-{k}"));
        } else {
            s.push_str(&format!("b-{k}^{mult}"));
        }
        i += mult;
    }
    if vacuum != "1" {
        s.push_str(vacuum);
    }
    s
}

fn add_to(state: &mut State, p: Partition, c: Scalar) {
    if c.is_zero() {
        return;
    }
    let e = state.entry(p.clone()).or_insert_with(Scalar::zero);
    *e += c;
    if e.is_zero() {
        state.remove(&p);
    }
}

struct Fock {
    lambda: Scalar,
    memo: HashMap<(Partition, i64, Partition), State>,
}

impl Fock {
    fn new(lambda: Scalar) -> Self {
        Fock { lambda, memo: HashMap::new() }
    }

    /// `b_n` on a state.
    fn b(&self, n: i64, s: &State) -> State {
        let mut out = State::new();
        for (p, c) in s {
            if n < 0 {
                let mut q = p.clone();
                q.push(-n);
                q.sort_unstable_by(|a, b| b.cmp(a));
                add_to(&mut out, q, c.clone());
            } else if n == 0 {
                add_to(&mut out, p.clone(), c * &self.lambda);
            } else {
                let mult = p.iter().filter(|x| **x == n).count() as i64;
                if mult > 0 {
                    let mut q = p.clone();
                    let pos = q.iter().position(|x| *x == n).unwrap();
                    q.remove(pos);
                    add_to(&mut out, q, c * Scalar::from_int(n * mult));
                }
            }
        }
        out
    }

    fn apply_state(&mut self, u: &Partition, q: i64, w: &State) -> State {
        let mut out = State::new();
        for (p, c) in w {
            for (r, x) in self.apply(u, q, p) {
                add_to(&mut out, r, x * c);
            }
        }
        out
    }

    /// `u_(q) w` for partitions `u` (a state of the algebra) and `w`.
    fn apply(&mut self, u: &Partition, q: i64, w: &Partition) -> State {
        let du: i64 = u.iter().sum();
        let dw: i64 = w.iter().sum();
        if du + dw - q - 1 < 0 {
            return State::new();
        }
        if u.is_empty() {
            let mut s = State::new();
            if q == -1 {
                s.insert(w.clone(), Scalar::one());
            }
            return s;
        }
        let key = (u.clone(), q, w.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let k = u[0];
        let v: Partition = u[1..].to_vec();
        let dv = du - k;
        let w_state: State = State::from([(w.clone(), Scalar::one())]);
        let mut out = State::new();
        let mut j = 0;
        while dv + dw - q - j - 1 >= 0 {
            let c = binomial(k + j - 1, j);
            let inner = self.apply(&v, q + j, w);
            for (p, x) in self.b(-k - j, &inner) {
                add_to(&mut out, p, x * &c);
            }
            j += 1;
        }
        let sign = Scalar::sign(k);
        for j in 0..=dw {
            let c = binomial(k + j - 1, j);
            let bw = self.b(j, &w_state);
            if bw.is_empty() {
                continue;
            }
            for (p, x) in self.apply_state(&v, -k + q - j, &bw) {
                add_to(&mut out, p, -(x * &c * &sign));
            }
        }
        self.memo.insert(key, out.clone());
        out
    }
}

fn space_of(parts: &[Vec<Partition>], vacuum: &str) -> GradedSpace {
    GradedSpace::new(
        parts
            .iter()
            .enumerate()
            .map(|(d, ps)| (d as i64, ps.iter().map(|p| label(p, vacuum)).collect()))
            .collect(),
    )
}

fn to_vec(index: &HashMap<Partition, usize>, s: &State) -> SparseVec {
    SparseVec::from_pairs(s.iter().map(|(p, c)| (index[p], c.clone())))
}

/// Mode table of `V` (partitions up to `d_cap`) acting on the Fock space with
/// `b_0 = λ` (partitions up to `n_cap`).
fn build_table(lambda: &Scalar, alg_parts: &[Partition], mod_parts: &[Partition], n_cap: i64) -> ModeTable {
    let index: HashMap<Partition, usize> = mod_parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut fock = Fock::new(lambda.clone());
    let mut table = ModeTable::new();
    for (ai, a) in alg_parts.iter().enumerate() {
        let ra: i64 = a.iter().sum();
        for (vi, v) in mod_parts.iter().enumerate() {
            let dv: i64 = v.iter().sum();
            for m in (ra + dv - 1 - n_cap)..=(ra + dv - 1) {
                let s = fock.apply(a, m, v);
                if !s.is_empty() {
                    table.insert(ai, m, vi, to_vec(&index, &s));
                }
            }
        }
    }
    table
}

/// Heisenberg vertex algebra truncated to degrees `0..=d_cap`, with
/// `ω = ½ b_{-1}² 1` and central charge 1.
pub fn heisenberg_va(d_cap: i64) -> Result<Arc<VertexAlgebraData>> {
    if d_cap < 2 {
        return Err(Error::InvalidArgument(format!("Heisenberg cap must be at least 2, got {d_cap}")));
    }
    let by_degree: Vec<Vec<Partition>> = (0..=d_cap).map(partitions).collect();
    let flat: Vec<Partition> = by_degree.iter().flatten().cloned().collect();
    let index: HashMap<Partition, usize> = flat.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let space = space_of(&by_degree, "1");
    let modes = build_table(&Scalar::zero(), &flat, &flat, d_cap);
    let generator = index[&vec![1]];
    let construction = flat
        .iter()
        .map(|p| {
            if p.is_empty() {
                None
            } else {
                Some((generator, p[0], index[&p[1..].to_vec()]))
            }
        })
        .collect();
    Ok(Arc::new(VertexAlgebraData {
        name: "heisenberg".into(),
        params: BTreeMap::new(),
        space,
        cap: d_cap,
        vacuum: index[&Vec::new()],
        omega: SparseVec::from_pairs([(index[&vec![1, 1]], Scalar::new(1, 2))]),
        central_charge: Scalar::one(),
        generators: vec![generator],
        construction,
        modes,
    }))
}

/// Fock module `F_λ` truncated to levels `0..=n_cap`, graded by level.
pub fn fock_module(alg: &Arc<VertexAlgebraData>, lambda: &Scalar, n_cap: i64) -> Result<ModuleData> {
    if alg.name != "heisenberg" {
        return Err(Error::InvalidArgument(format!("Fock modules need the Heisenberg algebra, got {}", alg.name)));
    }
    if n_cap < 0 {
        return Err(Error::InvalidArgument(format!("negative module cap {n_cap}")));
    }
    let alg_parts: Vec<Partition> = (0..=alg.cap).flat_map(partitions).collect();
    let by_degree: Vec<Vec<Partition>> = (0..=n_cap).map(partitions).collect();
    let flat: Vec<Partition> = by_degree.iter().flatten().cloned().collect();
    Ok(ModuleData {
        name: "fock".into(),
        params: BTreeMap::from([("lambda".to_string(), lambda.to_string())]),
        algebra: Arc::clone(alg),
        space: space_of(&by_degree, "v"),
        cap: n_cap,
        modes: build_table(lambda, &alg_parts, &flat, n_cap),
    })
}
