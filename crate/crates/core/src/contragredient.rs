//! Contragredient modules `M∨ = ⊕ M_n*` with the twisted action
//! `[Y(a, z) φ](m) = φ(Y(e^{z L_1} (-z^{-2})^{L_0} a, z^{-1}) m)`,
//! and the operator `𝓡(z) = z^2 e^{z L_1} (-z^{-2})^{L_0}`.
//!
//! In modes: with `𝓡(z) a = Σ_e z^e u_e`,
//! `(a_(k) φ)(m) = Σ_e φ((u_e)_(-e-k) m)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::laurent::{Factor, RationalSection};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::{inv_factorial, Scalar};
use crate::vertex::axioms::ModuleAction;
use crate::vertex::VertexAlgebraData;

/// Vector-valued Laurent polynomial `Σ_k z^k v_k`.
pub type LaurentVec = BTreeMap<i64, SparseVec>;

fn add_into(acc: &mut LaurentVec, k: i64, v: &SparseVec, c: &Scalar) {
    let e = acc.entry(k).or_default();
    e.add_scaled(v, c);
    if e.is_zero() {
        acc.remove(&k);
    }
}

/// Splits a vector into homogeneous components.
fn components(space: &GradedSpace, v: &SparseVec) -> BTreeMap<i64, SparseVec> {
    let mut out: BTreeMap<i64, SparseVec> = BTreeMap::new();
    for (i, c) in v.iter() {
        out.entry(space.degree(i)).or_default().add_term(i, c.clone());
    }
    out
}

pub fn l1(alg: &VertexAlgebraData, a: &SparseVec) -> SparseVec {
    alg.mode_apply(&alg.omega, 2, a)
}

/// `e^{s L_1} v` with `s = c z^step`, as a Laurent polynomial in `z`.
fn exp_l1(alg: &VertexAlgebraData, x: &LaurentVec, c: &Scalar, step: i64) -> LaurentVec {
    let mut out = LaurentVec::new();
    for (k, v) in x {
        let mut term = v.clone();
        let mut j = 0u32;
        while !term.is_zero() {
            add_into(&mut out, k + step * j as i64, &term, &(c.pow(j as i32) * inv_factorial(j)));
            term = l1(alg, &term);
            j += 1;
            if j as i64 > alg.cap + 1 {
                break;
            }
        }
    }
    out
}

/// `(c z^step)^{L_0} v`, with `L_0` read off from the grading.
fn power_l0(alg: &VertexAlgebraData, x: &LaurentVec, c: &Scalar, step: i64) -> LaurentVec {
    let mut out = LaurentVec::new();
    for (k, v) in x {
        for (d, part) in components(&alg.space, v) {
            add_into(&mut out, k + step * d, &part, &c.pow(d as i32));
        }
    }
    out
}

/// `𝓡(z) a = z^2 e^{z L_1} (-z^{-2})^{L_0} a`.
pub fn rz_apply(alg: &VertexAlgebraData, a: &SparseVec) -> LaurentVec {
    let x = LaurentVec::from([(0, a.clone())]);
    let x = power_l0(alg, &x, &-Scalar::one(), -2);
    let x = exp_l1(alg, &x, &Scalar::one(), 1);
    x.into_iter().map(|(k, v)| (k + 2, v)).collect()
}

/// Checks `(-t^{-2})^{L_0} e^{t^{-1} L_1} (-t^2)^{L_0} a = e^{-t L_1} a`.
///
/// The right-hand factor is the inverse of the left one, so the left side is
/// the conjugate of `e^{t^{-1} L_1}`.
pub fn check_fhl(alg: &VertexAlgebraData, a: &SparseVec) -> bool {
    let x = LaurentVec::from([(0, a.clone())]);
    let lhs = power_l0(alg, &x, &-Scalar::one(), 2);
    let lhs = exp_l1(alg, &lhs, &Scalar::one(), -1);
    let lhs = power_l0(alg, &lhs, &-Scalar::one(), -2);
    let rhs = exp_l1(alg, &x, &-Scalar::one(), 1);
    lhs == rhs
}

/// Contragredient of a module, with modes computed on demand and memoized.
pub struct DualModule<P: ModuleAction> {
    primal: P,
    space: GradedSpace,
    rz: Vec<Vec<(i64, SparseVec)>>,
    memo: RwLock<HashMap<(usize, i64, usize), Option<SparseVec>>>,
}

impl<P: ModuleAction> DualModule<P> {
    pub fn new(primal: P) -> Self {
        let space = GradedSpace::new(
            primal
                .space()
                .components()
                .into_iter()
                .map(|(d, ls)| (d, ls.into_iter().map(|l| format!("{l}*")).collect()))
                .collect(),
        );
        let alg = primal.algebra();
        let rz = (0..alg.dim()).map(|a| rz_apply(alg, &SparseVec::unit(a)).into_iter().collect()).collect();
        DualModule { primal, space, rz, memo: RwLock::new(HashMap::new()) }
    }

    pub fn primal(&self) -> &P {
        &self.primal
    }

    /// `𝓡(z) a` for a basis vector `a`.
    pub fn rz_terms(&self, a: usize) -> &[(i64, SparseVec)] {
        &self.rz[a]
    }

    /// `a_(k) φ` for basis `a` and basis `φ`.
    fn basis_mode(&self, a: usize, k: i64, phi: usize) -> Option<SparseVec> {
        if let Some(hit) = self.memo.read().unwrap().get(&(a, k, phi)) {
            return hit.clone();
        }
        let value = self.compute(a, k, phi);
        self.memo.write().unwrap().entry((a, k, phi)).or_insert(value).clone()
    }

    fn compute(&self, a: usize, k: i64, phi: usize) -> Option<SparseVec> {
        let alg = self.primal.algebra();
        let d = self.space.degree(phi) + alg.degree(a) - k - 1;
        if d < 0 {
            return Some(SparseVec::new());
        }
        if d > self.primal.cap() {
            return None;
        }
        let mut out = SparseVec::new();
        for m in self.primal.space().range_at(d) {
            let mv = SparseVec::unit(m);
            let mut value = Scalar::zero();
            for (e, u) in &self.rz[a] {
                value += self.primal.act(u, -e - k, &mv)?.get(phi);
            }
            out.add_term(m, value);
        }
        Some(out)
    }

    /// `a_(k) φ` for any `a` and `φ`; `None` when the result leaves the cap.
    pub fn dual_mode_apply(&self, a: &SparseVec, k: i64, phi: &SparseVec) -> Option<SparseVec> {
        self.act(a, k, phi)
    }

    /// Number of memoized entries.
    pub fn memo_len(&self) -> usize {
        self.memo.read().unwrap().len()
    }
}

impl<P: ModuleAction> ModuleAction for DualModule<P> {
    fn algebra(&self) -> &VertexAlgebraData {
        self.primal.algebra()
    }

    fn space(&self) -> &GradedSpace {
        &self.space
    }

    fn cap(&self) -> i64 {
        self.primal.cap()
    }

    fn act_basis(&self, a: usize, k: i64, phi: &SparseVec) -> Option<SparseVec> {
        let mut out = SparseVec::new();
        for (p, c) in phi.iter() {
            out.add_scaled(&self.basis_mode(a, k, p)?, c);
        }
        Some(out)
    }
}

/// `res_{z=∞} g(z)`: substitute `x = z^{-1}` and take `-res_{x=0}` with the
/// measure `dz = -x^{-2} dx` already absorbed into `𝓡(z)`, i.e. minus the
/// coefficient of `z^1`.
pub fn residue_at_infinity_coefficient(exponent: i64) -> Scalar {
    if exponent == 1 {
        -Scalar::one()
    } else {
        Scalar::zero()
    }
}

/// Both sides of `res_{z=∞} f(z) (Y_{M∨}(𝓡(z) a, z^{-1}) φ)(m) = -φ(res_{z=0} f(z) Y_M(a, z) m)`
/// for a Laurent polynomial `f` and basis vectors `a`, `φ`, `m`.
pub fn duality_sides<P: ModuleAction>(
    dual: &DualModule<P>,
    f: &RationalSection,
    a: usize,
    phi: usize,
    m: usize,
) -> Result<(Scalar, Scalar)> {
    if f.arity() != 1 {
        return Err(Error::InvalidArgument("duality test functions have one variable".into()));
    }
    let phiv = SparseVec::unit(phi);
    let mv = SparseVec::unit(m);
    let mut lhs = Scalar::zero();
    let mut rhs = Scalar::zero();
    for (key, c) in f.terms() {
        let Factor::Pow(n) = key.factors()[0] else { unreachable!() };
        // f Y(𝓡(z)a, z^{-1}) φ = Σ z^{n+e+k+1} (u_e)_(k) φ; only k = -n-e survives
        for (e, u) in dual.rz_terms(a) {
            for (b, x) in u.iter() {
                let k = -n - e;
                // a result beyond the cap cannot pair with m
                let w = dual.act_basis(b, k, &phiv).unwrap_or_default();
                lhs += residue_at_infinity_coefficient(n + e + k + 1) * c * x * w.get(m);
            }
        }
        let am = dual.primal().act_basis(a, n, &mv).unwrap_or_default();
        rhs -= &(c * am.get(phi));
    }
    Ok((lhs, rhs))
}

pub fn check_duality<P: ModuleAction>(
    dual: &DualModule<P>,
    f: &RationalSection,
    a: usize,
    phi: usize,
    m: usize,
) -> Result<bool> {
    let (l, r) = duality_sides(dual, f, a, phi, m)?;
    Ok(l == r)
}

/// Compares the action on `(M∨)∨` with the action on `M` under the
/// evaluation isomorphism, for modes in `[-bound, bound]` that stay within
/// the cap. Returns the number of compared entries.
pub fn check_double_dual<P: ModuleAction>(dual: &DualModule<P>, bound: i64) -> Result<usize> {
    let alg = dual.algebra();
    let primal = dual.primal();
    let dd = DualModule::new(DualModule::new(ModuleRef(primal)));
    let mut compared = 0;
    for a in 0..alg.dim() {
        for v in 0..primal.space().dim() {
            let vv = SparseVec::unit(v);
            for k in -bound..=bound {
                let (Some(x), Some(y)) = (primal.act_basis(a, k, &vv), dd.act_basis(a, k, &vv)) else {
                    continue;
                };
                if x != y {
                    return Err(Error::Invariant(format!(
                        "double dual differs at {}_({k}) {}",
                        alg.space.label(a),
                        primal.space().label(v)
                    )));
                }
                compared += 1;
            }
        }
    }
    Ok(compared)
}

/// Borrowed module, so duals can be stacked without cloning tables.
pub struct ModuleRef<'a, P: ModuleAction>(pub &'a P);

impl<P: ModuleAction> ModuleAction for ModuleRef<'_, P> {
    fn algebra(&self) -> &VertexAlgebraData {
        self.0.algebra()
    }
    fn space(&self) -> &GradedSpace {
        self.0.space()
    }
    fn cap(&self) -> i64 {
        self.0.cap()
    }
    fn act_basis(&self, a: usize, m: i64, v: &SparseVec) -> Option<SparseVec> {
        self.0.act_basis(a, m, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::{heisenberg_va, trivial_va};

    #[test]
    fn rz_of_vacuum_omega_and_b() {
        let v = heisenberg_va(4).unwrap();
        let one = v.vacuum_vec();
        assert_eq!(rz_apply(&v, &one), LaurentVec::from([(2, one.clone())]));
        assert_eq!(rz_apply(&v, &v.omega), LaurentVec::from([(-2, v.omega.clone())]));
        let b = SparseVec::unit(v.basis_index("b-1").unwrap());
        assert_eq!(rz_apply(&v, &b), LaurentVec::from([(0, b.negated())]));
        let (t, _) = trivial_va();
        assert_eq!(rz_apply(&t, &t.vacuum_vec()), LaurentVec::from([(2, t.vacuum_vec())]));
    }

    #[test]
    fn l1_kills_omega() {
        let v = heisenberg_va(4).unwrap();
        assert!(l1(&v, &v.omega).is_zero());
        // L_1 b_{-2} 1 = 2 b_{-1} 1 is the first nonzero case
        let b2 = SparseVec::unit(v.basis_index("b-2").unwrap());
        assert_eq!(l1(&v, &b2), SparseVec::unit(v.basis_index("b-1").unwrap()).scaled(&Scalar::from_int(2)));
    }
}
