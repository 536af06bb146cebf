//! The functional `ψ̃_B` on the weight-0 slice of `C̃_1`, its inverse
//! construction `ξ` from a functional on `H_1`, and the pairing matrix
//! between Ext classes and `H_1` cycles.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{HomologyResult, Term};
use crate::error::{Error, Result};
use crate::laurent::{Factor, MonomialKey};
use crate::linalg::{nullspace_with_free, Echelon, SparseVec};
use crate::scalar::Scalar;

use super::{CocycleXi, Ext1Result, ExtContext, ExtensionModule, GradedMap};

/// Values of a functional on the `H_1` cycle basis of a [`HomologyResult`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiFunctional {
    pub values: Vec<Scalar>,
}

impl PsiFunctional {
    pub fn zero(hom: &HomologyResult) -> Self {
        PsiFunctional { values: vec![Scalar::zero(); hom.dim_h1] }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Scalar::is_zero)
    }

    /// The functional `x ↦ ψ(p(x))` on the `C̃_1` slice, where `p` is the
    /// retraction onto `ker d1` and `ψ` is extended to `ker d1` by zero on
    /// translations and exact boundaries.
    pub fn lift(&self, hom: &HomologyResult, retraction: &Retraction) -> Result<SparseVec> {
        if self.values.len() != hom.dim_h1 {
            return Err(Error::InvalidArgument(format!(
                "functional has {} values but H1 has dimension {}",
                self.values.len(),
                hom.dim_h1
            )));
        }
        let det = &hom.details;
        let n = det.c1_basis.len();
        let mut span = Echelon::tracked(n);
        for v in det.translations.iter().chain(&det.exact_boundaries).chain(&det.cycle_vectors) {
            span.insert(v.clone());
        }
        let first_cycle = det.translations.len() + det.exact_boundaries.len();
        let mut out = SparseVec::new();
        for (f, k) in retraction.free.iter().zip(&retraction.kernel) {
            let (res, combo) = span.express(k);
            if !res.is_zero() {
                return Err(Error::Invariant("kernel vector outside boundaries + cycles".into()));
            }
            let mut value = Scalar::zero();
            for (id, x) in combo.iter() {
                if id >= first_cycle {
                    value += &(x * &self.values[id - first_cycle]);
                }
            }
            out.add_term(*f, value);
        }
        Ok(out)
    }
}

/// A projection of the `C̃_1` slice onto `ker d1`: `p(x) = Σ x_f k_f` over
/// kernel vectors `k_f` with a 1 in their free column `f` and zero in the
/// other free columns.
#[derive(Clone, Debug)]
pub struct Retraction {
    pub kernel: Vec<SparseVec>,
    pub free: Vec<usize>,
}

impl Retraction {
    /// Complement spanned by the pivot coordinates of `d1` in basis order.
    pub fn pivot(hom: &HomologyResult) -> Self {
        Retraction { kernel: hom.details.kernel.clone(), free: hom.details.kernel_free.clone() }
    }

    /// Same construction with the basis order reversed, giving a different
    /// complement of `ker d1` in general.
    pub fn reversed(hom: &HomologyResult) -> Self {
        let n = hom.details.c1_basis.len();
        let flip = |i: usize| n - 1 - i;
        let rows: Vec<SparseVec> = hom.details.d1_rows.iter().map(|r| r.remap(flip)).collect();
        let (free, kernel) = nullspace_with_free(&rows, n).into_iter().map(|(f, k)| (flip(f), k.remap(flip))).unzip();
        Retraction { kernel, free }
    }

    pub fn apply(&self, x: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (f, k) in self.free.iter().zip(&self.kernel) {
            let c = x.get(*f);
            if !c.is_zero() {
                out.add_scaled(k, &c);
            }
        }
        out
    }
}

fn exponent(t: &Term) -> Result<i64> {
    match t.key.factors() {
        [Factor::Pow(e)] if t.labels.len() == 1 => Ok(*e),
        _ => Err(Error::InvalidArgument(format!("{:?} is not a term of C̃_1", t.key))),
    }
}

/// `ψ̃_B(z^m a ⊗ φ ⊗ c) = φ(ξ^s_(m)(a) c)` with
/// `ξ^s(a, z) c = Y_B(a, z) s(c) - s(Y_C(a, z) c)` for the section
/// `s(c) = (σ(c), c)`.
pub fn psi_tilde(ext: &ExtensionModule, sigma: &GradedMap, t: &Term) -> Result<Scalar> {
    let ctx = &ext.ctx;
    let m = exponent(t)?;
    let a = SparseVec::unit(t.labels[0]);
    let c = SparseVec::unit(t.c);
    let mut sc = ctx.embed_a(&sigma.apply(&c));
    sc.add(&ctx.embed_c(&c));
    let mut x = ctx.project_a(&ext.module.mode_apply(&a, m, &sc));
    x.add_scaled(&sigma.apply(&ctx.c.mode_apply(&a, m, &c)), &-Scalar::one());
    Ok(x.get(t.phi))
}

/// `ψ̃_B` on every basis term, as a vector over `basis`.
pub fn psi_on_basis(ext: &ExtensionModule, sigma: &GradedMap, basis: &[Term]) -> Result<SparseVec> {
    let values: Vec<Scalar> = basis.par_iter().map(|t| psi_tilde(ext, sigma, t)).collect::<Result<_>>()?;
    Ok(values.into_iter().enumerate().collect())
}

/// `ψ_B` on the `H_1` cycle basis.
pub fn psi_from_extension(ext: &ExtensionModule, sigma: &GradedMap, hom: &HomologyResult) -> Result<PsiFunctional> {
    let slice = psi_on_basis(ext, sigma, &hom.details.c1_basis)?;
    Ok(PsiFunctional { values: hom.details.cycle_vectors.iter().map(|z| slice.dot(z)).collect() })
}

/// `φ(ξ_m(a) c) = ψ(p(z^m a ⊗ φ ⊗ c))` for a functional `ψ` on the slice that
/// vanishes on translations and exact boundaries.
pub fn xi_from_slice_functional(
    ctx: &ExtContext,
    hom: &HomologyResult,
    psi: &SparseVec,
    retraction: &Retraction,
) -> Result<CocycleXi> {
    let det = &hom.details;
    if det.translations.iter().chain(&det.exact_boundaries).any(|b| !psi.dot(b).is_zero()) {
        return Err(Error::Precondition("functional does not vanish on boundaries".into()));
    }
    if hom.weight != 0 {
        return Err(Error::Precondition(format!("cocycles pair with the weight-0 slice, not weight {}", hom.weight)));
    }
    let index: HashMap<&Term, usize> = det.c1_basis.iter().enumerate().map(|(i, t)| (t, i)).collect();
    for a in 0..ctx.alg.dim() {
        for c in 0..ctx.c.dim() {
            for x in 0..ctx.a.dim() {
                let m = ctx.alg.degree(a) + ctx.c.degree(c) - 1 - ctx.a.degree(x);
                let t = Term { key: MonomialKey::power(m), labels: vec![a], phi: x, c };
                if !index.contains_key(&t) {
                    return Err(Error::Precondition(format!(
                        "z^{m} {}⊗{}*⊗{} is outside the slice; widen the window",
                        ctx.alg.space.label(a),
                        ctx.a.space.label(x),
                        ctx.c.space.label(c)
                    )));
                }
            }
        }
    }
    let mut xi = CocycleXi::zero();
    for (f, k) in retraction.free.iter().zip(&retraction.kernel) {
        let value = psi.dot(k);
        if value.is_zero() {
            continue;
        }
        let t = &det.c1_basis[*f];
        xi.add(t.labels[0], exponent(t)?, t.c, &SparseVec::unit(t.phi), &value);
    }
    Ok(xi)
}

/// [`xi_from_slice_functional`] for a functional given on the `H_1` basis.
pub fn xi_from_psi(
    ctx: &ExtContext,
    hom: &HomologyResult,
    psi: &PsiFunctional,
    retraction: &Retraction,
) -> Result<CocycleXi> {
    xi_from_slice_functional(ctx, hom, &psi.lift(hom, retraction)?, retraction)
}

/// Matrix of `ψ_{B_i}` on the `H_1` cycle basis, for `B_i` built from the
/// Ext class representatives.
#[derive(Clone, Debug, Serialize)]
pub struct Pairing {
    pub matrix: Vec<Vec<Scalar>>,
    pub rank: usize,
    #[serde(rename = "dimExt1")]
    pub dim_ext1: usize,
    #[serde(rename = "dimH1")]
    pub dim_h1: usize,
    /// `rank = dim Ext¹ = dim H_1`.
    pub certificate: bool,
}

pub fn pairing_matrix(ctx: &Arc<ExtContext>, ext1: &Ext1Result, hom: &HomologyResult) -> Result<Pairing> {
    if ext1.caps != hom.caps {
        return Err(Error::Precondition(format!("Ext computed at {} but homology at {}", ext1.caps, hom.caps)));
    }
    let sigma = GradedMap::new();
    let matrix = ext1
        .classes
        .iter()
        .map(|cl| {
            let b = ctx.assemble(&cl.representative)?;
            Ok(psi_from_extension(&b, &sigma, hom)?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut e = Echelon::new(hom.dim_h1);
    for row in &matrix {
        e.insert(SparseVec::from_dense(row));
    }
    let rank = e.rank();
    Ok(Pairing {
        rank,
        dim_ext1: ext1.dim,
        dim_h1: hom.dim_h1,
        certificate: rank == ext1.dim && rank == hom.dim_h1,
        matrix,
    })
}
