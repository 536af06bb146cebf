//! Mode tables of a module determined by the modes of the strong generators,
//! using `u = g_(-k) v` from the algebra's construction data and the iterate
//! formula
//!
//! `(g_(-k) v)_(q) w = Σ_{j>=0} C(k+j-1, j) [g_(-k-j) v_(q+j) w - (-1)^k v_(-k+q-j) g_(j) w]`.

use crate::error::{Error, Result};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::{binomial, Scalar};

use super::{ModeTable, VertexAlgebraData};

struct Ctx<'a> {
    alg: &'a VertexAlgebraData,
    space: &'a GradedSpace,
    cap: i64,
}

impl Ctx<'_> {
    fn act(&self, table: &ModeTable, x: usize, m: i64, v: &SparseVec) -> Result<SparseVec> {
        let mut out = SparseVec::new();
        for (w, c) in v.iter() {
            let d = self.alg.degree(x) + self.space.degree(w) - m - 1;
            if d < 0 {
                continue;
            }
            if d > self.cap {
                return Err(Error::Precondition(format!(
                    "closing modes needs {}_({m}) {} in degree {d} beyond the cap {}",
                    self.alg.space.label(x),
                    self.space.label(w),
                    self.cap
                )));
            }
            if let Some(r) = table.get(x, m, w) {
                out.add_scaled(r, c);
            }
        }
        Ok(out)
    }
}

/// Full mode table on `space` (truncated at `cap`) from the table of
/// generator modes. The vacuum acts as the identity.
pub fn close_modes(
    alg: &VertexAlgebraData,
    space: &GradedSpace,
    cap: i64,
    generator_modes: &ModeTable,
) -> Result<ModeTable> {
    let ctx = Ctx { alg, space, cap };
    let mut table = ModeTable::new();
    for ((a, m, w), r) in generator_modes.sorted() {
        if !alg.generators.contains(&a) {
            return Err(Error::InvalidArgument(format!("{} is not a generator", alg.space.label(a))));
        }
        table.insert(a, m, w, r.clone());
    }
    for w in 0..space.dim() {
        table.insert(alg.vacuum, -1, w, SparseVec::unit(w));
    }
    let mut order: Vec<usize> = (0..alg.dim()).collect();
    order.sort_by_key(|u| alg.degree(*u));
    for u in order {
        if u == alg.vacuum || alg.generators.contains(&u) {
            continue;
        }
        let (g, k, v) = alg.construction[u]
            .ok_or_else(|| Error::Invariant(format!("no construction for {}", alg.space.label(u))))?;
        let (du, dv, dg) = (alg.degree(u), alg.degree(v), alg.degree(g));
        let sign = Scalar::sign(k);
        for w in 0..space.dim() {
            let dw = space.degree(w);
            let wv = SparseVec::unit(w);
            for q in (du + dw - 1 - cap)..=(du + dw - 1) {
                let mut val = SparseVec::new();
                let mut j = 0;
                while dv + dw - q - j - 1 >= 0 {
                    let inner = ctx.act(&table, v, q + j, &wv)?;
                    if !inner.is_zero() {
                        val.add_scaled(&ctx.act(&table, g, -k - j, &inner)?, &binomial(k + j - 1, j));
                    }
                    j += 1;
                }
                let mut j = 0;
                while dg + dw - j - 1 >= 0 {
                    let inner = ctx.act(&table, g, j, &wv)?;
                    if !inner.is_zero() {
                        let c = -(&binomial(k + j - 1, j) * &sign);
                        val.add_scaled(&ctx.act(&table, v, -k + q - j, &inner)?, &c);
                    }
                    j += 1;
                }
                table.insert(u, q, w, val);
            }
        }
    }
    Ok(table)
}
