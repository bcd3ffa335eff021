use super::{eval_poly, roots_in_field, Family, TraceTable};
use crate::error::{invalid, Result};
use crate::finite_field::{FieldCtx, FqElem};
use crate::group::GroupKind;
use crate::poly::{FpPoly, IntRational};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

fn reduce_f(ctx: &FieldCtx, f: &IntRational) -> Result<FpPoly> {
    if ctx.p() == 2 {
        return Err(invalid("hyperelliptic families need odd p"));
    }
    let fr = f.reduce(ctx.p())?;
    if !fr.is_polynomial() {
        return Err(invalid("f must be a polynomial"));
    }
    let int_deg = f.num.iter().rposition(|&c| c != 0).unwrap_or(0);
    let f = fr.num;
    let deg = f.degree().unwrap_or(0);
    if deg != int_deg || deg == 0 || deg % 2 == 1 {
        return Err(invalid(format!(
            "f must have even degree 2g >= 2 that survives reduction mod p, got {deg}"
        )));
    }
    if !f.is_squarefree() {
        return Err(invalid("f is not squarefree mod p"));
    }
    Ok(f)
}

/// Quadratic character as an integer table: 0 at 0, ±1 elsewhere.
fn legendre_table(ctx: &FieldCtx) -> Vec<i8> {
    ctx.elements()
        .map(|x| match ctx.dlog(x) {
            None => 0,
            Some(m) if m % 2 == 0 => 1,
            Some(_) => -1,
        })
        .collect()
}

/// t(z) = −q^{−1/2} Σ_x χ₂(f(x)(x − z)), the normalized Frobenius trace of the
/// curve y² = f(x)(x − z). Zeros of f in F_q are singular.
pub fn hyperelliptic_all(ctx: &Arc<FieldCtx>, f: &IntRational) -> Result<TraceTable> {
    let fp = reduce_f(ctx, f)?;
    let deg = fp.degree().unwrap() as u32;
    let leg = legendre_table(ctx);
    let lf: Vec<i64> = ctx
        .elements()
        .map(|x| leg[eval_poly(ctx, &fp, x).index()] as i64)
        .collect();
    let scale = -1.0 / (ctx.q() as f64).sqrt();
    let values = (0..ctx.size())
        .into_par_iter()
        .map(|i| {
            let z = ctx.at(i);
            let s: i64 = ctx
                .elements()
                .filter(|x| lf[x.index()] != 0)
                .map(|x| lf[x.index()] * leg[ctx.sub(x, z).index()] as i64)
                .sum();
            Complex64::new(s as f64 * scale, 0.0)
        })
        .collect();
    let singular = roots_in_field(ctx, &fp);
    let conductor_bound = deg + singular.len() as u32;
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::Hyperelliptic { f: f.to_string() },
        rank: deg,
        self_dual: true,
        group: GroupKind::Symplectic(deg),
        singular,
        conductor_bound,
    })
}

/// |X_z(F_q)| for the smooth projective model of y² = f(x)(x − z), deg f even:
/// affine solutions counted pair by pair, plus the single point at infinity.
pub fn hyperelliptic_point_count(ctx: &FieldCtx, f: &IntRational, z: FqElem) -> Result<u64> {
    let fp = reduce_f(ctx, f)?;
    let mut count = 1u64;
    for x in ctx.elements() {
        let v = ctx.mul(eval_poly(ctx, &fp, x), ctx.sub(x, z));
        for y in ctx.elements() {
            if ctx.mul(y, y) == v {
                count += 1;
            }
        }
    }
    Ok(count)
}
