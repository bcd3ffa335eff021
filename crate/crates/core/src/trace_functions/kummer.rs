use super::{eval_poly, roots_in_field, sorted_unique, Family, TraceTable};
use crate::error::{invalid, Result};
use crate::finite_field::FieldCtx;
use crate::group::GroupKind;
use crate::poly::IntRational;
use num_complex::Complex64;
use std::sync::Arc;

/// Kummer sums t(x) = χ(f(x)) for χ of order dividing d, with χ(0) = 0 at zeros and
/// poles of f.
///
/// Rejects a trivial χ, and any f with a finite zero or pole whose order is divisible
/// by the exact order of χ.
pub fn kummer_all(ctx: &Arc<FieldCtx>, d: u64, j: u64, f: &IntRational) -> Result<TraceTable> {
    let chi = ctx.mult_character(d, j)?;
    let order = chi.order();
    if order == 1 {
        return Err(invalid(
            "the trivial character does not give a Kummer family",
        ));
    }
    let fr = f.reduce(ctx.p())?;
    if fr.is_constant() {
        return Err(invalid("f must be nonconstant"));
    }
    for poly in [&fr.num, &fr.den] {
        for (_, m) in poly.squarefree_factorization() {
            if (m as u64).is_multiple_of(order) {
                return Err(invalid(format!(
                    "f has a zero or pole of order {m}, divisible by the character order {order}"
                )));
            }
        }
    }
    let values = ctx
        .elements()
        .map(|x| {
            let n = eval_poly(ctx, &fr.num, x);
            let dd = eval_poly(ctx, &fr.den, x);
            if n.is_zero() || dd.is_zero() {
                Complex64::new(0.0, 0.0)
            } else {
                chi.eval(ctx, n) * chi.eval(ctx, dd).conj()
            }
        })
        .collect();
    let mut singular = roots_in_field(ctx, &fr.num);
    singular.extend(roots_in_field(ctx, &fr.den));
    let deg = fr.num.degree().unwrap_or(0) + fr.den.degree().unwrap_or(0);
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::Kummer {
            d,
            j,
            f: f.to_string(),
        },
        rank: 1,
        self_dual: order == 2,
        group: GroupKind::CyclicKummer(order as u32),
        singular: sorted_unique(singular),
        conductor_bound: 1 + deg as u32,
    })
}
