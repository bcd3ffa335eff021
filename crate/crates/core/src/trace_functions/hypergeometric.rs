use super::kloosterman::cyclic_product_convolution;
use super::{check_budget, CharSpec, Family, Method, TraceTable, REAL_TOLERANCE};
use crate::error::{invalid, Result};
use crate::finite_field::{FieldCtx, FqElem, MultChar};
use crate::group::GroupKind;
use crate::summation::ComplexSum;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Enumeration budget q^{n+m−1} for the brute-force path.
pub const HYPERGEOMETRIC_BUDGET: f64 = 1e8;

/// Character exponent a with χ(g^m) = exp(2πi·a·m/(q−1)).
fn exponent(ctx: &FieldCtx, c: &MultChar) -> u64 {
    (c.j() * ((ctx.q() - 1) / c.d())) % (ctx.q() - 1)
}

/// Hypergeometric sums
/// t(λ) = (−1)^{r−1} q^{−(r−1)/2} Σ_{Πx = λ·Πy} Πχ_i(x_i) Πρ̄_j(y_j) ψ(Σx − Σy),
/// with x ∈ (F_q^×)^n, y ∈ (F_q^×)^m and r = n + m.
///
/// Characters may repeat inside a tuple; a character present in both tuples is
/// rejected. t(0) is an empty sum. 0 is singular, and so is 1 when n = m.
pub fn hypergeometric_all(
    ctx: &Arc<FieldCtx>,
    chis: &[CharSpec],
    rhos: &[CharSpec],
    method: Method,
) -> Result<TraceTable> {
    let n = chis.len();
    let m = rhos.len();
    if n == 0 {
        return Err(invalid(
            "at least one character in the first tuple is required",
        ));
    }
    let cs: Vec<MultChar> = chis
        .iter()
        .map(|&(d, j)| ctx.mult_character(d, j))
        .collect::<Result<_>>()?;
    let rs: Vec<MultChar> = rhos
        .iter()
        .map(|&(d, j)| ctx.mult_character(d, j))
        .collect::<Result<_>>()?;
    for c in &cs {
        for r in &rs {
            if exponent(ctx, c) == exponent(ctx, r) {
                return Err(invalid("the two character tuples share a character"));
            }
        }
    }
    let q = ctx.q();
    let r = (n + m) as i32;
    let raw = if method.use_fast(q) {
        via_dft(ctx, &cs, &rs)
    } else {
        check_budget((q as f64).powi(r - 1), HYPERGEOMETRIC_BUDGET)?;
        brute_force(ctx, &cs, &rs)
    };
    let sign = if (r - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let scale = sign / (q as f64).powf((r - 1) as f64 / 2.0);
    let values: Vec<Complex64> = raw.into_iter().map(|v| v * scale).collect();

    let rank = n.max(m) as u32;
    let all_trivial = cs.iter().all(|c| c.is_trivial());
    let kloosterman_like = m == 0 && all_trivial && n >= 2;
    let group = if kloosterman_like {
        if n.is_multiple_of(2) {
            GroupKind::Symplectic(n as u32)
        } else {
            GroupKind::SpecialLinear(n as u32)
        }
    } else if rank == 1 {
        GroupKind::UnitCircle
    } else {
        GroupKind::SpecialLinear(rank)
    };
    let self_dual = if kloosterman_like {
        n.is_multiple_of(2)
    } else {
        rank >= 2 && values.iter().all(|v| v.im.abs() <= REAL_TOLERANCE)
    };
    let mut singular = vec![FqElem::ZERO];
    if n == m {
        singular.push(ctx.one());
    }
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::Hypergeometric {
            chis: chis.to_vec(),
            rhos: rhos.to_vec(),
        },
        rank,
        self_dual,
        group,
        singular,
        conductor_bound: rank + 3,
    })
}

/// a_i[k] = χ_i(g^k)ψ(g^k) and b_j[k] = ρ̄_j(g^{−k})ψ(−g^{−k}); t(g^k) is their cyclic
/// convolution.
fn via_dft(ctx: &FieldCtx, cs: &[MultChar], rs: &[MultChar]) -> Vec<Complex64> {
    let q1 = ctx.q() - 1;
    let mut seqs: Vec<Vec<Complex64>> = cs
        .iter()
        .map(|c| {
            (0..q1)
                .map(|k| c.eval_log(k) * ctx.add_char(ctx.gen_pow(k)))
                .collect()
        })
        .collect();
    for rho in rs {
        seqs.push(
            (0..q1)
                .map(|k| {
                    let inv = (q1 - k) % q1;
                    rho.eval_log(inv).conj() * ctx.add_char(ctx.neg(ctx.gen_pow(inv)))
                })
                .collect(),
        );
    }
    let mut refs: Vec<&mut [Complex64]> = seqs.iter_mut().map(|v| v.as_mut_slice()).collect();
    let conv = cyclic_product_convolution(&mut refs, 1);
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.size()];
    for (k, v) in conv.into_iter().enumerate() {
        out[ctx.gen_pow(k as u64).index()] = v;
    }
    out
}

/// Direct enumeration of all (x, y) tuples in the logarithm domain, per target λ.
fn brute_force(ctx: &FieldCtx, cs: &[MultChar], rs: &[MultChar]) -> Vec<Complex64> {
    let q1 = ctx.q() - 1;
    let p = ctx.p();
    let n = cs.len();
    let total = n + rs.len();
    let tr: Vec<u64> = (0..q1).map(|k| ctx.trace(ctx.gen_pow(k))).collect();
    let per_target: Vec<Complex64> = (0..q1)
        .into_par_iter()
        .map(|target| {
            // free coordinates: every x_i and y_j except x_1, which is fixed by
            // log x_1 = target + Σ log y − Σ_{i≥2} log x_i
            let mut idx = vec![0u64; total - 1];
            let mut acc = ComplexSum::new();
            loop {
                let xs = &idx[..n - 1];
                let ys = &idx[n - 1..];
                let sy: u64 = ys.iter().sum::<u64>() % q1;
                let sx: u64 = xs.iter().sum::<u64>() % q1;
                let x1 = (target + sy + q1 - sx) % q1;
                let mut v = cs[0].eval_log(x1);
                let mut t = tr[x1 as usize];
                for (c, &k) in cs[1..].iter().zip(xs) {
                    v *= c.eval_log(k);
                    t += tr[k as usize];
                }
                for (rho, &k) in rs.iter().zip(ys) {
                    v *= rho.eval_log(k).conj();
                    t += p - tr[k as usize];
                }
                acc.add(v * ctx.root_p(t % p));
                let mut i = 0;
                loop {
                    if i == idx.len() {
                        return acc.value();
                    }
                    idx[i] += 1;
                    if idx[i] < q1 {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
            }
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.size()];
    for (k, v) in per_target.into_iter().enumerate() {
        out[ctx.gen_pow(k as u64).index()] = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{kloosterman_all, verify_weil};
    use super::*;

    #[test]
    fn recovers_kloosterman() {
        for p in [11u64, 101] {
            let ctx = field(p);
            for n in [2u32, 3] {
                let kl = kloosterman_all(&ctx, n, Method::Fast).unwrap();
                let chis = vec![(1u64, 0u64); n as usize];
                for method in [Method::BruteForce, Method::Fast] {
                    let h = hypergeometric_all(&ctx, &chis, &[], method).unwrap();
                    assert!(max_diff(&kl.values, &h.values) < 1e-8, "p={p} n={n}");
                    assert_eq!(h.group, kl.group);
                }
            }
        }
    }

    #[test]
    fn rank_one_is_additive_character() {
        let ctx = field(37);
        let h = hypergeometric_all(&ctx, &[(1, 0)], &[], Method::BruteForce).unwrap();
        for x in ctx.elements().skip(1) {
            assert!((h.value(x) - ctx.add_char(x)).norm() < 1e-12);
            assert!((h.value(x).norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(h.value(FqElem::ZERO), Complex64::new(0.0, 0.0));
        assert_eq!(h.group, GroupKind::UnitCircle);
    }

    #[test]
    fn brute_force_and_dft_agree_with_characters() {
        let ctx = field(13);
        let chis = [(12u64, 1u64), (4, 1), (2, 1)];
        let rhos = [(3u64, 1u64)];
        let a = hypergeometric_all(&ctx, &chis, &rhos, Method::BruteForce).unwrap();
        let b = hypergeometric_all(&ctx, &chis, &rhos, Method::Fast).unwrap();
        assert!(max_diff(&a.values, &b.values) < 1e-8);
        assert!(verify_weil(&a).pass, "{:?}", verify_weil(&a));
        assert_eq!(a.rank, 3);

        let h =
            hypergeometric_all(&ctx, &[(4, 1), (3, 2)], &[(6, 1), (2, 1)], Method::Fast).unwrap();
        assert_eq!(h.singular, vec![FqElem::ZERO, ctx.one()]);
        assert!(verify_weil(&h).pass);
    }

    #[test]
    fn rejects_shared_characters_and_budget() {
        let ctx = field(13);
        // 1/2 and 6/12 are the same character
        assert!(hypergeometric_all(&ctx, &[(2, 1)], &[(12, 6)], Method::Fast).is_err());
        let big = field(1009);
        assert!(matches!(
            hypergeometric_all(
                &big,
                &[(1, 0), (1, 0), (1, 0), (1, 0)],
                &[],
                Method::BruteForce
            ),
            Err(crate::error::Error::Budget { .. })
        ));
    }
}
