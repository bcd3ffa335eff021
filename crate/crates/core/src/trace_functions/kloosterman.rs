use super::{check_budget, Family, Method, TraceTable, BRUTE_FORCE_BUDGET};
use crate::error::{invalid, Result};
use crate::finite_field::{FieldCtx, FqElem};
use crate::group::GroupKind;
use crate::summation::ComplexSum;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Normalized hyper-Kloosterman sums Kl_n(x) for every x ∈ F_q.
///
/// Kl_n(x) = (−1)^{n−1} q^{−(n−1)/2} Σ_{x_1⋯x_n = x} ψ(x_1+…+x_n). The sum is
/// empty at x = 0, which is stored as 0 and marked singular.
pub fn kloosterman_all(ctx: &Arc<FieldCtx>, n: u32, method: Method) -> Result<TraceTable> {
    if n < 2 {
        return Err(invalid("Kloosterman rank must be at least 2"));
    }
    let q = ctx.q();
    if q < 3 {
        return Err(invalid("Kloosterman sums need q >= 3"));
    }
    let raw = if method.use_fast(q) {
        mellin_convolution_power(ctx, n)
    } else {
        check_budget(((q - 1) as f64).powi(n as i32), BRUTE_FORCE_BUDGET)?;
        brute_force(ctx, n)
    };
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let scale = sign / (q as f64).powf((n - 1) as f64 / 2.0);
    let values = raw.into_iter().map(|v| v * scale).collect();
    let group = if n.is_multiple_of(2) {
        GroupKind::Symplectic(n)
    } else {
        GroupKind::SpecialLinear(n)
    };
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::Kloosterman { n },
        rank: n,
        self_dual: n.is_multiple_of(2),
        group,
        singular: vec![FqElem::ZERO],
        conductor_bound: n + 3,
    })
}

/// Unnormalized sums by enumeration of (x_1, …, x_{n−1}) ∈ (F_q^×)^{n−1} for each target.
fn brute_force(ctx: &FieldCtx, n: u32) -> Vec<Complex64> {
    let q1 = ctx.q() - 1;
    // tr(g^m) for every exponent
    let tr: Vec<u64> = (0..q1).map(|m| ctx.trace(ctx.gen_pow(m))).collect();
    let p = ctx.p();
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.size()];
    let per_target: Vec<Complex64> = (0..q1)
        .into_par_iter()
        .map(|k| {
            let mut acc = ComplexSum::new();
            let mut idx = vec![0u64; n as usize - 1];
            loop {
                let s: u64 = idx.iter().sum::<u64>() % q1;
                let last = (k + q1 - s) % q1;
                let t = (idx.iter().map(|&m| tr[m as usize]).sum::<u64>() + tr[last as usize]) % p;
                acc.add(ctx.root_p(t));
                // odometer increment
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
    for (k, v) in per_target.into_iter().enumerate() {
        out[ctx.gen_pow(k as u64).index()] = v;
    }
    out
}

/// n-fold multiplicative self-convolution of ψ via a length-(q−1) DFT.
fn mellin_convolution_power(ctx: &FieldCtx, n: u32) -> Vec<Complex64> {
    let q1 = (ctx.q() - 1) as usize;
    let mut u: Vec<Complex64> = (0..q1)
        .map(|m| ctx.add_char(ctx.gen_pow(m as u64)))
        .collect();
    let conv = cyclic_product_convolution(&mut [u.as_mut_slice()], n);
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.size()];
    for (k, v) in conv.into_iter().enumerate() {
        out[ctx.gen_pow(k as u64).index()] = v;
    }
    out
}

/// Cyclic convolution of the given sequences, with the first one used `power` times
/// and each remaining one once.
pub(crate) fn cyclic_product_convolution(
    seqs: &mut [&mut [Complex64]],
    power: u32,
) -> Vec<Complex64> {
    let len = seqs[0].len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut acc: Vec<Complex64> = {
        fwd.process(seqs[0]);
        seqs[0].iter().map(|z| z.powu(power)).collect()
    };
    for s in seqs.iter_mut().skip(1) {
        fwd.process(s);
        for (a, b) in acc.iter_mut().zip(s.iter()) {
            *a *= b;
        }
    }
    inv.process(&mut acc);
    let norm = 1.0 / len as f64;
    acc.iter_mut().for_each(|z| *z *= norm);
    acc
}
