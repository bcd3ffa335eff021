use super::{eval_rational, CharSpec, Family, Method, TraceTable, REAL_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::finite_field::{FieldCtx, FqElem, MultChar};
use crate::group::GroupKind;
use crate::poly::{FpPoly, IntRational, RationalFunction};
use crate::summation::ComplexSum;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Explicit rank and group for a general exponential sum, overriding the heuristics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyHint {
    pub rank: u32,
    pub group: GroupKind,
}

/// Birch sums Bi(x) = q^{−1/2} Σ_y ψ(xy + y³).
pub fn birch_all(ctx: &Arc<FieldCtx>, method: Method) -> Result<TraceTable> {
    if ctx.p() < 5 {
        return Err(invalid("Birch sums need p >= 5"));
    }
    let q = ctx.q();
    let values = if method.use_fast(q) && ctx.e() == 1 {
        // additive Fourier transform of y ↦ ψ(y³)
        let n = ctx.size();
        let mut w: Vec<Complex64> = ctx
            .elements()
            .map(|y| ctx.add_char(ctx.mul(ctx.mul(y, y), y)))
            .collect();
        FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut w);
        let s = 1.0 / (q as f64).sqrt();
        w.into_iter().map(|v| v * s).collect()
    } else {
        let weights: Vec<(FqElem, Complex64)> = ctx
            .elements()
            .map(|y| (y, ctx.add_char(ctx.mul(ctx.mul(y, y), y))))
            .collect();
        fourier_from_weights(ctx, &weights)
    };
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::Birch,
        rank: 2,
        self_dual: true,
        group: GroupKind::Symplectic(2),
        singular: Vec::new(),
        conductor_bound: 5,
    })
}

/// t(x) = q^{−1/2} Σ_z W[z] ψ(x·z) for a sparse weight list over z.
fn fourier_from_weights(ctx: &FieldCtx, weights: &[(FqElem, Complex64)]) -> Vec<Complex64> {
    let s = 1.0 / (ctx.q() as f64).sqrt();
    (0..ctx.size())
        .into_par_iter()
        .map(|i| {
            let x = ctx.at(i);
            let mut acc = ComplexSum::new();
            for &(z, w) in weights {
                acc.add(w * ctx.add_char(ctx.mul(x, z)));
            }
            acc.value() * s
        })
        .collect()
}

/// t(x) = q^{−1/2} Σ'_y ψ(x·f(y) + h(y)) χ(g(y)).
///
/// Points y at a pole of f or h are skipped; χ(g(y)) = 0 at zeros and poles of g.
/// Rank and group come from `hint` when given, otherwise from the heuristics
/// documented on [`heuristic_metadata`].
pub fn general_exp_sum_all(
    ctx: &Arc<FieldCtx>,
    f: &IntRational,
    g: &IntRational,
    h: &IntRational,
    chi: Option<CharSpec>,
    hint: Option<FamilyHint>,
) -> Result<TraceTable> {
    let p = ctx.p();
    let fr = f.reduce(p)?;
    let gr = g.reduce(p)?;
    let hr = h.reduce(p)?;
    if gr.is_zero() {
        return Err(invalid("g vanishes identically mod p"));
    }
    let character = match chi {
        Some((d, j)) => ctx.mult_character(d, j)?,
        None => MultChar::trivial(ctx),
    };

    // aggregate the weights ψ(h(y))χ(g(y)) over the fibres of f
    let mut agg = vec![ComplexSum::new(); ctx.size()];
    let mut used = vec![false; ctx.size()];
    for y in ctx.elements() {
        let (Some(fy), Some(hy)) = (eval_rational(ctx, &fr, y), eval_rational(ctx, &hr, y)) else {
            continue;
        };
        let cg = match eval_rational(ctx, &gr, y) {
            Some(gy) => character.eval(ctx, gy),
            None => Complex64::new(0.0, 0.0),
        };
        if cg == Complex64::new(0.0, 0.0) {
            continue;
        }
        agg[fy.index()].add(ctx.add_char(hy) * cg);
        used[fy.index()] = true;
    }
    let weights: Vec<(FqElem, Complex64)> = ctx
        .elements()
        .filter(|z| used[z.index()])
        .map(|z| (z, agg[z.index()].value()))
        .collect();
    let values = fourier_from_weights(ctx, &weights);
    let real = values.iter().all(|v| v.im.abs() <= REAL_TOLERANCE);

    let meta = heuristic_metadata(&fr, &gr, &hr, &character, real);
    let (rank, group) = match hint {
        Some(hn) => (hn.rank, hn.group.validate()?),
        None => (meta.rank, meta.group),
    };
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be positive".into()));
    }
    let singular = if meta.zero_singular {
        vec![FqElem::ZERO]
    } else {
        Vec::new()
    };
    let poles = distinct_degree(&fr.den) + distinct_degree(&gr.den) + distinct_degree(&hr.den) + 1;
    let degs: usize = [&fr, &gr, &hr]
        .iter()
        .map(|r| r.num.degree().unwrap_or(0) + r.den.degree().unwrap_or(0))
        .sum();
    Ok(TraceTable {
        ctx: ctx.clone(),
        values,
        family: Family::GeneralExp {
            f: f.to_string(),
            g: g.to_string(),
            h: h.to_string(),
            chi: chi.filter(|_| !character.is_trivial()),
        },
        rank,
        self_dual: real,
        group,
        singular,
        conductor_bound: rank + poles as u32 + degs as u32,
    })
}

/// Number of distinct roots over the algebraic closure.
fn distinct_degree(f: &FpPoly) -> usize {
    f.squarefree_factorization()
        .iter()
        .map(|(g, _)| g.degree().unwrap_or(0))
        .sum()
}

fn is_identity(r: &RationalFunction) -> bool {
    r.is_polynomial() && r.num.coeffs() == [0, 1]
}

fn is_odd_poly(f: &FpPoly) -> bool {
    f.coeffs().iter().step_by(2).all(|&c| c == 0)
}

/// No monomial of even positive degree.
fn no_even_positive_monomial(f: &FpPoly) -> bool {
    f.coeffs()
        .iter()
        .enumerate()
        .skip(2)
        .step_by(2)
        .all(|(_, &c)| c == 0)
}

pub(crate) struct Meta {
    pub rank: u32,
    pub group: GroupKind,
    pub zero_singular: bool,
}

fn group_for(rank: u32, self_dual: bool, symplectic_hint: bool) -> GroupKind {
    match (rank, self_dual) {
        (1, true) => GroupKind::CyclicKummer(2),
        (1, false) => GroupKind::UnitCircle,
        (r, true) if r % 2 == 0 || symplectic_hint => GroupKind::Symplectic(r + r % 2),
        (2, _) => GroupKind::SpecialLinear(2),
        (r, true) => GroupKind::SpecialOrthogonal(r),
        (r, false) => GroupKind::SpecialLinear(r),
    }
}

/// Rank and group without a hint:
/// - h = 0, χ trivial, f a polynomial of degree d: rank d − 1, symplectic for odd f,
///   special linear otherwise; x = 0 is singular.
/// - f = X, χ trivial, h a polynomial of degree n ≥ 3: rank n − 1, symplectic when n
///   is odd and h has no monomial of even positive degree, special linear otherwise.
/// - otherwise the generic Fourier-transform rank of ψ(h)χ(g) (finite poles of h
///   weighted by 1 + order, tame points of χ(g), Swan conductor of h at ∞ minus 1),
///   times max(1, deg f), with the group read off from realness.
pub(crate) fn heuristic_metadata(
    f: &RationalFunction,
    g: &RationalFunction,
    h: &RationalFunction,
    chi: &MultChar,
    real: bool,
) -> Meta {
    let trivial_chi = chi.is_trivial() && g.is_constant();
    if h.is_constant() && trivial_chi && f.is_polynomial() && f.num.degree().unwrap_or(0) >= 2 {
        let d = f.num.degree().unwrap() as u32;
        let rank = d - 1;
        let odd = is_odd_poly(&f.num);
        let group = match rank {
            1 => GroupKind::UnitCircle,
            r if odd => GroupKind::Symplectic(r),
            r => GroupKind::SpecialLinear(r),
        };
        return Meta {
            rank,
            group,
            zero_singular: true,
        };
    }
    if is_identity(f) && trivial_chi && h.is_polynomial() && h.num.degree().unwrap_or(0) >= 3 {
        let n = h.num.degree().unwrap() as u32;
        let rank = n - 1;
        let group = if n % 2 == 1 && no_even_positive_monomial(&h.num) {
            GroupKind::Symplectic(rank)
        } else {
            GroupKind::SpecialLinear(rank)
        };
        return Meta {
            rank,
            group,
            zero_singular: false,
        };
    }
    let h_pole_sites = distinct_degree(&h.den);
    let h_pole_orders = h.den.degree().unwrap_or(0);
    let tame = if chi.is_trivial() {
        0
    } else {
        distinct_degree(&g.num) + distinct_degree(&g.den)
    };
    let swan_inf = h
        .num
        .degree()
        .unwrap_or(0)
        .saturating_sub(h.den.degree().unwrap_or(0));
    let base = h_pole_sites + h_pole_orders + tame + swan_inf.saturating_sub(1);
    let deg_f = f
        .num
        .degree()
        .unwrap_or(0)
        .max(f.den.degree().unwrap_or(0))
        .max(1);
    let rank = (base * deg_f).max(1) as u32;
    Meta {
        rank,
        group: group_for(rank, real, false),
        zero_singular: h.is_constant() && trivial_chi,
    }
}
