//! Short sums of a trace function over all translates of a fixed offset set, and
//! the statistics comparing them with their Gaussian limit.

use crate::error::{invalid, Error, Result};
use crate::finite_field::{FieldCtx, FqElem};
use crate::group::GroupKind;
use crate::poly::IntRational;
use crate::rmt_moments::{gaussian_moment, model_moment, mult_one};
use crate::stats::{ks_distance, normal_cdf, normal_density, normal_interval};
use crate::summation::{par_sum_complex, ComplexSum, REDUCTION_CHUNK};
use crate::trace_functions::{Family, TraceTable};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::sync::Arc;

/// Largest k + r accepted by [`empirical_moment`].
pub const EMPIRICAL_MAX_ORDER: u32 = 20;
/// Largest Σ(k_i + r_i) accepted by [`sum_product_check`].
pub const SUM_PRODUCT_MAX_ORDER: u32 = 12;
/// Work limit for the exhaustive subset-sum search in [`i_compatible`].
pub const COMPATIBILITY_BUDGET: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OffsetShape {
    /// {0, 1, …, H − 1} by element index.
    Interval,
    /// Elements whose i-th coordinate lies in [0, dims_i).
    Box(Vec<u64>),
    Explicit,
}

/// A set I ⊂ F_q of distinct offsets with 1 ≤ |I| < q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetSet {
    shape: OffsetShape,
    offsets: Vec<FqElem>,
}

impl OffsetSet {
    pub fn explicit(ctx: &FieldCtx, offsets: Vec<FqElem>) -> Result<Self> {
        Self::build(ctx, OffsetShape::Explicit, offsets)
    }

    fn build(ctx: &FieldCtx, shape: OffsetShape, offsets: Vec<FqElem>) -> Result<Self> {
        let h = offsets.len() as u64;
        if h == 0 || h >= ctx.q() {
            return Err(invalid(format!(
                "offset set size {h} must satisfy 1 <= H < q = {}",
                ctx.q()
            )));
        }
        if offsets.iter().any(|x| x.index() as u64 >= ctx.q()) {
            return Err(invalid("offset outside the field"));
        }
        let mut sorted = offsets.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != offsets.len() {
            return Err(invalid("offsets must be distinct"));
        }
        Ok(Self { shape, offsets })
    }

    pub fn h(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[FqElem] {
        &self.offsets
    }

    pub fn shape(&self) -> &OffsetShape {
        &self.shape
    }

    /// Parses `interval:H`, `box:d1xd2x…` or `explicit:i1,i2,…` (element indices).
    pub fn parse(ctx: &FieldCtx, s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("offset spec '{s}' needs a kind prefix")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in offset spec")))
        };
        match kind.trim() {
            "interval" => interval_offsets(ctx, num(rest)? as usize),
            "box" => box_offsets(ctx, &rest.split('x').map(num).collect::<Result<Vec<_>>>()?),
            "explicit" => {
                let idx = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
                let elems = idx
                    .into_iter()
                    .map(|i| ctx.elem(i))
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(ctx, elems)
            }
            other => Err(Error::Parse(format!("unknown offset kind '{other}'"))),
        }
    }
}

impl fmt::Display for OffsetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            OffsetShape::Interval => write!(f, "interval:{}", self.h()),
            OffsetShape::Box(d) => {
                let d: Vec<String> = d.iter().map(|x| x.to_string()).collect();
                write!(f, "box:{}", d.join("x"))
            }
            OffsetShape::Explicit => {
                let v: Vec<String> = self.offsets.iter().map(|x| x.index().to_string()).collect();
                write!(f, "explicit:{}", v.join(","))
            }
        }
    }
}

impl Serialize for OffsetSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn interval_offsets(ctx: &FieldCtx, h: usize) -> Result<OffsetSet> {
    if h as u64 >= ctx.q() {
        return Err(invalid(format!(
            "interval length {h} must be below q = {}",
            ctx.q()
        )));
    }
    OffsetSet::build(
        ctx,
        OffsetShape::Interval,
        (0..h).map(|i| ctx.at(i)).collect(),
    )
}

pub fn box_offsets(ctx: &FieldCtx, dims: &[u64]) -> Result<OffsetSet> {
    if dims.len() != ctx.e() as usize {
        return Err(invalid(format!(
            "a box in F_q needs {} dimensions",
            ctx.e()
        )));
    }
    if dims.iter().any(|&d| d == 0 || d > ctx.p()) {
        return Err(invalid(format!("box sides must lie in [1, {}]", ctx.p())));
    }
    let size = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
    match size {
        Some(s) if s < ctx.q() => {}
        _ => return Err(invalid("box size must be below q")),
    }
    let mut out = Vec::new();
    let mut c = vec![0u64; dims.len()];
    loop {
        out.push(ctx.from_coords(&c)?);
        let mut i = 0;
        loop {
            if i == c.len() {
                return OffsetSet::build(ctx, OffsetShape::Box(dims.to_vec()), out);
            }
            c[i] += 1;
            if c[i] < dims[i] {
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

/// The q normalized sums S(t, I + x)/√H for x ∈ F_q, with the family metadata
/// needed to pick the limiting law.
#[derive(Clone, Debug)]
pub struct ShortSumEnsemble {
    pub ctx: Arc<FieldCtx>,
    pub offsets: OffsetSet,
    pub values: Vec<Complex64>,
    pub family: Family,
    pub group: GroupKind,
    pub self_dual: bool,
}

impl ShortSumEnsemble {
    pub fn h(&self) -> usize {
        self.offsets.h()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// Σ_{a ∈ I} t(x + a) for every x, one compensated sum per entry.
pub fn direct_window_sums(table: &TraceTable, offsets: &OffsetSet) -> Vec<Complex64> {
    let ctx = &table.ctx;
    (0..ctx.size())
        .into_par_iter()
        .map(|i| {
            let x = ctx.at(i);
            let mut acc = ComplexSum::new();
            for &a in offsets.offsets() {
                acc.add(table.value(ctx.add(x, a)));
            }
            acc.value()
        })
        .collect()
}

/// Prime-field intervals: each block of x values starts from a direct sum and then
/// slides by one term in and one term out.
fn sliding_window_sums(table: &TraceTable, h: usize) -> Vec<Complex64> {
    let q = table.values.len();
    let t = &table.values;
    let blocks: Vec<Vec<Complex64>> = (0..q.div_ceil(REDUCTION_CHUNK))
        .into_par_iter()
        .map(|b| {
            let start = b * REDUCTION_CHUNK;
            let end = (start + REDUCTION_CHUNK).min(q);
            let mut acc = ComplexSum::new();
            for a in 0..h {
                acc.add(t[(start + a) % q]);
            }
            let mut out = Vec::with_capacity(end - start);
            out.push(acc.value());
            for x in start + 1..end {
                acc.sub(t[x - 1]);
                acc.add(t[(x - 1 + h) % q]);
                out.push(acc.value());
            }
            out
        })
        .collect();
    blocks.concat()
}

pub fn window_sums(table: &TraceTable, offsets: &OffsetSet) -> ShortSumEnsemble {
    let raw = if table.ctx.e() == 1 && *offsets.shape() == OffsetShape::Interval {
        sliding_window_sums(table, offsets.h())
    } else {
        direct_window_sums(table, offsets)
    };
    let scale = 1.0 / (offsets.h() as f64).sqrt();
    ShortSumEnsemble {
        ctx: table.ctx.clone(),
        offsets: offsets.clone(),
        values: raw.into_iter().map(|v| v * scale).collect(),
        family: table.family.clone(),
        group: table.group,
        self_dual: table.self_dual,
    }
}

#[inline]
fn mixed_power(z: Complex64, k: u32, r: u32) -> Complex64 {
    z.powu(k) * z.conj().powu(r)
}

/// (1/q) Σ_x z_x^k conj(z_x)^r over the ensemble.
pub fn empirical_moment(ens: &ShortSumEnsemble, k: u32, r: u32) -> Result<Complex64> {
    if k + r > EMPIRICAL_MAX_ORDER {
        return Err(invalid(format!(
            "k + r = {} exceeds {EMPIRICAL_MAX_ORDER}",
            k + r
        )));
    }
    let v = &ens.values;
    Ok(par_sum_complex(v.len(), |i| mixed_power(v[i], k, r)) / v.len() as f64)
}

/// deg f for a Kummer family χ(f) with deg f > 1; `None` for every other family.
fn kummer_degree(table: &TraceTable) -> Option<usize> {
    let Family::Kummer { f, .. } = &table.family else {
        return None;
    };
    // an unreadable f is treated as the worst case
    let deg = IntRational::parse(f)
        .and_then(|r| r.reduce(table.ctx.p()))
        .map(|r| r.num.degree().unwrap_or(0).max(r.den.degree().unwrap_or(0)))
        .unwrap_or(usize::MAX);
    (deg > 1).then_some(deg)
}

/// Box criterion: all coordinates of all offsets in [1, p/deg).
fn in_small_box(ctx: &FieldCtx, offsets: &[FqElem], deg: usize) -> bool {
    offsets.iter().all(|&a| {
        ctx.coords(a)
            .iter()
            .all(|&c| c >= 1 && (c as u128) * (deg as u128) < ctx.p() as u128)
    })
}

/// Smallest m ≤ deg such that some sum of m offsets (repetition allowed) is 0.
fn vanishing_sum_length(ctx: &FieldCtx, offsets: &[FqElem], deg: usize) -> Option<usize> {
    let q = ctx.size();
    let mut reach = vec![false; q];
    for &a in offsets {
        reach[a.index()] = true;
    }
    for m in 1..=deg {
        if reach[0] {
            return Some(m);
        }
        if m == deg {
            break;
        }
        let mut next = vec![false; q];
        for (s, _) in reach.iter().enumerate().filter(|(_, &b)| b) {
            for &a in offsets {
                next[ctx.add(ctx.at(s), a).index()] = true;
            }
        }
        reach = next;
    }
    None
}

/// Whether the family is I-compatible: for a Kummer family χ(f) with deg f > 1, no
/// sum x_1 + … + x_m with 1 ≤ m ≤ deg f and x_i ∈ I vanishes. Every other family is
/// compatible. Large sets that are too costly to search are certified only through
/// the box criterion I ⊂ [1, p/deg f)^e.
pub fn i_compatible(table: &TraceTable, offsets: &[FqElem]) -> bool {
    let Some(deg) = kummer_degree(table) else {
        return true;
    };
    let ctx = &table.ctx;
    if in_small_box(ctx, offsets, deg) {
        return true;
    }
    let cost = deg as f64 * ctx.q() as f64 * offsets.len() as f64;
    if cost > COMPATIBILITY_BUDGET {
        return false;
    }
    vanishing_sum_length(ctx, offsets, deg).is_none()
}

/// [`i_compatible`] as a precondition, failing with [`Error::Incompatible`].
pub fn require_compatible(table: &TraceTable, offsets: &[FqElem]) -> Result<()> {
    if i_compatible(table, offsets) {
        Ok(())
    } else {
        Err(Error::Incompatible {
            max_terms: kummer_degree(table).unwrap_or(0),
        })
    }
}

fn serialize_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct SumProductReport {
    pub shifts: Vec<u32>,
    pub k: Vec<u32>,
    pub r: Vec<u32>,
    pub lhs: Complex64,
    #[serde(serialize_with = "serialize_big")]
    pub rhs: BigUint,
    pub gap: f64,
    /// rank^S · S · q^{−1/2}
    pub budget: f64,
}

/// Compares the complete sum (1/q) Σ_x Π_i t(x+a_i)^{k_i} conj(t(x+a_i))^{r_i} with
/// its limit Π_i mult_one(group, k_i, r_i).
pub fn sum_product_check(
    table: &TraceTable,
    shifts: &[FqElem],
    k: &[u32],
    r: &[u32],
) -> Result<SumProductReport> {
    if shifts.is_empty() || shifts.len() != k.len() || shifts.len() != r.len() {
        return Err(invalid(
            "shifts, k and r must be non-empty and of equal length",
        ));
    }
    let ctx = &table.ctx;
    let set = OffsetSet::explicit(ctx, shifts.to_vec())?;
    let s: u32 = k.iter().chain(r).sum();
    if s > SUM_PRODUCT_MAX_ORDER {
        return Err(invalid(format!(
            "total order {s} exceeds {SUM_PRODUCT_MAX_ORDER}"
        )));
    }
    require_compatible(table, set.offsets())?;
    let q = ctx.size();
    let lhs = par_sum_complex(q, |i| {
        let x = ctx.at(i);
        shifts
            .iter()
            .zip(k.iter().zip(r))
            .map(|(&a, (&ki, &ri))| mixed_power(table.value(ctx.add(x, a)), ki, ri))
            .product()
    }) / q as f64;
    let rhs: BigUint = k
        .iter()
        .zip(r)
        .map(|(&ki, &ri)| mult_one(table.group, ki, ri))
        .product();
    let gap = (lhs - rhs.to_f64().unwrap_or(f64::INFINITY)).norm();
    let budget = (table.rank as f64).powi(s as i32) * s as f64 / (q as f64).sqrt();
    Ok(SumProductReport {
        shifts: shifts.iter().map(|x| x.index() as u32).collect(),
        k: k.to_vec(),
        r: r.to_vec(),
        lhs,
        rhs,
        gap,
        budget,
    })
}

/// Limiting covariance of (Re, Im): diag(1, 0) for real-valued families and
/// diag(1/2, 1/2) otherwise.
pub fn target_covariance(self_dual: bool) -> [[f64; 2]; 2] {
    if self_dual {
        [[1.0, 0.0], [0.0, 0.0]]
    } else {
        [[0.5, 0.0], [0.0, 0.5]]
    }
}

/// An nx × ny grid of closed cells covering a rectangle in ℂ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Default for RectGrid {
    fn default() -> Self {
        Self {
            re: (-3.0, 3.0),
            im: (-3.0, 3.0),
            nx: 5,
            ny: 5,
        }
    }
}

impl RectGrid {
    fn edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GofConfig {
    pub grid: RectGrid,
    /// Moment rows are emitted for every k + r ≤ this order.
    pub moment_order: u32,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            grid: RectGrid::default(),
            moment_order: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: u32,
    pub r: u32,
    pub empirical: Complex64,
    /// Normalized moment of the random-matrix model at the same H.
    pub model: f64,
    pub gaussian: f64,
    /// |empirical − model|
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub family: String,
    pub group: GroupKind,
    pub q: u64,
    #[serde(rename = "H")]
    pub h: usize,
    pub self_dual: bool,
    pub moment_rows: Vec<MomentRow>,
    pub ks_real: f64,
    pub rect_discrepancy: f64,
    pub grid: RectGrid,
    pub covariance_emp: [[f64; 2]; 2],
    pub covariance_target: [[f64; 2]; 2],
    pub max_abs_imag: f64,
}

fn empirical_covariance(v: &[Complex64]) -> [[f64; 2]; 2] {
    let n = v.len() as f64;
    let mean = par_sum_complex(v.len(), |i| v[i]) / n;
    let xx = par_sum_complex(v.len(), |i| {
        let d = v[i] - mean;
        Complex64::new(d.re * d.re, d.im * d.im)
    }) / n;
    let xy = par_sum_complex(v.len(), |i| {
        let d = v[i] - mean;
        Complex64::new(d.re * d.im, 0.0)
    }) / n;
    [[xx.re, xy.re], [xy.re, xx.im]]
}

/// max over closed grid cells A of |#{x : z_x ∈ A}/q − P(N ∈ A)|.
fn rect_discrepancy(v: &[Complex64], grid: &RectGrid, cov: &[[f64; 2]; 2]) -> f64 {
    let ex = RectGrid::edges(grid.re.0, grid.re.1, grid.nx);
    let ey = RectGrid::edges(grid.im.0, grid.im.1, grid.ny);
    let n = v.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let (a, b, c, d) = (ex[i], ex[i + 1], ey[j], ey[j + 1]);
            let count = v
                .iter()
                .filter(|z| a <= z.re && z.re <= b && c <= z.im && z.im <= d)
                .count();
            let target = normal_interval(a, b, cov[0][0]) * normal_interval(c, d, cov[1][1]);
            worst = worst.max((count as f64 / n - target).abs());
        }
    }
    worst
}

pub fn gof_report(ens: &ShortSumEnsemble, config: &GofConfig) -> Result<GofReport> {
    if config.grid.nx == 0 || config.grid.ny == 0 {
        return Err(invalid("rectangle grid needs at least one cell per axis"));
    }
    if !(config.grid.re.0 < config.grid.re.1 && config.grid.im.0 < config.grid.im.1) {
        return Err(invalid("rectangle grid bounds must be increasing"));
    }
    let h = ens.h();
    let mut moment_rows = Vec::new();
    for order in 0..=config.moment_order {
        for k in (0..=order).rev() {
            let r = order - k;
            let empirical = empirical_moment(ens, k, r)?;
            let model = model_moment(ens.group, k, r, h as u64)?.normalized;
            moment_rows.push(MomentRow {
                k,
                r,
                empirical,
                model,
                gaussian: gaussian_moment(ens.self_dual, k, r),
                gap: (empirical - model).norm(),
            });
        }
    }
    let cov = target_covariance(ens.self_dual);
    let re: Vec<f64> = ens.values.iter().map(|z| z.re).collect();
    let var = cov[0][0];
    Ok(GofReport {
        family: ens.family.to_string(),
        group: ens.group,
        q: ens.ctx.q(),
        h,
        self_dual: ens.self_dual,
        moment_rows,
        ks_real: ks_distance(&re, |x| normal_cdf(x, var)),
        rect_discrepancy: rect_discrepancy(&ens.values, &config.grid, &cov),
        grid: config.grid,
        covariance_emp: empirical_covariance(&ens.values),
        covariance_target: cov,
        max_abs_imag: ens.max_abs_imag(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Re,
    Im,
    #[serde(rename = "2d")]
    Both,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "re" => Ok(Axis::Re),
            "im" => Ok(Axis::Im),
            "2d" | "both" => Ok(Axis::Both),
            _ => Err(Error::Parse(format!("unknown axis '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    /// Imaginary-axis bounds of a 2D cell.
    pub im_lo: Option<f64>,
    pub im_hi: Option<f64>,
    pub count: u64,
    pub density: f64,
    /// Density of the limiting Gaussian at the bin centre.
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub axis: Axis,
    pub total: usize,
    pub in_range: u64,
    pub bins: Vec<HistBin>,
}

fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(lo <= x && x <= hi) {
        return None;
    }
    let i = ((x - lo) / (hi - lo) * bins as f64).floor() as usize;
    Some(i.min(bins - 1))
}

/// Density histogram over `range` (applied to both axes for 2D). The last bin is
/// closed on the right.
pub fn histogram(
    ens: &ShortSumEnsemble,
    axis: Axis,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("histogram range is empty"));
    }
    let n = ens.values.len();
    let w = (hi - lo) / bins as f64;
    let cov = target_covariance(ens.self_dual);
    let centre = |i: usize| lo + (i as f64 + 0.5) * w;
    let mut out = Vec::new();
    let mut in_range = 0u64;
    match axis {
        Axis::Re | Axis::Im => {
            let (pick, var): (fn(&Complex64) -> f64, f64) = match axis {
                Axis::Re => (|z| z.re, cov[0][0]),
                _ => (|z| z.im, cov[1][1]),
            };
            let mut counts = vec![0u64; bins];
            for z in &ens.values {
                if let Some(i) = bin_of(pick(z), lo, hi, bins) {
                    counts[i] += 1;
                }
            }
            for (i, &c) in counts.iter().enumerate() {
                in_range += c;
                out.push(HistBin {
                    lo: lo + i as f64 * w,
                    hi: lo + (i + 1) as f64 * w,
                    im_lo: None,
                    im_hi: None,
                    count: c,
                    density: c as f64 / (n as f64 * w),
                    target: normal_density(centre(i), var),
                });
            }
        }
        Axis::Both => {
            let mut counts = vec![0u64; bins * bins];
            for z in &ens.values {
                if let (Some(i), Some(j)) = (bin_of(z.re, lo, hi, bins), bin_of(z.im, lo, hi, bins))
                {
                    counts[i * bins + j] += 1;
                }
            }
            for i in 0..bins {
                for j in 0..bins {
                    let c = counts[i * bins + j];
                    in_range += c;
                    out.push(HistBin {
                        lo: lo + i as f64 * w,
                        hi: lo + (i + 1) as f64 * w,
                        im_lo: Some(lo + j as f64 * w),
                        im_hi: Some(lo + (j + 1) as f64 * w),
                        count: c,
                        density: c as f64 / (n as f64 * w * w),
                        target: normal_density(centre(i), cov[0][0])
                            * normal_density(centre(j), cov[1][1]),
                    });
                }
            }
        }
    }
    Ok(Histogram {
        axis,
        total: n,
        in_range,
        bins: out,
    })
}
