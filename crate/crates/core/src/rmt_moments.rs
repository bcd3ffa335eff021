//! Exact moments of traces of Haar-random matrices, computed combinatorially, and
//! the moments of the random-walk model S(H) = Z_1 + … + Z_H built from them.

use crate::error::{invalid, Result};
use crate::group::GroupKind;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use std::collections::HashMap;
use std::fmt;

/// Weakly decreasing list of positive parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&x| x > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self(parts)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Column lengths (the conjugate partition).
    pub fn conjugate(&self) -> Partition {
        let m = self.0.first().copied().unwrap_or(0);
        Self(
            (1..=m)
                .map(|c| self.0.iter().filter(|&&x| x >= c).count() as u32)
                .collect(),
        )
    }

    /// Length of the first two columns combined.
    pub fn first_two_columns(&self) -> u32 {
        let ones = self.0.len() as u32;
        let twos = self.0.iter().filter(|&&x| x >= 2).count() as u32;
        ones + twos
    }

    /// Partitions obtained by adding one box.
    fn add_box(&self) -> Vec<Partition> {
        let mut out = Vec::new();
        for i in 0..=self.0.len() {
            let cur = self.0.get(i).copied().unwrap_or(0);
            if i == 0 || self.0[i - 1] > cur {
                let mut v = self.0.clone();
                if i == v.len() {
                    v.push(1);
                } else {
                    v[i] += 1;
                }
                out.push(Partition(v));
            }
        }
        out
    }

    /// Partitions obtained by removing one box.
    fn remove_box(&self) -> Vec<Partition> {
        let mut out = Vec::new();
        for i in 0..self.0.len() {
            let next = self.0.get(i + 1).copied().unwrap_or(0);
            if self.0[i] > next {
                let mut v = self.0.clone();
                v[i] -= 1;
                if v[i] == 0 {
                    v.pop();
                }
                out.push(Partition(v));
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Partitions of k with at most `max_len` parts, in reverse lexicographic order
/// (largest first part first).
pub fn partitions(k: u32, max_len: usize) -> impl Iterator<Item = Partition> {
    fn rec(rem: u32, max_part: u32, max_len: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        if cur.len() == max_len {
            return;
        }
        for part in (1..=rem.min(max_part)).rev() {
            cur.push(part);
            rec(rem - part, part, max_len, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, max_len, &mut Vec::new(), &mut out);
    out.into_iter()
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// (n)!! with 0!! = (−1)!! = 1.
pub fn double_factorial(n: i64) -> BigUint {
    let mut acc = BigUint::one();
    let mut i = n;
    while i > 1 {
        acc *= i as u64;
        i -= 2;
    }
    acc
}

/// Number of standard Young tableaux of shape λ, by the hook-length formula.
pub fn dim_specht(lam: &Partition) -> BigUint {
    let conj = lam.conjugate();
    let mut hooks = BigUint::one();
    for (i, &row) in lam.parts().iter().enumerate() {
        for j in 0..row as usize {
            let arm = row as usize - j - 1;
            let leg = conj.parts()[j] as usize - i - 1;
            hooks *= (arm + leg + 1) as u64;
        }
    }
    factorial(lam.size()) / hooks
}

/// E[tr(U)^k · conj(tr(U))^r] over SU(N).
///
/// Pairs λ ⊢ k (at most N rows) with μ = λ + (a^N) ⊢ r, where a = (r − k)/N.
pub fn moment_sl(n: u32, k: u32, r: u32) -> BigUint {
    assert!(n >= 1);
    let diff = r as i64 - k as i64;
    if diff % n as i64 != 0 {
        return BigUint::zero();
    }
    let a = diff / n as i64;
    let mut total = BigUint::zero();
    for lam in partitions(k, n as usize) {
        let mut padded: Vec<i64> = lam.parts().iter().map(|&x| x as i64).collect();
        padded.resize(n as usize, 0);
        if padded[n as usize - 1] + a < 0 {
            continue;
        }
        let mu = Partition::new(padded.iter().map(|&x| (x + a) as u32).collect());
        debug_assert_eq!(mu.size(), r);
        total += dim_specht(&lam) * dim_specht(&mu);
    }
    total
}

/// Counts of closed walks on Young diagrams by length.
///
/// Starting from ∅, each step adds or removes one box while staying inside
/// `allowed`; a step may also stay put at diagrams where `stay` holds. Entry L of the
/// result is the number of length-L walks ending in any diagram of `targets`.
fn walk_counts(
    kmax: u32,
    targets: &[Partition],
    allowed: impl Fn(&Partition) -> bool,
    stay: impl Fn(&Partition) -> bool,
) -> Vec<BigUint> {
    let sizes: Vec<u32> = targets.iter().map(|t| t.size()).collect();
    let mut level: HashMap<Partition, BigUint> = HashMap::new();
    level.insert(Partition::empty(), BigUint::one());
    let mut out = Vec::with_capacity(kmax as usize + 1);
    for step in 0..=kmax {
        let hits = targets
            .iter()
            .filter_map(|t| level.get(t))
            .fold(BigUint::zero(), |a, b| a + b);
        out.push(hits);
        if step == kmax {
            break;
        }
        let remaining = kmax - step - 1;
        let mut next: HashMap<Partition, BigUint> = HashMap::with_capacity(level.len() * 2);
        for (mu, c) in &level {
            let mut push = |nu: Partition| {
                // a walk must still be able to reach a target
                if !sizes.iter().any(|&t| nu.size().abs_diff(t) <= remaining) {
                    return;
                }
                *next.entry(nu).or_insert_with(BigUint::zero) += c;
            };
            for nu in mu.add_box() {
                if allowed(&nu) {
                    push(nu);
                }
            }
            for nu in mu.remove_box() {
                if allowed(&nu) {
                    push(nu);
                }
            }
            if stay(mu) {
                push(mu.clone());
            }
        }
        level = next;
    }
    out
}

/// Moments E[tr(U)^k] for k = 0..=kmax over USp(2N).
pub fn moments_sp_upto(two_n: u32, kmax: u32) -> Vec<BigUint> {
    assert!(two_n >= 2 && two_n.is_multiple_of(2));
    let n = (two_n / 2) as usize;
    walk_counts(kmax, &[Partition::empty()], |p| p.len() <= n, |_| false)
}

/// E[tr(U)^k] over USp(2N).
pub fn moment_sp(two_n: u32, k: u32) -> BigUint {
    moments_sp_upto(two_n, k).pop().unwrap()
}

/// Branching rule used for SO(N) with N even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SoEvenRule {
    /// Diagrams whose first two columns have total length ≤ N/2, walks back to ∅.
    HalfColumns,
    /// Diagrams whose first two columns have total length ≤ N, walks back to ∅: the
    /// full orthogonal group O(N).
    Orthogonal,
    /// As `Orthogonal`, plus walks ending at the determinant (1^N): SO(N).
    #[default]
    SpecialOrthogonal,
}

/// Moments E[tr(U)^k] for k = 0..=kmax over SO(N). Odd N uses walks of diagrams with
/// at most (N−1)/2 rows that may also stay put at diagrams with exactly (N−1)/2 rows.
pub fn moments_so_upto(n: u32, kmax: u32, rule: SoEvenRule) -> Vec<BigUint> {
    assert!(n >= 3);
    if n % 2 == 1 {
        let h = ((n - 1) / 2) as usize;
        return walk_counts(
            kmax,
            &[Partition::empty()],
            |p| p.len() <= h,
            |p| p.len() == h,
        );
    }
    let half = n / 2;
    match rule {
        SoEvenRule::HalfColumns => walk_counts(
            kmax,
            &[Partition::empty()],
            |p| p.first_two_columns() <= half,
            |_| false,
        ),
        SoEvenRule::Orthogonal => walk_counts(
            kmax,
            &[Partition::empty()],
            |p| p.first_two_columns() <= n,
            |_| false,
        ),
        SoEvenRule::SpecialOrthogonal => orthogonal_with_determinant(n, kmax),
    }
}

/// O(N) walks returning to ∅ plus walks ending at (1^N).
fn orthogonal_with_determinant(n: u32, kmax: u32) -> Vec<BigUint> {
    let det = Partition(vec![1; n as usize]);
    walk_counts(
        kmax,
        &[Partition::empty(), det],
        |p| p.first_two_columns() <= n,
        |_| false,
    )
}

/// E[tr(U)^k] over SO(N), using the default rule for even N.
pub fn moment_so(n: u32, k: u32) -> BigUint {
    moment_so_with(n, k, SoEvenRule::default())
}

pub fn moment_so_with(n: u32, k: u32, rule: SoEvenRule) -> BigUint {
    moments_so_upto(n, k, rule).pop().unwrap()
}

/// The same SO(N) moments for odd N, counted as O(N) walks to ∅ or to (1^N).
pub fn moments_so_odd_via_orthogonal(n: u32, kmax: u32) -> Vec<BigUint> {
    assert!(n >= 3 && n % 2 == 1);
    orthogonal_with_determinant(n, kmax)
}

/// Multiplicity of the trivial representation in Std^{⊗k} ⊗ D(Std)^{⊗r}.
pub fn mult_one(group: GroupKind, k: u32, r: u32) -> BigUint {
    let b = |c: bool| if c { BigUint::one() } else { BigUint::zero() };
    match group {
        GroupKind::SpecialLinear(n) => moment_sl(n, k, r),
        GroupKind::Symplectic(two_n) => moment_sp(two_n, k + r),
        GroupKind::SpecialOrthogonal(n) => moment_so(n, k + r),
        GroupKind::CyclicKummer(d) => b((k as i64 - r as i64) % d as i64 == 0),
        GroupKind::UnitCircle => b(k == r),
    }
}

/// Array C[i][j] = mult_one(group, i, j) for i ≤ kmax, j ≤ rmax.
pub fn mult_one_table(group: GroupKind, kmax: u32, rmax: u32) -> Vec<Vec<BigUint>> {
    let self_dual_orders = match group {
        GroupKind::Symplectic(two_n) => Some(moments_sp_upto(two_n, kmax + rmax)),
        GroupKind::SpecialOrthogonal(n) => {
            Some(moments_so_upto(n, kmax + rmax, SoEvenRule::default()))
        }
        _ => None,
    };
    (0..=kmax)
        .map(|i| {
            (0..=rmax)
                .map(|j| match &self_dual_orders {
                    Some(v) => v[(i + j) as usize].clone(),
                    None => mult_one(group, i, j),
                })
                .collect()
        })
        .collect()
}

/// Moments of a standard Gaussian: complex (E|Z|² = 1) gives k!·δ_{k=r}; real gives
/// (k+r−1)!! for even k + r and 0 otherwise.
pub fn gaussian_moment(self_dual: bool, k: u32, r: u32) -> f64 {
    let v = if self_dual {
        if (k + r) % 2 == 1 {
            BigUint::zero()
        } else {
            double_factorial(k as i64 + r as i64 - 1)
        }
    } else if k == r {
        factorial(k)
    } else {
        BigUint::zero()
    };
    v.to_f64().unwrap_or(f64::INFINITY)
}

fn serialize_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelMomentResult {
    #[serde(serialize_with = "serialize_big")]
    pub exact: BigUint,
    pub normalized: f64,
    #[serde(rename = "H")]
    pub h: u64,
}

/// Largest k or r accepted by [`model_moment`].
pub const MODEL_MOMENT_MAX_ORDER: u32 = 30;

/// ln(v) for a big integer, exact enough for f64 normalisation.
fn big_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 1000;
    (v >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// v / H^{(k+r)/2} as a float.
pub(crate) fn normalize(v: &BigUint, h: u64, order: u32) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let hf = h as f64;
    let denom = hf.powi((order / 2) as i32) * if order % 2 == 1 { hf.sqrt() } else { 1.0 };
    match v.to_f64() {
        Some(x) if x.is_finite() && denom.is_finite() => x / denom,
        _ => (big_ln(v) - order as f64 / 2.0 * hf.ln()).exp(),
    }
}

fn binomials(n: u32) -> Vec<Vec<BigUint>> {
    let mut c = vec![vec![BigUint::zero(); n as usize + 1]; n as usize + 1];
    for i in 0..=n as usize {
        c[i][0] = BigUint::one();
        for j in 1..=i {
            c[i][j] = &c[i - 1][j - 1] + &c[i - 1][j];
        }
    }
    c
}

/// Moment array of the sum of two independent variables:
/// (a ⋆ b)[i][j] = Σ C(i,i')·C(j,j')·a[i'][j']·b[i−i'][j−j'].
fn binomial_convolution(
    a: &[Vec<BigUint>],
    b: &[Vec<BigUint>],
    binom: &[Vec<BigUint>],
) -> Vec<Vec<BigUint>> {
    let kmax = a.len();
    let rmax = a[0].len();
    let mut out = vec![vec![BigUint::zero(); rmax]; kmax];
    for i in 0..kmax {
        for j in 0..rmax {
            let mut acc = BigUint::zero();
            for i1 in 0..=i {
                for j1 in 0..=j {
                    let x = &a[i1][j1];
                    let y = &b[i - i1][j - j1];
                    if x.is_zero() || y.is_zero() {
                        continue;
                    }
                    acc += &binom[i][i1] * &binom[j][j1] * x * y;
                }
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Full moment array E[S(H)^i · conj(S(H))^j] for i ≤ kmax, j ≤ rmax.
pub fn model_moment_table(
    group: GroupKind,
    kmax: u32,
    rmax: u32,
    h: u64,
) -> Result<Vec<Vec<BigUint>>> {
    if h == 0 {
        return Err(invalid("H must be at least 1"));
    }
    if kmax > MODEL_MOMENT_MAX_ORDER || rmax > MODEL_MOMENT_MAX_ORDER {
        return Err(invalid(format!(
            "k and r are limited to {MODEL_MOMENT_MAX_ORDER}"
        )));
    }
    let binom = binomials(kmax.max(rmax));
    let step = mult_one_table(group, kmax, rmax);
    // moment array of the sum of zero variables: the constant 0
    let mut acc: Vec<Vec<BigUint>> =
        vec![vec![BigUint::zero(); rmax as usize + 1]; kmax as usize + 1];
    acc[0][0] = BigUint::one();
    let mut base = step;
    let mut e = h;
    while e > 0 {
        if e & 1 == 1 {
            acc = binomial_convolution(&acc, &base, &binom);
        }
        e >>= 1;
        if e > 0 {
            base = binomial_convolution(&base, &base, &binom);
        }
    }
    Ok(acc)
}

/// M_prob(k, r; H) = E[S(H)^k · conj(S(H))^r] for S(H) a sum of H independent traces.
pub fn model_moment(group: GroupKind, k: u32, r: u32, h: u64) -> Result<ModelMomentResult> {
    let table = model_moment_table(group, k, r, h)?;
    let exact = table[k as usize][r as usize].clone();
    let normalized = normalize(&exact, h, k + r);
    Ok(ModelMomentResult {
        exact,
        normalized,
        h,
    })
}

/// |M_prob(k, r; H)/H^{(k+r)/2} − Gaussian moment|.
pub fn clt_defect(group: GroupKind, k: u32, r: u32, h: u64) -> Result<f64> {
    let m = model_moment(group, k, r, h)?;
    Ok((m.normalized - gaussian_moment(group.is_self_dual(), k, r)).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub group: GroupKind,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "H")]
    pub h: u64,
    #[serde(serialize_with = "serialize_big")]
    pub moment: BigUint,
    #[serde(serialize_with = "serialize_big")]
    pub bound: BigUint,
    pub bound_kind: &'static str,
    pub pass: bool,
    /// bound / moment − 1 (infinite when the moment is 0)
    pub slack: f64,
}

/// Compares M_prob(N, N; H) with its closed-form upper bound.
pub fn check_bounds(group: GroupKind, n: u32, h: u64) -> Result<BoundReport> {
    let m = model_moment(group, n, n, h)?.exact;
    let hn = BigUint::from(h).pow(n);
    let (bound, bound_kind) = if group.is_self_dual() {
        (double_factorial(2 * n as i64 - 1) * &hn, "(2N-1)!! H^N")
    } else {
        match group {
            GroupKind::SpecialLinear(_) => (
                BigUint::from(n as u64 + h - 1).pow(n) * &hn,
                "(N+H-1)^N H^N",
            ),
            _ => (factorial(n) * &hn, "N! H^N"),
        }
    };
    let slack = if m.is_zero() {
        f64::INFINITY
    } else {
        (big_ln(&bound) - big_ln(&m)).exp() - 1.0
    };
    Ok(BoundReport {
        group,
        n,
        h,
        pass: m <= bound,
        moment: m,
        bound,
        bound_kind,
        slack,
    })
}
