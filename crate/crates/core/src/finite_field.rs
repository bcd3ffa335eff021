//! Table-driven arithmetic in F_q = F_p[t]/(m(t)).
//!
//! An element with polynomial-basis coordinates (c_0, …, c_{e−1}) has index
//! Σ c_i p^i, so the prime field occupies indices 0..p and 0 is the zero element.

use crate::error::{Error, Result};
use crate::poly::{powmod, FpPoly};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

/// Default bound on q, the length of every per-element table.
pub const DEFAULT_TABLE_LIMIT: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct FqElem(u32);

impl FqElem {
    pub const ZERO: FqElem = FqElem(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime divisors, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[derive(Clone, Debug)]
pub struct FieldCtx {
    p: u64,
    e: u32,
    q: u64,
    modulus: Option<FpPoly>,
    generator: FqElem,
    /// exp[m] = g^m for m in 0..q−1
    exp: Vec<u32>,
    /// log[x] = m with g^m = x; log[0] is unused
    log: Vec<u32>,
    trace: Vec<u32>,
    add_roots: Vec<Complex64>,
}

/// Serializable summary used by `field-info` and output headers.
#[derive(Clone, Debug, Serialize)]
pub struct FieldInfo {
    pub p: u64,
    pub e: u32,
    pub q: u64,
    pub generator: u32,
    pub modulus: Option<String>,
}

impl FieldCtx {
    pub fn new(p: u64, e: u32, modulus: Option<FpPoly>) -> Result<Self> {
        Self::with_limit(p, e, modulus, DEFAULT_TABLE_LIMIT)
    }

    pub fn with_limit(p: u64, e: u32, modulus: Option<FpPoly>, limit: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if e == 0 {
            return Err(Error::ZeroDegree);
        }
        let q128 = (p as u128).checked_pow(e).unwrap_or(u128::MAX);
        if q128 > limit as u128 || q128 > u32::MAX as u128 {
            return Err(Error::TableLimit { q: q128, limit });
        }
        let q = q128 as u64;

        let modulus = if e == 1 {
            if let Some(m) = &modulus {
                if m.degree() != Some(1) || m.prime() != p {
                    return Err(Error::ReducibleModulus { p, degree: e });
                }
            }
            None
        } else {
            let m = match modulus {
                Some(m) => {
                    if m.prime() != p || m.degree() != Some(e as usize) || !m.is_irreducible() {
                        return Err(Error::ReducibleModulus { p, degree: e });
                    }
                    m.monic()
                }
                None => canonical_modulus(p, e),
            };
            Some(m)
        };

        let arith = SlowArith {
            p,
            e,
            modulus: modulus.clone(),
        };
        let generator = arith.find_generator(q);

        let n = (q - 1) as usize;
        let mut exp = vec![0u32; n];
        let mut log = vec![u32::MAX; q as usize];
        let mut x = 1u64;
        for (m, slot) in exp.iter_mut().enumerate() {
            *slot = x as u32;
            log[x as usize] = m as u32;
            x = arith.mul(x, generator);
        }
        debug_assert_eq!(x, 1);

        let trace = arith.trace_table(q);
        let add_roots = (0..p).map(|k| unit_root(k, p)).collect();

        Ok(Self {
            p,
            e,
            q,
            modulus,
            generator: FqElem(generator as u32),
            exp,
            log,
            trace,
            add_roots,
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn e(&self) -> u32 {
        self.e
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.q as usize
    }

    pub fn modulus(&self) -> Option<&FpPoly> {
        self.modulus.as_ref()
    }

    pub fn generator(&self) -> FqElem {
        self.generator
    }

    pub fn info(&self) -> FieldInfo {
        FieldInfo {
            p: self.p,
            e: self.e,
            q: self.q,
            generator: self.generator.0,
            modulus: self.modulus.as_ref().map(|m| m.to_string()),
        }
    }

    pub fn elem(&self, index: u64) -> Result<FqElem> {
        if index >= self.q {
            return Err(Error::BadElement { index, q: self.q });
        }
        Ok(FqElem(index as u32))
    }

    /// Element from a raw index known to be in range.
    #[inline]
    pub fn at(&self, index: usize) -> FqElem {
        debug_assert!((index as u64) < self.q);
        FqElem(index as u32)
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, n: i64) -> FqElem {
        FqElem((n as i128).rem_euclid(self.p as i128) as u32)
    }

    pub fn one(&self) -> FqElem {
        FqElem(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        (0..self.q as u32).map(FqElem)
    }

    /// Polynomial-basis coordinates (c_0, …, c_{e−1}).
    pub fn coords(&self, x: FqElem) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.e as usize);
        let mut i = x.0 as u64;
        for _ in 0..self.e {
            v.push(i % self.p);
            i /= self.p;
        }
        v
    }

    pub fn from_coords(&self, c: &[u64]) -> Result<FqElem> {
        if c.len() != self.e as usize || c.iter().any(|&a| a >= self.p) {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates below {}",
                self.e, self.p
            )));
        }
        Ok(FqElem(
            c.iter().rev().fold(0u64, |acc, &a| acc * self.p + a) as u32,
        ))
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.e == 1 {
            let s = a.0 as u64 + b.0 as u64;
            return FqElem(if s >= self.p { s - self.p } else { s } as u32);
        }
        let (mut x, mut y) = (a.0 as u64, b.0 as u64);
        let (mut r, mut w) = (0u64, 1u64);
        for _ in 0..self.e {
            let mut s = x % self.p + y % self.p;
            if s >= self.p {
                s -= self.p;
            }
            r += s * w;
            w *= self.p;
            x /= self.p;
            y /= self.p;
        }
        FqElem(r as u32)
    }

    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        if self.e == 1 {
            return FqElem(if a.0 == 0 {
                0
            } else {
                (self.p - a.0 as u64) as u32
            });
        }
        let mut x = a.0 as u64;
        let (mut r, mut w) = (0u64, 1u64);
        for _ in 0..self.e {
            let d = x % self.p;
            r += ((self.p - d) % self.p) * w;
            w *= self.p;
            x /= self.p;
        }
        FqElem(r as u32)
    }

    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        if a.0 == 0 || b.0 == 0 {
            return FqElem(0);
        }
        let n = self.q - 1;
        let s = self.log[a.index()] as u64 + self.log[b.index()] as u64;
        FqElem(self.exp[(if s >= n { s - n } else { s }) as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: FqElem) -> Option<FqElem> {
        if a.0 == 0 {
            return None;
        }
        let l = self.log[a.index()] as u64;
        Some(FqElem(self.exp[((self.q - 1 - l) % (self.q - 1)) as usize]))
    }

    pub fn pow(&self, a: FqElem, n: u64) -> FqElem {
        if n == 0 {
            return FqElem(1);
        }
        if a.0 == 0 {
            return FqElem(0);
        }
        let l = self.log[a.index()] as u128 * n as u128 % (self.q - 1) as u128;
        FqElem(self.exp[l as usize])
    }

    /// Discrete logarithm base the generator; `None` for zero.
    #[inline]
    pub fn dlog(&self, a: FqElem) -> Option<u64> {
        (a.0 != 0).then(|| self.log[a.index()] as u64)
    }

    /// g^m for any integer exponent m.
    #[inline]
    pub fn gen_pow(&self, m: u64) -> FqElem {
        FqElem(self.exp[(m % (self.q - 1)) as usize])
    }

    /// Absolute trace to F_p, as an integer in [0, p).
    #[inline]
    pub fn trace(&self, x: FqElem) -> u64 {
        self.trace[x.index()] as u64
    }

    /// ψ(x) = exp(2πi·tr(x)/p).
    #[inline]
    pub fn add_char(&self, x: FqElem) -> Complex64 {
        self.add_roots[self.trace[x.index()] as usize]
    }

    /// exp(2πi·k/p) for k in F_p.
    #[inline]
    pub fn root_p(&self, k: u64) -> Complex64 {
        self.add_roots[(k % self.p) as usize]
    }

    /// χ(x) = exp(2πi·j·log(x)/d), with χ(0) = 0.
    pub fn mult_char(&self, d: u64, j: u64, x: FqElem) -> Result<Complex64> {
        Ok(self.mult_character(d, j)?.eval(self, x))
    }

    pub fn mult_character(&self, d: u64, j: u64) -> Result<MultChar> {
        MultChar::new(self, d, j)
    }
}

/// exp(2πi·k/n), exact at multiples of a quarter turn.
pub fn unit_root(k: u64, n: u64) -> Complex64 {
    let k = k % n;
    if (4 * k).is_multiple_of(n) {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
    Complex64::new(c, s)
}

/// A validated multiplicative character of F_q^× with a table of d roots of unity.
#[derive(Clone, Debug)]
pub struct MultChar {
    d: u64,
    j: u64,
    roots: Vec<Complex64>,
}

impl MultChar {
    pub fn new(ctx: &FieldCtx, d: u64, j: u64) -> Result<Self> {
        if d == 0 || !(ctx.q - 1).is_multiple_of(d) {
            return Err(Error::CharacterOrder {
                d,
                q_minus_one: ctx.q - 1,
            });
        }
        if j >= d {
            return Err(Error::CharacterIndex { j, d });
        }
        let roots = (0..d).map(|k| unit_root(k, d)).collect();
        Ok(Self { d, j, roots })
    }

    pub fn trivial(ctx: &FieldCtx) -> Self {
        Self::new(ctx, 1, 0).expect("order 1 divides q-1")
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn j(&self) -> u64 {
        self.j
    }

    /// Exact order d / gcd(j, d).
    pub fn order(&self) -> u64 {
        self.d / num_integer::gcd(self.j, self.d)
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == 1
    }

    /// Exponent index: χ(g^m) = exp(2πi·(j·m mod d)/d).
    #[inline]
    pub fn eval_log(&self, m: u64) -> Complex64 {
        self.roots[((self.j as u128 * m as u128) % self.d as u128) as usize]
    }

    #[inline]
    pub fn eval(&self, ctx: &FieldCtx, x: FqElem) -> Complex64 {
        match ctx.dlog(x) {
            None => Complex64::new(0.0, 0.0),
            Some(m) => self.eval_log(m),
        }
    }

    /// The same character written with order `d'` = its exact order.
    pub fn reduced(&self) -> (u64, u64) {
        let g = num_integer::gcd(self.j, self.d);
        (self.d / g, self.j / g)
    }
}

/// Lexicographically smallest monic irreducible of degree e, ordering by Σ c_i p^i
/// over the non-leading coefficients.
pub fn canonical_modulus(p: u64, e: u32) -> FpPoly {
    let count = p.pow(e);
    for m in 0..count {
        let mut c: Vec<u64> = Vec::with_capacity(e as usize + 1);
        let mut t = m;
        for _ in 0..e {
            c.push(t % p);
            t /= p;
        }
        c.push(1);
        let f = FpPoly::new(p, c);
        if f.is_irreducible() {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Table-free arithmetic used while the tables are being built.
struct SlowArith {
    p: u64,
    e: u32,
    modulus: Option<FpPoly>,
}

impl SlowArith {
    fn to_poly(&self, x: u64) -> FpPoly {
        let mut c = Vec::with_capacity(self.e as usize);
        let mut t = x;
        for _ in 0..self.e {
            c.push(t % self.p);
            t /= self.p;
        }
        FpPoly::new(self.p, c)
    }

    fn from_poly(&self, f: &FpPoly) -> u64 {
        f.coeffs()
            .iter()
            .rev()
            .fold(0u64, |acc, &a| acc * self.p + a)
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        match &self.modulus {
            None => ((a as u128 * b as u128) % self.p as u128) as u64,
            Some(m) => self.from_poly(&self.to_poly(a).mul(&self.to_poly(b)).rem(m)),
        }
    }

    fn pow(&self, a: u64, n: u64) -> u64 {
        match &self.modulus {
            None => powmod(a, n, self.p),
            Some(m) => self.from_poly(&self.to_poly(a).pow_mod(n as u128, m)),
        }
    }

    /// Smallest index whose multiplicative order is q−1.
    fn find_generator(&self, q: u64) -> u64 {
        let n = q - 1;
        if n == 1 {
            return 1;
        }
        let primes = prime_factors(n);
        (1..q)
            .find(|&c| primes.iter().all(|&l| self.pow(c, n / l) != 1))
            .expect("F_q^× is cyclic")
    }

    fn trace_table(&self, q: u64) -> Vec<u32> {
        let e = self.e as usize;
        let Some(m) = &self.modulus else {
            return (0..q as u32).collect();
        };
        // tr(t^i) = Σ_j (t^i)^{p^j}, a constant polynomial
        let basis_tr: Vec<u64> = (0..e)
            .map(|i| {
                let mut b = vec![0u64; i + 1];
                b[i] = 1;
                let mut y = FpPoly::new(self.p, b).rem(m);
                let mut acc = FpPoly::zero(self.p);
                for _ in 0..e {
                    acc = acc.add(&y);
                    y = y.pow_mod(self.p as u128, m);
                }
                debug_assert!(acc.degree().unwrap_or(0) == 0);
                acc.coeffs().first().copied().unwrap_or(0)
            })
            .collect();
        let mut out = vec![0u32; q as usize];
        // tr(x) for x = x' + c·p^i reuses tr(x') where x' < p^i
        let mut block = 1usize;
        for &ti in basis_tr.iter() {
            for c in 1..self.p as usize {
                let add = (c as u64 * ti) % self.p;
                for x in 0..block {
                    out[c * block + x] = ((out[x] as u64 + add) % self.p) as u32;
                }
            }
            block *= self.p as usize;
        }
        out
    }
}
