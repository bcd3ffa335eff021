//! Dense univariate polynomials over F_p, and integer rational functions that
//! can be parsed from text and reduced modulo a prime.

use crate::error::{Error, Result};
use std::fmt;

/// Polynomial over F_p with coefficients stored lowest degree first and no
/// trailing zeros (the zero polynomial is the empty vector).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpPoly {
    p: u64,
    c: Vec<u64>,
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    r
}

pub(crate) fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

impl FpPoly {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        let mut c: Vec<u64> = coeffs.into_iter().map(|x| x % p).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        Self { p, c }
    }

    pub fn from_i64(p: u64, coeffs: &[i64]) -> Self {
        let pi = p as i128;
        Self::new(
            p,
            coeffs
                .iter()
                .map(|&x| (x as i128).rem_euclid(pi) as u64)
                .collect(),
        )
    }

    pub fn zero(p: u64) -> Self {
        Self { p, c: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        Self::new(p, vec![1])
    }

    /// The monomial X.
    pub fn x(p: u64) -> Self {
        Self::new(p, vec![0, 1])
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = invmod(self.lead(), self.p);
        self.scale(inv)
    }

    pub fn scale(&self, s: u64) -> Self {
        Self::new(
            self.p,
            self.c.iter().map(|&a| mulmod(a, s, self.p)).collect(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n)
            .map(|i| {
                (self.c.get(i).copied().unwrap_or(0) + o.c.get(i).copied().unwrap_or(0)) % self.p
            })
            .collect();
        Self::new(self.p, v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n)
            .map(|i| {
                (self.c.get(i).copied().unwrap_or(0) + self.p - o.c.get(i).copied().unwrap_or(0))
                    % self.p
            })
            .collect();
        Self::new(self.p, v)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let mut v = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                v[i + j] = (v[i + j] + mulmod(a, b, self.p)) % self.p;
            }
        }
        Self::new(self.p, v)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let p = self.p;
        let dd = d.c.len() - 1;
        if self.c.len() < d.c.len() {
            return (Self::zero(p), self.clone());
        }
        let inv = invmod(d.lead(), p);
        let mut r = self.c.clone();
        let mut q = vec![0u64; self.c.len() - dd];
        for i in (0..q.len()).rev() {
            let coef = mulmod(r[i + dd], inv, p);
            q[i] = coef;
            if coef == 0 {
                continue;
            }
            for (j, &b) in d.c.iter().enumerate() {
                r[i + j] = (r[i + j] + p - mulmod(coef, b, p)) % p;
            }
        }
        r.truncate(dd);
        (Self::new(p, q), Self::new(p, r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.divrem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        let v = self
            .c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| mulmod(a, i as u64 % self.p, self.p))
            .collect();
        Self::new(self.p, v)
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, mut e: u128, m: &Self) -> Self {
        let mut base = self.rem(m);
        let mut r = Self::one(self.p).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        r
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &a in self.c.iter().rev() {
            acc = (mulmod(acc, x, self.p) + a) % self.p;
        }
        acc
    }

    /// Irreducibility over F_p: no factor of degree i ≤ deg/2, detected via
    /// gcd(X^{p^i} − X, f).
    pub fn is_irreducible(&self) -> bool {
        let Some(n) = self.degree() else {
            return false;
        };
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let f = self.monic();
        let x = Self::x(self.p);
        let mut xp = x.clone();
        for _ in 1..=n / 2 {
            xp = xp.pow_mod(self.p as u128, &f);
            let g = xp.sub(&x).gcd(&f);
            if g.degree() != Some(0) {
                return false;
            }
        }
        true
    }

    /// p-th root of a polynomial whose derivative vanishes (all exponents are
    /// multiples of p). Coefficients of F_p are fixed by Frobenius.
    fn pth_root(&self) -> Self {
        let p = self.p as usize;
        let v = self.c.iter().step_by(p).copied().collect();
        Self::new(self.p, v)
    }

    /// Square-free factorization of a monic polynomial: pairs `(g, m)` with
    /// `self = Π g^m`, each `g` square-free, pairwise coprime and non-constant.
    pub fn squarefree_factorization(&self) -> Vec<(Self, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        self.sff_into(1, &mut out);
        out.sort_by_key(|(_, m)| *m);
        // merge equal multiplicities arising from the p-th root recursion
        let mut merged: Vec<(Self, u32)> = Vec::new();
        for (g, m) in out {
            match merged.last_mut() {
                Some((h, mm)) if *mm == m => *h = h.mul(&g),
                _ => merged.push((g, m)),
            }
        }
        merged
    }

    fn sff_into(&self, scale: u32, out: &mut Vec<(Self, u32)>) {
        let f = self.monic();
        let fp = f.derivative();
        if fp.is_zero() {
            f.pth_root().sff_into(scale * self.p as u32, out);
            return;
        }
        let mut c = f.gcd(&fp);
        let mut w = f.divrem(&c).0;
        let mut i = 1u32;
        while w.degree().unwrap_or(0) > 0 {
            let y = w.gcd(&c);
            let z = w.divrem(&y).0;
            if z.degree().unwrap_or(0) > 0 {
                out.push((z.monic(), i * scale));
            }
            i += 1;
            w = y;
            c = c.divrem(&w).0;
        }
        if c.degree().unwrap_or(0) > 0 {
            c.pth_root().sff_into(scale * self.p as u32, out);
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.squarefree_factorization().iter().all(|(_, m)| *m == 1)
    }
}

impl fmt::Display for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &a) in self.c.iter().enumerate().rev() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, a) {
                (0, a) => write!(f, "{a}")?,
                (1, 1) => write!(f, "X")?,
                (1, a) => write!(f, "{a}*X")?,
                (i, 1) => write!(f, "X^{i}")?,
                (i, a) => write!(f, "{a}*X^{i}")?,
            }
        }
        Ok(())
    }
}

/// Rational function with integer coefficients, as written by a user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntRational {
    pub num: Vec<i64>,
    pub den: Vec<i64>,
}

fn trim_int(mut v: Vec<i128>) -> Vec<i128> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn int_mul(a: &[i128], b: &[i128]) -> Result<Vec<i128>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let mut v = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let t = x.checked_mul(y).ok_or_else(overflow)?;
            v[i + j] = v[i + j].checked_add(t).ok_or_else(overflow)?;
        }
    }
    Ok(trim_int(v))
}

fn int_add(a: &[i128], b: &[i128], sign: i128) -> Result<Vec<i128>> {
    let n = a.len().max(b.len());
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0) * sign;
        v.push(x.checked_add(y).ok_or_else(overflow)?);
    }
    Ok(trim_int(v))
}

fn overflow() -> Error {
    Error::Parse("coefficient overflow".into())
}

/// Intermediate parse value: numerator / denominator over Z.
#[derive(Clone, Debug)]
struct Frac {
    n: Vec<i128>,
    d: Vec<i128>,
}

impl Frac {
    fn constant(c: i128) -> Self {
        Self {
            n: trim_int(vec![c]),
            d: vec![1],
        }
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Ok(Self {
            n: int_mul(&self.n, &o.n)?,
            d: int_mul(&self.d, &o.d)?,
        })
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if o.n.is_empty() {
            return Err(Error::Parse("division by zero".into()));
        }
        Ok(Self {
            n: int_mul(&self.n, &o.d)?,
            d: int_mul(&self.d, &o.n)?,
        })
    }
    fn add(&self, o: &Self, sign: i128) -> Result<Self> {
        if self.d == o.d {
            return Ok(Self {
                n: int_add(&self.n, &o.n, sign)?,
                d: self.d.clone(),
            });
        }
        let a = int_mul(&self.n, &o.d)?;
        let b = int_mul(&o.n, &self.d)?;
        Ok(Self {
            n: int_add(&a, &b, sign)?,
            d: int_mul(&self.d, &o.d)?,
        })
    }
    fn pow(&self, e: u32) -> Result<Self> {
        let mut r = Self::constant(1);
        for _ in 0..e {
            r = r.mul(self)?;
        }
        Ok(r)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn peek(&mut self) -> Option<u8> {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
        self.s.get(self.i).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {}", self.i))
    }

    fn expr(&mut self) -> Result<Frac> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Frac::constant(0).add(&self.term()?, -1)?
            }
            Some(b'+') => {
                self.i += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.i += 1;
                    acc = acc.add(&self.term()?, 1)?;
                }
                Some(b'-') => {
                    self.i += 1;
                    acc = acc.add(&self.term()?, -1)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Frac> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.i += 1;
                    acc = acc.mul(&self.power()?)?;
                }
                Some(b'/') => {
                    self.i += 1;
                    acc = acc.div(&self.power()?)?;
                }
                // implicit product such as 2X or 3(X+1)
                Some(b'x' | b'X' | b'(') => acc = acc.mul(&self.power()?)?,
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Frac> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            self.peek();
            let e = self.integer()?;
            let e = u32::try_from(e).map_err(|_| self.err("exponent too large"))?;
            if e > 4096 {
                return Err(self.err("exponent too large"));
            }
            return base.pow(e);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i128> {
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse::<i128>()
            .map_err(|_| self.err("integer too large"))
    }

    fn atom(&mut self) -> Result<Frac> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(v)
            }
            Some(b'x' | b'X') => {
                self.i += 1;
                Ok(Frac {
                    n: vec![0, 1],
                    d: vec![1],
                })
            }
            Some(c) if c.is_ascii_digit() => Ok(Frac::constant(self.integer()?)),
            Some(b'-') => {
                self.i += 1;
                Frac::constant(0).add(&self.power()?, -1)
            }
            _ => Err(self.err("unexpected input")),
        }
    }
}

fn to_i64(v: Vec<i128>) -> Result<Vec<i64>> {
    v.into_iter()
        .map(|x| i64::try_from(x).map_err(|_| overflow()))
        .collect()
}

impl IntRational {
    pub fn polynomial(coeffs: &[i64]) -> Self {
        Self {
            num: coeffs.to_vec(),
            den: vec![1],
        }
    }

    /// Parses expressions in one variable `X`, e.g. `X^3+2*X-1` or `(X^2+1)/(X-3)`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Parser {
            s: s.as_bytes(),
            i: 0,
        };
        let f = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        if f.d.is_empty() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Self {
            num: to_i64(f.n)?,
            den: to_i64(f.d)?,
        })
    }

    pub fn reduce(&self, p: u64) -> Result<RationalFunction> {
        RationalFunction::new(
            FpPoly::from_i64(p, &self.num),
            FpPoly::from_i64(p, &self.den),
        )
    }
}

impl fmt::Display for IntRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn poly(v: &[i64]) -> String {
            let mut s = String::new();
            for (i, &a) in v.iter().enumerate().rev() {
                if a == 0 {
                    continue;
                }
                if !s.is_empty() || a < 0 {
                    s.push(if a < 0 { '-' } else { '+' });
                }
                let m = a.unsigned_abs();
                match i {
                    0 => s.push_str(&m.to_string()),
                    _ => {
                        if m != 1 {
                            s.push_str(&format!("{m}*"));
                        }
                        s.push('X');
                        if i > 1 {
                            s.push_str(&format!("^{i}"));
                        }
                    }
                }
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        }
        if self.den == [1] {
            write!(f, "{}", poly(&self.num))
        } else {
            write!(f, "({})/({})", poly(&self.num), poly(&self.den))
        }
    }
}

/// Reduced rational function num/den over F_p with monic denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunction {
    pub num: FpPoly,
    pub den: FpPoly,
}

impl RationalFunction {
    pub fn new(num: FpPoly, den: FpPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParameter(
                "denominator vanishes identically mod p".into(),
            ));
        }
        let g = num.gcd(&den);
        let (num, den) = if num.is_zero() {
            (num, FpPoly::one(den.prime()))
        } else {
            (num.divrem(&g).0, den.divrem(&g).0)
        };
        let inv = invmod(den.lead(), den.prime());
        Ok(Self {
            num: num.scale(inv),
            den: den.scale(inv),
        })
    }

    pub fn polynomial(f: FpPoly) -> Self {
        let p = f.prime();
        Self {
            num: f,
            den: FpPoly::one(p),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree().unwrap_or(0) == 0 && self.is_polynomial()
    }
}
