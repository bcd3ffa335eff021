//! Complete value tables of trace functions t: F_q → ℂ, computed from their
//! exponential-sum definitions.

mod exp_sums;
mod hyperelliptic;
mod hypergeometric;
mod kloosterman;
mod kummer;

pub use exp_sums::{birch_all, general_exp_sum_all, FamilyHint};
pub use hyperelliptic::{hyperelliptic_all, hyperelliptic_point_count};
pub use hypergeometric::hypergeometric_all;
pub use kloosterman::kloosterman_all;
pub use kummer::kummer_all;

use crate::finite_field::{FieldCtx, FqElem};
use crate::group::GroupKind;
use crate::poly::{FpPoly, RationalFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Default elementary-operation budget for brute-force enumerations.
pub const BRUTE_FORCE_BUDGET: f64 = 1e9;
/// Largest q for which `Method::Auto` picks brute force.
pub const AUTO_BRUTE_FORCE_MAX_Q: u64 = 2000;
/// Tolerance used for the sup-norm check and for deciding that a table is real.
pub const WEIL_TOLERANCE: f64 = 1e-6;
pub const REAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    /// Multiplicative DFT (Kloosterman, hypergeometric) or additive FFT (Birch).
    Fast,
    /// Brute force for q ≤ 2000, the fast path otherwise.
    #[default]
    Auto,
}

impl Method {
    pub(crate) fn use_fast(self, q: u64) -> bool {
        match self {
            Method::BruteForce => false,
            Method::Fast => true,
            Method::Auto => q > AUTO_BRUTE_FORCE_MAX_Q,
        }
    }
}

/// Multiplicative character χ(g^m) = exp(2πi·j·m/d), given as (d, j).
pub type CharSpec = (u64, u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Kloosterman {
        n: u32,
    },
    Birch,
    GeneralExp {
        f: String,
        g: String,
        h: String,
        chi: Option<CharSpec>,
    },
    Kummer {
        d: u64,
        j: u64,
        f: String,
    },
    Hyperelliptic {
        f: String,
    },
    Hypergeometric {
        chis: Vec<CharSpec>,
        rhos: Vec<CharSpec>,
    },
    /// Table read from disk or built synthetically.
    Custom {
        name: String,
    },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chars = |v: &[CharSpec]| {
            v.iter()
                .map(|(d, j)| format!("{j}/{d}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Family::Kloosterman { n } => write!(f, "kloosterman(n={n})"),
            Family::Birch => write!(f, "birch"),
            Family::GeneralExp { f: ff, g, h, chi } => {
                write!(f, "general_exp(f={ff};g={g};h={h}")?;
                if let Some((d, j)) = chi {
                    write!(f, ";chi={j}/{d}")?;
                }
                write!(f, ")")
            }
            Family::Kummer { d, j, f: ff } => write!(f, "kummer(chi={j}/{d};f={ff})"),
            Family::Hyperelliptic { f: ff } => write!(f, "hyperelliptic(f={ff})"),
            Family::Hypergeometric { chis, rhos } => {
                write!(
                    f,
                    "hypergeometric(chi=[{}];rho=[{}])",
                    chars(chis),
                    chars(rhos)
                )
            }
            Family::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

fn parse_char(s: &str) -> crate::error::Result<CharSpec> {
    let bad = || crate::error::Error::Parse(format!("character '{s}' is not of the form j/d"));
    let (j, d) = s.trim().split_once('/').ok_or_else(bad)?;
    Ok((
        d.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_char_list(s: &str) -> crate::error::Result<Vec<CharSpec>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| {
            crate::error::Error::Parse(format!("character list '{s}' needs brackets"))
        })?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_char).collect()
}

/// Parses the `Display` form, e.g. `kloosterman(n=2)`, `birch`,
/// `kummer(chi=1/2;f=X^2+1)` or `hypergeometric(chi=[0/1,0/1];rho=[1/2])`.
impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        use crate::error::Error;
        let s = s.trim();
        let (name, inner) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            Some(_) => return Err(Error::Parse(format!("unbalanced parentheses in '{s}'"))),
            None => (s, ""),
        };
        if name == "custom" {
            return Ok(Family::Custom {
                name: inner.to_string(),
            });
        }
        let mut kv = std::collections::BTreeMap::new();
        for part in inner.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("{name} needs '{k}'")))
        };
        match name.trim() {
            "kloosterman" => Ok(Family::Kloosterman {
                n: get("n")?
                    .parse()
                    .map_err(|_| Error::Parse("n must be an integer".into()))?,
            }),
            "birch" => Ok(Family::Birch),
            "general_exp" => Ok(Family::GeneralExp {
                f: get("f")?,
                g: kv.get("g").cloned().unwrap_or_else(|| "1".into()),
                h: kv.get("h").cloned().unwrap_or_else(|| "0".into()),
                chi: kv.get("chi").map(|c| parse_char(c)).transpose()?,
            }),
            "kummer" => {
                let (d, j) = parse_char(&get("chi")?)?;
                Ok(Family::Kummer { d, j, f: get("f")? })
            }
            "hyperelliptic" => Ok(Family::Hyperelliptic { f: get("f")? }),
            "hypergeometric" => Ok(Family::Hypergeometric {
                chis: parse_char_list(&get("chi")?)?,
                rhos: kv
                    .get("rho")
                    .map(|r| parse_char_list(r))
                    .transpose()?
                    .unwrap_or_default(),
            }),
            other => Err(Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

/// Computes the table of any family except `Custom`.
pub fn build_table(
    ctx: &Arc<FieldCtx>,
    family: &Family,
    method: Method,
) -> crate::error::Result<TraceTable> {
    use crate::poly::IntRational;
    match family {
        Family::Kloosterman { n } => kloosterman_all(ctx, *n, method),
        Family::Birch => birch_all(ctx, method),
        Family::GeneralExp { f, g, h, chi } => general_exp_sum_all(
            ctx,
            &IntRational::parse(f)?,
            &IntRational::parse(g)?,
            &IntRational::parse(h)?,
            *chi,
            None,
        ),
        Family::Kummer { d, j, f } => kummer_all(ctx, *d, *j, &IntRational::parse(f)?),
        Family::Hyperelliptic { f } => hyperelliptic_all(ctx, &IntRational::parse(f)?),
        Family::Hypergeometric { chis, rhos } => hypergeometric_all(ctx, chis, rhos, method),
        Family::Custom { name } => Err(crate::error::invalid(format!(
            "custom family '{name}' has no formula"
        ))),
    }
}

/// All q values of one trace function plus the metadata of its family.
#[derive(Clone, Debug)]
pub struct TraceTable {
    pub ctx: Arc<FieldCtx>,
    pub values: Vec<Complex64>,
    pub family: Family,
    pub rank: u32,
    pub self_dual: bool,
    pub group: GroupKind,
    /// Sorted points where a value convention replaces the generic formula.
    pub singular: Vec<FqElem>,
    pub conductor_bound: u32,
}

impl TraceTable {
    #[inline]
    pub fn value(&self, x: FqElem) -> Complex64 {
        self.values[x.index()]
    }

    pub fn is_singular(&self, x: FqElem) -> bool {
        self.singular.binary_search(&x).is_ok()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.max_abs_imag() <= REAL_TOLERANCE
    }

    /// Copy of the table with singular values replaced by 0.
    pub fn without_singular(&self) -> Self {
        let mut t = self.clone();
        for x in &self.singular {
            t.values[x.index()] = Complex64::new(0.0, 0.0);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeilReport {
    pub max_abs: f64,
    pub argmax: u32,
    pub rank: u32,
    pub pass: bool,
}

/// Sup-norm check |t(x)| ≤ rank over non-singular x.
pub fn verify_weil(table: &TraceTable) -> WeilReport {
    let mut max_abs = 0.0;
    let mut argmax = 0u32;
    for (i, v) in table.values.iter().enumerate() {
        let x = table.ctx.at(i);
        if table.is_singular(x) {
            continue;
        }
        let a = v.norm();
        if a > max_abs {
            max_abs = a;
            argmax = i as u32;
        }
    }
    WeilReport {
        max_abs,
        argmax,
        rank: table.rank,
        pass: max_abs <= table.rank as f64 + WEIL_TOLERANCE,
    }
}

pub(crate) fn sorted_unique(mut v: Vec<FqElem>) -> Vec<FqElem> {
    v.sort_unstable();
    v.dedup();
    v
}

#[inline]
pub(crate) fn eval_poly(ctx: &FieldCtx, f: &FpPoly, y: FqElem) -> FqElem {
    let mut acc = FqElem::ZERO;
    for &c in f.coeffs().iter().rev() {
        acc = ctx.add(ctx.mul(acc, y), ctx.at(c as usize));
    }
    acc
}

/// num(y)/den(y), or `None` at a pole.
#[inline]
pub(crate) fn eval_rational(ctx: &FieldCtx, r: &RationalFunction, y: FqElem) -> Option<FqElem> {
    let d = eval_poly(ctx, &r.den, y);
    let inv = ctx.inv(d)?;
    Some(ctx.mul(eval_poly(ctx, &r.num, y), inv))
}

/// Zeros of a polynomial in F_q by exhaustive evaluation.
pub(crate) fn roots_in_field(ctx: &FieldCtx, f: &FpPoly) -> Vec<FqElem> {
    if f.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    ctx.elements()
        .filter(|&y| eval_poly(ctx, f, y).is_zero())
        .collect()
}

pub(crate) fn check_budget(needed: f64, budget: f64) -> crate::error::Result<()> {
    if needed > budget {
        return Err(crate::error::Error::Budget { needed, budget });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn field(p: u64) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(p, 1, None).unwrap())
    }

    pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn family_strings_roundtrip() {
        let ctx = field(13);
        let specs = [
            "kloosterman(n=3)",
            "birch",
            "general_exp(f=X;g=X+1;h=X^3;chi=1/2)",
            "kummer(chi=1/4;f=X^2+1)",
            "hyperelliptic(f=X^4+3*X+1)",
            "hypergeometric(chi=[0/1,1/2];rho=[1/3])",
        ];
        for s in specs {
            let fam: Family = s.parse().unwrap();
            let t = build_table(&ctx, &fam, Method::Auto).unwrap();
            assert_eq!(t.family.to_string().parse::<Family>().unwrap(), t.family);
            assert_eq!(fam.to_string(), s);
        }
        assert_eq!(
            "custom(x)".parse::<Family>().unwrap(),
            Family::Custom { name: "x".into() }
        );
        assert!("kloosterman(n=two)".parse::<Family>().is_err());
        assert!("sine(f=X)".parse::<Family>().is_err());
        assert!("kummer(chi=2;f=X)".parse::<Family>().is_err());
        assert!(build_table(&ctx, &Family::Custom { name: "x".into() }, Method::Auto).is_err());
    }

    #[test]
    fn weil_detects_injected_violation() {
        let ctx = field(101);
        let mut t = kloosterman_all(&ctx, 2, Method::BruteForce).unwrap();
        assert!(verify_weil(&t).pass);
        t.values[5] = Complex64::new(3.0, 0.0);
        let r = verify_weil(&t);
        assert!(!r.pass);
        assert_eq!(r.argmax, 5);
        // a violation at a singular point is ignored
        let mut t = kloosterman_all(&ctx, 2, Method::BruteForce).unwrap();
        t.values[0] = Complex64::new(30.0, 0.0);
        assert!(verify_weil(&t).pass);
    }

    #[test]
    fn family_display_is_stable() {
        assert_eq!(Family::Kloosterman { n: 2 }.to_string(), "kloosterman(n=2)");
        let h = Family::Hypergeometric {
            chis: vec![(1, 0), (2, 1)],
            rhos: vec![],
        };
        assert_eq!(h.to_string(), "hypergeometric(chi=[0/1,1/2];rho=[])");
    }
}
