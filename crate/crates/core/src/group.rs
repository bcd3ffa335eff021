use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Compact group attached to a trace-function family. Matrix groups carry the
/// size of their standard representation, so `Symplectic(4)` is USp(4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GroupKind {
    SpecialLinear(u32),
    Symplectic(u32),
    SpecialOrthogonal(u32),
    CyclicKummer(u32),
    UnitCircle,
}

impl GroupKind {
    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            GroupKind::SpecialLinear(n) => n >= 2,
            GroupKind::Symplectic(n) => n >= 2 && n % 2 == 0,
            GroupKind::SpecialOrthogonal(n) => n >= 3,
            GroupKind::CyclicKummer(d) => d >= 2,
            GroupKind::UnitCircle => true,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("invalid group {self}")))
        }
    }

    /// Whether the standard representation is isomorphic to its dual.
    pub fn is_self_dual(self) -> bool {
        match self {
            GroupKind::SpecialLinear(n) => n == 2,
            GroupKind::Symplectic(_) | GroupKind::SpecialOrthogonal(_) => true,
            GroupKind::CyclicKummer(d) => d <= 2,
            GroupKind::UnitCircle => false,
        }
    }

    /// Size of the matrices in the standard representation.
    pub fn dimension(self) -> u32 {
        match self {
            GroupKind::SpecialLinear(n)
            | GroupKind::Symplectic(n)
            | GroupKind::SpecialOrthogonal(n) => n,
            GroupKind::CyclicKummer(_) | GroupKind::UnitCircle => 1,
        }
    }

    /// Lie rank of the complex group (N−1 for SL_N, N for Sp_2N, ⌊N/2⌋ for SO_N).
    pub fn lie_rank(self) -> u32 {
        match self {
            GroupKind::SpecialLinear(n) => n - 1,
            GroupKind::Symplectic(n) => n / 2,
            GroupKind::SpecialOrthogonal(n) => n / 2,
            GroupKind::CyclicKummer(_) => 0,
            GroupKind::UnitCircle => 1,
        }
    }

    pub fn is_matrix_group(self) -> bool {
        matches!(
            self,
            GroupKind::SpecialLinear(_)
                | GroupKind::Symplectic(_)
                | GroupKind::SpecialOrthogonal(_)
        )
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::SpecialLinear(n) => write!(f, "sl:{n}"),
            GroupKind::Symplectic(n) => write!(f, "sp:{n}"),
            GroupKind::SpecialOrthogonal(n) => write!(f, "so:{n}"),
            GroupKind::CyclicKummer(d) => write!(f, "kummer:{d}"),
            GroupKind::UnitCircle => write!(f, "u1"),
        }
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    /// Accepts `sl:N`, `su:N`, `sp:2N`, `usp:2N`, `so:N`, `kummer:d`, `mu:d`, `u1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "u1" || s == "circle" {
            return Ok(GroupKind::UnitCircle);
        }
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("group '{s}' is not of the form kind:N")))?;
        let n: u32 = n
            .parse()
            .map_err(|_| Error::Parse(format!("bad group size in '{s}'")))?;
        let g = match kind {
            "sl" | "su" => GroupKind::SpecialLinear(n),
            "sp" | "usp" => GroupKind::Symplectic(n),
            "so" => GroupKind::SpecialOrthogonal(n),
            "kummer" | "mu" => GroupKind::CyclicKummer(n),
            _ => return Err(Error::Parse(format!("unknown group kind '{kind}'"))),
        };
        g.validate()
    }
}

impl TryFrom<String> for GroupKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupKind> for String {
    fn from(g: GroupKind) -> String {
        g.to_string()
    }
}
