use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the two idempotents i₀, i₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Idem {
    I0,
    I1,
}

impl Idem {
    pub const BOTH: [Idem; 2] = [Idem::I0, Idem::I1];

    pub fn index(self) -> usize {
        match self {
            Idem::I0 => 0,
            Idem::I1 => 1,
        }
    }
}

impl fmt::Display for Idem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Idem::I0 => write!(f, "i0"),
            Idem::I1 => write!(f, "i1"),
        }
    }
}

impl FromStr for Idem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "i0" | "0" => Ok(Idem::I0),
            "i1" | "1" => Ok(Idem::I1),
            other => Err(format!("unknown idempotent `{other}`")),
        }
    }
}
