//! Splits tree-prefix formulas over quantifier-free sum-like operations
//! into factors evaluated on each operand, decides prefix games on finite
//! structures, and enumerates formula classes to cross-check both.

use serde::{Deserialize, Serialize};

pub mod check;
pub mod decompose;
pub mod efgame;
pub mod enumerate;
pub mod formula;
pub mod interp;
pub mod modelcheck;
pub mod par;
pub mod structure;

/// Which side of the tree-prefix hierarchy: existential-led or
/// universal-led.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sigma,
    Pi,
}

impl Mode {
    pub fn dual(self) -> Mode {
        match self {
            Mode::Sigma => Mode::Pi,
            Mode::Pi => Mode::Sigma,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sigma" | "s" => Ok(Mode::Sigma),
            "pi" | "p" => Ok(Mode::Pi),
            other => Err(format!("unknown class `{other}`, expected sigma or pi")),
        }
    }
}
