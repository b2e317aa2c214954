//! Semantic enumeration of formula classes over finite test beds.
//!
//! Formulas are identified with the set of bed rows (structure plus
//! assignment) on which they hold. Quantifier-free formulas form the
//! Boolean algebra generated by literals, so every set of rows that is a
//! union of atomic-type cells is realized. Higher levels are obtained by
//! closing under conjunction or disjunction and projecting a quantifier
//! block away.

mod bed;
mod family;
mod oracle;
mod tower;

#[cfg(test)]
mod tests;

use thiserror::Error;

use crate::modelcheck::EvalError;

pub use bed::TestBed;
pub use family::{enumerate_classes, SemanticClass};
pub use oracle::{count_bound_check, find_separator, transfer_oracle, CountCheck, SeparatorOutcome};
pub use tower::{tower, tower_at_least, tower_capped, DEFAULT_TOWER_BITS};

/// Default number of classes a closure may produce.
pub const DEFAULT_MAX_CLASSES: usize = 200_000;
/// Default number of bitvector operations a closure may perform.
pub const DEFAULT_MAX_ITERS: u64 = 200_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("inconclusive: {0}")]
    CapExceeded(String),
    #[error("invalid test bed: {0}")]
    InvalidBed(String),
    #[error("tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("structures have different vocabularies")]
    VocabularyMismatch,
    #[error("quantifier blocks must have at least one variable")]
    EmptyBlock,
    #[error("tower({level}, {base}) exceeds the magnitude cap")]
    TowerTooLarge { level: usize, base: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Limits for the closure fixpoints. Exceeding either is reported as
/// [`EnumError::CapExceeded`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_classes: usize,
    pub max_iters: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_classes: DEFAULT_MAX_CLASSES, max_iters: DEFAULT_MAX_ITERS }
    }
}

/// Hex rendering of a bitvector, row 0 in the least significant bit.
pub fn bits_to_hex(bits: &fixedbitset::FixedBitSet) -> String {
    let digits = bits.len().div_ceil(4).max(1);
    (0..digits)
        .rev()
        .map(|d| {
            let nibble = (0..4).filter(|b| bits.contains(d * 4 + b)).fold(0u32, |acc, b| acc | 1 << b);
            char::from_digit(nibble, 16).expect("nibble")
        })
        .collect()
}
