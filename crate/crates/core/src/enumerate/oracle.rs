use num_bigint::BigUint;

use crate::formula::{Formula, Var, Vocabulary};
use crate::structure::Structure;
use crate::Mode;

use super::family::{block_family, ranked_family, Budget};
use super::{tower_at_least, tower_capped, Caps, EnumError, TestBed, DEFAULT_TOWER_BITS};

fn context(len: usize) -> Vec<Var> {
    (0..len).map(|i| Var::new(format!("x{i}"))).collect()
}

/// Whether every formula with `n` alternation levels, existential-led,
/// blocks of exactly `k` variables, that holds at `(a1, t1)` also holds at
/// `(a2, t2)`. Decided over the two-structure bed, which is exact for these
/// two rows.
pub fn transfer_oracle(
    n: usize,
    k: usize,
    a1: &Structure,
    t1: &[usize],
    a2: &Structure,
    t2: &[usize],
    caps: Caps,
) -> Result<bool, EnumError> {
    if t1.len() != t2.len() {
        return Err(EnumError::LengthMismatch(t1.len(), t2.len()));
    }
    let bed = TestBed::new(vec![a1.clone(), a2.clone()], context(t1.len()))?;
    let mut budget = Budget::new(caps);
    let family = block_family(Mode::Sigma, n, k, &bed, &mut budget)?;
    Ok(family.separator(bed.row(0, t1), bed.row(1, t2)).is_none())
}

/// Result of a separator search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeparatorOutcome {
    /// A sentence true in the first structure and false in the second.
    Found(Formula),
    /// The enumeration completed and no sentence of the class separates.
    NoneExists,
    /// Every attempt hit its caps.
    BudgetExhausted,
}

/// Searches the existential-led sentences with `n` alternation levels and
/// blocks of exactly `k` variables for one true in `a1` and false in `a2`.
/// Attempts run with growing caps up to `budget`; the first separator in
/// enumeration order is returned.
pub fn find_separator(n: usize, k: usize, a1: &Structure, a2: &Structure, budget: Caps) -> Result<SeparatorOutcome, EnumError> {
    let bed = TestBed::new(vec![a1.clone(), a2.clone()], vec![])?;
    let mut caps = Caps { max_classes: budget.max_classes.min(1024), max_iters: budget.max_iters.min(1 << 20) };
    loop {
        let mut work = Budget::new(caps);
        match block_family(Mode::Sigma, n, k, &bed, &mut work) {
            Ok(family) => {
                return Ok(match family.separator(0, 1) {
                    Some(recipe) => SeparatorOutcome::Found(recipe.build()),
                    None => SeparatorOutcome::NoneExists,
                })
            }
            Err(EnumError::CapExceeded(_)) if caps != budget => {
                caps = Caps {
                    max_classes: caps.max_classes.saturating_mul(8).min(budget.max_classes),
                    max_iters: caps.max_iters.saturating_mul(8).min(budget.max_iters),
                };
            }
            Err(EnumError::CapExceeded(_)) => return Ok(SeparatorOutcome::BudgetExhausted),
            Err(e) => return Err(e),
        }
    }
}

/// Outcome of the class-count check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountCheck {
    pub count: usize,
    pub bound_level: usize,
    pub bound_base: u64,
    /// The bound itself when it fits under the magnitude cap.
    pub bound: Option<BigUint>,
    pub ok: bool,
}

impl CountCheck {
    pub fn bound_text(&self) -> String {
        match &self.bound {
            Some(b) => b.to_string(),
            None => format!("tower({}, {})", self.bound_level, self.bound_base),
        }
    }
}

/// Counts the existential-led classes with `n` alternation levels and rank
/// at most `m` over the bed (whose context has `t` variables) and compares
/// with `tower(n + 2, (|vocab| + 1) * (n + 1) * (m + t)^p)`, `p` the largest
/// arity.
pub fn count_bound_check(
    n: usize,
    m: usize,
    t: usize,
    vocab: &Vocabulary,
    bed: &TestBed,
    caps: Caps,
) -> Result<CountCheck, EnumError> {
    if bed.vars().len() != t {
        return Err(EnumError::InvalidBed(format!("context has {} variables, expected {t}", bed.vars().len())));
    }
    let mut budget = Budget::new(caps);
    let family = ranked_family(Mode::Sigma, n, m, bed, &mut budget)?;
    let count = family.count(&budget)?;
    let p = vocab.max_arity() as u32;
    let base = (vocab.len() as u64 + 1) * (n as u64 + 1) * ((m + t) as u64).pow(p);
    let bound_level = n + 2;
    let bound = tower_capped(bound_level, &BigUint::from(base), DEFAULT_TOWER_BITS);
    let ok = tower_at_least(bound_level, &BigUint::from(base), &BigUint::from(count));
    Ok(CountCheck { count, bound_level, bound_base: base, bound, ok })
}
