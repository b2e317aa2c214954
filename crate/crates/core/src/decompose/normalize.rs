use crate::formula::Formula;
use crate::Mode;

use super::{DecomposeError, PropFormula, ReductionSequence, Side, DEFAULT_MAX_PAIRS};

/// A literal of the combiner: factor `index` on `side`.
pub(crate) type Term = (usize, Side);

/// Canonical combiner for `n` pairs in the given mode.
pub(crate) fn pair_beta(mode: Mode, n: usize) -> PropFormula {
    match mode {
        Mode::Sigma => PropFormula::Or((0..n).map(PropFormula::pair_and).collect()),
        Mode::Pi => PropFormula::And((0..n).map(PropFormula::pair_or).collect()),
    }
}

/// Number of disjuncts (existential mode) or clauses (universal mode)
/// distribution produces, saturating.
fn term_count(b: &PropFormula, mode: Mode) -> u128 {
    match (b, mode) {
        (PropFormula::Var { .. }, _) => 1,
        (PropFormula::Top, Mode::Sigma) | (PropFormula::Bot, Mode::Pi) => 1,
        (PropFormula::Top, Mode::Pi) | (PropFormula::Bot, Mode::Sigma) => 0,
        (PropFormula::Or(cs), Mode::Sigma) | (PropFormula::And(cs), Mode::Pi) => {
            cs.iter().fold(0u128, |acc, c| acc.saturating_add(term_count(c, mode)))
        }
        (PropFormula::And(cs), Mode::Sigma) | (PropFormula::Or(cs), Mode::Pi) => {
            cs.iter().fold(1u128, |acc, c| acc.saturating_mul(term_count(c, mode)))
        }
    }
}

/// Distributes `b` into a list of terms: disjuncts of conjunctions in
/// existential mode, clauses of disjunctions in universal mode. Products
/// enumerate choices lexicographically with the first child most
/// significant.
fn distribute(b: &PropFormula, mode: Mode) -> Vec<Vec<Term>> {
    match (b, mode) {
        (PropFormula::Var { index, side }, _) => vec![vec![(*index, *side)]],
        (PropFormula::Top, Mode::Sigma) | (PropFormula::Bot, Mode::Pi) => vec![vec![]],
        (PropFormula::Top, Mode::Pi) | (PropFormula::Bot, Mode::Sigma) => vec![],
        (PropFormula::Or(cs), Mode::Sigma) | (PropFormula::And(cs), Mode::Pi) => {
            cs.iter().flat_map(|c| distribute(c, mode)).collect()
        }
        (PropFormula::And(cs), Mode::Sigma) | (PropFormula::Or(cs), Mode::Pi) => {
            // An absorbing child empties the product; checking first keeps
            // every partial product within the final term count.
            if cs.iter().any(|c| term_count(c, mode) == 0) {
                return vec![];
            }
            let mut acc: Vec<Vec<Term>> = vec![vec![]];
            for c in cs {
                let parts = distribute(c, mode);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for prefix in &acc {
                    for p in &parts {
                        let mut t = prefix.clone();
                        t.extend_from_slice(p);
                        next.push(t);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

/// Conjunction (existential mode) or disjunction (universal mode) of the
/// listed factors; the empty group is the neutral constant.
fn group(factors: &[Formula], idx: &[usize], mode: Mode) -> Formula {
    let picked: Vec<Formula> = idx.iter().map(|&i| factors[i].clone()).collect();
    match mode {
        Mode::Sigma => Formula::and(picked),
        Mode::Pi => Formula::or(picked),
    }
}

/// Rewrites the system `(d1, d2, beta)` into pair normal form: one pair of
/// grouped factors per disjunct (existential mode) or clause (universal
/// mode) of the distributed combiner.
pub(crate) fn to_pairs(
    d1: &[Formula],
    d2: &[Formula],
    beta: &PropFormula,
    mode: Mode,
    max_pairs: usize,
) -> Result<Vec<(Formula, Formula)>, DecomposeError> {
    let needed = term_count(beta, mode);
    if needed > max_pairs as u128 {
        return Err(DecomposeError::TooLarge { needed, limit: max_pairs });
    }
    let mut out = Vec::with_capacity(needed as usize);
    for term in distribute(beta, mode) {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, side) in term {
            let bucket = if side == Side::Left { &mut left } else { &mut right };
            if !bucket.contains(&i) {
                bucket.push(i);
            }
        }
        out.push((group(d1, &left, mode), group(d2, &right, mode)));
    }
    Ok(out)
}

/// Pair normal form of `d` in the given mode, with the default size limit.
pub fn normalize_pairs(d: &ReductionSequence, mode: Mode) -> Result<ReductionSequence, DecomposeError> {
    normalize_pairs_capped(d, mode, DEFAULT_MAX_PAIRS)
}

pub fn normalize_pairs_capped(d: &ReductionSequence, mode: Mode, max_pairs: usize) -> Result<ReductionSequence, DecomposeError> {
    d.validate()?;
    let pairs = to_pairs(&d.delta1, &d.delta2, &d.beta, mode, max_pairs)?;
    let beta = pair_beta(mode, pairs.len());
    let (delta1, delta2): (Vec<Formula>, Vec<Formula>) =
        pairs.into_iter().map(|(a, b)| (a.alpha_normalize(), b.alpha_normalize())).unzip();
    Ok(ReductionSequence { delta1, delta2, beta, partition: d.partition.clone(), vocab: d.vocab.clone() })
}
