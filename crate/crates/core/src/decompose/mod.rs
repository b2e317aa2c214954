//! Reduction sequences: a formula over the annotated disjoint union is
//! turned into two lists of one-sided factor formulas and a negation-free
//! propositional combiner over their truth values.

mod engine;
mod json;
mod normalize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError, Var, Vocabulary};
use crate::interp::{transform_formula, InterpError, SumLikeOp};
use crate::modelcheck::{Compiled, EvalError};
use crate::structure::{Structure, StructureError, ANNOTATION};
use crate::Mode;

pub use engine::decompose;
pub use normalize::normalize_pairs;

/// Default bound on the number of disjuncts or clauses a single
/// normalization step may produce.
pub const DEFAULT_MAX_PAIRS: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("free variable `{0}` is in neither side of the partition")]
    UnpartitionedVariable(String),
    #[error("variable `{0}` is on both sides of the partition")]
    OverlappingPartition(String),
    #[error("normalization would produce {needed} terms, above the limit of {limit}")]
    TooLarge { needed: u128, limit: usize },
    #[error("expected {expected} values for side {side}, got {found}")]
    ArityMismatch { side: u8, expected: usize, found: usize },
    #[error("structure vocabulary differs from the factor vocabulary")]
    VocabularyMismatch,
    #[error("malformed reduction sequence: {0}")]
    Malformed(String),
}

/// Operand position of a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn number(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }

    pub fn from_number(n: u64) -> Option<Side> {
        match n {
            1 => Some(Side::Left),
            2 => Some(Side::Right),
            _ => None,
        }
    }
}

/// Negation-free propositional formula over factor truth values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropFormula {
    Var { index: usize, side: Side },
    Top,
    Bot,
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

impl PropFormula {
    pub fn var(index: usize, side: Side) -> Self {
        PropFormula::Var { index, side }
    }

    /// `Var(i,1) & Var(i,2)`.
    pub fn pair_and(i: usize) -> Self {
        PropFormula::And(vec![PropFormula::var(i, Side::Left), PropFormula::var(i, Side::Right)])
    }

    /// `Var(i,1) | Var(i,2)`.
    pub fn pair_or(i: usize) -> Self {
        PropFormula::Or(vec![PropFormula::var(i, Side::Left), PropFormula::var(i, Side::Right)])
    }

    pub fn eval(&self, left: &[bool], right: &[bool]) -> bool {
        match self {
            PropFormula::Var { index, side: Side::Left } => left[*index],
            PropFormula::Var { index, side: Side::Right } => right[*index],
            PropFormula::Top => true,
            PropFormula::Bot => false,
            PropFormula::And(cs) => cs.iter().all(|c| c.eval(left, right)),
            PropFormula::Or(cs) => cs.iter().any(|c| c.eval(left, right)),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            PropFormula::And(cs) | PropFormula::Or(cs) => 1 + cs.iter().map(PropFormula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Adds `left`/`right` to the indices of the corresponding variables.
    pub fn shifted(&self, left: usize, right: usize) -> Self {
        match self {
            PropFormula::Var { index, side: Side::Left } => PropFormula::var(index + left, Side::Left),
            PropFormula::Var { index, side: Side::Right } => PropFormula::var(index + right, Side::Right),
            PropFormula::Top => PropFormula::Top,
            PropFormula::Bot => PropFormula::Bot,
            PropFormula::And(cs) => PropFormula::And(cs.iter().map(|c| c.shifted(left, right)).collect()),
            PropFormula::Or(cs) => PropFormula::Or(cs.iter().map(|c| c.shifted(left, right)).collect()),
        }
    }

    fn max_index(&self, side: Side) -> Option<usize> {
        match self {
            PropFormula::Var { index, side: s } if *s == side => Some(*index),
            PropFormula::And(cs) | PropFormula::Or(cs) => cs.iter().filter_map(|c| c.max_index(side)).max(),
            _ => None,
        }
    }

    /// The pair count if this is an OR of `Var(i,1) & Var(i,2)` for
    /// `i = 0..n` (existential mode) or the dual AND of ORs.
    pub fn pair_form(&self) -> Option<(Mode, usize)> {
        let (mode, cs) = match self {
            PropFormula::Or(cs) => (Mode::Sigma, cs),
            PropFormula::And(cs) => (Mode::Pi, cs),
            _ => return None,
        };
        for (i, c) in cs.iter().enumerate() {
            let expected = match mode {
                Mode::Sigma => PropFormula::pair_and(i),
                Mode::Pi => PropFormula::pair_or(i),
            };
            if *c != expected {
                return None;
            }
        }
        Some((mode, cs.len()))
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropFormula::Var { index, side } => write!(f, "X{}_{}", index, side.number()),
            PropFormula::Top => f.write_str("T"),
            PropFormula::Bot => f.write_str("F"),
            PropFormula::And(cs) | PropFormula::Or(cs) => {
                let op = if matches!(self, PropFormula::And(_)) { " & " } else { " | " };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Split of the free variables between the two operands.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarPartition {
    pub left: Vec<Var>,
    pub right: Vec<Var>,
}

impl VarPartition {
    pub fn new(left: Vec<Var>, right: Vec<Var>) -> Self {
        VarPartition { left, right }
    }

    pub fn sentence() -> Self {
        Self::default()
    }

    pub fn vars(&self, side: Side) -> &[Var] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Checks disjointness and that every free variable of `f` is covered.
    pub fn validate(&self, f: &Formula) -> Result<(), DecomposeError> {
        if let Some(v) = self.left.iter().find(|v| self.right.contains(v)) {
            return Err(DecomposeError::OverlappingPartition(v.to_string()));
        }
        for v in f.free_variables() {
            if !self.left.contains(&v) && !self.right.contains(&v) {
                return Err(DecomposeError::UnpartitionedVariable(v.to_string()));
            }
        }
        Ok(())
    }
}

/// Two factor lists and the combiner over their truth values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionSequence {
    pub delta1: Vec<Formula>,
    pub delta2: Vec<Formula>,
    pub beta: PropFormula,
    pub partition: VarPartition,
    pub vocab: Vocabulary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStats {
    pub total_size: usize,
    pub factor_count_1: usize,
    pub factor_count_2: usize,
    pub beta_size: usize,
}

impl ReductionSequence {
    pub fn delta(&self, side: Side) -> &[Formula] {
        match side {
            Side::Left => &self.delta1,
            Side::Right => &self.delta2,
        }
    }

    /// Structural checks: variable indices in range, factors over the
    /// vocabulary and using only their own side's variables.
    pub fn validate(&self) -> Result<(), DecomposeError> {
        for side in [Side::Left, Side::Right] {
            if let Some(i) = self.beta.max_index(side) {
                if i >= self.delta(side).len() {
                    return Err(DecomposeError::Malformed(format!("variable index {i} out of range on side {}", side.number())));
                }
            }
            for f in self.delta(side) {
                f.check_vocabulary(&self.vocab)?;
                if let Some(v) = f.free_variables().iter().find(|v| !self.partition.vars(side).contains(v)) {
                    return Err(DecomposeError::Malformed(format!("factor uses `{v}` from the other side")));
                }
            }
        }
        if self.vocab.contains(ANNOTATION) {
            return Err(DecomposeError::Malformed(format!("factor vocabulary contains `{ANNOTATION}`")));
        }
        Ok(())
    }

    pub fn stats(&self) -> ReductionStats {
        reduction_stats(self)
    }

    /// Pair count and mode when the combiner is in pair normal form.
    pub fn pair_form(&self) -> Option<(Mode, usize)> {
        self.beta.pair_form().filter(|&(_, n)| n <= self.delta1.len() && n <= self.delta2.len())
    }
}

pub fn reduction_stats(d: &ReductionSequence) -> ReductionStats {
    let factors: usize = d.delta1.iter().chain(&d.delta2).map(Formula::size).sum();
    let beta_size = d.beta.size();
    ReductionStats { total_size: factors + beta_size, factor_count_1: d.delta1.len(), factor_count_2: d.delta2.len(), beta_size }
}

/// Options for [`decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecomposeOptions {
    /// Run [`simplify_reduction`] on the result.
    pub simplify: bool,
    /// Reuse results for repeated (subformula, side assignment) queries.
    pub memoize: bool,
    /// Bound on disjuncts or clauses produced by one normalization.
    pub max_pairs: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { simplify: false, memoize: true, max_pairs: DEFAULT_MAX_PAIRS }
    }
}

/// Decomposition of `f` over the sum-like operation `op`: the formula is
/// first translated through the operation's interpretation.
pub fn decompose_over_op(
    f: &Formula,
    op: &SumLikeOp,
    part: &VarPartition,
    opts: &DecomposeOptions,
) -> Result<ReductionSequence, DecomposeError> {
    f.check_vocabulary(op.tau())?;
    let translated = transform_formula(&op.interp, f, false)?;
    decompose(&translated, op.tau(), part, opts)
}

/// Truth values of every factor of one side, for every assignment of that
/// side's variables. Assignments are coded in base `|A|` with the first
/// variable most significant.
#[derive(Clone, Debug)]
pub struct SideTable {
    size: usize,
    arity: usize,
    rows: Vec<Vec<bool>>,
}

impl SideTable {
    pub fn build(factors: &[Formula], vars: &[Var], s: &Structure) -> Result<Self, DecomposeError> {
        let compiled = factors.iter().map(|f| Compiled::new(s, f, vars)).collect::<Result<Vec<_>, _>>()?;
        let n = s.size();
        let total = n.pow(vars.len() as u32);
        let mut rows = Vec::with_capacity(total);
        let mut values = vec![0; vars.len()];
        for code in 0..total {
            decode(code, n, &mut values);
            rows.push(compiled.iter().map(|c| c.eval(&values)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(SideTable { size: n, arity: vars.len(), rows })
    }

    pub fn row(&self, values: &[usize]) -> &[bool] {
        debug_assert_eq!(values.len(), self.arity);
        &self.rows[encode(values, self.size)]
    }

    pub fn row_by_code(&self, code: usize) -> &[bool] {
        &self.rows[code]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn decode(mut code: usize, n: usize, out: &mut [usize]) {
    for k in (0..out.len()).rev() {
        out[k] = code % n;
        code /= n;
    }
}

pub(crate) fn encode(values: &[usize], n: usize) -> usize {
    values.iter().fold(0, |acc, &v| acc * n + v)
}

fn check_structure(d: &ReductionSequence, s: &Structure) -> Result<(), DecomposeError> {
    if s.vocab() != &d.vocab {
        return Err(DecomposeError::VocabularyMismatch);
    }
    Ok(())
}

/// Verdict of the reduction sequence on the pair `(a1, a2)` with the
/// partition's variables bound to element positions `t1`, `t2`.
pub fn eval_reduction(
    d: &ReductionSequence,
    a1: &Structure,
    a2: &Structure,
    t1: &[usize],
    t2: &[usize],
) -> Result<bool, DecomposeError> {
    check_structure(d, a1)?;
    check_structure(d, a2)?;
    for (side, t) in [(Side::Left, t1), (Side::Right, t2)] {
        let expected = d.partition.vars(side).len();
        if t.len() != expected {
            return Err(DecomposeError::ArityMismatch { side: side.number(), expected, found: t.len() });
        }
    }
    let z1 = d
        .delta1
        .iter()
        .map(|f| Compiled::new(a1, f, &d.partition.left)?.eval(t1))
        .collect::<Result<Vec<_>, _>>()?;
    let z2 = d
        .delta2
        .iter()
        .map(|f| Compiled::new(a2, f, &d.partition.right)?.eval(t2))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(d.beta.eval(&z1, &z2))
}

/// [`eval_reduction`] with element ids.
pub fn eval_reduction_ids(
    d: &ReductionSequence,
    a1: &Structure,
    a2: &Structure,
    ids1: &[String],
    ids2: &[String],
) -> Result<bool, DecomposeError> {
    let t1 = a1.resolve(ids1)?;
    let t2 = a2.resolve(ids2)?;
    eval_reduction(d, a1, a2, &t1, &t2)
}

/// Removes redundancy without changing the verdict: folds constants in
/// factors, drops pairs that can never contribute, merges duplicate pairs,
/// and drops unused factors. Pair normal form is kept when present, except
/// that an empty combination becomes a constant.
pub fn simplify_reduction(d: &ReductionSequence) -> ReductionSequence {
    let fold = |fs: &[Formula]| fs.iter().map(Formula::fold_constants).collect::<Vec<_>>();
    let (d1, d2) = (fold(&d.delta1), fold(&d.delta2));
    let out = |delta1, delta2, beta| ReductionSequence {
        delta1,
        delta2,
        beta,
        partition: d.partition.clone(),
        vocab: d.vocab.clone(),
    };
    if let Some((mode, n)) = d.pair_form() {
        let (absorbing, neutral) = match mode {
            Mode::Sigma => (Formula::Bot, Formula::Top),
            Mode::Pi => (Formula::Top, Formula::Bot),
        };
        let mut pairs: Vec<(Formula, Formula)> = Vec::new();
        for i in 0..n {
            let p = (d1[i].clone(), d2[i].clone());
            if p.0 == absorbing || p.1 == absorbing || pairs.contains(&p) {
                continue;
            }
            if p.0 == neutral && p.1 == neutral {
                // This pair decides the whole combination.
                pairs = vec![p];
                break;
            }
            pairs.push(p);
        }
        if pairs.is_empty() {
            return out(vec![], vec![], if mode == Mode::Sigma { PropFormula::Bot } else { PropFormula::Top });
        }
        let beta = normalize::pair_beta(mode, pairs.len());
        let (delta1, delta2) = pairs.into_iter().unzip();
        return out(delta1, delta2, beta);
    }
    // General combiner: fold constants decided by constant factors, then
    // keep only the referenced factors.
    let beta = fold_beta(&d.beta, &d1, &d2);
    let mut used1 = Vec::new();
    let mut used2 = Vec::new();
    collect_vars(&beta, &mut used1, &mut used2);
    let beta = reindex(&beta, &used1, &used2);
    out(used1.iter().map(|&i| d1[i].clone()).collect(), used2.iter().map(|&i| d2[i].clone()).collect(), beta)
}

fn fold_beta(b: &PropFormula, d1: &[Formula], d2: &[Formula]) -> PropFormula {
    match b {
        PropFormula::Var { index, side } => {
            let f = if *side == Side::Left { &d1[*index] } else { &d2[*index] };
            match f {
                Formula::Top => PropFormula::Top,
                Formula::Bot => PropFormula::Bot,
                _ => b.clone(),
            }
        }
        PropFormula::Top | PropFormula::Bot => b.clone(),
        PropFormula::And(cs) | PropFormula::Or(cs) => {
            let is_and = matches!(b, PropFormula::And(_));
            let (unit, zero) = if is_and { (PropFormula::Top, PropFormula::Bot) } else { (PropFormula::Bot, PropFormula::Top) };
            let mut kept = Vec::new();
            for c in cs {
                let c = fold_beta(c, d1, d2);
                if c == zero {
                    return zero;
                }
                if c == unit || kept.contains(&c) {
                    continue;
                }
                match (c, is_and) {
                    (PropFormula::And(inner), true) | (PropFormula::Or(inner), false) => {
                        for x in inner {
                            if !kept.contains(&x) {
                                kept.push(x);
                            }
                        }
                    }
                    (c, _) => kept.push(c),
                }
            }
            match kept.len() {
                0 => unit,
                1 => kept.pop().unwrap(),
                _ if is_and => PropFormula::And(kept),
                _ => PropFormula::Or(kept),
            }
        }
    }
}

fn collect_vars(b: &PropFormula, u1: &mut Vec<usize>, u2: &mut Vec<usize>) {
    match b {
        PropFormula::Var { index, side } => {
            let u = if *side == Side::Left { u1 } else { u2 };
            if !u.contains(index) {
                u.push(*index);
            }
        }
        PropFormula::And(cs) | PropFormula::Or(cs) => cs.iter().for_each(|c| collect_vars(c, u1, u2)),
        _ => {}
    }
}

fn reindex(b: &PropFormula, u1: &[usize], u2: &[usize]) -> PropFormula {
    match b {
        PropFormula::Var { index, side } => {
            let u = if *side == Side::Left { u1 } else { u2 };
            PropFormula::var(u.iter().position(|x| x == index).unwrap(), *side)
        }
        PropFormula::And(cs) => PropFormula::And(cs.iter().map(|c| reindex(c, u1, u2)).collect()),
        PropFormula::Or(cs) => PropFormula::Or(cs.iter().map(|c| reindex(c, u1, u2)).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests;
