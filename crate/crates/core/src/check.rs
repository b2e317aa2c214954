//! Brute-force cross-checks of decompositions against direct evaluation on
//! the composite structure, shared by the test suites and the command line.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, decompose_over_op, DecomposeError, DecomposeOptions, ReductionSequence, SideTable, VarPartition};
use crate::formula::{classify, parse_formula, print_formula, Formula, RandomFormulaSpec, Var, Vocabulary};
use crate::interp::{apply_sum_like, builtin, BuiltinOp, SumLikeOp};
use crate::modelcheck::Compiled;
use crate::par::{self, ExecMode};
use crate::structure::{annotated_disjoint_union, Structure, ANNOTATION};
use crate::Mode;

/// How two operands are combined.
#[derive(Clone, Debug)]
pub enum Composition {
    /// Disjoint union with the left-operand marker; formulas may use it.
    Annotated,
    /// A sum-like operation; formulas are over the operand vocabulary.
    Op(BuiltinOp, SumLikeOp),
}

impl Composition {
    pub fn builtin(op: BuiltinOp, tau: &Vocabulary) -> Result<Self, DecomposeError> {
        let sum = builtin(&op, tau)?;
        Ok(Composition::Op(op, sum))
    }

    /// Vocabulary formulas are written over, given the operand vocabulary.
    pub fn formula_vocab(&self, tau: &Vocabulary) -> Result<Vocabulary, DecomposeError> {
        Ok(match self {
            Composition::Annotated => tau.with(ANNOTATION, 1)?,
            Composition::Op(..) => tau.clone(),
        })
    }

    pub fn apply(&self, a: &Structure, b: &Structure) -> Result<Structure, DecomposeError> {
        Ok(match self {
            Composition::Annotated => annotated_disjoint_union(a, b)?,
            Composition::Op(_, op) => apply_sum_like(op, a, b)?,
        })
    }

    pub fn decompose(&self, f: &Formula, tau: &Vocabulary, part: &VarPartition, opts: &DecomposeOptions) -> Result<ReductionSequence, DecomposeError> {
        match self {
            Composition::Annotated => decompose(f, tau, part, opts),
            Composition::Op(_, op) => decompose_over_op(f, op, part, opts),
        }
    }

    fn builtin_op(&self) -> Option<BuiltinOp> {
        match self {
            Composition::Annotated => None,
            Composition::Op(op, _) => Some(op.clone()),
        }
    }
}

/// Structures and the operand pairs to test, with composites built once.
pub struct Grid {
    pub structures: Vec<Structure>,
    pub pairs: Vec<(usize, usize)>,
    composites: Vec<Structure>,
}

impl Grid {
    /// Every ordered pair of `structures`.
    pub fn all_pairs(structures: Vec<Structure>, comp: &Composition) -> Result<Self, DecomposeError> {
        let n = structures.len();
        let pairs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Self::new(structures, pairs, comp)
    }

    /// Every ordered pair when there are at most `max_pairs` of them,
    /// otherwise `max_pairs` distinct pairs drawn with `seed`, in sorted
    /// order.
    pub fn sampled(structures: Vec<Structure>, max_pairs: usize, seed: u64, comp: &Composition) -> Result<Self, DecomposeError> {
        let n = structures.len();
        if n.saturating_mul(n) <= max_pairs {
            return Self::all_pairs(structures, comp);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = BTreeSet::new();
        while picked.len() < max_pairs {
            picked.insert((rng.gen_range(0..n), rng.gen_range(0..n)));
        }
        Self::new(structures, picked.into_iter().collect(), comp)
    }

    pub fn new(structures: Vec<Structure>, pairs: Vec<(usize, usize)>, comp: &Composition) -> Result<Self, DecomposeError> {
        let composites = pairs.iter().map(|&(i, j)| comp.apply(&structures[i], &structures[j])).collect::<Result<_, _>>()?;
        Ok(Grid { structures, pairs, composites })
    }

    /// Number of (pair, assignment) cases for a partition.
    pub fn cases(&self, part: &VarPartition) -> u64 {
        self.pairs
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (&self.structures[i], &self.structures[j]);
                (a.size().pow(part.left.len() as u32) * b.size().pow(part.right.len() as u32)) as u64
            })
            .sum()
    }
}

/// A self-contained failing case: replaying it recomputes both verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub formula: String,
    pub op: Option<BuiltinOp>,
    pub partition: VarPartition,
    pub left: serde_json::Value,
    pub right: serde_json::Value,
    pub left_tuple: Vec<String>,
    pub right_tuple: Vec<String>,
    pub direct: bool,
    pub via_decomposition: bool,
}

impl Counterexample {
    /// Recomputes `(direct, via_decomposition)` from the bundle alone.
    pub fn replay(&self) -> Result<(bool, bool), DecomposeError> {
        let bad = |e: String| DecomposeError::Malformed(e);
        let a = Structure::from_json(&self.left.to_string())?;
        let b = Structure::from_json(&self.right.to_string())?;
        let tau = a.vocab().clone();
        let comp = match &self.op {
            None => Composition::Annotated,
            Some(op) => Composition::builtin(op.clone(), &tau)?,
        };
        let f = parse_formula(&self.formula, &comp.formula_vocab(&tau)?)?;
        let d = comp.decompose(&f, &tau, &self.partition, &DecomposeOptions::default())?;
        let t1 = a.resolve(&self.left_tuple)?;
        let t2 = b.resolve(&self.right_tuple)?;
        let c = comp.apply(&a, &b)?;
        let merged = merged_positions(&c, &a, &t1, &b, &t2).ok_or_else(|| bad("assigned element not in the composite".into()))?;
        let vars: Vec<Var> = self.partition.left.iter().chain(&self.partition.right).cloned().collect();
        let direct = Compiled::new(&c, &f, &vars)?.eval(&merged)?;
        let via = crate::decompose::eval_reduction(&d, &a, &b, &t1, &t2)?;
        Ok((direct, via))
    }
}

/// Positions in the composite of the left and right assigned elements, or
/// `None` if one was dropped by the operation.
fn merged_positions(c: &Structure, a: &Structure, t1: &[usize], b: &Structure, t2: &[usize]) -> Option<Vec<usize>> {
    let left = t1.iter().map(|&e| c.position(&format!("L:{}", a.element(e))));
    let right = t2.iter().map(|&e| c.position(&format!("R:{}", b.element(e))));
    left.chain(right).collect()
}

fn decode(mut code: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

/// Compares direct evaluation of `f` on every composite of the grid, under
/// every assignment, with the verdict of `d`. Returns the number of cases
/// and the first mismatch in (pair, assignment) order.
pub fn check_on_grid(f: &Formula, comp: &Composition, d: &ReductionSequence, grid: &Grid) -> Result<(u64, Option<Counterexample>), DecomposeError> {
    let part = &d.partition;
    let vars: Vec<Var> = part.left.iter().chain(&part.right).cloned().collect();
    let mut left_tables: Vec<Option<SideTable>> = vec![None; grid.structures.len()];
    let mut right_tables: Vec<Option<SideTable>> = vec![None; grid.structures.len()];
    let mut cases = 0;
    for (p, &(i, j)) in grid.pairs.iter().enumerate() {
        let (a, b) = (&grid.structures[i], &grid.structures[j]);
        if left_tables[i].is_none() {
            left_tables[i] = Some(SideTable::build(&d.delta1, &part.left, a)?);
        }
        if right_tables[j].is_none() {
            right_tables[j] = Some(SideTable::build(&d.delta2, &part.right, b)?);
        }
        let (t1, t2) = (left_tables[i].as_ref().unwrap(), right_tables[j].as_ref().unwrap());
        let c = &grid.composites[p];
        let compiled = Compiled::new(c, f, &vars)?;
        let mut v1 = vec![0; part.left.len()];
        let mut v2 = vec![0; part.right.len()];
        for c1 in 0..t1.len() {
            decode(c1, a.size(), &mut v1);
            for c2 in 0..t2.len() {
                decode(c2, b.size(), &mut v2);
                let Some(merged) = merged_positions(c, a, &v1, b, &v2) else { continue };
                cases += 1;
                let direct = compiled.eval(&merged)?;
                let via = d.beta.eval(t1.row_by_code(c1), t2.row_by_code(c2));
                if direct != via {
                    let ids = |s: &Structure, v: &[usize]| v.iter().map(|&e| s.element(e).to_string()).collect();
                    return Ok((
                        cases,
                        Some(Counterexample {
                            formula: print_formula(f),
                            op: comp.builtin_op(),
                            partition: part.clone(),
                            left: a.to_json_value(),
                            right: b.to_json_value(),
                            left_tuple: ids(a, &v1),
                            right_tuple: ids(b, &v2),
                            direct,
                            via_decomposition: via,
                        }),
                    ));
                }
            }
        }
    }
    Ok((cases, None))
}

/// Mode the decomposition of `f` is normalized to, or `None` if `f` is
/// quantifier-free.
pub fn top_mode(f: &Formula) -> Option<Mode> {
    if f.is_quantifier_free() {
        return None;
    }
    let c = classify(f);
    Some(if c.sigma_level <= c.pi_level { Mode::Sigma } else { Mode::Pi })
}

/// Checks that every factor stays within the input's class and rank and
/// that the combiner is in pair normal form of the input's mode.
pub fn check_factor_discipline(f: &Formula, d: &ReductionSequence) -> Result<(), String> {
    let rank = f.rank();
    let factors = d.delta1.iter().chain(&d.delta2);
    match top_mode(f) {
        None => {
            if let Some(g) = factors.clone().find(|g| !g.is_quantifier_free()) {
                return Err(format!("factor {g} of a quantifier-free input has quantifiers"));
            }
        }
        Some(mode) => {
            let level = classify(f).level(mode);
            for g in factors.clone() {
                let c = classify(g);
                if c.level(mode) > level || c.rank > rank {
                    return Err(format!("factor {g} has level {} rank {} above {level}/{rank}", c.level(mode), c.rank));
                }
            }
            match d.pair_form() {
                Some((m, _)) if m == mode => {}
                other => return Err(format!("combiner not in {mode:?} pair form: {other:?}")),
            }
        }
    }
    if let Some(g) = factors.into_iter().find(|g| g.rank() > rank) {
        return Err(format!("factor {g} exceeds rank {rank}"));
    }
    Ok(())
}

/// Parameters of a seeded random formula suite.
#[derive(Clone, Debug)]
pub struct SuiteSpec {
    /// Fixed leading quantifier kind; alternates when unset.
    pub mode: Option<Mode>,
    /// Fixed level; cycles through `0..=max_level` when unset.
    pub level: Option<usize>,
    pub max_level: usize,
    pub rank: usize,
    pub fanout: usize,
    pub count: usize,
    pub seed: u64,
    /// Draws whose decomposition is larger than this are replaced.
    pub max_total_size: usize,
    pub max_pairs: usize,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            mode: None,
            level: None,
            max_level: 2,
            rank: 3,
            fanout: 3,
            count: 500,
            seed: 0,
            max_total_size: 4096,
            max_pairs: 1024,
        }
    }
}

impl SuiteSpec {
    /// Parses `sigma,n=2,m=3` style specifications (fields optional).
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut spec = SuiteSpec::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                None => spec.mode = Some(part.parse()?),
                Some((k, v)) => {
                    let v: usize = v.trim().parse().map_err(|_| format!("`{part}`: expected a number"))?;
                    match k.trim() {
                        "n" => spec.level = Some(v),
                        "m" => spec.rank = v,
                        "fanout" => spec.fanout = v,
                        other => return Err(format!("unknown field `{other}`")),
                    }
                }
            }
        }
        Ok(spec)
    }
}

/// One drawn formula with its decomposition.
#[derive(Clone, Debug)]
pub struct SuiteCase {
    pub index: u64,
    pub formula: Formula,
    pub partition: VarPartition,
    pub reduction: ReductionSequence,
}

/// Free-variable split for draw `index`: none, left only, right only, or
/// one on each side.
fn partition_for(index: u64) -> VarPartition {
    let (u, v) = (Var::from("u"), Var::from("v"));
    match index / 6 % 4 {
        0 => VarPartition::sentence(),
        1 => VarPartition::new(vec![u], vec![]),
        2 => VarPartition::new(vec![], vec![v]),
        _ => VarPartition::new(vec![u], vec![v]),
    }
}

/// Draws formulas until `spec.count` have decompositions within the size
/// budget. Returns the accepted cases and the number of rejected draws.
pub fn draw_suite(spec: &SuiteSpec, tau: &Vocabulary, comp: &Composition) -> Result<(Vec<SuiteCase>, usize), DecomposeError> {
    let vocab = comp.formula_vocab(tau)?;
    let opts = DecomposeOptions { max_pairs: spec.max_pairs, ..Default::default() };
    let mut cases = Vec::with_capacity(spec.count);
    let mut rejected = 0;
    let mut index = 0u64;
    while cases.len() < spec.count {
        if rejected > 20 * spec.count.max(10) {
            return Err(DecomposeError::Malformed("too many oversized draws; loosen the size budget".into()));
        }
        let mode = spec.mode.unwrap_or(if index.is_multiple_of(2) { Mode::Sigma } else { Mode::Pi });
        let level = spec.level.unwrap_or((index / 2 % (spec.max_level as u64 + 1)) as usize);
        let part = partition_for(index);
        let free: Vec<Var> = part.left.iter().chain(&part.right).cloned().collect();
        let gen = RandomFormulaSpec::new(mode, level, spec.rank, spec.fanout);
        let seed = spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index);
        let f = gen.generate(&vocab, &free, seed)?;
        index += 1;
        match comp.decompose(&f, tau, &part, &opts) {
            Ok(d) if d.stats().total_size <= spec.max_total_size => {
                cases.push(SuiteCase { index: index - 1, formula: f, partition: part, reduction: d })
            }
            Ok(_) | Err(DecomposeError::TooLarge { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((cases, rejected))
}

/// Result of checking a suite.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub formulas: usize,
    pub cases: u64,
    /// First failure in suite order.
    pub counterexample: Option<Counterexample>,
    pub discipline_failures: Vec<String>,
}

/// Runs [`check_on_grid`] and [`check_factor_discipline`] on every case.
/// Cases may run in parallel; the reported failure is the first by index.
pub fn check_suite(cases: &[SuiteCase], comp: &Composition, grid: &Grid, exec: ExecMode) -> Result<SuiteReport, DecomposeError> {
    let results = par::map_slice(exec, cases, |c| {
        let checked = check_on_grid(&c.formula, comp, &c.reduction, grid);
        let discipline = check_factor_discipline(&c.formula, &c.reduction).map_err(|e| format!("{}: {e}", print_formula(&c.formula)));
        (checked, discipline)
    });
    let mut report = SuiteReport { formulas: cases.len(), ..Default::default() };
    for (checked, discipline) in results {
        let (n, cx) = checked?;
        report.cases += n;
        if report.counterexample.is_none() {
            report.counterexample = cx;
        }
        if let Err(e) = discipline {
            report.discipline_failures.push(e);
        }
    }
    Ok(report)
}
