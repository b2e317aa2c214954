use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::formula::{Formula, Literal, Pred, Var};
use crate::Mode;

use super::{Caps, EnumError, TestBed};

/// One semantic class: the rows of a bed where some formula holds, with a
/// formula witnessing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticClass {
    pub bits: FixedBitSet,
    pub representative: Formula,
}

/// Partition of a bed's rows by the literals they satisfy.
#[derive(Debug)]
pub(crate) struct Algebra {
    pub(crate) cell_of_row: Vec<usize>,
    pub(crate) cells: Vec<FixedBitSet>,
    cell_formulas: Vec<Formula>,
}

impl Algebra {
    pub(crate) fn new(bed: &TestBed) -> Self {
        let vars = bed.vars();
        let c = vars.len();
        let vocab = bed.structures()[0].vocab();
        // Atoms as (relation or None for equality, argument indices).
        let mut atoms: Vec<(Option<String>, Vec<usize>)> = Vec::new();
        for (rel, arity) in vocab.iter() {
            for code in 0..c.pow(arity as u32) {
                let mut args = vec![0; arity];
                let mut x = code;
                for slot in args.iter_mut().rev() {
                    *slot = x % c;
                    x /= c;
                }
                atoms.push((Some(rel.to_string()), args));
            }
        }
        for i in 0..c {
            for j in i + 1..c {
                atoms.push((None, vec![i, j]));
            }
        }
        let mut keys: Vec<Vec<bool>> = Vec::new();
        let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut cell_of_row = Vec::with_capacity(bed.len());
        let mut buf = Vec::new();
        for row in 0..bed.len() {
            let (s, asg) = bed.decode_row(row);
            let st = &bed.structures()[s];
            let key: Vec<bool> = atoms
                .iter()
                .map(|(rel, args)| {
                    buf.clear();
                    buf.extend(args.iter().map(|&i| asg[i]));
                    match rel {
                        Some(r) => st.holds(r, &buf),
                        None => buf[0] == buf[1],
                    }
                })
                .collect();
            let next = keys.len();
            let cell = *index.entry(key.clone()).or_insert(next);
            if cell == next {
                keys.push(key);
            }
            cell_of_row.push(cell);
        }
        let mut cells = vec![FixedBitSet::with_capacity(bed.len()); keys.len()];
        for (row, &cell) in cell_of_row.iter().enumerate() {
            cells[cell].insert(row);
        }
        // Literals constant over the whole bed do not separate cells.
        let varying: Vec<usize> = (0..atoms.len()).filter(|&a| keys.iter().any(|k| k[a] != keys[0][a])).collect();
        let cell_formulas = keys
            .iter()
            .map(|key| {
                Formula::and(
                    varying
                        .iter()
                        .map(|&a| {
                            let (rel, args) = &atoms[a];
                            let pred = match rel {
                                Some(r) => Pred::Rel(r.clone()),
                                None => Pred::Eq,
                            };
                            let lit = Literal::atom(pred, args.iter().map(|&i| vars[i].clone()).collect());
                            Formula::Lit(if key[a] { lit } else { lit.negated() })
                        })
                        .collect(),
                )
            })
            .collect();
        Algebra { cell_of_row, cells, cell_formulas }
    }

    fn rows_of(&self, cells: &FixedBitSet, rows: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(rows);
        for c in cells.ones() {
            out.union_with(&self.cells[c]);
        }
        out
    }
}

/// How to build a class's representative. Shared subrecipes keep memory
/// proportional to the number of classes.
#[derive(Debug)]
pub(crate) enum Recipe {
    Cells(Arc<Algebra>, FixedBitSet),
    Block(Mode, Arc<Vec<Var>>, Arc<Recipe>),
    Combine(Mode, Arc<Recipe>, Arc<Recipe>),
}

impl Recipe {
    pub(crate) fn build(&self) -> Formula {
        match self {
            Recipe::Cells(alg, cells) => {
                if cells.count_ones(..) == alg.cells.len() {
                    Formula::Top
                } else {
                    Formula::or(cells.ones().map(|c| alg.cell_formulas[c].clone()).collect())
                }
            }
            Recipe::Block(mode, vars, body) => vars.iter().rev().fold(body.build(), |f, v| match mode {
                Mode::Sigma => Formula::exists(v.clone(), f),
                Mode::Pi => Formula::forall(v.clone(), f),
            }),
            Recipe::Combine(Mode::Sigma, a, b) => Formula::and(vec![a.build(), b.build()]),
            Recipe::Combine(Mode::Pi, a, b) => Formula::or(vec![a.build(), b.build()]),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Class {
    pub(crate) bits: FixedBitSet,
    pub(crate) recipe: Arc<Recipe>,
}

/// A set of classes over one bed. The quantifier-free level is kept as its
/// generating partition instead of all unions of cells.
#[derive(Clone, Debug)]
pub(crate) enum Family {
    Algebra(Arc<Algebra>),
    Explicit { classes: Vec<Class>, meet_closed: bool, join_closed: bool },
}

/// Shared work counter for one enumeration.
pub(crate) struct Budget {
    caps: Caps,
    iters: u64,
}

impl Budget {
    pub(crate) fn new(caps: Caps) -> Self {
        Budget { caps, iters: 0 }
    }

    fn tick(&mut self, n: u64) -> Result<(), EnumError> {
        self.iters += n;
        if self.iters > self.caps.max_iters {
            return Err(EnumError::CapExceeded(format!("more than {} set operations", self.caps.max_iters)));
        }
        Ok(())
    }

    fn check_classes(&self, n: usize) -> Result<(), EnumError> {
        if n > self.caps.max_classes {
            return Err(EnumError::CapExceeded(format!("more than {} classes", self.caps.max_classes)));
        }
        Ok(())
    }
}

/// Appends `c` unless its bits are already present.
fn push_new(out: &mut Vec<Class>, seen: &mut HashSet<FixedBitSet>, c: Class, budget: &Budget) -> Result<(), EnumError> {
    if seen.insert(c.bits.clone()) {
        out.push(c);
        budget.check_classes(out.len())?;
    }
    Ok(())
}

impl Family {
    /// Closure under conjunction (`Sigma`) or disjunction (`Pi`).
    pub(crate) fn close(self, op: Mode, budget: &mut Budget) -> Result<Family, EnumError> {
        let (gens, meet_closed, join_closed) = match self {
            Family::Algebra(_) => return Ok(self),
            Family::Explicit { classes, meet_closed, join_closed } => (classes, meet_closed, join_closed),
        };
        if (op == Mode::Sigma && meet_closed) || (op == Mode::Pi && join_closed) {
            return Ok(Family::Explicit { classes: gens, meet_closed, join_closed });
        }
        let mut out = gens.clone();
        let mut seen: HashSet<FixedBitSet> = out.iter().map(|c| c.bits.clone()).collect();
        let mut i = 0;
        while i < out.len() {
            budget.tick(gens.len() as u64)?;
            for g in &gens {
                let mut bits = out[i].bits.clone();
                match op {
                    Mode::Sigma => bits.intersect_with(&g.bits),
                    Mode::Pi => bits.union_with(&g.bits),
                }
                if !seen.contains(&bits) {
                    let recipe = Arc::new(Recipe::Combine(op, out[i].recipe.clone(), g.recipe.clone()));
                    push_new(&mut out, &mut seen, Class { bits, recipe }, budget)?;
                }
            }
            i += 1;
        }
        Ok(Family::Explicit { classes: out, meet_closed: op == Mode::Sigma, join_closed: op == Mode::Pi })
    }

    /// Applies an existential (`Sigma`) or universal (`Pi`) block over the
    /// variables `ext` adds to `bed`.
    pub(crate) fn project(
        &self,
        mode: Mode,
        bed: &TestBed,
        ext: &TestBed,
        vars: Vec<Var>,
        budget: &mut Budget,
    ) -> Result<Family, EnumError> {
        let k = vars.len();
        let vars = Arc::new(vars);
        let ranges: Vec<_> = (0..bed.len()).map(|r| bed.extensions(ext, k, r)).collect();
        match self {
            Family::Algebra(alg) => {
                // A universal block over a union S of cells holds at a row iff
                // all cells met by its extensions lie in S. The realizable row
                // sets are the closed sets of that operator; the existential
                // ones are their complements.
                let ncells = alg.cells.len();
                let met: Vec<FixedBitSet> = ranges
                    .iter()
                    .map(|range| {
                        let mut m = FixedBitSet::with_capacity(ncells);
                        for e in range.clone() {
                            m.insert(alg.cell_of_row[e]);
                        }
                        m
                    })
                    .collect();
                let closure = |s: &FixedBitSet| {
                    let mut r = FixedBitSet::with_capacity(bed.len());
                    for (row, m) in met.iter().enumerate() {
                        if m.is_subset(s) {
                            r.insert(row);
                        }
                    }
                    r
                };
                let empty = FixedBitSet::with_capacity(ncells);
                let mut sets = vec![(closure(&empty), empty)];
                let mut seen: HashSet<FixedBitSet> = sets.iter().map(|(r, _)| r.clone()).collect();
                let mut i = 0;
                while i < sets.len() {
                    budget.tick(bed.len() as u64 * bed.len() as u64)?;
                    for row in 0..bed.len() {
                        if sets[i].0.contains(row) {
                            continue;
                        }
                        let mut s = sets[i].1.clone();
                        s.union_with(&met[row]);
                        let r = closure(&s);
                        if seen.insert(r.clone()) {
                            sets.push((r, s));
                            budget.check_classes(sets.len())?;
                        }
                    }
                    i += 1;
                }
                let classes = sets
                    .into_iter()
                    .map(|(mut r, mut s)| {
                        if mode == Mode::Sigma {
                            r.toggle_range(..);
                            s.toggle_range(..);
                        }
                        let body = Arc::new(Recipe::Cells(alg.clone(), s));
                        Class { bits: r, recipe: Arc::new(Recipe::Block(mode, vars.clone(), body)) }
                    })
                    .collect();
                Ok(Family::Explicit { classes, meet_closed: mode == Mode::Pi, join_closed: mode == Mode::Sigma })
            }
            Family::Explicit { classes, meet_closed, join_closed } => {
                let mut out = Vec::new();
                let mut seen = HashSet::new();
                budget.tick(classes.len() as u64)?;
                for c in classes {
                    let mut bits = FixedBitSet::with_capacity(bed.len());
                    for (row, range) in ranges.iter().enumerate() {
                        let mut hits = range.clone().map(|e| c.bits.contains(e));
                        let holds = match mode {
                            Mode::Sigma => hits.any(|b| b),
                            Mode::Pi => hits.all(|b| b),
                        };
                        bits.set(row, holds);
                    }
                    let recipe = Arc::new(Recipe::Block(mode, vars.clone(), c.recipe.clone()));
                    push_new(&mut out, &mut seen, Class { bits, recipe }, budget)?;
                }
                Ok(Family::Explicit {
                    classes: out,
                    meet_closed: mode == Mode::Pi && *meet_closed,
                    join_closed: mode == Mode::Sigma && *join_closed,
                })
            }
        }
    }

    /// Every class, with all unions of cells listed for the algebra in
    /// binary counting order over cells.
    pub(crate) fn materialize(&self, rows: usize, budget: &Budget) -> Result<Vec<Class>, EnumError> {
        match self {
            Family::Explicit { classes, .. } => Ok(classes.clone()),
            Family::Algebra(alg) => {
                let n = alg.cells.len();
                if n >= usize::BITS as usize - 1 {
                    return Err(EnumError::CapExceeded(format!("2^{n} quantifier-free classes")));
                }
                budget.check_classes(1 << n)?;
                Ok((0..1usize << n)
                    .map(|code| {
                        let mut s = FixedBitSet::with_capacity(n);
                        for c in 0..n {
                            s.set(c, code >> c & 1 == 1);
                        }
                        Class { bits: alg.rows_of(&s, rows), recipe: Arc::new(Recipe::Cells(alg.clone(), s)) }
                    })
                    .collect())
            }
        }
    }

    /// Number of classes.
    pub(crate) fn count(&self, budget: &Budget) -> Result<usize, EnumError> {
        match self {
            Family::Explicit { classes, .. } => Ok(classes.len()),
            Family::Algebra(alg) => {
                let n = alg.cells.len();
                if n >= usize::BITS as usize - 1 {
                    return Err(EnumError::CapExceeded(format!("2^{n} quantifier-free classes")));
                }
                budget.check_classes(1 << n)?;
                Ok(1 << n)
            }
        }
    }

    /// First class (in enumeration order) holding at row `a` but not at `b`.
    pub(crate) fn separator(&self, a: usize, b: usize) -> Option<Arc<Recipe>> {
        match self {
            Family::Algebra(alg) => {
                let (ca, cb) = (alg.cell_of_row[a], alg.cell_of_row[b]);
                (ca != cb).then(|| {
                    let mut s = FixedBitSet::with_capacity(alg.cells.len());
                    s.insert(ca);
                    Arc::new(Recipe::Cells(alg.clone(), s))
                })
            }
            Family::Explicit { classes, .. } => {
                classes.iter().find(|c| c.bits.contains(a) && !c.bits.contains(b)).map(|c| c.recipe.clone())
            }
        }
    }
}

/// Classes of formulas with `n` alternation levels whose quantifier blocks
/// all have exactly `k` variables, led by `mode`.
pub(crate) fn block_family(mode: Mode, n: usize, k: usize, bed: &TestBed, budget: &mut Budget) -> Result<Family, EnumError> {
    if n == 0 {
        return Ok(Family::Algebra(Arc::new(Algebra::new(bed))));
    }
    if k == 0 {
        return Err(EnumError::EmptyBlock);
    }
    let (ext, vars) = bed.extend(k);
    let inner = block_family(mode.dual(), n - 1, k, &ext, budget)?;
    inner.close(mode, budget)?.project(mode, bed, &ext, vars, budget)
}

/// Classes of formulas with `n` alternation levels and quantifier rank at
/// most `m`, blocks of any length.
pub(crate) fn ranked_family(mode: Mode, n: usize, m: usize, bed: &TestBed, budget: &mut Budget) -> Result<Family, EnumError> {
    if n == 0 || m == 0 {
        return Ok(Family::Algebra(Arc::new(Algebra::new(bed))));
    }
    // Combinations of the level below without a leading block, then one
    // leading block of each length over them.
    let lower = ranked_family(mode.dual(), n - 1, m, bed, budget)?.close(mode, budget)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for c in lower.materialize(bed.len(), budget)? {
        push_new(&mut out, &mut seen, c, budget)?;
    }
    for j in 1..=m {
        let (ext, vars) = bed.extend(j);
        let body = ranked_family(mode.dual(), n - 1, m - j, &ext, budget)?.close(mode, budget)?;
        let projected = body.project(mode, bed, &ext, vars, budget)?;
        for c in projected.materialize(bed.len(), budget)? {
            push_new(&mut out, &mut seen, c, budget)?;
        }
    }
    Ok(Family::Explicit { classes: out, meet_closed: false, join_closed: false })
}

/// All classes of formulas with `n` alternation levels led by `mode` whose
/// quantifier blocks have exactly `k` variables, over the bed's context.
///
/// Level 0 lists every union of atomic-type cells (all quantifier-free
/// classes). Representatives are the first formula constructed for each
/// class; their bits are reproduced exactly by model checking.
pub fn enumerate_classes(mode: Mode, n: usize, k: usize, bed: &TestBed, caps: Caps) -> Result<Vec<SemanticClass>, EnumError> {
    let mut budget = Budget::new(caps);
    let family = block_family(mode, n, k, bed, &mut budget)?;
    Ok(family
        .materialize(bed.len(), &budget)?
        .into_iter()
        .map(|c| SemanticClass { representative: c.recipe.build(), bits: c.bits })
        .collect())
}
