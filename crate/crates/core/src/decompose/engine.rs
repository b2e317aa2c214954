use std::collections::HashMap;

use crate::formula::{classify, Formula, Literal, Pred, Var, Vocabulary};
use crate::structure::ANNOTATION;
use crate::Mode;

use super::normalize::{pair_beta, to_pairs};
use super::{simplify_reduction, DecomposeError, DecomposeOptions, PropFormula, ReductionSequence, Side, VarPartition};

/// Result shape requested from a subformula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Want {
    Pairs(Mode),
    Any,
}

/// Intermediate result: either an arbitrary combiner over factor lists or
/// a pair list in normal form.
#[derive(Clone)]
enum Partial {
    Raw { d1: Vec<Formula>, d2: Vec<Formula>, beta: PropFormula },
    Pairs { mode: Mode, pairs: Vec<(Formula, Formula)> },
}

impl Partial {
    fn constant(value: bool) -> Self {
        Partial::Raw { d1: vec![], d2: vec![], beta: if value { PropFormula::Top } else { PropFormula::Bot } }
    }

    fn into_raw(self) -> (Vec<Formula>, Vec<Formula>, PropFormula) {
        match self {
            Partial::Raw { d1, d2, beta } => (d1, d2, beta),
            Partial::Pairs { mode, pairs } => {
                let beta = pair_beta(mode, pairs.len());
                let (d1, d2) = pairs.into_iter().unzip();
                (d1, d2, beta)
            }
        }
    }
}

struct Engine {
    opts: DecomposeOptions,
    sides: HashMap<Var, Side>,
    memo: HashMap<(usize, Vec<Side>, Want), Partial>,
    free: HashMap<usize, Vec<Var>>,
}

fn node_id(f: &Formula) -> usize {
    f as *const Formula as usize
}

impl Engine {
    fn side_of(&self, v: &Var) -> Side {
        self.sides[v]
    }

    fn run(&mut self, f: &Formula, want: Want) -> Result<Partial, DecomposeError> {
        if f.is_quantifier_free() {
            let raw = self.quantifier_free(f);
            return self.finish(raw, want);
        }
        let key = if self.opts.memoize {
            let free = self.free.entry(node_id(f)).or_insert_with(|| f.free_variables());
            let sides = free.iter().map(|v| self.sides[v]).collect();
            let key = (node_id(f), sides, want);
            if let Some(hit) = self.memo.get(&key) {
                return Ok(hit.clone());
            }
            Some(key)
        } else {
            None
        };
        let out = self.quantified(f, want)?;
        if let Some(key) = key {
            self.memo.insert(key, out.clone());
        }
        Ok(out)
    }

    fn quantified(&mut self, f: &Formula, want: Want) -> Result<Partial, DecomposeError> {
        match f {
            Formula::Exists(z, g) | Formula::Forall(z, g) => {
                // Split on which operand the quantified element lies in; each
                // view yields pairs of the quantifier's own mode, and the
                // quantifier moves onto the factor of that side.
                let mode = if matches!(f, Formula::Exists(..)) { Mode::Sigma } else { Mode::Pi };
                let mut pairs = Vec::new();
                for side in [Side::Left, Side::Right] {
                    let prev = self.sides.insert(z.clone(), side);
                    let view = self.run(g, Want::Pairs(mode));
                    match prev {
                        Some(p) => self.sides.insert(z.clone(), p),
                        None => self.sides.remove(z),
                    };
                    let Partial::Pairs { pairs: view, .. } = view? else { unreachable!("pair form requested") };
                    for (p1, p2) in view {
                        let bind = |body: Formula| match mode {
                            Mode::Sigma => Formula::Exists(z.clone(), Box::new(body)),
                            Mode::Pi => Formula::Forall(z.clone(), Box::new(body)),
                        };
                        pairs.push(match side {
                            Side::Left => (bind(p1), p2),
                            Side::Right => (p1, bind(p2)),
                        });
                    }
                }
                self.finish(Partial::Pairs { mode, pairs }, want)
            }
            Formula::And(cs) | Formula::Or(cs) => {
                // Children are brought to the connective's dual pair form (a
                // conjunction of universal-mode systems is again one), then
                // the combined system is redistributed if the other mode is
                // wanted.
                let natural = if matches!(f, Formula::And(_)) { Mode::Pi } else { Mode::Sigma };
                let mut d1 = Vec::new();
                let mut d2 = Vec::new();
                let mut betas = Vec::with_capacity(cs.len());
                for c in cs {
                    let child_want = if c.is_quantifier_free() { Want::Any } else { Want::Pairs(natural) };
                    let (c1, c2, b) = self.run(c, child_want)?.into_raw();
                    betas.push(b.shifted(d1.len(), d2.len()));
                    d1.extend(c1);
                    d2.extend(c2);
                }
                let beta = if natural == Mode::Pi { PropFormula::And(betas) } else { PropFormula::Or(betas) };
                let target = match want {
                    Want::Pairs(m) => m,
                    Want::Any => natural,
                };
                let pairs = to_pairs(&d1, &d2, &beta, target, self.opts.max_pairs)?;
                Ok(Partial::Pairs { mode: target, pairs })
            }
            _ => unreachable!("quantifier-free handled by caller"),
        }
    }

    fn finish(&self, p: Partial, want: Want) -> Result<Partial, DecomposeError> {
        match (want, &p) {
            (Want::Any, _) => Ok(p),
            (Want::Pairs(m), Partial::Pairs { mode, .. }) if *mode == m => Ok(p),
            (Want::Pairs(m), _) => {
                let (d1, d2, beta) = p.into_raw();
                Ok(Partial::Pairs { mode: m, pairs: to_pairs(&d1, &d2, &beta, m, self.opts.max_pairs)? })
            }
        }
    }

    fn quantifier_free(&self, f: &Formula) -> Partial {
        match f {
            Formula::Top => Partial::constant(true),
            Formula::Bot => Partial::constant(false),
            Formula::Lit(l) => self.literal(l),
            Formula::And(cs) | Formula::Or(cs) => {
                let mut d1 = Vec::new();
                let mut d2 = Vec::new();
                let mut betas = Vec::with_capacity(cs.len());
                for c in cs {
                    let (c1, c2, b) = self.quantifier_free(c).into_raw();
                    betas.push(b.shifted(d1.len(), d2.len()));
                    d1.extend(c1);
                    d2.extend(c2);
                }
                let beta = if matches!(f, Formula::And(_)) { PropFormula::And(betas) } else { PropFormula::Or(betas) };
                Partial::Raw { d1, d2, beta }
            }
            Formula::Exists(..) | Formula::Forall(..) => unreachable!("quantifier-free input"),
        }
    }

    fn literal(&self, l: &Literal) -> Partial {
        if l.pred == Pred::Rel(ANNOTATION.to_string()) {
            // The marker holds exactly on the left operand.
            let on_left = self.side_of(&l.args[0]) == Side::Left;
            return Partial::constant(on_left == l.positive);
        }
        let first = self.side_of(&l.args[0]);
        if l.args.iter().any(|a| self.side_of(a) != first) {
            // No relation or equality holds across the two operands.
            return Partial::constant(!l.positive);
        }
        let atom = Formula::Lit(l.clone());
        let (d1, d2) = match first {
            Side::Left => (vec![atom], vec![Formula::Top]),
            Side::Right => (vec![Formula::Top], vec![atom]),
        };
        Partial::Raw { d1, d2, beta: PropFormula::pair_and(0) }
    }
}

/// Reduction sequence for `f` over the annotated disjoint union of two
/// structures over `vocab` (the marker relation is implied and may be
/// present in `vocab` or not).
///
/// Quantifier-free input keeps the combiner produced by structural
/// recursion. Otherwise the combiner is in pair normal form of the side of
/// the hierarchy where `f` sits lowest (existential on ties).
pub fn decompose(
    f: &Formula,
    vocab: &Vocabulary,
    part: &VarPartition,
    opts: &DecomposeOptions,
) -> Result<ReductionSequence, DecomposeError> {
    let tau = vocab.without(ANNOTATION);
    f.check_vocabulary(&tau.with(ANNOTATION, 1)?)?;
    part.validate(f)?;
    let f = f.alpha_normalize();
    let mut sides = HashMap::new();
    for v in &part.left {
        sides.insert(v.clone(), Side::Left);
    }
    for v in &part.right {
        sides.insert(v.clone(), Side::Right);
    }
    let mut engine = Engine { opts: *opts, sides, memo: HashMap::new(), free: HashMap::new() };
    let want = if f.is_quantifier_free() {
        Want::Any
    } else {
        let c = classify(&f);
        Want::Pairs(if c.sigma_level <= c.pi_level { Mode::Sigma } else { Mode::Pi })
    };
    let (delta1, delta2, beta) = engine.run(&f, want)?.into_raw();
    // Grouping can repeat binder names across conjuncts; factors are
    // returned alpha-normalized like every other formula.
    let delta1 = delta1.iter().map(Formula::alpha_normalize).collect();
    let delta2 = delta2.iter().map(Formula::alpha_normalize).collect();
    let d = ReductionSequence { delta1, delta2, beta, partition: part.clone(), vocab: tau };
    Ok(if opts.simplify { simplify_reduction(&d) } else { d })
}
