use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Formula, FormulaError, Literal, Pred, Var, Vocabulary};
use crate::Mode;

/// Knobs for [`random_formula`]. The defaults keep quantifier-free parts
/// shallow so that decompositions of the output stay small.
#[derive(Clone, Debug)]
pub struct RandomFormulaSpec {
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub max_fanout: usize,
    /// Longest quantifier block emitted at once.
    pub max_block: usize,
    /// Nesting depth of connectives inside quantifier-free parts.
    pub qf_depth: usize,
    /// Chance of stopping early with a quantifier-free subformula.
    pub stop_prob: f64,
}

impl RandomFormulaSpec {
    pub fn new(mode: Mode, n: usize, m: usize, max_fanout: usize) -> Self {
        RandomFormulaSpec { mode, n, m, max_fanout, max_block: 2, qf_depth: 1, stop_prob: 0.2 }
    }

    pub fn generate(&self, vocab: &Vocabulary, free_vars: &[Var], seed: u64) -> Result<Formula, FormulaError> {
        if self.max_fanout == 0 {
            return Err(FormulaError::Generator("max_fanout must be at least 1".into()));
        }
        if vocab.is_empty() && self.m > 0 {
            return Err(FormulaError::Generator("empty vocabulary leaves no atoms to quantify over".into()));
        }
        let mut g = Gen {
            spec: self,
            rels: vocab.iter().map(|(r, a)| (r.to_string(), a)).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            counter: 0,
            reserved: free_vars.to_vec(),
        };
        let mut scope = free_vars.to_vec();
        Ok(g.formula(self.mode, self.n, self.m, &mut scope, true))
    }
}

/// Seeded generator for formulas with the given class bound, rank bound,
/// free variables and connective fanout.
pub fn random_formula(
    mode: Mode,
    n: usize,
    m: usize,
    vocab: &Vocabulary,
    free_vars: &[Var],
    max_fanout: usize,
    seed: u64,
) -> Result<Formula, FormulaError> {
    RandomFormulaSpec::new(mode, n, m, max_fanout).generate(vocab, free_vars, seed)
}

struct Gen<'s> {
    spec: &'s RandomFormulaSpec,
    rels: Vec<(String, usize)>,
    rng: ChaCha8Rng,
    counter: usize,
    reserved: Vec<Var>,
}

fn connective(mode: Mode, mut children: Vec<Formula>) -> Formula {
    match children.len() {
        0 => match mode {
            Mode::Sigma => Formula::Top,
            Mode::Pi => Formula::Bot,
        },
        1 => children.pop().unwrap(),
        _ => match mode {
            Mode::Sigma => Formula::And(children),
            Mode::Pi => Formula::Or(children),
        },
    }
}

impl Gen<'_> {
    fn fresh(&mut self) -> Var {
        loop {
            let v = Var::new(format!("v{}", self.counter));
            self.counter += 1;
            if !self.reserved.contains(&v) {
                return v;
            }
        }
    }

    fn fanout(&mut self) -> usize {
        if self.spec.max_fanout < 2 {
            1
        } else {
            self.rng.gen_range(2..=self.spec.max_fanout)
        }
    }

    /// A formula in the `mode` class at `level` with rank at most `budget`.
    /// Existential mode is described; universal mode swaps the roles.
    fn formula(&mut self, mode: Mode, level: usize, budget: usize, scope: &mut Vec<Var>, top: bool) -> Formula {
        let stop = !top && self.rng.gen_bool(self.spec.stop_prob);
        if level == 0 || budget == 0 || stop {
            let depth = if level == 0 || budget == 0 { self.spec.qf_depth + usize::from(top) } else { self.spec.qf_depth };
            return self.qf(scope, depth);
        }
        let dual = mode.dual();
        let roll: f64 = self.rng.gen();
        if roll < 0.55 || (roll >= 0.8 && level < 2) {
            let len = self.rng.gen_range(1..=budget.min(self.spec.max_block.max(1)));
            let vars: Vec<Var> = (0..len).map(|_| self.fresh()).collect();
            scope.extend(vars.iter().cloned());
            let width = if self.rng.gen_bool(0.5) { self.fanout() } else { 1 };
            let children = (0..width).map(|_| self.formula(dual, level - 1, budget - len, scope, false)).collect();
            let mut body = connective(mode, children);
            scope.truncate(scope.len() - len);
            for v in vars.into_iter().rev() {
                body = match mode {
                    Mode::Sigma => Formula::Exists(v, Box::new(body)),
                    Mode::Pi => Formula::Forall(v, Box::new(body)),
                };
            }
            body
        } else if roll < 0.8 {
            let width = self.fanout();
            let children = (0..width).map(|_| self.formula(dual, level - 1, budget, scope, false)).collect();
            connective(mode, children)
        } else {
            let width = self.fanout();
            let children = (0..width).map(|_| self.formula(mode, level - 2, budget, scope, false)).collect();
            connective(dual, children)
        }
    }

    fn qf(&mut self, scope: &[Var], depth: usize) -> Formula {
        if scope.is_empty() {
            return if self.rng.gen_bool(0.5) { Formula::Top } else { Formula::Bot };
        }
        if depth > 0 && self.spec.max_fanout >= 2 && self.rng.gen_bool(0.4) {
            let width = self.fanout();
            let children = (0..width).map(|_| self.qf(scope, depth - 1)).collect();
            return if self.rng.gen_bool(0.5) { Formula::And(children) } else { Formula::Or(children) };
        }
        if self.rng.gen_bool(0.04) {
            return if self.rng.gen_bool(0.5) { Formula::Top } else { Formula::Bot };
        }
        let (pred, arity) = if self.rels.is_empty() || self.rng.gen_bool(0.15) {
            (Pred::Eq, 2)
        } else {
            let (r, a) = &self.rels[self.rng.gen_range(0..self.rels.len())];
            (Pred::Rel(r.clone()), *a)
        };
        let args = (0..arity).map(|_| scope[self.rng.gen_range(0..scope.len())].clone()).collect();
        Formula::Lit(Literal { positive: self.rng.gen_bool(0.6), pred, args })
    }
}
