//! Brute-force evaluation of formulas on finite structures.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::formula::{Formula, Pred, Var};
use crate::structure::{RelationHandle, Structure};

/// Default bound on atom checks per evaluation.
pub const DEFAULT_MAX_ATOM_CHECKS: u64 = 10_000_000;

/// Variable to element id.
pub type Assignment = BTreeMap<Var, String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable `{0}` is not assigned")]
    UnboundVariable(String),
    #[error("relation `{0}` is missing from the structure or has a different arity")]
    VocabularyMismatch(String),
    #[error("element `{0}` is not in the universe")]
    UnknownElement(String),
    #[error("evaluation exceeded {0} atom checks")]
    WorkCapExceeded(u64),
}

enum Node<'a> {
    Lit { positive: bool, rel: Option<RelationHandle<'a>>, args: Vec<usize> },
    Const(bool),
    And(Vec<Node<'a>>),
    Or(Vec<Node<'a>>),
    Exists(usize, Box<Node<'a>>),
    Forall(usize, Box<Node<'a>>),
}

/// A formula bound to a structure, with variables mapped to slots.
/// The first slots are the free variables in the order given at
/// construction time.
pub struct Compiled<'a> {
    root: Node<'a>,
    slots: usize,
    free: usize,
    n: usize,
    max_atom_checks: u64,
}

impl<'a> Compiled<'a> {
    /// Compiles `f` for `structure`. Every free variable of `f` must occur in
    /// `free_order`; extra entries are allowed.
    pub fn new(structure: &'a Structure, f: &Formula, free_order: &[Var]) -> Result<Self, EvalError> {
        let mut slot_of: HashMap<Var, usize> = HashMap::new();
        for (i, v) in free_order.iter().enumerate() {
            slot_of.entry(v.clone()).or_insert(i);
        }
        let mut next = free_order.len();
        let root = compile(structure, f, &mut slot_of, &mut next)?;
        Ok(Compiled { root, slots: next, free: free_order.len(), n: structure.size(), max_atom_checks: DEFAULT_MAX_ATOM_CHECKS })
    }

    pub fn with_cap(mut self, max_atom_checks: u64) -> Self {
        self.max_atom_checks = max_atom_checks;
        self
    }

    /// Evaluates with the free variables bound to the element positions in
    /// `values` (same order as at construction).
    pub fn eval(&self, values: &[usize]) -> Result<bool, EvalError> {
        assert_eq!(values.len(), self.free, "one value per free variable");
        let mut env = vec![0; self.slots];
        env[..self.free].copy_from_slice(values);
        let mut budget = self.max_atom_checks;
        self.go(&self.root, &mut env, &mut budget)
    }

    fn go(&self, node: &Node<'a>, env: &mut [usize], budget: &mut u64) -> Result<bool, EvalError> {
        Ok(match node {
            Node::Const(b) => *b,
            Node::Lit { positive, rel, args } => {
                if *budget == 0 {
                    return Err(EvalError::WorkCapExceeded(self.max_atom_checks));
                }
                *budget -= 1;
                let truth = match rel {
                    None => env[args[0]] == env[args[1]],
                    Some(h) => {
                        let mut buf = [0usize; 8];
                        if args.len() <= buf.len() {
                            for (k, &s) in args.iter().enumerate() {
                                buf[k] = env[s];
                            }
                            h.holds(&buf[..args.len()])
                        } else {
                            h.holds(&args.iter().map(|&s| env[s]).collect::<Vec<_>>())
                        }
                    }
                };
                truth == *positive
            }
            Node::And(cs) => {
                for c in cs {
                    if !self.go(c, env, budget)? {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Or(cs) => {
                for c in cs {
                    if self.go(c, env, budget)? {
                        return Ok(true);
                    }
                }
                false
            }
            Node::Exists(slot, body) => {
                for e in 0..self.n {
                    env[*slot] = e;
                    if self.go(body, env, budget)? {
                        return Ok(true);
                    }
                }
                false
            }
            Node::Forall(slot, body) => {
                for e in 0..self.n {
                    env[*slot] = e;
                    if !self.go(body, env, budget)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }
}

fn compile<'a>(
    a: &'a Structure,
    f: &Formula,
    slot_of: &mut HashMap<Var, usize>,
    next: &mut usize,
) -> Result<Node<'a>, EvalError> {
    Ok(match f {
        Formula::Top => Node::Const(true),
        Formula::Bot => Node::Const(false),
        Formula::Lit(l) => {
            let rel = match &l.pred {
                Pred::Eq => None,
                Pred::Rel(r) => {
                    if a.vocab().arity(r) != Some(l.args.len()) {
                        return Err(EvalError::VocabularyMismatch(r.clone()));
                    }
                    Some(a.relation_handle(r).expect("relation present"))
                }
            };
            let args = l
                .args
                .iter()
                .map(|v| slot_of.get(v).copied().ok_or_else(|| EvalError::UnboundVariable(v.to_string())))
                .collect::<Result<_, _>>()?;
            Node::Lit { positive: l.positive, rel, args }
        }
        Formula::And(cs) => Node::And(cs.iter().map(|c| compile(a, c, slot_of, next)).collect::<Result<_, _>>()?),
        Formula::Or(cs) => Node::Or(cs.iter().map(|c| compile(a, c, slot_of, next)).collect::<Result<_, _>>()?),
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            let slot = *next;
            *next += 1;
            let prev = slot_of.insert(v.clone(), slot);
            let body = compile(a, b, slot_of, next);
            match prev {
                Some(p) => slot_of.insert(v.clone(), p),
                None => slot_of.remove(v),
            };
            let body = Box::new(body?);
            if matches!(f, Formula::Exists(..)) {
                Node::Exists(slot, body)
            } else {
                Node::Forall(slot, body)
            }
        }
    })
}

/// Truth of `f` in `a` under `asg`.
pub fn eval(a: &Structure, f: &Formula, asg: &Assignment) -> Result<bool, EvalError> {
    eval_capped(a, f, asg, DEFAULT_MAX_ATOM_CHECKS)
}

pub fn eval_capped(a: &Structure, f: &Formula, asg: &Assignment, max_atom_checks: u64) -> Result<bool, EvalError> {
    let free = f.free_variables();
    let mut values = Vec::with_capacity(free.len());
    for v in &free {
        let id = asg.get(v).ok_or_else(|| EvalError::UnboundVariable(v.to_string()))?;
        values.push(a.position(id).ok_or_else(|| EvalError::UnknownElement(id.clone()))?);
    }
    Compiled::new(a, f, &free)?.with_cap(max_atom_checks).eval(&values)
}

/// Evaluates on element positions for the variables `vars`.
pub fn eval_positions(a: &Structure, f: &Formula, vars: &[Var], values: &[usize]) -> Result<bool, EvalError> {
    Compiled::new(a, f, vars)?.eval(values)
}
