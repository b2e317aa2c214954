//! First-order formulas in negation normal form over finite relational
//! vocabularies, together with the tree-prefix classification machinery.

mod classify;
mod parse;
mod random;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify, Classification};
pub use parse::parse_formula;
pub use random::{random_formula, RandomFormulaSpec};

/// Names that can never be relation symbols.
pub const RESERVED_NAMES: [&str; 8] = ["=", "true", "false", "and", "or", "not", "exists", "forall"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected} but was applied to {found} arguments")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("negation applied to a non-atomic formula at byte {pos}")]
    NotNnf { pos: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("cannot generate: {0}")]
    Generator(String),
}

/// A finite relational vocabulary: relation name to arity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Vocabulary {
    relations: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new<I, S>(relations: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for (name, arity) in relations {
            vocab.insert(name.into(), arity)?;
        }
        Ok(vocab)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    fn insert(&mut self, name: String, arity: usize) -> Result<(), FormulaError> {
        if name.is_empty() {
            return Err(FormulaError::InvalidVocabulary("empty relation name".into()));
        }
        if RESERVED_NAMES.contains(&name.as_str()) {
            return Err(FormulaError::InvalidVocabulary(format!("`{name}` is reserved")));
        }
        if !parse::is_relation_name(&name) {
            return Err(FormulaError::InvalidVocabulary(format!("`{name}` is not a valid relation name")));
        }
        if arity == 0 {
            return Err(FormulaError::InvalidVocabulary(format!("`{name}` must have arity >= 1")));
        }
        if self.relations.insert(name.clone(), arity).is_some() {
            return Err(FormulaError::InvalidVocabulary(format!("duplicate relation `{name}`")));
        }
        Ok(())
    }

    /// Returns a copy extended with one more relation.
    pub fn with(&self, name: &str, arity: usize) -> Result<Self, FormulaError> {
        let mut out = self.clone();
        out.insert(name.to_string(), arity)?;
        Ok(out)
    }

    /// Returns a copy without `name` (no-op if absent).
    pub fn without(&self, name: &str) -> Self {
        let mut out = self.clone();
        out.relations.remove(name);
        out
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Maximum arity, 0 for the empty vocabulary.
    pub fn max_arity(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn from_json(text: &str) -> Result<Self, FormulaError> {
        let raw: BTreeMap<String, usize> =
            serde_json::from_str(text).map_err(|e| FormulaError::InvalidVocabulary(e.to_string()))?;
        Self::new(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.relations).expect("vocabulary serializes")
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, usize>::deserialize(d)?;
        Vocabulary::new(raw).map_err(serde::de::Error::custom)
    }
}

/// A first-order variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

/// Predicate symbol of a literal: equality or a named relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Eq,
    Rel(String),
}

impl Pred {
    pub fn name(&self) -> &str {
        match self {
            Pred::Eq => "=",
            Pred::Rel(name) => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub pred: Pred,
    pub args: Vec<Var>,
}

impl Literal {
    pub fn atom(pred: Pred, args: Vec<Var>) -> Self {
        Literal { positive: true, pred, args }
    }

    pub fn negated(&self) -> Self {
        Literal { positive: !self.positive, ..self.clone() }
    }
}

/// NNF first-order formula. Negation only occurs inside [`Literal`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Lit(Literal),
    Top,
    Bot,
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn rel(name: &str, args: &[&str]) -> Self {
        Formula::Lit(Literal::atom(Pred::Rel(name.to_string()), args.iter().map(|a| Var::from(*a)).collect()))
    }

    pub fn not_rel(name: &str, args: &[&str]) -> Self {
        Formula::rel(name, args).negate_dual()
    }

    pub fn eq(a: &str, b: &str) -> Self {
        Formula::Lit(Literal::atom(Pred::Eq, vec![Var::from(a), Var::from(b)]))
    }

    pub fn exists(var: impl Into<Var>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<Var>, body: Formula) -> Self {
        Formula::Forall(var.into(), Box::new(body))
    }

    /// Conjunction; flattens nested conjunctions and collapses arity one.
    /// The empty conjunction is `Top`.
    pub fn and(children: Vec<Formula>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::Top,
            1 => flat.pop().unwrap(),
            _ => Formula::And(flat),
        }
    }

    /// Disjunction; dual of [`Formula::and`]. The empty disjunction is `Bot`.
    pub fn or(children: Vec<Formula>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Formula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::Bot,
            1 => flat.pop().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    /// NNF negation: swaps literal polarity, `Top`/`Bot`, `And`/`Or`, and
    /// the quantifiers.
    pub fn negate_dual(&self) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(l.negated()),
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::And(cs) => Formula::Or(cs.iter().map(Formula::negate_dual).collect()),
            Formula::Or(cs) => Formula::And(cs.iter().map(Formula::negate_dual).collect()),
            Formula::Exists(v, b) => Formula::Forall(v.clone(), Box::new(b.negate_dual())),
            Formula::Forall(v, b) => Formula::Exists(v.clone(), Box::new(b.negate_dual())),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Lit(_) | Formula::Top | Formula::Bot => true,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(Formula::is_quantifier_free),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// Node count: quantifier and connective nodes count 1, literals count
    /// 1 + arity, constants count 1.
    pub fn size(&self) -> usize {
        match self {
            Formula::Lit(l) => 1 + l.args.len(),
            Formula::Top | Formula::Bot => 1,
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists(_, b) | Formula::Forall(_, b) => 1 + b.size(),
        }
    }

    /// Maximum number of quantifiers on a root-to-leaf path.
    pub fn rank(&self) -> usize {
        match self {
            Formula::Lit(_) | Formula::Top | Formula::Bot => 0,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(Formula::rank).max().unwrap_or(0),
            Formula::Exists(_, b) | Formula::Forall(_, b) => 1 + b.rank(),
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_variables(&self) -> Vec<Var> {
        fn go(f: &Formula, bound: &mut Vec<Var>, seen: &mut HashSet<Var>, out: &mut Vec<Var>) {
            match f {
                Formula::Lit(l) => {
                    for a in &l.args {
                        if !bound.contains(a) && seen.insert(a.clone()) {
                            out.push(a.clone());
                        }
                    }
                }
                Formula::Top | Formula::Bot => {}
                Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| go(c, bound, seen, out)),
                Formula::Exists(v, b) | Formula::Forall(v, b) => {
                    bound.push(v.clone());
                    go(b, bound, seen, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut HashSet::new(), &mut out);
        out
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_variables(&self) -> BTreeSet<Var> {
        fn go(f: &Formula, out: &mut BTreeSet<Var>) {
            match f {
                Formula::Lit(l) => out.extend(l.args.iter().cloned()),
                Formula::Top | Formula::Bot => {}
                Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| go(c, out)),
                Formula::Exists(v, b) | Formula::Forall(v, b) => {
                    out.insert(v.clone());
                    go(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    /// Relation names used by literals (equality excluded).
    pub fn relations(&self) -> BTreeSet<String> {
        fn go(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Lit(Literal { pred: Pred::Rel(r), .. }) => {
                    out.insert(r.clone());
                }
                Formula::Lit(_) | Formula::Top | Formula::Bot => {}
                Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| go(c, out)),
                Formula::Exists(_, b) | Formula::Forall(_, b) => go(b, out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    /// Checks that every literal names a relation of `vocab` with the right
    /// arity.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<(), FormulaError> {
        match self {
            Formula::Lit(l) => {
                let expected = match &l.pred {
                    Pred::Eq => 2,
                    Pred::Rel(r) => vocab.arity(r).ok_or_else(|| FormulaError::UnknownRelation(r.clone()))?,
                };
                if l.args.len() != expected {
                    return Err(FormulaError::ArityMismatch {
                        relation: l.pred.name().to_string(),
                        expected,
                        found: l.args.len(),
                    });
                }
                Ok(())
            }
            Formula::Top | Formula::Bot => Ok(()),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().try_for_each(|c| c.check_vocabulary(vocab)),
            Formula::Exists(_, b) | Formula::Forall(_, b) => b.check_vocabulary(vocab),
        }
    }

    /// Simultaneous substitution of free variables.
    pub fn substitute(&self, map: &BTreeMap<Var, Var>) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(Literal {
                positive: l.positive,
                pred: l.pred.clone(),
                args: l.args.iter().map(|a| map.get(a).cloned().unwrap_or_else(|| a.clone())).collect(),
            }),
            Formula::Top => Formula::Top,
            Formula::Bot => Formula::Bot,
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.substitute(map)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.substitute(map)).collect()),
            Formula::Exists(v, b) | Formula::Forall(v, b) => {
                let body = if map.contains_key(v) {
                    let mut inner = map.clone();
                    inner.remove(v);
                    b.substitute(&inner)
                } else {
                    b.substitute(map)
                };
                match self {
                    Formula::Exists(..) => Formula::Exists(v.clone(), Box::new(body)),
                    _ => Formula::Forall(v.clone(), Box::new(body)),
                }
            }
        }
    }

    /// True when bound variables are pairwise distinct and distinct from
    /// the free variables.
    pub fn is_alpha_normal(&self) -> bool {
        fn go(f: &Formula, used: &mut HashSet<Var>) -> bool {
            match f {
                Formula::Lit(_) | Formula::Top | Formula::Bot => true,
                Formula::And(cs) | Formula::Or(cs) => cs.iter().all(|c| go(c, used)),
                Formula::Exists(v, b) | Formula::Forall(v, b) => used.insert(v.clone()) && go(b, used),
            }
        }
        let mut used: HashSet<Var> = self.free_variables().into_iter().collect();
        go(self, &mut used)
    }

    /// Renames bound variables so that they are pairwise distinct and
    /// distinct from the free variables. Already-distinct binders keep their
    /// names; clashing ones get the first unused `name_<i>`.
    pub fn alpha_normalize(&self) -> Formula {
        if self.is_alpha_normal() {
            return self.clone();
        }
        let mut taken: HashSet<Var> = self.all_variables().into_iter().collect();
        let mut used: HashSet<Var> = self.free_variables().into_iter().collect();
        let mut scope = BTreeMap::new();
        alpha_go(self, &mut scope, &mut used, &mut taken)
    }

    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::And(cs) | Formula::Or(cs) => cs,
            Formula::Exists(_, b) | Formula::Forall(_, b) => std::slice::from_ref(b.as_ref()),
            _ => &[],
        }
    }

    /// Drops `Top` from conjunctions and `Bot` from disjunctions, folds
    /// absorbing constants, and flattens nested same-kind connectives.
    pub fn fold_constants(&self) -> Formula {
        match self {
            Formula::And(cs) => {
                let mut kept = Vec::new();
                for c in cs.iter().map(Formula::fold_constants) {
                    match c {
                        Formula::Top => {}
                        Formula::Bot => return Formula::Bot,
                        other => kept.push(other),
                    }
                }
                Formula::and(kept)
            }
            Formula::Or(cs) => {
                let mut kept = Vec::new();
                for c in cs.iter().map(Formula::fold_constants) {
                    match c {
                        Formula::Bot => {}
                        Formula::Top => return Formula::Top,
                        other => kept.push(other),
                    }
                }
                Formula::or(kept)
            }
            Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(b.fold_constants())),
            Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(b.fold_constants())),
            other => other.clone(),
        }
    }
}

fn alpha_go(
    f: &Formula,
    scope: &mut BTreeMap<Var, Var>,
    used: &mut HashSet<Var>,
    taken: &mut HashSet<Var>,
) -> Formula {
    match f {
        Formula::Lit(_) | Formula::Top | Formula::Bot => f.substitute(scope),
        Formula::And(cs) => Formula::And(cs.iter().map(|c| alpha_go(c, scope, used, taken)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| alpha_go(c, scope, used, taken)).collect()),
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            let fresh = if used.contains(v) {
                let mut i = 1;
                loop {
                    let cand = Var(format!("{}_{}", v.0, i));
                    if !taken.contains(&cand) {
                        break cand;
                    }
                    i += 1;
                }
            } else {
                v.clone()
            };
            used.insert(fresh.clone());
            taken.insert(fresh.clone());
            let prev = scope.insert(v.clone(), fresh.clone());
            let body = alpha_go(b, scope, used, taken);
            match prev {
                Some(p) => scope.insert(v.clone(), p),
                None => scope.remove(v),
            };
            match f {
                Formula::Exists(..) => Formula::Exists(fresh, Box::new(body)),
                _ => Formula::Forall(fresh, Box::new(body)),
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(l) => {
                if !l.positive {
                    f.write_str("(not ")?;
                }
                write!(f, "({}", l.pred.name())?;
                for a in &l.args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")?;
                if !l.positive {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Top => f.write_str("true"),
            Formula::Bot => f.write_str("false"),
            Formula::And(cs) | Formula::Or(cs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            Formula::Exists(v, b) => write!(f, "(exists ({v}) {b})"),
            Formula::Forall(v, b) => write!(f, "(forall ({v}) {b})"),
        }
    }
}

/// Canonical text form; inverse of [`parse_formula`].
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

pub fn negate_dual(f: &Formula) -> Formula {
    f.negate_dual()
}

pub fn free_variables(f: &Formula) -> Vec<Var> {
    f.free_variables()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_rejects_reserved_and_zero_arity() {
        assert!(Vocabulary::new([("=", 2)]).is_err());
        assert!(Vocabulary::new([("true", 1)]).is_err());
        assert!(Vocabulary::new([("E", 0)]).is_err());
        assert!(Vocabulary::new([("", 1)]).is_err());
        assert!(Vocabulary::from_json(r#"{"E": 2, "U": 1}"#).is_ok());
        assert!(Vocabulary::from_json(r#"{"and": 2}"#).is_err());
    }

    #[test]
    fn free_variables_examples() {
        let v = |s: &str| Var::from(s);
        assert_eq!(Formula::rel("E", &["x", "y"]).free_variables(), vec![v("x"), v("y")]);
        assert_eq!(Formula::exists("x", Formula::rel("E", &["x", "y"])).free_variables(), vec![v("y")]);
        assert!(Formula::Top.free_variables().is_empty());
    }

    #[test]
    fn printing_examples() {
        assert_eq!(print_formula(&Formula::rel("E", &["x", "y"])), "(E x y)");
        assert_eq!(print_formula(&Formula::Bot), "false");
        assert_eq!(print_formula(&Formula::exists("x", Formula::Top)), "(exists (x) true)");
        assert_eq!(print_formula(&Formula::not_rel("E", &["x", "y"])), "(not (E x y))");
    }

    #[test]
    fn negation_examples() {
        let vocab = Vocabulary::new([("U", 1)]).unwrap();
        // (exists (x) (and (U x))) parses to (exists (x) (U x)) after flattening
        let f = Formula::exists("x", Formula::And(vec![Formula::rel("U", &["x"])]));
        let g = Formula::forall("x", Formula::Or(vec![Formula::not_rel("U", &["x"])]));
        assert_eq!(f.negate_dual(), g);
        assert_eq!(f.negate_dual().negate_dual(), f);
        let parsed = parse_formula("(exists (x) (and (U x)))", &vocab).unwrap();
        assert_eq!(print_formula(&parsed.negate_dual()), "(forall (x) (not (U x)))");
    }

    #[test]
    fn size_counts_nodes() {
        assert_eq!(Formula::rel("E", &["x", "y"]).size(), 3);
        assert_eq!(Formula::exists("x", Formula::Top).size(), 2);
        assert_eq!(Formula::And(vec![Formula::Top, Formula::Bot]).size(), 3);
    }

    #[test]
    fn alpha_normalization_renames_clashes() {
        // (and (exists (x) (U x)) (exists (x) (U x)) (U x)) has x free and bound twice
        let f = Formula::And(vec![
            Formula::exists("x", Formula::rel("U", &["x"])),
            Formula::exists("x", Formula::rel("U", &["x"])),
            Formula::rel("U", &["x"]),
        ]);
        assert!(!f.is_alpha_normal());
        let g = f.alpha_normalize();
        assert!(g.is_alpha_normal());
        assert_eq!(print_formula(&g), "(and (exists (x_1) (U x_1)) (exists (x_2) (U x_2)) (U x))");
        assert_eq!(g.free_variables(), vec![Var::from("x")]);
    }

    #[test]
    fn fold_constants_drops_units() {
        let f = Formula::And(vec![Formula::Top, Formula::Or(vec![Formula::Bot, Formula::rel("U", &["x"])])]);
        assert_eq!(f.fold_constants(), Formula::rel("U", &["x"]));
        assert_eq!(Formula::And(vec![Formula::Bot, Formula::Top]).fold_constants(), Formula::Bot);
    }
}
