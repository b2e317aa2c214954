//! Quantifier-free scalar interpretations, the induced formula translation,
//! and the built-in sum-like binary operations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse_formula, print_formula, Formula, FormulaError, Literal, Pred, Var, Vocabulary};
use crate::modelcheck::{Compiled, EvalError};
use crate::structure::{annotated_disjoint_union, Structure, StructureError, ANNOTATION};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterpError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("defining formula for `{0}` is not quantifier-free")]
    NotQuantifierFree(String),
    #[error("defining formula for `{relation}` uses variable `{var}`")]
    BadFreeVariable { relation: String, var: String },
    #[error("no defining formula for `{0}`")]
    MissingRelation(String),
    #[error("defining formula for `{0}` which is not in the target vocabulary")]
    ExtraRelation(String),
    #[error("interpretation defines an empty universe")]
    EmptyUniverse,
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("malformed operation parameters: {0}")]
    MalformedParameters(String),
    #[error("malformed interpretation file: {0}")]
    Malformed(String),
}

/// `(source, target)`-interpretation given by a universe formula in `x1`
/// and one formula per target relation in `y1..yr`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    universe_formula: Formula,
    relation_formulas: BTreeMap<String, Formula>,
}

#[derive(Serialize, Deserialize)]
struct InterpretationFile {
    source_vocabulary: Vocabulary,
    target_vocabulary: Vocabulary,
    universe_formula: String,
    relation_formulas: BTreeMap<String, String>,
}

pub fn universe_var() -> Var {
    Var::new("x1")
}

pub fn relation_var(i: usize) -> Var {
    Var::new(format!("y{}", i + 1))
}

fn check_defining(name: &str, f: &Formula, vocab: &Vocabulary, allowed: &[Var]) -> Result<(), InterpError> {
    if !f.is_quantifier_free() {
        return Err(InterpError::NotQuantifierFree(name.to_string()));
    }
    f.check_vocabulary(vocab)?;
    if let Some(v) = f.free_variables().into_iter().find(|v| !allowed.contains(v)) {
        return Err(InterpError::BadFreeVariable { relation: name.to_string(), var: v.to_string() });
    }
    Ok(())
}

impl Interpretation {
    pub fn new(
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        universe_formula: Formula,
        relation_formulas: BTreeMap<String, Formula>,
    ) -> Result<Self, InterpError> {
        check_defining("universe", &universe_formula, &source_vocab, &[universe_var()])?;
        for (r, arity) in target_vocab.iter() {
            let f = relation_formulas.get(r).ok_or_else(|| InterpError::MissingRelation(r.to_string()))?;
            let allowed: Vec<Var> = (0..arity).map(relation_var).collect();
            check_defining(r, f, &source_vocab, &allowed)?;
        }
        if let Some(extra) = relation_formulas.keys().find(|r| !target_vocab.contains(r)) {
            return Err(InterpError::ExtraRelation(extra.clone()));
        }
        Ok(Interpretation { source_vocab, target_vocab, universe_formula, relation_formulas })
    }

    /// The interpretation that keeps every element and every relation.
    pub fn identity(vocab: &Vocabulary) -> Self {
        Self::identity_between(vocab.clone(), vocab)
    }

    fn identity_between(source: Vocabulary, target: &Vocabulary) -> Self {
        let relation_formulas = target.iter().map(|(r, a)| (r.to_string(), relation_atom(r, a))).collect();
        Interpretation { source_vocab: source, target_vocab: target.clone(), universe_formula: Formula::Top, relation_formulas }
    }

    pub fn source_vocab(&self) -> &Vocabulary {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &Vocabulary {
        &self.target_vocab
    }

    pub fn universe_formula(&self) -> &Formula {
        &self.universe_formula
    }

    pub fn relation_formula(&self, r: &str) -> Option<&Formula> {
        self.relation_formulas.get(r)
    }

    /// Universe formula with `x1` replaced by `z`.
    pub fn universe_at(&self, z: &Var) -> Formula {
        self.universe_formula.substitute(&BTreeMap::from([(universe_var(), z.clone())]))
    }

    /// Defining formula of `r` with `y1..yr` replaced by `args`.
    pub fn relation_at(&self, r: &str, args: &[Var]) -> Formula {
        let map = args.iter().enumerate().map(|(i, a)| (relation_var(i), a.clone())).collect();
        self.relation_formulas[r].substitute(&map)
    }

    pub fn from_json(text: &str) -> Result<Self, InterpError> {
        let file: InterpretationFile = serde_json::from_str(text).map_err(|e| InterpError::Malformed(e.to_string()))?;
        let universe_formula = parse_formula(&file.universe_formula, &file.source_vocabulary)?;
        let relation_formulas = file
            .relation_formulas
            .iter()
            .map(|(r, t)| Ok((r.clone(), parse_formula(t, &file.source_vocabulary)?)))
            .collect::<Result<_, InterpError>>()?;
        Interpretation::new(file.source_vocabulary, file.target_vocabulary, universe_formula, relation_formulas)
    }

    pub fn to_json(&self) -> String {
        let file = InterpretationFile {
            source_vocabulary: self.source_vocab.clone(),
            target_vocabulary: self.target_vocab.clone(),
            universe_formula: print_formula(&self.universe_formula),
            relation_formulas: self.relation_formulas.iter().map(|(r, f)| (r.clone(), print_formula(f))).collect(),
        };
        serde_json::to_string_pretty(&file).expect("interpretation serializes")
    }
}

fn relation_atom(r: &str, arity: usize) -> Formula {
    Formula::Lit(Literal::atom(Pred::Rel(r.to_string()), (0..arity).map(relation_var).collect()))
}

/// The structure defined by `xi` inside `a`. Element ids and order are
/// inherited from `a`.
pub fn apply_interpretation(xi: &Interpretation, a: &Structure) -> Result<Structure, InterpError> {
    if a.vocab() != &xi.source_vocab {
        return Err(InterpError::VocabularyMismatch("structure is not over the source vocabulary".into()));
    }
    let u = Compiled::new(a, &xi.universe_formula, &[universe_var()])?;
    let mut keep = Vec::new();
    for e in 0..a.size() {
        if u.eval(&[e])? {
            keep.push(e);
        }
    }
    if keep.is_empty() {
        return Err(InterpError::EmptyUniverse);
    }
    let mut relations = BTreeMap::new();
    for (r, arity) in xi.target_vocab.iter() {
        let vars: Vec<Var> = (0..arity).map(relation_var).collect();
        let c = Compiled::new(a, &xi.relation_formulas[r], &vars)?;
        let mut set = BTreeSet::new();
        let mut tuple = vec![0; arity];
        let total = keep.len().pow(arity as u32);
        for code in 0..total {
            let mut rest = code;
            for k in (0..arity).rev() {
                tuple[k] = rest % keep.len();
                rest /= keep.len();
            }
            let orig: Vec<usize> = tuple.iter().map(|&t| keep[t]).collect();
            if c.eval(&orig)? {
                set.insert(tuple.clone());
            }
        }
        relations.insert(r.to_string(), set);
    }
    let universe = keep.iter().map(|&e| a.element(e).to_string()).collect();
    Ok(Structure::from_index_tuples(xi.target_vocab.clone(), universe, relations)?)
}

/// Translates a formula over the target vocabulary into one over the
/// source vocabulary that holds in a source structure exactly when the
/// original holds in the interpreted structure.
///
/// Maximal quantifier blocks are relativized as a whole; a connective body
/// of the same kind as the relativizing connective is spliced into it so
/// that the hierarchy level does not grow. With `simplify`, constants are
/// folded and nested connectives flattened afterwards.
pub fn transform_formula(xi: &Interpretation, f: &Formula, simplify: bool) -> Result<Formula, InterpError> {
    f.check_vocabulary(&xi.target_vocab).map_err(|e| InterpError::VocabularyMismatch(e.to_string()))?;
    let out = translate(xi, f);
    Ok(if simplify { out.fold_constants() } else { out })
}

fn translate(xi: &Interpretation, f: &Formula) -> Formula {
    match f {
        Formula::Top => Formula::Top,
        Formula::Bot => Formula::Bot,
        Formula::Lit(l) => {
            let core = match &l.pred {
                Pred::Eq => Formula::Lit(Literal::atom(Pred::Eq, l.args.clone())),
                Pred::Rel(r) => xi.relation_at(r, &l.args),
            };
            let core = if l.positive { core } else { core.negate_dual() };
            let mut parts = vec![core];
            parts.extend(l.args.iter().map(|z| xi.universe_at(z)));
            Formula::And(parts)
        }
        Formula::And(cs) => Formula::And(cs.iter().map(|c| translate(xi, c)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| translate(xi, c)).collect()),
        Formula::Exists(..) | Formula::Forall(..) => {
            let existential = matches!(f, Formula::Exists(..));
            let mut vars = Vec::new();
            let mut body = f;
            loop {
                match (body, existential) {
                    (Formula::Exists(v, b), true) | (Formula::Forall(v, b), false) => {
                        vars.push(v.clone());
                        body = b;
                    }
                    _ => break,
                }
            }
            let mut parts: Vec<Formula> = vars
                .iter()
                .map(|v| if existential { xi.universe_at(v) } else { xi.universe_at(v).negate_dual() })
                .collect();
            match (body, existential) {
                (Formula::And(cs), true) | (Formula::Or(cs), false) => parts.extend(cs.iter().map(|c| translate(xi, c))),
                _ => parts.push(translate(xi, body)),
            }
            let mut out = if existential { Formula::And(parts) } else { Formula::Or(parts) };
            for v in vars.into_iter().rev() {
                out = if existential { Formula::Exists(v, Box::new(out)) } else { Formula::Forall(v, Box::new(out)) };
            }
            out
        }
    }
}

/// Binary operation defined by an interpretation of the annotated disjoint
/// union.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumLikeOp {
    pub name: String,
    pub interp: Interpretation,
}

impl SumLikeOp {
    pub fn new(name: impl Into<String>, interp: Interpretation) -> Result<Self, InterpError> {
        let tau = interp.target_vocab().clone();
        if tau.contains(ANNOTATION) {
            return Err(InterpError::VocabularyMismatch(format!("`{ANNOTATION}` must not be in the target vocabulary")));
        }
        let expected = tau.with(ANNOTATION, 1)?;
        if interp.source_vocab() != &expected {
            return Err(InterpError::VocabularyMismatch("source vocabulary must be the target plus the unary marker".into()));
        }
        Ok(SumLikeOp { name: name.into(), interp })
    }

    /// Operand vocabulary.
    pub fn tau(&self) -> &Vocabulary {
        self.interp.target_vocab()
    }
}

pub fn apply_sum_like(op: &SumLikeOp, a: &Structure, b: &Structure) -> Result<Structure, InterpError> {
    apply_interpretation(&op.interp, &annotated_disjoint_union(a, b)?)
}

/// Built-in sum-like operations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinOp {
    DisjointUnion,
    /// Every left element goes below every right element in `rel`.
    OrderedSum { rel: String },
    /// Edges in `rel` between every left and every right element, both ways.
    Join { rel: String },
    /// Edges in `E` from left `Qi`-elements to right `Qj`-elements for
    /// every `(i, j)` in `pairs`; labels `Q1..Qr`.
    NlcSum { r: usize, pairs: Vec<(usize, usize)> },
}

#[derive(Deserialize)]
struct NlcFile {
    r: usize,
    #[serde(rename = "S")]
    s: Vec<(usize, usize)>,
}

impl BuiltinOp {
    pub const NAMES: [&'static str; 4] = ["disjoint-union", "ordered-sum", "join", "nlc-sum"];

    /// Parses `disjoint-union`, `ordered-sum`, `join`, or `nlc-sum` with the
    /// parameters given as JSON `{"r": .., "S": [[i, j], ..]}`.
    pub fn from_name(name: &str, nlc_params: Option<&str>) -> Result<Self, InterpError> {
        match name {
            "disjoint-union" => Ok(BuiltinOp::DisjointUnion),
            "ordered-sum" => Ok(BuiltinOp::OrderedSum { rel: "<=".into() }),
            "join" => Ok(BuiltinOp::Join { rel: "E".into() }),
            "nlc-sum" => {
                let text = nlc_params.ok_or_else(|| InterpError::MalformedParameters("nlc-sum needs r and S".into()))?;
                let p: NlcFile = serde_json::from_str(text).map_err(|e| InterpError::MalformedParameters(e.to_string()))?;
                Ok(BuiltinOp::NlcSum { r: p.r, pairs: p.s })
            }
            other => Err(InterpError::UnknownOperation(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinOp::DisjointUnion => "disjoint-union",
            BuiltinOp::OrderedSum { .. } => "ordered-sum",
            BuiltinOp::Join { .. } => "join",
            BuiltinOp::NlcSum { .. } => "nlc-sum",
        }
    }

    /// Smallest operand vocabulary the operation makes sense on.
    pub fn default_vocab(&self) -> Vocabulary {
        match self {
            BuiltinOp::DisjointUnion => Vocabulary::new([("E", 2)]),
            BuiltinOp::OrderedSum { rel } | BuiltinOp::Join { rel } => Vocabulary::new([(rel.as_str(), 2)]),
            BuiltinOp::NlcSum { r, .. } => {
                Vocabulary::new(std::iter::once(("E".to_string(), 2)).chain((1..=*r).map(|i| (format!("Q{i}"), 1))))
            }
        }
        .expect("valid builtin vocabulary")
    }
}

fn p_at(v: usize) -> Formula {
    Formula::rel(ANNOTATION, &[relation_var(v).as_str()])
}

fn not_p_at(v: usize) -> Formula {
    Formula::not_rel(ANNOTATION, &[relation_var(v).as_str()])
}

fn require_binary(tau: &Vocabulary, rel: &str) -> Result<(), InterpError> {
    match tau.arity(rel) {
        Some(2) => Ok(()),
        _ => Err(InterpError::VocabularyMismatch(format!("operation needs binary `{rel}`"))),
    }
}

/// Instantiates a built-in operation on operand vocabulary `tau`.
/// Relations the operation does not touch are copied from both sides.
pub fn builtin(op: &BuiltinOp, tau: &Vocabulary) -> Result<SumLikeOp, InterpError> {
    if tau.contains(ANNOTATION) {
        return Err(InterpError::VocabularyMismatch(format!("`{ANNOTATION}` is reserved for the marker")));
    }
    let source = tau.with(ANNOTATION, 1)?;
    let mut interp = Interpretation::identity_between(source, tau);
    let y = |i: usize| relation_var(i);
    match op {
        BuiltinOp::DisjointUnion => {}
        BuiltinOp::OrderedSum { rel } => {
            require_binary(tau, rel)?;
            let f = Formula::Or(vec![
                Formula::rel(rel, &[y(0).as_str(), y(1).as_str()]),
                Formula::And(vec![p_at(0), not_p_at(1)]),
            ]);
            interp.relation_formulas.insert(rel.clone(), f);
        }
        BuiltinOp::Join { rel } => {
            require_binary(tau, rel)?;
            let f = Formula::Or(vec![
                Formula::rel(rel, &[y(0).as_str(), y(1).as_str()]),
                Formula::And(vec![p_at(0), not_p_at(1)]),
                Formula::And(vec![not_p_at(0), p_at(1)]),
            ]);
            interp.relation_formulas.insert(rel.clone(), f);
        }
        BuiltinOp::NlcSum { r, pairs } => {
            require_binary(tau, "E")?;
            if *r == 0 {
                return Err(InterpError::MalformedParameters("r must be at least 1".into()));
            }
            for i in 1..=*r {
                if tau.arity(&format!("Q{i}")) != Some(1) {
                    return Err(InterpError::VocabularyMismatch(format!("nlc-sum needs unary `Q{i}`")));
                }
            }
            let mut seen = BTreeSet::new();
            for &(i, j) in pairs {
                if !(1..=*r).contains(&i) || !(1..=*r).contains(&j) {
                    return Err(InterpError::MalformedParameters(format!("pair ({i}, {j}) outside 1..={r}")));
                }
                if !seen.insert((i, j)) {
                    return Err(InterpError::MalformedParameters(format!("pair ({i}, {j}) repeated")));
                }
            }
            let mut disjuncts = vec![Formula::rel("E", &[y(0).as_str(), y(1).as_str()])];
            for &(i, j) in pairs {
                disjuncts.push(Formula::And(vec![
                    p_at(0),
                    Formula::rel(&format!("Q{i}"), &[y(0).as_str()]),
                    not_p_at(1),
                    Formula::rel(&format!("Q{j}"), &[y(1).as_str()]),
                ]));
            }
            let f = if disjuncts.len() == 1 { disjuncts.pop().unwrap() } else { Formula::Or(disjuncts) };
            interp.relation_formulas.insert("E".into(), f);
        }
    }
    SumLikeOp::new(op.name(), interp)
}
