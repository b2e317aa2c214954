//! Finite relational structures with named elements.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Vocabulary;

/// Name of the unary predicate marking the left operand of an annotated
/// disjoint union.
pub const ANNOTATION: &str = "P";

/// Relations with at most this many potential tuples are stored densely.
const DENSE_LIMIT: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("empty universe")]
    EmptyUniverse,
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("relation `{0}` is not in the vocabulary")]
    UnknownRelation(String),
    #[error("tuple of length {found} for relation `{relation}` of arity {expected}")]
    TupleArity { relation: String, expected: usize, found: usize },
    #[error("vocabulary mismatch")]
    VocabularyMismatch,
    #[error("relation `{0}` already in the vocabulary")]
    AnnotationClash(String),
    #[error("tuple lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("malformed structure: {0}")]
    Malformed(String),
}

/// Interpretation of one relation symbol over element indices.
#[derive(Clone, Debug)]
struct Table {
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
    dense: Option<Vec<bool>>,
    sparse: HashSet<Vec<usize>>,
}

impl Table {
    fn new(arity: usize, n: usize, tuples: BTreeSet<Vec<usize>>) -> Self {
        let slots = n.checked_pow(arity as u32).filter(|&s| s <= DENSE_LIMIT);
        let (dense, sparse) = match slots {
            Some(s) => {
                let mut bits = vec![false; s];
                for t in &tuples {
                    bits[index(t, n)] = true;
                }
                (Some(bits), HashSet::new())
            }
            None => (None, tuples.iter().cloned().collect()),
        };
        Table { arity, tuples, dense, sparse }
    }

    #[inline]
    fn holds(&self, args: &[usize], n: usize) -> bool {
        match &self.dense {
            Some(bits) => bits[index(args, n)],
            None => self.sparse.contains(args),
        }
    }
}

#[inline]
fn index(t: &[usize], n: usize) -> usize {
    t.iter().fold(0, |acc, &a| acc * n + a)
}

/// A finite structure. Elements are addressed by position in the universe;
/// ids are kept for I/O.
#[derive(Clone, Debug)]
pub struct Structure {
    vocab: Vocabulary,
    universe: Vec<String>,
    positions: HashMap<String, usize>,
    tables: BTreeMap<String, Table>,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.universe == other.universe
            && self.tables.iter().zip(&other.tables).all(|((a, x), (b, y))| a == b && x.tuples == y.tuples)
    }
}

impl Eq for Structure {}

#[derive(Serialize, Deserialize)]
struct StructureFile {
    vocabulary: Vocabulary,
    universe: Vec<String>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<String>>>,
}

impl Structure {
    /// Builds a structure from element ids and id tuples. Relations not
    /// listed are empty.
    pub fn new<I, R, T>(vocab: Vocabulary, universe: Vec<String>, relations: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = (R, Vec<T>)>,
        R: Into<String>,
        T: AsRef<[String]>,
    {
        if universe.is_empty() {
            return Err(StructureError::EmptyUniverse);
        }
        let mut positions = HashMap::new();
        for (i, e) in universe.iter().enumerate() {
            if positions.insert(e.clone(), i).is_some() {
                return Err(StructureError::DuplicateElement(e.clone()));
            }
        }
        let mut raw: BTreeMap<String, BTreeSet<Vec<usize>>> =
            vocab.iter().map(|(r, _)| (r.to_string(), BTreeSet::new())).collect();
        for (name, tuples) in relations {
            let name = name.into();
            let arity = vocab.arity(&name).ok_or_else(|| StructureError::UnknownRelation(name.clone()))?;
            let set = raw.get_mut(&name).unwrap();
            for t in tuples {
                let t = t.as_ref();
                if t.len() != arity {
                    return Err(StructureError::TupleArity { relation: name.clone(), expected: arity, found: t.len() });
                }
                let idx = t
                    .iter()
                    .map(|e| positions.get(e).copied().ok_or_else(|| StructureError::UnknownElement(e.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                set.insert(idx);
            }
        }
        Ok(Self::from_indices(vocab, universe, positions, raw))
    }

    /// Builds a structure directly from index tuples. Panics on malformed
    /// input; intended for generators that construct valid data.
    pub fn from_index_tuples(
        vocab: Vocabulary,
        universe: Vec<String>,
        relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
    ) -> Result<Self, StructureError> {
        if universe.is_empty() {
            return Err(StructureError::EmptyUniverse);
        }
        let mut positions = HashMap::new();
        for (i, e) in universe.iter().enumerate() {
            if positions.insert(e.clone(), i).is_some() {
                return Err(StructureError::DuplicateElement(e.clone()));
            }
        }
        let mut raw: BTreeMap<String, BTreeSet<Vec<usize>>> =
            vocab.iter().map(|(r, _)| (r.to_string(), BTreeSet::new())).collect();
        for (name, tuples) in relations {
            let arity = vocab.arity(&name).ok_or_else(|| StructureError::UnknownRelation(name.clone()))?;
            for t in &tuples {
                if t.len() != arity {
                    return Err(StructureError::TupleArity { relation: name.clone(), expected: arity, found: t.len() });
                }
                if let Some(&bad) = t.iter().find(|&&a| a >= universe.len()) {
                    return Err(StructureError::UnknownElement(bad.to_string()));
                }
            }
            raw.insert(name, tuples);
        }
        Ok(Self::from_indices(vocab, universe, positions, raw))
    }

    fn from_indices(
        vocab: Vocabulary,
        universe: Vec<String>,
        positions: HashMap<String, usize>,
        raw: BTreeMap<String, BTreeSet<Vec<usize>>>,
    ) -> Self {
        let n = universe.len();
        let tables =
            raw.into_iter().map(|(r, ts)| (r.clone(), Table::new(vocab.arity(&r).unwrap(), n, ts))).collect();
        Structure { vocab, universe, positions, tables }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn element(&self, i: usize) -> &str {
        &self.universe[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    /// Converts element ids to positions.
    pub fn resolve(&self, ids: &[impl AsRef<str>]) -> Result<Vec<usize>, StructureError> {
        ids.iter()
            .map(|e| self.position(e.as_ref()).ok_or_else(|| StructureError::UnknownElement(e.as_ref().to_string())))
            .collect()
    }

    /// Membership test by positions. `rel` must be in the vocabulary.
    #[inline]
    pub fn holds(&self, rel: &str, args: &[usize]) -> bool {
        self.tables[rel].holds(args, self.universe.len())
    }

    /// Tuples of a relation as positions, in sorted order.
    pub fn tuples(&self, rel: &str) -> impl Iterator<Item = &Vec<usize>> {
        self.tables.get(rel).into_iter().flat_map(|t| t.tuples.iter())
    }

    /// Handle for fast repeated membership queries.
    pub fn relation_handle(&self, rel: &str) -> Option<RelationHandle<'_>> {
        self.tables.get(rel).map(|t| RelationHandle { table: t, n: self.universe.len() })
    }

    /// Restriction of the vocabulary to the relations in `vocab`.
    pub fn reduct(&self, vocab: &Vocabulary) -> Result<Structure, StructureError> {
        let mut raw = BTreeMap::new();
        for (r, a) in vocab.iter() {
            if self.vocab.arity(r) != Some(a) {
                return Err(StructureError::VocabularyMismatch);
            }
            raw.insert(r.to_string(), self.tables[r].tuples.clone());
        }
        Ok(Self::from_indices(vocab.clone(), self.universe.clone(), self.positions.clone(), raw))
    }

    /// Plain disjoint union with the same tagging as
    /// [`annotated_disjoint_union`] but without the marker predicate.
    pub fn disjoint_union(a: &Structure, b: &Structure) -> Result<Structure, StructureError> {
        if a.vocab != b.vocab {
            return Err(StructureError::VocabularyMismatch);
        }
        let universe: Vec<String> =
            a.universe.iter().map(|e| format!("L:{e}")).chain(b.universe.iter().map(|e| format!("R:{e}"))).collect();
        let off = a.size();
        let mut raw = BTreeMap::new();
        for (r, _) in a.vocab.iter() {
            let mut set: BTreeSet<Vec<usize>> = a.tables[r].tuples.clone();
            set.extend(b.tables[r].tuples.iter().map(|t| t.iter().map(|x| x + off).collect::<Vec<_>>()));
            raw.insert(r.to_string(), set);
        }
        let positions = universe.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(Self::from_indices(a.vocab.clone(), universe, positions, raw))
    }

    /// Copy with elements renamed by `rename` (must be injective).
    pub fn rename_elements(&self, rename: impl Fn(&str) -> String) -> Result<Structure, StructureError> {
        let universe: Vec<String> = self.universe.iter().map(|e| rename(e)).collect();
        let raw = self.tables.iter().map(|(r, t)| (r.clone(), t.tuples.clone())).collect();
        Self::from_index_tuples(self.vocab.clone(), universe, raw)
    }

    /// Structure on the elements at `keep` (in that order), with relations
    /// restricted accordingly.
    pub fn induced(&self, keep: &[usize]) -> Result<Structure, StructureError> {
        let mut new_pos = vec![usize::MAX; self.size()];
        for (j, &i) in keep.iter().enumerate() {
            new_pos[i] = j;
        }
        let universe: Vec<String> = keep.iter().map(|&i| self.universe[i].clone()).collect();
        let raw = self
            .tables
            .iter()
            .map(|(r, t)| {
                let set = t
                    .tuples
                    .iter()
                    .filter(|tup| tup.iter().all(|&x| new_pos[x] != usize::MAX))
                    .map(|tup| tup.iter().map(|&x| new_pos[x]).collect())
                    .collect();
                (r.clone(), set)
            })
            .collect();
        Self::from_index_tuples(self.vocab.clone(), universe, raw)
    }

    pub fn from_json(text: &str) -> Result<Structure, StructureError> {
        let file: StructureFile = serde_json::from_str(text).map_err(|e| StructureError::Malformed(e.to_string()))?;
        Structure::new(file.vocabulary, file.universe, file.relations)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("structure serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("structure serializes")
    }

    fn to_file(&self) -> StructureFile {
        let relations = self
            .tables
            .iter()
            .map(|(r, t)| (r.clone(), t.tuples.iter().map(|tup| tup.iter().map(|&i| self.universe[i].clone()).collect()).collect()))
            .collect();
        StructureFile { vocabulary: self.vocab.clone(), universe: self.universe.clone(), relations }
    }
}

/// Borrowed view of one relation.
#[derive(Clone, Copy)]
pub struct RelationHandle<'a> {
    table: &'a Table,
    n: usize,
}

impl RelationHandle<'_> {
    #[inline]
    pub fn holds(&self, args: &[usize]) -> bool {
        self.table.holds(args, self.n)
    }

    pub fn arity(&self) -> usize {
        self.table.arity
    }
}

/// Disjoint union of `a` and `b` expanded by the unary marker
/// [`ANNOTATION`] holding exactly on the elements coming from `a`.
pub fn annotated_disjoint_union(a: &Structure, b: &Structure) -> Result<Structure, StructureError> {
    if a.vocab != b.vocab {
        return Err(StructureError::VocabularyMismatch);
    }
    if a.vocab.contains(ANNOTATION) {
        return Err(StructureError::AnnotationClash(ANNOTATION.to_string()));
    }
    let plain = Structure::disjoint_union(a, b)?;
    let vocab = a.vocab.with(ANNOTATION, 1).map_err(|_| StructureError::AnnotationClash(ANNOTATION.to_string()))?;
    let mut raw: BTreeMap<String, BTreeSet<Vec<usize>>> =
        plain.tables.iter().map(|(r, t)| (r.clone(), t.tuples.clone())).collect();
    raw.insert(ANNOTATION.to_string(), (0..a.size()).map(|i| vec![i]).collect());
    Ok(Structure::from_indices(vocab, plain.universe, plain.positions, raw))
}

/// Whether `at[i] -> bt[i]` is a well-defined injective map that preserves
/// and reflects every relation on the listed elements.
pub fn is_partial_isomorphism(
    a: &Structure,
    at: &[usize],
    b: &Structure,
    bt: &[usize],
) -> Result<bool, StructureError> {
    if at.len() != bt.len() {
        return Err(StructureError::LengthMismatch(at.len(), bt.len()));
    }
    if a.vocab != b.vocab {
        return Err(StructureError::VocabularyMismatch);
    }
    Ok(partial_iso_unchecked(a, at, b, bt))
}

/// [`is_partial_isomorphism`] without argument validation.
pub(crate) fn partial_iso_unchecked(a: &Structure, at: &[usize], b: &Structure, bt: &[usize]) -> bool {
    let m = at.len();
    for i in 0..m {
        for j in i + 1..m {
            if (at[i] == at[j]) != (bt[i] == bt[j]) {
                return false;
            }
        }
    }
    // Distinct positions suffice: repeated entries map consistently.
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..m {
        if !reps.iter().any(|&r| at[r] == at[i]) {
            reps.push(i);
        }
    }
    let mut abuf = Vec::new();
    let mut bbuf = Vec::new();
    for (r, ta) in &a.tables {
        let tb = &b.tables[r];
        let ar = ta.arity;
        let total = reps.len().pow(ar as u32);
        for code in 0..total {
            abuf.clear();
            bbuf.clear();
            let mut c = code;
            for _ in 0..ar {
                let p = reps[c % reps.len()];
                c /= reps.len();
                abuf.push(at[p]);
                bbuf.push(bt[p]);
            }
            if ta.holds(&abuf, a.size()) != tb.holds(&bbuf, b.size()) {
                return false;
            }
        }
    }
    true
}

/// All structures over `vocab` with universe `0..s` for `1 <= s <= max_size`,
/// ordered by size and then by the bit pattern of their relations.
pub fn all_structures(vocab: &Vocabulary, max_size: usize) -> Vec<Structure> {
    let mut out = Vec::new();
    for s in 1..=max_size {
        let slots: Vec<(String, Vec<Vec<usize>>)> = vocab
            .iter()
            .map(|(r, a)| {
                let tuples = (0..s.pow(a as u32))
                    .map(|code| {
                        let mut t = vec![0; a];
                        let mut c = code;
                        for k in (0..a).rev() {
                            t[k] = c % s;
                            c /= s;
                        }
                        t
                    })
                    .collect();
                (r.to_string(), tuples)
            })
            .collect();
        let bits: usize = slots.iter().map(|(_, t)| t.len()).sum();
        assert!(bits < 24, "too many structures to enumerate");
        let universe: Vec<String> = (0..s).map(|i| i.to_string()).collect();
        for mask in 0u64..(1u64 << bits) {
            let mut k = 0;
            let mut raw = BTreeMap::new();
            for (r, tuples) in &slots {
                let mut set = BTreeSet::new();
                for t in tuples {
                    if mask >> k & 1 == 1 {
                        set.insert(t.clone());
                    }
                    k += 1;
                }
                raw.insert(r.clone(), set);
            }
            out.push(Structure::from_index_tuples(vocab.clone(), universe.clone(), raw).expect("valid by construction"));
        }
    }
    out
}

/// Reflexive linear order `0 <= 1 <= ... <= n-1` over the relation `rel`.
pub fn linear_order(rel: &str, n: usize) -> Structure {
    let vocab = Vocabulary::new([(rel, 2)]).expect("valid relation name");
    let tuples = (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect();
    Structure::from_index_tuples(vocab, (0..n).map(|i| i.to_string()).collect(), BTreeMap::from([(rel.to_string(), tuples)]))
        .expect("valid by construction")
}
