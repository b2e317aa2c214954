use std::ops::Range;
use std::sync::Arc;

use crate::formula::Var;
use crate::structure::Structure;

use super::EnumError;

/// A finite list of structures with a variable context. Rows are all pairs
/// of a structure and an assignment to the context, ordered by structure
/// index and then lexicographically by assignment (first variable most
/// significant, elements by position).
#[derive(Clone, Debug)]
pub struct TestBed {
    structures: Arc<Vec<Structure>>,
    vars: Vec<Var>,
    offsets: Vec<usize>,
    rows: usize,
}

impl TestBed {
    pub fn new(structures: Vec<Structure>, vars: Vec<Var>) -> Result<Self, EnumError> {
        let first = structures.first().ok_or_else(|| EnumError::InvalidBed("no structures".into()))?;
        if structures.iter().any(|s| s.vocab() != first.vocab()) {
            return Err(EnumError::VocabularyMismatch);
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(EnumError::InvalidBed(format!("variable `{v}` repeated")));
            }
        }
        Ok(Self::build(Arc::new(structures), vars))
    }

    fn build(structures: Arc<Vec<Structure>>, vars: Vec<Var>) -> Self {
        let mut offsets = Vec::with_capacity(structures.len());
        let mut rows = 0;
        for s in structures.iter() {
            offsets.push(rows);
            rows += s.size().pow(vars.len() as u32);
        }
        TestBed { structures, vars, offsets, rows }
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Row of structure `s` under `assignment` (element positions).
    pub fn row(&self, s: usize, assignment: &[usize]) -> usize {
        let n = self.structures[s].size();
        self.offsets[s] + assignment.iter().fold(0, |acc, &a| acc * n + a)
    }

    /// Inverse of [`TestBed::row`].
    pub fn decode_row(&self, row: usize) -> (usize, Vec<usize>) {
        let s = self.offsets.partition_point(|&o| o <= row) - 1;
        let n = self.structures[s].size();
        let mut code = row - self.offsets[s];
        let mut out = vec![0; self.vars.len()];
        for slot in out.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        (s, out)
    }

    /// The same structures with `k` fresh variables appended to the context.
    pub(crate) fn extend(&self, k: usize) -> (TestBed, Vec<Var>) {
        let mut fresh = Vec::with_capacity(k);
        let mut i = 0;
        while fresh.len() < k {
            let v = Var::new(format!("v{i}"));
            if !self.vars.contains(&v) {
                fresh.push(v);
            }
            i += 1;
        }
        let vars = self.vars.iter().chain(&fresh).cloned().collect();
        (Self::build(self.structures.clone(), vars), fresh)
    }

    /// Rows of `ext` (this bed extended by `k` variables) that agree with
    /// `row` on the original context. They are contiguous.
    pub(crate) fn extensions(&self, ext: &TestBed, k: usize, row: usize) -> Range<usize> {
        let s = self.offsets.partition_point(|&o| o <= row) - 1;
        let width = self.structures[s].size().pow(k as u32);
        let start = ext.offsets[s] + (row - self.offsets[s]) * width;
        start..start + width
    }
}
