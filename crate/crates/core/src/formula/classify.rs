use serde::{Deserialize, Serialize};

use super::Formula;

/// Position of a formula in the tree-prefix hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Classification {
    pub sigma_level: usize,
    pub pi_level: usize,
    pub rank: usize,
    pub block_uniform_k: Option<usize>,
}

impl Classification {
    /// Smallest level at which the formula sits in the class of `kind`.
    pub fn level(&self, kind: crate::Mode) -> usize {
        match kind {
            crate::Mode::Sigma => self.sigma_level,
            crate::Mode::Pi => self.pi_level,
        }
    }
}

/// Minimal existential and universal levels, computed bottom-up.
///
/// A quantifier-free node sits at level 0 on both sides. An existential
/// node stays at the existential level of its body (at least 1), a
/// conjunction with quantified children sits one existential level above
/// the largest universal level of its children, and the remaining cases
/// follow by moving to the other side one level up. The universal side is
/// dual.
fn levels(f: &Formula) -> (usize, usize) {
    if f.is_quantifier_free() {
        return (0, 0);
    }
    match f {
        Formula::Exists(_, b) => {
            let s = levels(b).0.max(1);
            (s, s + 1)
        }
        Formula::Forall(_, b) => {
            let p = levels(b).1.max(1);
            (p + 1, p)
        }
        Formula::And(cs) => {
            let s = 1 + cs.iter().map(|c| levels(c).1).max().unwrap_or(0);
            (s, s + 1)
        }
        Formula::Or(cs) => {
            let p = 1 + cs.iter().map(|c| levels(c).0).max().unwrap_or(0);
            (p + 1, p)
        }
        Formula::Lit(_) | Formula::Top | Formula::Bot => unreachable!("quantifier-free"),
    }
}

fn block_lengths(f: &Formula, kind: Option<bool>, run: usize, out: &mut Vec<usize>) {
    match f {
        Formula::Exists(_, b) | Formula::Forall(_, b) => {
            let is_exists = matches!(f, Formula::Exists(..));
            if kind == Some(is_exists) {
                block_lengths(b, kind, run + 1, out);
            } else {
                if run > 0 {
                    out.push(run);
                }
                block_lengths(b, Some(is_exists), 1, out);
            }
        }
        _ => {
            if run > 0 {
                out.push(run);
            }
            for c in f.children() {
                block_lengths(c, None, 0, out);
            }
        }
    }
}

/// Block length shared by every maximal run of same-kind quantifiers on
/// every path, if there is one. Quantifier-free formulas have none.
pub fn block_uniform_k(f: &Formula) -> Option<usize> {
    let mut lens = Vec::new();
    block_lengths(f, None, 0, &mut lens);
    let first = *lens.first()?;
    lens.iter().all(|&l| l == first).then_some(first)
}

pub fn classify(f: &Formula) -> Classification {
    let (sigma_level, pi_level) = levels(f);
    Classification { sigma_level, pi_level, rank: f.rank(), block_uniform_k: block_uniform_k(f) }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::formula::{parse_formula, Vocabulary};

    /// Direct transcription of the membership predicates, used as an
    /// independent oracle for the bottom-up computation.
    pub(crate) fn in_sigma(f: &Formula, lambda: usize) -> bool {
        if f.is_quantifier_free() {
            return true;
        }
        if lambda == 0 {
            return false;
        }
        match f {
            Formula::Exists(_, g) => in_sigma(g, lambda),
            Formula::And(gs) => gs.iter().all(|g| in_pi(g, lambda - 1)),
            _ => in_pi(f, lambda - 1),
        }
    }

    pub(crate) fn in_pi(f: &Formula, lambda: usize) -> bool {
        if f.is_quantifier_free() {
            return true;
        }
        if lambda == 0 {
            return false;
        }
        match f {
            Formula::Forall(_, g) => in_pi(g, lambda),
            Formula::Or(gs) => gs.iter().all(|g| in_sigma(g, lambda - 1)),
            _ => in_sigma(f, lambda - 1),
        }
    }

    pub(crate) fn oracle_levels(f: &Formula) -> (usize, usize) {
        let s = (0..).find(|&l| in_sigma(f, l)).unwrap();
        let p = (0..).find(|&l| in_pi(f, l)).unwrap();
        (s, p)
    }

    fn vocab() -> Vocabulary {
        Vocabulary::new([("E", 2), ("U", 1)]).unwrap()
    }

    #[test]
    fn quantifier_free_is_level_zero() {
        let f = parse_formula("(or (U x) (not (U y)))", &vocab()).unwrap();
        let c = classify(&f);
        assert_eq!((c.sigma_level, c.pi_level, c.rank, c.block_uniform_k), (0, 0, 0, None));
    }

    #[test]
    fn exists_forall_example() {
        let f = parse_formula("(exists (x) (and (forall (y) (or (E x y)))))", &vocab()).unwrap();
        let c = classify(&f);
        assert_eq!((c.sigma_level, c.pi_level, c.rank, c.block_uniform_k), (2, 3, 2, Some(1)));
        assert_eq!(oracle_levels(&f), (2, 3));
    }

    #[test]
    fn forall_example() {
        let f = parse_formula("(forall (x) (or (U x)))", &vocab()).unwrap();
        let c = classify(&f);
        assert_eq!((c.sigma_level, c.pi_level), (2, 1));
    }

    #[test]
    fn conjunction_of_existentials_is_level_three() {
        let f = parse_formula("(and (exists (x) (U x)) (exists (y) (U y)))", &vocab()).unwrap();
        assert_eq!(classify(&f).sigma_level, 3);
        assert_eq!(oracle_levels(&f), (3, 4));
    }

    #[test]
    fn block_uniformity() {
        let v = vocab();
        let f = parse_formula("(exists (x y) (forall (z w) (E x z)))", &v).unwrap();
        assert_eq!(block_uniform_k(&f), Some(2));
        let g = parse_formula("(exists (x y) (forall (z) (E x z)))", &v).unwrap();
        assert_eq!(block_uniform_k(&g), None);
        let h = parse_formula("(exists (x) (and (U x) (forall (z) (E x z))))", &v).unwrap();
        assert_eq!(block_uniform_k(&h), Some(1));
    }
}
