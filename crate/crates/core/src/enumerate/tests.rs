use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;

use super::*;
use crate::formula::{classify, parse_formula, Formula, Var, Vocabulary};
use crate::modelcheck::eval_positions;
use crate::structure::{all_structures, linear_order, Structure};
use crate::Mode;

fn u() -> Vocabulary {
    Vocabulary::new([("U", 1)]).unwrap()
}

fn bed(structures: Vec<Structure>, vars: &[&str]) -> TestBed {
    TestBed::new(structures, vars.iter().map(|v| Var::from(*v)).collect()).unwrap()
}

fn bits_of(bed: &TestBed, f: &Formula) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(bed.len());
    for r in 0..bed.len() {
        let (s, asg) = bed.decode_row(r);
        bits.set(r, eval_positions(&bed.structures()[s], f, bed.vars(), &asg).unwrap());
    }
    bits
}

/// The enumeration as literally specified, on explicit bit sets: literals
/// and constants closed under both connectives, then closure and projection
/// per level.
fn naive(mode: Mode, n: usize, k: usize, bed: &TestBed) -> BTreeSet<Vec<bool>> {
    let to_vec = |b: &FixedBitSet| (0..bed.len()).map(|r| b.contains(r)).collect::<Vec<_>>();
    if n == 0 {
        let vocab = bed.structures()[0].vocab().clone();
        let mut gens: Vec<Vec<bool>> = vec![vec![true; bed.len()], vec![false; bed.len()]];
        let names: Vec<&str> = bed.vars().iter().map(Var::as_str).collect();
        for x in &names {
            for y in &names {
                for text in [format!("(= {x} {y})"), format!("(not (= {x} {y}))")] {
                    gens.push(to_vec(&bits_of(bed, &parse_formula(&text, &vocab).unwrap())));
                }
            }
        }
        for (r, arity) in vocab.iter() {
            for code in 0..names.len().pow(arity as u32) {
                let args: Vec<&str> = (0..arity).map(|i| names[code / names.len().pow(i as u32) % names.len()]).collect();
                let atom = format!("({r} {})", args.join(" "));
                for text in [atom.clone(), format!("(not {atom})")] {
                    gens.push(to_vec(&bits_of(bed, &parse_formula(&text, &vocab).unwrap())));
                }
            }
        }
        let mut set: BTreeSet<Vec<bool>> = gens.into_iter().collect();
        loop {
            let items: Vec<_> = set.iter().cloned().collect();
            let before = set.len();
            for a in &items {
                for b in &items {
                    set.insert(a.iter().zip(b).map(|(x, y)| x & y).collect());
                    set.insert(a.iter().zip(b).map(|(x, y)| x | y).collect());
                }
            }
            if set.len() == before {
                return set;
            }
        }
    }
    let (ext, _) = bed.extend(k);
    let mut inner = naive(mode.dual(), n - 1, k, &ext);
    loop {
        let items: Vec<_> = inner.iter().cloned().collect();
        let before = inner.len();
        for a in &items {
            for b in &items {
                inner.insert(
                    a.iter().zip(b).map(|(x, y)| if mode == Mode::Sigma { x & y } else { x | y }).collect(),
                );
            }
        }
        if inner.len() == before {
            break;
        }
    }
    inner
        .iter()
        .map(|c| {
            (0..bed.len())
                .map(|r| {
                    let mut hits = bed.extensions(&ext, k, r).map(|e| c[e]);
                    if mode == Mode::Sigma {
                        hits.any(|b| b)
                    } else {
                        hits.all(|b| b)
                    }
                })
                .collect()
        })
        .collect()
}

fn as_set(bed: &TestBed, classes: &[SemanticClass]) -> BTreeSet<Vec<bool>> {
    classes.iter().map(|c| (0..bed.len()).map(|r| c.bits.contains(r)).collect()).collect()
}

#[test]
fn quantifier_free_classes_over_one_variable() {
    let b = bed(all_structures(&u(), 2), &["x"]);
    let classes = enumerate_classes(Mode::Sigma, 0, 0, &b, Caps::default()).unwrap();
    assert_eq!(classes.len(), 4);
    let expected: BTreeSet<_> = ["true", "false", "(U x)", "(not (U x))"]
        .iter()
        .map(|t| (0..b.len()).map(|r| bits_of(&b, &parse_formula(t, &u()).unwrap()).contains(r)).collect())
        .collect();
    assert_eq!(as_set(&b, &classes), expected);
    assert_eq!(as_set(&b, &classes), naive(Mode::Sigma, 0, 0, &b));
    // Closing the output under both connectives adds nothing.
    for a in &classes {
        for c in &classes {
            let mut meet = a.bits.clone();
            meet.intersect_with(&c.bits);
            let mut join = a.bits.clone();
            join.union_with(&c.bits);
            assert!(classes.iter().any(|x| x.bits == meet) && classes.iter().any(|x| x.bits == join));
        }
    }
}

#[test]
fn agrees_with_literal_procedure() {
    let e = Vocabulary::new([("E", 2)]).unwrap();
    // The literal closure materializes every quantifier-free class, so the
    // grid stays where that is small.
    let grid: [(TestBed, &[(usize, usize)]); 3] = [
        (bed(all_structures(&u(), 2), &[]), &[(0, 1), (1, 1), (2, 1), (1, 2)]),
        (bed(all_structures(&u(), 2), &["x"]), &[(0, 1), (1, 1)]),
        (bed(all_structures(&e, 2)[..6].to_vec(), &[]), &[(0, 1), (1, 1)]),
    ];
    for (b, cells) in &grid {
        for mode in [Mode::Sigma, Mode::Pi] {
            for &(n, k) in *cells {
                let got = enumerate_classes(mode, n, k, b, Caps::default()).unwrap();
                assert_eq!(as_set(b, &got), naive(mode, n, k, b), "{mode:?} {n} {k} over {:?}", b.vars());
            }
        }
    }
}

#[test]
fn representatives_reproduce_bits_and_classify() {
    let beds = [bed(all_structures(&u(), 2), &[]), bed(all_structures(&u(), 2), &["x"]), bed(vec![linear_order("<=", 3), linear_order("<=", 2)], &[])];
    for b in &beds {
        for mode in [Mode::Sigma, Mode::Pi] {
            for (n, k) in [(0, 1), (1, 1), (1, 2), (2, 1), (2, 2), (3, 1)] {
                for c in enumerate_classes(mode, n, k, b, Caps::default()).unwrap() {
                    assert_eq!(bits_of(b, &c.representative), c.bits, "{}", c.representative);
                    let cl = classify(&c.representative);
                    if n == 0 {
                        assert!(c.representative.is_quantifier_free());
                    } else {
                        assert_eq!(cl.level(mode), n, "{}", c.representative);
                        assert_eq!(cl.block_uniform_k, Some(k), "{}", c.representative);
                    }
                }
            }
        }
    }
}

#[test]
fn existential_sentences_over_unary_bed() {
    let b = bed(all_structures(&u(), 2), &[]);
    let classes = enumerate_classes(Mode::Sigma, 1, 1, &b, Caps::default()).unwrap();
    for text in ["(exists (x) (U x))", "(exists (x) (not (U x)))"] {
        let want = bits_of(&b, &parse_formula(text, &u()).unwrap());
        assert!(classes.iter().any(|c| c.bits == want), "{text}");
    }
}

#[test]
fn levels_refine() {
    let b = bed(all_structures(&u(), 2), &["x"]);
    for k in [1, 2] {
        for n in 0..2 {
            let low = as_set(&b, &enumerate_classes(Mode::Sigma, n, k, &b, Caps::default()).unwrap());
            let high = as_set(&b, &enumerate_classes(Mode::Sigma, n + 1, k, &b, Caps::default()).unwrap());
            assert!(low.is_subset(&high), "n={n} k={k}");
        }
    }
}

#[test]
fn caps_are_reported() {
    let b = bed(vec![linear_order("<=", 5), linear_order("<=", 4)], &[]);
    let tiny = Caps { max_classes: 3, max_iters: 1_000_000 };
    assert!(matches!(enumerate_classes(Mode::Sigma, 3, 1, &b, tiny), Err(EnumError::CapExceeded(_))));
    let b0 = bed(all_structures(&u(), 2), &["x"]);
    assert!(matches!(enumerate_classes(Mode::Sigma, 1, 0, &b0, Caps::default()), Err(EnumError::EmptyBlock)));
}

#[test]
fn transfer_examples() {
    let s = all_structures(&u(), 1);
    let (plain, marked) = (&s[0], &s[1]);
    assert!(!transfer_oracle(1, 1, marked, &[], plain, &[], Caps::default()).unwrap());
    assert!(transfer_oracle(0, 1, marked, &[], plain, &[], Caps::default()).unwrap());
    for a in all_structures(&u(), 2) {
        for (n, k) in [(0, 1), (1, 1), (2, 2)] {
            assert!(transfer_oracle(n, k, &a, &[0], &a, &[0], Caps::default()).unwrap());
        }
    }
    assert!(matches!(transfer_oracle(1, 1, marked, &[0], plain, &[], Caps::default()), Err(EnumError::LengthMismatch(1, 0))));
}

#[test]
fn separators() {
    let e = Vocabulary::new([("E", 2)]).unwrap();
    let loop_ = Structure::from_json(r#"{"vocabulary":{"E":2},"universe":["a"],"relations":{"E":[["a","a"]]}}"#).unwrap();
    let edgeless = Structure::from_json(r#"{"vocabulary":{"E":2},"universe":["b"],"relations":{}}"#).unwrap();
    let SeparatorOutcome::Found(f) = find_separator(1, 1, &loop_, &edgeless, Caps::default()).unwrap() else {
        panic!("expected a separator")
    };
    let b = bed(all_structures(&e, 2), &[]);
    assert_eq!(bits_of(&b, &f), bits_of(&b, &parse_formula("(exists (z) (E z z))", &e).unwrap()));
    assert_eq!(find_separator(2, 1, &loop_, &loop_, Caps::default()).unwrap(), SeparatorOutcome::NoneExists);
    let (l5, l4) = (linear_order("<=", 5), linear_order("<=", 4));
    assert_eq!(find_separator(3, 1, &l5, &l4, Caps { max_classes: 2, max_iters: 10 }).unwrap(), SeparatorOutcome::BudgetExhausted);
}

#[test]
fn count_check_cells() {
    let structures = all_structures(&u(), 2);
    let c = count_bound_check(0, 0, 1, &u(), &bed(structures.clone(), &["x"]), Caps::default()).unwrap();
    assert_eq!((c.count, c.bound.clone(), c.ok), (4, Some(BigUint::from(16u32)), true));
    let c = count_bound_check(0, 0, 0, &u(), &bed(structures.clone(), &[]), Caps::default()).unwrap();
    assert_eq!((c.count, c.ok), (2, true));
    // Sentences of rank 1 with one level: constants plus the four nontrivial
    // combinations of "some element is marked" and "some is unmarked" that
    // are single blocks.
    let c = count_bound_check(1, 1, 0, &u(), &bed(structures.clone(), &[]), Caps::default()).unwrap();
    assert!(c.ok && c.count >= 4, "{c:?}");
    assert!(count_bound_check(0, 0, 2, &u(), &bed(structures, &["x"]), Caps::default()).is_err());
}

#[test]
fn hex_rendering() {
    let mut b = FixedBitSet::with_capacity(10);
    b.insert(0);
    b.insert(9);
    assert_eq!(bits_to_hex(&b), "201");
    assert_eq!(bits_to_hex(&FixedBitSet::with_capacity(0)), "0");
}
