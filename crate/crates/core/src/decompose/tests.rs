use super::*;
use crate::formula::{classify, parse_formula, random_formula};
use crate::interp::{apply_sum_like, builtin, BuiltinOp};
use crate::modelcheck::eval_positions;
use crate::structure::{all_structures, annotated_disjoint_union, linear_order};

fn e() -> Vocabulary {
    Vocabulary::new([("E", 2)]).unwrap()
}

fn ep() -> Vocabulary {
    Vocabulary::new([("E", 2), ("P", 1)]).unwrap()
}

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|n| Var::from(*n)).collect()
}

fn sentence(text: &str) -> ReductionSequence {
    let f = parse_formula(text, &ep()).unwrap();
    decompose(&f, &e(), &VarPartition::sentence(), &DecomposeOptions::default()).unwrap()
}

fn loop_() -> Structure {
    Structure::from_json(r#"{"vocabulary":{"E":2},"universe":["a"],"relations":{"E":[["a","a"]]}}"#).unwrap()
}

fn edgeless() -> Structure {
    Structure::from_json(r#"{"vocabulary":{"E":2},"universe":["b"],"relations":{}}"#).unwrap()
}

/// Compares the reduction against direct evaluation on the annotated union
/// for every pair of structures and every assignment.
fn agrees_everywhere(f: &Formula, part: &VarPartition, d: &ReductionSequence, structures: &[Structure]) {
    let all: Vec<Var> = part.left.iter().chain(&part.right).cloned().collect();
    for a in structures {
        let t1 = SideTable::build(&d.delta1, &part.left, a).unwrap();
        for b in structures {
            let t2 = SideTable::build(&d.delta2, &part.right, b).unwrap();
            let u = annotated_disjoint_union(a, b).unwrap();
            for c1 in 0..t1.len() {
                for c2 in 0..t2.len() {
                    let mut v1 = vec![0; part.left.len()];
                    let mut v2 = vec![0; part.right.len()];
                    decode(c1, a.size(), &mut v1);
                    decode(c2, b.size(), &mut v2);
                    let merged: Vec<usize> = v1.iter().copied().chain(v2.iter().map(|x| x + a.size())).collect();
                    let direct = eval_positions(&u, f, &all, &merged).unwrap();
                    let via = d.beta.eval(t1.row_by_code(c1), t2.row_by_code(c2));
                    assert_eq!(direct, via, "{f} on {} / {}", a.to_json(), b.to_json());
                }
            }
        }
    }
}

#[test]
fn atom_on_one_side() {
    let f = parse_formula("(E x y)", &ep()).unwrap();
    let d = decompose(&f, &e(), &VarPartition::new(vars(&["x", "y"]), vec![]), &DecomposeOptions::default()).unwrap();
    assert_eq!(d.delta1, vec![f.clone()]);
    assert_eq!(d.delta2, vec![Formula::Top]);
    assert_eq!(d.beta, PropFormula::pair_and(0));
    let s = d.stats();
    assert_eq!((s.factor_count_1, s.factor_count_2, s.total_size), (1, 1, 3 + 1 + 3));
}

#[test]
fn atom_across_sides() {
    let f = parse_formula("(E x y)", &ep()).unwrap();
    let d = decompose(&f, &e(), &VarPartition::new(vars(&["x"]), vars(&["y"])), &DecomposeOptions::default()).unwrap();
    assert!(d.delta1.is_empty() && d.delta2.is_empty());
    assert_eq!(d.beta, PropFormula::Bot);
    assert_eq!(d.stats().total_size, 1);
    let g = parse_formula("(not (= x y))", &ep()).unwrap();
    let d = decompose(&g, &e(), &VarPartition::new(vars(&["x"]), vars(&["y"])), &DecomposeOptions::default()).unwrap();
    assert_eq!(d.beta, PropFormula::Top);
}

#[test]
fn marker_literals_resolve_by_side() {
    let f = parse_formula("(and (P x) (not (P y)))", &ep()).unwrap();
    let d = decompose(&f, &e(), &VarPartition::new(vars(&["x"]), vars(&["y"])), &DecomposeOptions::default()).unwrap();
    assert_eq!(d.beta, PropFormula::And(vec![PropFormula::Top, PropFormula::Top]));
    let d = decompose(&f, &e(), &VarPartition::new(vars(&["x", "y"]), vec![]), &DecomposeOptions::default()).unwrap();
    assert!(!d.beta.eval(&[], &[]));
}

#[test]
fn existential_loop_sentence() {
    let d = sentence("(exists (z) (E z z))");
    let ezz = parse_formula("(exists (z) (E z z))", &e()).unwrap();
    assert_eq!(d.delta1, vec![ezz.clone(), Formula::Top]);
    assert_eq!(d.delta2, vec![Formula::Top, ezz]);
    assert_eq!(d.beta, PropFormula::Or(vec![PropFormula::pair_and(0), PropFormula::pair_and(1)]));
    assert!(eval_reduction(&d, &loop_(), &edgeless(), &[], &[]).unwrap());
    assert!(!eval_reduction(&d, &edgeless(), &edgeless(), &[], &[]).unwrap());
}

#[test]
fn normalize_worked_example() {
    let u = Vocabulary::new([("A", 1), ("B", 1), ("C", 1), ("D", 1)]).unwrap();
    let f = |t: &str| parse_formula(t, &u).unwrap();
    let (p1, p2, c1, c2) = (f("(A x)"), f("(B x)"), f("(C y)"), f("(D y)"));
    let v = |i, s| PropFormula::var(i, s);
    let d = ReductionSequence {
        delta1: vec![p1.clone(), p2.clone()],
        delta2: vec![c1.clone(), c2.clone()],
        beta: PropFormula::And(vec![
            PropFormula::Or(vec![v(0, Side::Left), v(0, Side::Right)]),
            PropFormula::Or(vec![v(1, Side::Left), v(1, Side::Right)]),
        ]),
        partition: VarPartition::new(vars(&["x"]), vars(&["y"])),
        vocab: u.clone(),
    };
    let n = normalize_pairs(&d, Mode::Sigma).unwrap();
    assert_eq!(n.delta1, vec![Formula::And(vec![p1.clone(), p2.clone()]), p1, p2, Formula::Top]);
    assert_eq!(n.delta2, vec![Formula::Top, c2.clone(), c1.clone(), Formula::And(vec![c1, c2])]);
    assert_eq!(n.beta.pair_form(), Some((Mode::Sigma, 4)));
    // Idempotent on pair form.
    assert_eq!(normalize_pairs(&n, Mode::Sigma).unwrap(), n);
    // Constant combiner.
    let t = ReductionSequence { delta1: vec![], delta2: vec![], beta: PropFormula::Top, ..d.clone() };
    let nt = normalize_pairs(&t, Mode::Sigma).unwrap();
    assert_eq!((nt.delta1.clone(), nt.delta2.clone()), (vec![Formula::Top], vec![Formula::Top]));
    assert_eq!(nt.beta, PropFormula::Or(vec![PropFormula::pair_and(0)]));
    let np = normalize_pairs(&d, Mode::Pi).unwrap();
    assert_eq!(np.beta.pair_form(), Some((Mode::Pi, 2)));
}

#[test]
fn normalize_respects_limit() {
    let d = sentence("(and (forall (a) (exists (b) (E a b))) (forall (c) (exists (d) (E d c))))");
    assert!(matches!(normalize_pairs_capped_for_test(&d), Err(DecomposeError::TooLarge { .. })));
}

fn normalize_pairs_capped_for_test(d: &ReductionSequence) -> Result<ReductionSequence, DecomposeError> {
    super::normalize::normalize_pairs_capped(d, Mode::Pi, 1)
}

#[test]
fn hand_formulas_agree_with_direct_evaluation() {
    let structures = all_structures(&e(), 2);
    let cases: &[(&str, &[&str], &[&str])] = &[
        ("(exists (z) (E z z))", &[], &[]),
        ("(forall (x) (exists (y) (E x y)))", &[], &[]),
        ("(exists (x) (forall (y) (or (E x y) (P y))))", &[], &[]),
        ("(and (exists (x) (P x)) (exists (y) (not (P y))))", &[], &[]),
        ("(forall (x y) (or (= x y) (E x y) (not (E y x))))", &[], &[]),
        ("(exists (z) (and (E u z) (not (E z v))))", &["u"], &["v"]),
        ("(or (E u u) (forall (z) (or (not (P z)) (E z u))))", &["u"], &[]),
        ("(and (= u v) (E u v))", &["u", "v"], &[]),
        ("(or (= u v) (E u v))", &["u"], &["v"]),
    ];
    for (text, left, right) in cases {
        let f = parse_formula(text, &ep()).unwrap();
        let part = VarPartition::new(vars(left), vars(right));
        for opts in [DecomposeOptions::default(), DecomposeOptions { simplify: true, ..Default::default() }] {
            let d = decompose(&f, &e(), &part, &opts).unwrap();
            d.validate().unwrap();
            agrees_everywhere(&f, &part, &d, &structures);
        }
        let plain = decompose(&f, &e(), &part, &DecomposeOptions { memoize: false, ..Default::default() }).unwrap();
        assert_eq!(plain, decompose(&f, &e(), &part, &DecomposeOptions::default()).unwrap());
    }
}

#[test]
fn random_formulas_agree_and_keep_discipline() {
    let structures = all_structures(&e(), 2);
    let free = vars(&["u", "v"]);
    let mut checked = 0;
    for seed in 0..60u64 {
        let mode = if seed % 2 == 0 { Mode::Sigma } else { Mode::Pi };
        let f = random_formula(mode, 2, 2, &ep(), &free, 2, seed).unwrap();
        let part = if seed % 3 == 0 { VarPartition::new(free.clone(), vec![]) } else { VarPartition::new(vars(&["u"]), vars(&["v"])) };
        let opts = DecomposeOptions { max_pairs: 2048, ..Default::default() };
        let d = match decompose(&f, &e(), &part, &opts) {
            Ok(d) => d,
            Err(DecomposeError::TooLarge { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        checked += 1;
        agrees_everywhere(&f, &part, &d, &structures);
        let c = classify(&f);
        if !f.is_quantifier_free() {
            let (m, _) = d.beta.pair_form().expect("pair normal form");
            let level = c.level(m);
            for g in d.delta1.iter().chain(&d.delta2) {
                let cg = classify(g);
                assert!(cg.level(m) <= level && cg.rank <= c.rank, "{g} from {f}");
            }
        }
        let s = simplify_reduction(&d);
        agrees_everywhere(&f, &part, &s, &structures);
    }
    assert!(checked >= 50);
}

#[test]
fn simplify_examples() {
    let d = ReductionSequence {
        delta1: vec![Formula::rel("E", &["x", "x"]), Formula::rel("E", &["x", "x"])],
        delta2: vec![Formula::Top, Formula::Top],
        beta: PropFormula::Or(vec![PropFormula::pair_and(0), PropFormula::pair_and(1)]),
        partition: VarPartition::new(vars(&["x"]), vec![]),
        vocab: e(),
    };
    let s = simplify_reduction(&d);
    assert_eq!(s.delta1.len(), 1);
    assert_eq!(s.beta.pair_form(), Some((Mode::Sigma, 1)));
    let empty = ReductionSequence { delta1: vec![], delta2: vec![], beta: PropFormula::Or(vec![]), ..d.clone() };
    assert_eq!(simplify_reduction(&empty).beta, PropFormula::Bot);
    let with_false = ReductionSequence { delta2: vec![Formula::Bot, Formula::Top], ..d };
    let s = simplify_reduction(&with_false);
    assert_eq!(s.delta1.len(), 1);
}

#[test]
fn over_operations() {
    let f = parse_formula("(exists (z) (E z z))", &e()).unwrap();
    let du = builtin(&BuiltinOp::DisjointUnion, &e()).unwrap();
    let d = decompose_over_op(&f, &du, &VarPartition::sentence(), &DecomposeOptions::default()).unwrap();
    let structures = all_structures(&e(), 2);
    for a in &structures {
        for b in &structures {
            let direct = crate::modelcheck::eval(&apply_sum_like(&du, a, b).unwrap(), &f, &Default::default()).unwrap();
            assert_eq!(direct, eval_reduction(&d, a, b, &[], &[]).unwrap());
        }
    }
    let d = decompose_over_op(&Formula::Top, &du, &VarPartition::sentence(), &DecomposeOptions::default()).unwrap();
    assert!(eval_reduction(&d, &loop_(), &edgeless(), &[], &[]).unwrap());

    let le = Vocabulary::new([("<=", 2)]).unwrap();
    let os = builtin(&BuiltinOp::OrderedSum { rel: "<=".into() }, &le).unwrap();
    let g = parse_formula("(forall (x) (forall (y) (<= x y)))", &le).unwrap();
    let d = decompose_over_op(&g, &os, &VarPartition::sentence(), &DecomposeOptions::default()).unwrap();
    let (l1, l2) = (linear_order("<=", 1), linear_order("<=", 2));
    for (a, b) in [(&l1, &l1), (&l1, &l2), (&l2, &l1)] {
        let direct = crate::modelcheck::eval(&apply_sum_like(&os, a, b).unwrap(), &g, &Default::default()).unwrap();
        assert!(!direct);
        assert_eq!(direct, eval_reduction(&d, a, b, &[], &[]).unwrap());
    }
}

#[test]
fn errors() {
    let f = parse_formula("(E x y)", &ep()).unwrap();
    let r = decompose(&f, &e(), &VarPartition::new(vars(&["x"]), vec![]), &DecomposeOptions::default());
    assert_eq!(r, Err(DecomposeError::UnpartitionedVariable("y".into())));
    let r = decompose(&f, &e(), &VarPartition::new(vars(&["x", "y"]), vars(&["y"])), &DecomposeOptions::default());
    assert!(matches!(r, Err(DecomposeError::OverlappingPartition(_))));
    let u = Vocabulary::new([("U", 1)]).unwrap();
    assert!(decompose(&f, &u, &VarPartition::new(vars(&["x", "y"]), vec![]), &DecomposeOptions::default()).is_err());
    let d = sentence("(exists (z) (E z z))");
    let other = Structure::from_json(r#"{"vocabulary":{"U":1},"universe":["a"],"relations":{}}"#).unwrap();
    assert_eq!(eval_reduction(&d, &other, &loop_(), &[], &[]), Err(DecomposeError::VocabularyMismatch));
    assert!(matches!(eval_reduction(&d, &loop_(), &loop_(), &[0], &[]), Err(DecomposeError::ArityMismatch { .. })));
}

#[test]
fn json_round_trip() {
    let d = sentence("(forall (x) (exists (y) (and (E x y) (P y))))");
    let back = ReductionSequence::from_json(&d.to_json()).unwrap();
    assert_eq!(back, d);
    let bad = serde_json::json!({"not": {"var": [0, 1]}});
    assert!(PropFormula::from_json(&bad).is_err());
    let text = d.to_json_string();
    assert!(text.contains("\"stats\""));
}

#[test]
fn deterministic() {
    let f = random_formula(Mode::Sigma, 2, 3, &ep(), &[], 3, 5).unwrap();
    let a = decompose(&f, &e(), &VarPartition::sentence(), &DecomposeOptions::default());
    let b = decompose(&f, &e(), &VarPartition::sentence(), &DecomposeOptions::default());
    assert_eq!(a, b);
}

#[test]
fn absorbing_child_does_not_materialize_products() {
    // Two universal blocks with many clauses next to a false disjunction:
    // the product has no terms, and the partial products must not be built.
    let f = parse_formula(
        "(and (forall (a) (forall (b) (or (not (E a a)) (and (= a b) (E b b))))) (forall (c) (forall (d) (E c d))) (or false false false))",
        &ep(),
    )
    .unwrap();
    let d = decompose(&f, &e(), &VarPartition::sentence(), &DecomposeOptions::default()).unwrap();
    assert_eq!(d.pair_form(), Some((Mode::Sigma, 0)));
    assert!(!eval_reduction(&d, &loop_(), &edgeless(), &[], &[]).unwrap());
}
