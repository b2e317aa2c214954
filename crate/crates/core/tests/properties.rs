//! Property tests for the invariants of each module.

use std::collections::{BTreeMap, BTreeSet};

use fvkit_core::check::Composition;
use fvkit_core::decompose::{decompose, eval_reduction, simplify_reduction, DecomposeError, DecomposeOptions, VarPartition};
use fvkit_core::efgame::{prefix_game_winner, tree_prefix_game_winner, GameConfig, Player};
use fvkit_core::formula::{classify, parse_formula, print_formula, Formula, RandomFormulaSpec, Var, Vocabulary};
use fvkit_core::interp::{apply_sum_like, builtin, transform_formula, BuiltinOp};
use fvkit_core::modelcheck::eval_positions;
use fvkit_core::structure::{annotated_disjoint_union, is_partial_isomorphism, linear_order, Structure, ANNOTATION};
use fvkit_core::Mode;
use proptest::prelude::*;

fn vocab(spec: &[(&str, usize)]) -> Vocabulary {
    Vocabulary::new(spec.iter().map(|&(r, a)| (r, a))).unwrap()
}

fn e() -> Vocabulary {
    vocab(&[("E", 2)])
}

fn ue() -> Vocabulary {
    vocab(&[("U", 1), ("E", 2)])
}

/// Structure of the given size whose tuples are switched on by `bits`,
/// cycling when `bits` is short.
fn from_bits(tau: &Vocabulary, size: usize, bits: &[bool]) -> Structure {
    let mut k = 0;
    let mut raw = BTreeMap::new();
    for (r, arity) in tau.iter() {
        let mut set = BTreeSet::new();
        for code in 0..size.pow(arity as u32) {
            if bits[k % bits.len()] {
                let mut t = vec![0; arity];
                let mut c = code;
                for slot in t.iter_mut().rev() {
                    *slot = c % size;
                    c /= size;
                }
                set.insert(t);
            }
            k += 1;
        }
        raw.insert(r.to_string(), set);
    }
    Structure::from_index_tuples(tau.clone(), (0..size).map(|i| format!("e{i}")).collect(), raw).unwrap()
}

fn structure(tau: Vocabulary, max: usize) -> impl Strategy<Value = Structure> {
    (1..=max, prop::collection::vec(any::<bool>(), 1..40)).prop_map(move |(n, bits)| from_bits(&tau, n, &bits))
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Sigma), Just(Mode::Pi)]
}

fn formula(tau: Vocabulary, free: Vec<Var>, max_n: usize, max_m: usize) -> impl Strategy<Value = Formula> {
    (mode(), 0..=max_n, 0..=max_m, 1..=3usize, any::<u64>()).prop_map(move |(md, n, m, fan, seed)| {
        RandomFormulaSpec::new(md, n, m.max(n), fan).generate(&tau, &free, seed).unwrap()
    })
}

fn relabel(a: &Structure, perm_seed: u64) -> Structure {
    let mut order: Vec<usize> = (0..a.size()).collect();
    let mut s = perm_seed;
    for i in (1..order.len()).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        order.swap(i, (s >> 33) as usize % (i + 1));
    }
    a.induced(&order).unwrap().rename_elements(|id| format!("r{id}")).unwrap()
}

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|v| Var::from(*v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(f in formula(ue(), vars(&["u", "v"]), 3, 4)) {
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula(&text, &ue()).unwrap(), f);
    }

    #[test]
    fn negation_swaps_levels_and_keeps_rank(f in formula(ue(), vars(&["u"]), 3, 4)) {
        let (c, d) = (classify(&f), classify(&f.negate_dual()));
        prop_assert_eq!(d.sigma_level, c.pi_level);
        prop_assert_eq!(d.pi_level, c.sigma_level);
        prop_assert_eq!(d.rank, c.rank);
        prop_assert_eq!(f.negate_dual().negate_dual(), f);
    }

    #[test]
    fn generator_respects_bounds(md in mode(), n in 0..=3usize, m in 0..=4usize, seed in any::<u64>()) {
        let m = m.max(n);
        let f = RandomFormulaSpec::new(md, n, m, 3).generate(&ue(), &[], seed).unwrap();
        let c = classify(&f);
        prop_assert!(c.level(md) <= n, "{} level {}", f, c.level(md));
        prop_assert!(c.rank <= m);
    }

    #[test]
    fn negation_flips_truth(f in formula(ue(), vars(&["u"]), 2, 3), a in structure(ue(), 3), p in 0..3usize) {
        let u = vars(&["u"]);
        let p = [p % a.size()];
        prop_assert_ne!(eval_positions(&a, &f, &u, &p).unwrap(), eval_positions(&a, &f.negate_dual(), &u, &p).unwrap());
        prop_assert!(eval_positions(&a, &Formula::Top, &u, &p).unwrap());
        prop_assert!(!eval_positions(&a, &Formula::Bot, &u, &p).unwrap());
    }

    #[test]
    fn truth_is_invariant_under_relabeling(f in formula(ue(), vars(&["u"]), 2, 3), a in structure(ue(), 3), p in 0..3usize, s in any::<u64>()) {
        let b = relabel(&a, s);
        let p = p % a.size();
        let q = b.position(&format!("r{}", a.element(p))).unwrap();
        let u = vars(&["u"]);
        prop_assert_eq!(eval_positions(&a, &f, &u, &[p]).unwrap(), eval_positions(&b, &f, &u, &[q]).unwrap());
        prop_assert_eq!(tree_prefix_game_winner(GameConfig::new(2, 1), &a, &[p], &b, &[q]).unwrap(), Player::Duplicator);
    }

    #[test]
    fn marked_union_sizes(a in structure(e(), 3), b in structure(e(), 3)) {
        let c = annotated_disjoint_union(&a, &b).unwrap();
        prop_assert_eq!(c.size(), a.size() + b.size());
        prop_assert_eq!(c.tuples(ANNOTATION).count(), a.size());
    }

    #[test]
    fn partial_isomorphism_is_symmetric(a in structure(ue(), 3), b in structure(ue(), 3), t in prop::collection::vec((0..3usize, 0..3usize), 0..3)) {
        let at: Vec<usize> = t.iter().map(|p| p.0 % a.size()).collect();
        let bt: Vec<usize> = t.iter().map(|p| p.1 % b.size()).collect();
        prop_assert_eq!(is_partial_isomorphism(&a, &at, &b, &bt).unwrap(), is_partial_isomorphism(&b, &bt, &a, &at).unwrap());
    }

    #[test]
    fn operations_agree_with_translated_formulas(op in 0..3usize, a in structure(ue(), 2), b in structure(ue(), 2), f in formula(ue(), vec![], 2, 2)) {
        let ops = [BuiltinOp::DisjointUnion, BuiltinOp::OrderedSum { rel: "E".into() }, BuiltinOp::Join { rel: "E".into() }];
        let sum = builtin(&ops[op], &ue()).unwrap();
        let direct = eval_positions(&apply_sum_like(&sum, &a, &b).unwrap(), &f, &[], &[]).unwrap();
        let g = transform_formula(&sum.interp, &f, false).unwrap();
        let via = eval_positions(&annotated_disjoint_union(&a, &b).unwrap(), &g, &[], &[]).unwrap();
        prop_assert_eq!(direct, via);
        let (cf, cg) = (classify(&f), classify(&g));
        prop_assert!(cg.sigma_level <= cf.sigma_level && cg.pi_level <= cf.pi_level);
        prop_assert_eq!(cg.rank, cf.rank);
    }

    #[test]
    fn ordered_sum_of_orders_is_an_order(s in 1..5usize, t in 1..5usize) {
        let sum = builtin(&BuiltinOp::OrderedSum { rel: "<=".into() }, &vocab(&[("<=", 2)])).unwrap();
        let c = apply_sum_like(&sum, &linear_order("<=", s), &linear_order("<=", t)).unwrap();
        let n = c.size();
        prop_assert_eq!(n, s + t);
        let le = |x: usize, y: usize| c.holds("<=", &[x, y]);
        for x in 0..n {
            for y in 0..n {
                prop_assert!(le(x, y) || le(y, x));
                prop_assert!(!(le(x, y) && le(y, x)) || x == y);
                for z in 0..n {
                    prop_assert!(!(le(x, y) && le(y, z)) || le(x, z));
                }
            }
        }
    }

    #[test]
    fn decomposition_matches_direct_evaluation(
        f in formula(ue().with(ANNOTATION, 1).unwrap(), vars(&["u", "v"]), 2, 3),
        a in structure(ue(), 3),
        b in structure(ue(), 3),
        p in (0..3usize, 0..3usize),
    ) {
        let part = VarPartition::new(vars(&["u"]), vars(&["v"]));
        let opts = DecomposeOptions { max_pairs: 1024, ..Default::default() };
        let d = match decompose(&f, &ue(), &part, &opts) {
            Err(DecomposeError::TooLarge { .. }) => return Ok(()),
            r => r.unwrap(),
        };
        for side in [&d.delta1, &d.delta2] {
            let own = if std::ptr::eq(side, &d.delta1) { &part.left } else { &part.right };
            prop_assert!(side.iter().all(|g| g.free_variables().iter().all(|v| own.contains(v))));
        }
        let (x, y) = (p.0 % a.size(), p.1 % b.size());
        let c = Composition::Annotated.apply(&a, &b).unwrap();
        let merged = [c.position(&format!("L:{}", a.element(x))).unwrap(), c.position(&format!("R:{}", b.element(y))).unwrap()];
        let direct = eval_positions(&c, &f, &vars(&["u", "v"]), &merged).unwrap();
        prop_assert_eq!(eval_reduction(&d, &a, &b, &[x], &[y]).unwrap(), direct);
        prop_assert_eq!(eval_reduction(&simplify_reduction(&d), &a, &b, &[x], &[y]).unwrap(), direct);
    }

    #[test]
    fn verdict_depends_only_on_factor_values(
        f in formula(ue().with(ANNOTATION, 1).unwrap(), vec![], 2, 2),
        a in structure(ue(), 3), a2 in structure(ue(), 3),
        b in structure(ue(), 3), b2 in structure(ue(), 3),
    ) {
        let opts = DecomposeOptions { max_pairs: 1024, ..Default::default() };
        let d = match decompose(&f, &ue(), &VarPartition::sentence(), &opts) {
            Err(DecomposeError::TooLarge { .. }) => return Ok(()),
            r => r.unwrap(),
        };
        let values = |fs: &[Formula], s: &Structure| fs.iter().map(|g| eval_positions(s, g, &[], &[]).unwrap()).collect::<Vec<_>>();
        if values(&d.delta1, &a) == values(&d.delta1, &a2) && values(&d.delta2, &b) == values(&d.delta2, &b2) {
            prop_assert_eq!(eval_reduction(&d, &a, &b, &[], &[]).unwrap(), eval_reduction(&d, &a2, &b2, &[], &[]).unwrap());
        }
    }

    #[test]
    fn tree_game_is_symmetric(a in structure(e(), 3), b in structure(e(), 3), n in 0..=2usize, k in 1..=2usize) {
        let cfg = GameConfig::new(n, k);
        prop_assert_eq!(tree_prefix_game_winner(cfg, &a, &[], &b, &[]).unwrap(), tree_prefix_game_winner(cfg, &b, &[], &a, &[]).unwrap());
    }

    #[test]
    fn spoiler_keeps_winning_with_more_rounds(a in structure(e(), 3), b in structure(e(), 3), p in (0..3usize, 0..3usize), n in 0..=2usize) {
        let (x, y) = ([p.0 % a.size()], [p.1 % b.size()]);
        if prefix_game_winner(GameConfig::new(n, 1), &a, &x, &b, &y).unwrap() == Player::Spoiler {
            prop_assert_eq!(prefix_game_winner(GameConfig::new(n + 1, 1), &a, &x, &b, &y).unwrap(), Player::Spoiler);
        }
    }
}
