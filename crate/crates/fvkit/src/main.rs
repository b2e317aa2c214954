//! Command-line front end: classification, decomposition, evaluation,
//! games, enumeration and the randomized cross-check harness.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use fvkit_core::check::{check_suite, draw_suite, Composition, Counterexample, Grid, SuiteCase, SuiteSpec};
use fvkit_core::decompose::{decompose_over_op, simplify_reduction, DecomposeError, DecomposeOptions, VarPartition};
use fvkit_core::efgame::{prefix_game_winner_with, tree_prefix_game_winner_with, GameConfig, GameError, GameOptions};
use fvkit_core::enumerate::{bits_to_hex, count_bound_check, enumerate_classes, Caps, EnumError, TestBed};
use fvkit_core::formula::{classify, parse_formula, print_formula, RandomFormulaSpec, Var, Vocabulary};
use fvkit_core::interp::{transform_formula, BuiltinOp, InterpError, Interpretation, SumLikeOp};
use fvkit_core::modelcheck::{eval, EvalError};
use fvkit_core::par::ExecMode;
use fvkit_core::structure::{all_structures, Structure};
use fvkit_core::Mode;
use serde_json::json;

#[derive(Parser)]
#[command(name = "fvkit", version, about = "Decompose formulas over structure sums, decide prefix games, enumerate formula classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the alternation levels, rank and block size of a formula.
    Classify {
        #[arg(long)]
        formula: String,
        /// Vocabulary as JSON, e.g. '{"E":2}'.
        #[arg(long, default_value = r#"{"E":2}"#)]
        vocab: String,
    },
    /// Decompose a formula over the marked disjoint union or an operation.
    Decompose {
        #[arg(long)]
        formula: String,
        /// Comma-separated variables evaluated in the left operand.
        #[arg(long, default_value = "")]
        left: String,
        /// Comma-separated variables evaluated in the right operand.
        #[arg(long, default_value = "")]
        right: String,
        /// annotated, disjoint-union, ordered-sum[:REL], join[:REL] or nlc-sum:FILE.
        #[arg(long, conflicts_with = "interp")]
        op: Option<String>,
        /// Interpretation file defining a custom sum-like operation.
        #[arg(long)]
        interp: Option<PathBuf>,
        /// Operand vocabulary as JSON; defaults to the operation's own.
        #[arg(long)]
        vocab: Option<String>,
        #[arg(long)]
        simplify: bool,
        #[arg(long, default_value_t = fvkit_core::decompose::DEFAULT_MAX_PAIRS)]
        max_pairs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a formula back through an interpretation.
    Transform {
        #[arg(long)]
        interp: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        simplify: bool,
    },
    /// Evaluate a formula on a structure or on a composite of two.
    Eval {
        /// One structure, or two combined with --op.
        #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
        structure: Vec<PathBuf>,
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        formula: String,
        /// Assignment file: {"x": "element id", ...}.
        #[arg(long)]
        assign: Option<PathBuf>,
    },
    /// Cross-check decompositions against direct evaluation.
    CheckDecomposition {
        #[arg(long, conflicts_with_all = ["random", "replay"])]
        formula: Option<String>,
        /// Random suite such as "sigma,n=2,m=3".
        #[arg(long, conflicts_with = "replay")]
        random: Option<String>,
        /// Recompute both verdicts of a counterexample bundle.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        vocab: Option<String>,
        #[arg(long, default_value = "")]
        left: String,
        #[arg(long, default_value = "")]
        right: String,
        /// Largest operand size on the grid.
        #[arg(long, default_value_t = 2)]
        max_size: usize,
        /// Formulas in a random suite.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Operand pairs above which the grid is sampled.
        #[arg(long, default_value_t = 4096)]
        pairs: usize,
        #[arg(long)]
        sequential: bool,
    },
    /// Decide the prefix or tree-prefix game.
    Game {
        #[arg(long, value_enum)]
        mode: GameMode,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value = "")]
        left_tuple: String,
        #[arg(long, default_value = "")]
        right_tuple: String,
        #[arg(long, default_value_t = fvkit_core::efgame::DEFAULT_MAX_POSITIONS)]
        max_positions: u64,
        #[arg(long)]
        sequential: bool,
    },
    /// List the semantic classes of a prefix class over a bed of structures.
    Enumerate {
        #[arg(long)]
        class: Mode,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Directory of structure files, read in file-name order.
        #[arg(long)]
        structures: PathBuf,
        #[arg(long, default_value = "")]
        vars: String,
        #[arg(long, default_value_t = fvkit_core::enumerate::DEFAULT_MAX_CLASSES)]
        max_classes: usize,
    },
    /// Compare the number of ranked classes with the tower bound.
    CountCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Context variables x1..xt.
        #[arg(long, default_value_t = 0)]
        t: usize,
        /// Directory of structure files; defaults to every small structure.
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long, default_value = r#"{"U":1}"#)]
        vocab: String,
        #[arg(long, default_value_t = 2)]
        max_size: usize,
        #[arg(long, default_value_t = fvkit_core::enumerate::DEFAULT_MAX_CLASSES)]
        max_classes: usize,
    },
    /// Emit CSV of decomposition sizes and times for random formulas.
    Bench {
        #[arg(long, default_value_t = 2)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        max_m: usize,
        /// Formulas per (n, m) cell.
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        op: Option<String>,
        #[arg(long, default_value_t = 1024)]
        max_pairs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GameMode {
    Prefix,
    Tree,
}

/// Exit status with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

const VIOLATION: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

impl Failure {
    fn usage(message: impl Display) -> Self {
        Failure { code: USAGE, message: message.to_string() }
    }

    fn inconclusive(message: impl Display) -> Self {
        Failure { code: INCONCLUSIVE, message: message.to_string() }
    }
}

impl From<DecomposeError> for Failure {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::TooLarge { .. } | DecomposeError::Eval(EvalError::WorkCapExceeded(_)) => Failure::inconclusive(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<InterpError> for Failure {
    fn from(e: InterpError) -> Self {
        Failure::from(DecomposeError::from(e))
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::from(DecomposeError::from(e))
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        match e {
            GameError::WorkCapExceeded(_) => Failure::inconclusive(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<EnumError> for Failure {
    fn from(e: EnumError) -> Self {
        match e {
            EnumError::CapExceeded(_) | EnumError::TowerTooLarge { .. } | EnumError::Eval(EvalError::WorkCapExceeded(_)) => {
                Failure::inconclusive(e)
            }
            _ => Failure::usage(e),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let label = if f.code == INCONCLUSIVE { "inconclusive" } else { "error" };
            eprintln!("{label}: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Classify { formula, vocab } => {
            let f = parse_formula(&formula, &parse_vocab(&vocab)?).map_err(Failure::usage)?;
            println!("{}", serde_json::to_string(&classify(&f)).expect("json serializes"));
            Ok(0)
        }
        Command::Decompose { formula, left, right, op, interp, vocab, simplify, max_pairs, out } => {
            let opts = DecomposeOptions { simplify, max_pairs, ..Default::default() };
            let part = VarPartition::new(var_list(&left), var_list(&right));
            let d = match interp {
                Some(path) => {
                    let op = SumLikeOp::new("custom", Interpretation::from_json(&read(&path)?)?)?;
                    let f = parse_formula(&formula, op.tau()).map_err(Failure::usage)?;
                    let d = decompose_over_op(&f, &op, &part, &opts)?;
                    if simplify { simplify_reduction(&d) } else { d }
                }
                None => {
                    let (comp, tau) = composition(op.as_deref(), vocab.as_deref())?;
                    let f = parse_formula(&formula, &comp.formula_vocab(&tau)?).map_err(Failure::usage)?;
                    comp.decompose(&f, &tau, &part, &opts)?
                }
            };
            emit(&d.to_json_string(), out.as_deref())?;
            Ok(0)
        }
        Command::Transform { interp, formula, simplify } => {
            let xi = Interpretation::from_json(&read(&interp)?)?;
            let f = parse_formula(&formula, xi.target_vocab()).map_err(Failure::usage)?;
            println!("{}", print_formula(&transform_formula(&xi, &f, simplify)?));
            Ok(0)
        }
        Command::Eval { structure, op, formula, assign } => {
            let a = match (structure.as_slice(), op.as_deref()) {
                ([a], None) => load_structure(a)?,
                ([a, b], Some(name)) => {
                    let (a, b) = (load_structure(a)?, load_structure(b)?);
                    let (comp, _) = composition(Some(name), Some(&a.vocab().to_json()))?;
                    comp.apply(&a, &b)?
                }
                ([_, _], None) => return Err(Failure::usage("two structures need --op")),
                _ => return Err(Failure::usage("expected one structure, or two with --op")),
            };
            let f = parse_formula(&formula, a.vocab()).map_err(Failure::usage)?;
            let asg: BTreeMap<String, String> = match assign {
                Some(path) => serde_json::from_str(&read(&path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
                None => BTreeMap::new(),
            };
            let asg = asg.into_iter().map(|(k, v)| (Var::from(k.as_str()), v)).collect();
            println!("{}", eval(&a, &f, &asg)?);
            Ok(0)
        }
        Command::CheckDecomposition {
            formula,
            random,
            replay,
            op,
            vocab,
            left,
            right,
            max_size,
            trials,
            seed,
            pairs,
            sequential,
        } => {
            if let Some(path) = replay {
                let cx: Counterexample =
                    serde_json::from_str(&read(&path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                let (direct, via) = cx.replay()?;
                println!("{}", json!({ "direct": direct, "via_decomposition": via }));
                return Ok(if direct == via { 0 } else { VIOLATION });
            }
            let exec = if sequential { ExecMode::Sequential } else { ExecMode::Parallel };
            let (comp, tau) = composition(op.as_deref(), vocab.as_deref())?;
            let grid = Grid::sampled(all_structures(&tau, max_size), pairs, seed, &comp)?;
            let (cases, replaced) = match (formula, random) {
                (Some(text), None) => {
                    let f = parse_formula(&text, &comp.formula_vocab(&tau)?).map_err(Failure::usage)?;
                    let partition = VarPartition::new(var_list(&left), var_list(&right));
                    let reduction = comp.decompose(&f, &tau, &partition, &DecomposeOptions::default())?;
                    (vec![SuiteCase { index: 0, formula: f, partition, reduction }], 0)
                }
                (None, Some(spec)) => {
                    let mut spec = SuiteSpec::parse(&spec).map_err(Failure::usage)?;
                    spec.count = trials;
                    spec.seed = seed;
                    draw_suite(&spec, &tau, &comp).map_err(|e| match e {
                        DecomposeError::Malformed(m) => Failure::inconclusive(m),
                        e => Failure::from(e),
                    })?
                }
                _ => return Err(Failure::usage("give one of --formula, --random or --replay")),
            };
            let report = check_suite(&cases, &comp, &grid, exec)?;
            if let Some(cx) = report.counterexample {
                println!("{}", serde_json::to_string_pretty(&cx).expect("json serializes"));
                return Ok(VIOLATION);
            }
            if !report.discipline_failures.is_empty() {
                println!("{}", json!({ "discipline_failures": report.discipline_failures }));
                return Ok(VIOLATION);
            }
            println!(
                "ok: {} formulas, {} cases on {} operand pairs, {} oversized draws replaced",
                report.formulas,
                report.cases,
                grid.pairs.len(),
                replaced
            );
            Ok(0)
        }
        Command::Game { mode, n, k, left, right, left_tuple, right_tuple, max_positions, sequential } => {
            let (a, b) = (load_structure(&left)?, load_structure(&right)?);
            let t1 = a.resolve(&id_list(&left_tuple)).map_err(Failure::usage)?;
            let t2 = b.resolve(&id_list(&right_tuple)).map_err(Failure::usage)?;
            let opts = GameOptions { max_positions, exec: if sequential { ExecMode::Sequential } else { ExecMode::Parallel } };
            let cfg = GameConfig::new(n, k);
            let winner = match mode {
                GameMode::Prefix => prefix_game_winner_with(cfg, &a, &t1, &b, &t2, &opts)?,
                GameMode::Tree => tree_prefix_game_winner_with(cfg, &a, &t1, &b, &t2, &opts)?,
            };
            println!("{winner}");
            Ok(0)
        }
        Command::Enumerate { class, n, k, structures, vars, max_classes } => {
            let bed = TestBed::new(load_dir(&structures)?, var_list(&vars))?;
            let caps = Caps { max_classes, ..Default::default() };
            for c in enumerate_classes(class, n, k, &bed, caps)? {
                println!("{} {}", bits_to_hex(&c.bits), print_formula(&c.representative));
            }
            Ok(0)
        }
        Command::CountCheck { n, m, t, structures, vocab, max_size, max_classes } => {
            let structs = match structures {
                Some(dir) => load_dir(&dir)?,
                None => all_structures(&parse_vocab(&vocab)?, max_size),
            };
            let tau = structs.first().map(|s| s.vocab().clone()).ok_or_else(|| Failure::usage("no structures"))?;
            let vars = (1..=t).map(|i| Var::from(format!("x{i}").as_str())).collect();
            let bed = TestBed::new(structs, vars)?;
            let caps = Caps { max_classes, ..Default::default() };
            let c = count_bound_check(n, m, t, &tau, &bed, caps)?;
            println!(
                "{}",
                json!({ "count": c.count, "bound": c.bound_text(), "bound_level": c.bound_level, "bound_base": c.bound_base, "ok": c.ok })
            );
            Ok(if c.ok { 0 } else { VIOLATION })
        }
        Command::Bench { max_n, max_m, count, seed, op, max_pairs } => {
            let (comp, tau) = composition(op.as_deref(), None)?;
            let vocab = comp.formula_vocab(&tau)?;
            let opts = DecomposeOptions { max_pairs, ..Default::default() };
            println!("n,m,phi_size,decomp_size,millis");
            let mut skipped = 0;
            for n in 0..=max_n {
                for m in n..=max_m {
                    for i in 0..count as u64 {
                        let mode = if i % 2 == 0 { Mode::Sigma } else { Mode::Pi };
                        let f = RandomFormulaSpec::new(mode, n, m, 3)
                            .generate(&vocab, &[], seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i))
                            .map_err(Failure::usage)?;
                        let start = Instant::now();
                        match comp.decompose(&f, &tau, &VarPartition::sentence(), &opts) {
                            Ok(d) => {
                                let millis = start.elapsed().as_secs_f64() * 1000.0;
                                println!("{n},{m},{},{},{millis:.3}", f.size(), d.stats().total_size);
                            }
                            Err(DecomposeError::TooLarge { .. }) => skipped += 1,
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
            if skipped > 0 {
                eprintln!("{skipped} formulas skipped above {max_pairs} pairs");
            }
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_structure(path: &Path) -> Result<Structure, Failure> {
    Structure::from_json(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_dir(dir: &Path) -> Result<Vec<Structure>, Failure> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_structure(p)).collect()
}

fn parse_vocab(text: &str) -> Result<Vocabulary, Failure> {
    Vocabulary::from_json(text).map_err(|e| Failure::usage(format!("vocabulary: {e}")))
}

fn var_list(text: &str) -> Vec<Var> {
    id_list(text).iter().map(|v| Var::from(v.as_str())).collect()
}

fn id_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Parses an operation name and picks the operand vocabulary: the given
/// one, or the operation's default.
fn composition(name: Option<&str>, vocab: Option<&str>) -> Result<(Composition, Vocabulary), Failure> {
    let tau = vocab.map(parse_vocab).transpose()?;
    let name = name.unwrap_or("annotated");
    if name == "annotated" {
        let tau = match tau {
            Some(t) => t,
            None => parse_vocab(r#"{"E":2}"#)?,
        };
        return Ok((Composition::Annotated, tau));
    }
    let (base, param) = match name.split_once(':') {
        Some((b, p)) => (b, Some(p)),
        None => (name, None),
    };
    let op = match (base, param) {
        ("nlc-sum", Some(path)) => BuiltinOp::from_name(base, Some(&read(Path::new(path))?))?,
        ("ordered-sum", Some(rel)) => BuiltinOp::OrderedSum { rel: rel.to_string() },
        ("join", Some(rel)) => BuiltinOp::Join { rel: rel.to_string() },
        (_, None) => BuiltinOp::from_name(base, None)?,
        _ => return Err(Failure::usage(format!("operation `{name}` takes no parameter"))),
    };
    let tau = match tau {
        Some(t) => t,
        None => op.default_vocab(),
    };
    Ok((Composition::builtin(op, &tau)?, tau))
}
