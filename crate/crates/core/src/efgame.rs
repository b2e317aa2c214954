//! Winners of the (n,k)-prefix and (n,k)-tree-prefix games.
//!
//! Each round Spoiler picks a k-tuple (repeats allowed) on one board and
//! Duplicator answers with a k-tuple on the other. In the prefix game the
//! boards alternate, Spoiler starting on the first. Duplicator wins if the
//! chosen elements, together with the starting tuples, form a partial
//! isomorphism after the last round.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, ExecMode};
use crate::structure::{partial_iso_unchecked, Structure};

/// Default bound on visited game positions per solver.
pub const DEFAULT_MAX_POSITIONS: u64 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("starting tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("the two structures have different vocabularies")]
    VocabularyMismatch,
    #[error("tuple size must be at least 1 when rounds are played")]
    EmptyMoves,
    #[error("tuple entry {0} is outside the universe")]
    BadElement(usize),
    #[error("search exceeded {0} game positions")]
    WorkCapExceeded(u64),
}

/// Number of rounds and the length of the tuple chosen per move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub rounds: usize,
    pub tuple_size: usize,
}

impl GameConfig {
    pub fn new(rounds: usize, tuple_size: usize) -> Self {
        GameConfig { rounds, tuple_size }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Duplicator,
    Spoiler,
}

impl Player {
    fn from_duplicator_wins(wins: bool) -> Self {
        if wins {
            Player::Duplicator
        } else {
            Player::Spoiler
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Duplicator => "duplicator",
            Player::Spoiler => "spoiler",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameOptions {
    pub max_positions: u64,
    pub exec: ExecMode,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions { max_positions: DEFAULT_MAX_POSITIONS, exec: ExecMode::default() }
    }
}

/// Position key: rounds left, board Spoiler moves on next, tuple on board 0,
/// tuple on board 1.
type Key = (usize, usize, Vec<usize>, Vec<usize>);

struct Solver<'a> {
    boards: [&'a Structure; 2],
    k: usize,
    memo: HashMap<Key, bool>,
    visited: u64,
    cap: u64,
}

/// Writes the k-tuple with number `code` (base `n`, first entry most
/// significant) into the tail of `out`.
fn write_tuple(mut code: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

impl<'a> Solver<'a> {
    fn new(boards: [&'a Structure; 2], k: usize, cap: u64) -> Self {
        Solver { boards, k, memo: HashMap::new(), visited: 0, cap }
    }

    fn moves(&self, board: usize) -> usize {
        self.boards[board].size().pow(self.k as u32)
    }

    /// Whether Duplicator wins with `rounds` left, Spoiler next moving on
    /// board `sp`, and `t[i]` the elements chosen so far on board `i`.
    fn wins(&mut self, rounds: usize, sp: usize, t: &mut [Vec<usize>; 2]) -> Result<bool, GameError> {
        self.visited += 1;
        if self.visited > self.cap {
            return Err(GameError::WorkCapExceeded(self.cap));
        }
        // A position that is already not a partial isomorphism stays so
        // under every extension, so it decides the final check early.
        if !partial_iso_unchecked(self.boards[0], &t[0], self.boards[1], &t[1]) {
            return Ok(false);
        }
        if rounds == 0 {
            return Ok(true);
        }
        let key = (rounds, sp, t[0].clone(), t[1].clone());
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let mut out = true;
        for b in 0..self.moves(sp) {
            if !self.answerable(rounds, sp, b, t)? {
                out = false;
                break;
            }
        }
        self.memo.insert(key, out);
        Ok(out)
    }

    /// Whether Duplicator has an answer to Spoiler choosing tuple `b` on
    /// board `sp`.
    fn answerable(&mut self, rounds: usize, sp: usize, b: usize, t: &mut [Vec<usize>; 2]) -> Result<bool, GameError> {
        let du = 1 - sp;
        let (k, ns, nd) = (self.k, self.boards[sp].size(), self.boards[du].size());
        let base = t[sp].len();
        t[sp].resize(base + k, 0);
        write_tuple(b, ns, &mut t[sp][base..]);
        t[du].resize(base + k, 0);
        let mut found = false;
        for c in 0..self.moves(du) {
            write_tuple(c, nd, &mut t[du][base..]);
            if self.wins(rounds - 1, du, t)? {
                found = true;
                break;
            }
        }
        t[sp].truncate(base);
        t[du].truncate(base);
        Ok(found)
    }
}

fn validate(cfg: GameConfig, a1: &Structure, t1: &[usize], a2: &Structure, t2: &[usize]) -> Result<(), GameError> {
    if t1.len() != t2.len() {
        return Err(GameError::LengthMismatch(t1.len(), t2.len()));
    }
    if a1.vocab() != a2.vocab() {
        return Err(GameError::VocabularyMismatch);
    }
    if cfg.rounds > 0 && cfg.tuple_size == 0 {
        return Err(GameError::EmptyMoves);
    }
    for (a, t) in [(a1, t1), (a2, t2)] {
        if let Some(&bad) = t.iter().find(|&&e| e >= a.size()) {
            return Err(GameError::BadElement(bad));
        }
    }
    Ok(())
}

/// Winner of the (n,k)-prefix game on `(a1, t1)` and `(a2, t2)` with
/// Spoiler opening on `a1`. Tuples are element positions.
pub fn prefix_game_winner(
    cfg: GameConfig,
    a1: &Structure,
    t1: &[usize],
    a2: &Structure,
    t2: &[usize],
) -> Result<Player, GameError> {
    prefix_game_winner_with(cfg, a1, t1, a2, t2, &GameOptions::default())
}

pub fn prefix_game_winner_with(
    cfg: GameConfig,
    a1: &Structure,
    t1: &[usize],
    a2: &Structure,
    t2: &[usize],
    opts: &GameOptions,
) -> Result<Player, GameError> {
    validate(cfg, a1, t1, a2, t2)?;
    let boards = [a1, a2];
    let start = [t1.to_vec(), t2.to_vec()];
    if cfg.rounds == 0 || !partial_iso_unchecked(a1, t1, a2, t2) {
        let mut s = Solver::new(boards, cfg.tuple_size, opts.max_positions);
        return s.wins(cfg.rounds, 0, &mut start.clone()).map(Player::from_duplicator_wins);
    }
    // Spoiler's opening choices are independent subgames.
    let first_moves = a1.size().pow(cfg.tuple_size as u32);
    let verdicts = par::map_range(opts.exec, first_moves, |b| {
        let mut s = Solver::new(boards, cfg.tuple_size, opts.max_positions);
        s.answerable(cfg.rounds, 0, b, &mut start.clone())
    });
    for v in verdicts {
        if !v? {
            return Ok(Player::Spoiler);
        }
    }
    Ok(Player::Duplicator)
}

/// Winner of the (n,k)-tree-prefix game: Duplicator wins iff she wins the
/// prefix game with Spoiler opening on either structure.
pub fn tree_prefix_game_winner(
    cfg: GameConfig,
    a1: &Structure,
    t1: &[usize],
    a2: &Structure,
    t2: &[usize],
) -> Result<Player, GameError> {
    tree_prefix_game_winner_with(cfg, a1, t1, a2, t2, &GameOptions::default())
}

pub fn tree_prefix_game_winner_with(
    cfg: GameConfig,
    a1: &Structure,
    t1: &[usize],
    a2: &Structure,
    t2: &[usize],
    opts: &GameOptions,
) -> Result<Player, GameError> {
    if prefix_game_winner_with(cfg, a1, t1, a2, t2, opts)? == Player::Spoiler {
        return Ok(Player::Spoiler);
    }
    prefix_game_winner_with(cfg, a2, t2, a1, t1, opts)
}
