//! Rewriting moves on dice words.
//!
//! Three families of moves are implemented:
//!
//! * symmetric exchange: `…xy…yx…` becomes `…yx…xy…` (both windows at once),
//!   which leaves every win count unchanged;
//! * triple rotation: a block `xyz` of three distinct letters trades places
//!   with a neighbouring factor `τ` whose letter counts are equal. The literal
//!   form moves the first three letters to the back or the last three to the
//!   front; the in-context form does the same to any interior segment
//!   `xyz·τ ↔ τ·xyz`. Both leave every win count unchanged;
//! * the `Step2` replacement `AB, BC, CA → BA, CB, AC` on three disjoint
//!   windows, which raises each of the three counts by exactly one.
//!
//! Positions are 1-based and name the left cell of a window.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::word::{DiceWord, Letter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewriteMove {
    SymmExchange { i: usize, j: usize },
    TripleRotateFrontToBack,
    TripleRotateBackToFront,
    /// Segment `i..=j` reads `xyz·τ` and becomes `τ·xyz`.
    BlockRotateRight { i: usize, j: usize },
    /// Segment `i..=j` reads `τ·xyz` and becomes `xyz·τ`.
    BlockRotateLeft { i: usize, j: usize },
    Step2 { i: usize, j: usize, k: usize },
}

impl RewriteMove {
    /// Whether the move keeps all three win counts fixed.
    pub fn preserves_counts(&self) -> bool {
        !matches!(self, RewriteMove::Step2 { .. })
    }
}

impl fmt::Display for RewriteMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RewriteMove::SymmExchange { i, j } => write!(f, "SymmExchange({i},{j})"),
            RewriteMove::TripleRotateFrontToBack => write!(f, "TripleRotateFrontToBack"),
            RewriteMove::TripleRotateBackToFront => write!(f, "TripleRotateBackToFront"),
            RewriteMove::BlockRotateRight { i, j } => write!(f, "BlockRotateRight({i},{j})"),
            RewriteMove::BlockRotateLeft { i, j } => write!(f, "BlockRotateLeft({i},{j})"),
            RewriteMove::Step2 { i, j, k } => write!(f, "Step2({i},{j},{k})"),
        }
    }
}

/// Which count-preserving moves a similarity search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSet {
    /// Symmetric exchanges plus triple rotations at the ends of the word only.
    Strict,
    /// `Strict` plus triple rotations of interior segments.
    #[default]
    InContext,
}

fn window(letters: &[Letter], i: usize, what: &str) -> Result<(Letter, Letter)> {
    if i == 0 || i + 1 > letters.len() {
        return Err(Error::Precondition(format!(
            "{what}: window at {i} is out of range for length {}",
            letters.len()
        )));
    }
    Ok((letters[i - 1], letters[i]))
}

fn disjoint(p: usize, q: usize) -> bool {
    p.abs_diff(q) >= 2
}

fn equal_counts(letters: &[Letter]) -> bool {
    let mut c = [0usize; 3];
    for &l in letters {
        c[l.index()] += 1;
    }
    c[0] == c[1] && c[1] == c[2]
}

fn distinct3(letters: &[Letter]) -> bool {
    letters.len() == 3
        && letters[0] != letters[1]
        && letters[1] != letters[2]
        && letters[0] != letters[2]
}

fn check_block(letters: &[Letter], i: usize, j: usize, mv: &RewriteMove) -> Result<()> {
    if i == 0 || j > letters.len() || j < i + 5 || !(j + 1 - i).is_multiple_of(3) {
        return Err(Error::Precondition(format!(
            "{mv}: segment {i}..={j} must lie in 1..={} with length a multiple of 3, at least 6",
            letters.len()
        )));
    }
    Ok(())
}

/// Applies a move without requiring the word to be complete. Window
/// patterns are still validated.
pub(crate) fn apply_lenient(word: &DiceWord, mv: &RewriteMove) -> Result<DiceWord> {
    let letters = word.letters();
    let mut out = word.clone();
    match *mv {
        RewriteMove::SymmExchange { i, j } => {
            let (x, y) = window(letters, i, &mv.to_string())?;
            let (u, v) = window(letters, j, &mv.to_string())?;
            if !disjoint(i, j) {
                return Err(Error::Precondition(format!("{mv}: windows {i} and {j} overlap")));
            }
            if x == y || u != y || v != x {
                return Err(Error::Precondition(format!(
                    "{mv}: windows read {x}{y} and {u}{v}, expected xy and yx"
                )));
            }
            let m = out.letters_mut();
            m.swap(i - 1, i);
            m.swap(j - 1, j);
        }
        RewriteMove::TripleRotateFrontToBack => {
            if letters.len() < 3 || !distinct3(&letters[..3]) {
                return Err(Error::Precondition(format!(
                    "{mv}: first three letters must be distinct"
                )));
            }
            if !equal_counts(&letters[3..]) {
                return Err(Error::Precondition(format!(
                    "{mv}: the remainder must have equal letter counts"
                )));
            }
            out.letters_mut().rotate_left(3);
        }
        RewriteMove::TripleRotateBackToFront => {
            let len = letters.len();
            if len < 3 || !distinct3(&letters[len - 3..]) {
                return Err(Error::Precondition(format!(
                    "{mv}: last three letters must be distinct"
                )));
            }
            if !equal_counts(&letters[..len - 3]) {
                return Err(Error::Precondition(format!(
                    "{mv}: the remainder must have equal letter counts"
                )));
            }
            out.letters_mut().rotate_right(3);
        }
        RewriteMove::BlockRotateRight { i, j } => {
            check_block(letters, i, j, mv)?;
            let seg = &letters[i - 1..j];
            if !distinct3(&seg[..3]) || !equal_counts(&seg[3..]) {
                return Err(Error::Precondition(format!(
                    "{mv}: segment must read xyz·τ with distinct x, y, z and balanced τ"
                )));
            }
            out.letters_mut()[i - 1..j].rotate_left(3);
        }
        RewriteMove::BlockRotateLeft { i, j } => {
            check_block(letters, i, j, mv)?;
            let seg = &letters[i - 1..j];
            let len = seg.len();
            if !distinct3(&seg[len - 3..]) || !equal_counts(&seg[..len - 3]) {
                return Err(Error::Precondition(format!(
                    "{mv}: segment must read τ·xyz with distinct x, y, z and balanced τ"
                )));
            }
            out.letters_mut()[i - 1..j].rotate_right(3);
        }
        RewriteMove::Step2 { i, j, k } => {
            let name = mv.to_string();
            let expect = [
                (i, Letter::A, Letter::B),
                (j, Letter::B, Letter::C),
                (k, Letter::C, Letter::A),
            ];
            for &(pos, x, y) in &expect {
                let got = window(letters, pos, &name)?;
                if got != (x, y) {
                    return Err(Error::Precondition(format!(
                        "{name}: window at {pos} reads {}{}, expected {x}{y}",
                        got.0, got.1
                    )));
                }
            }
            if !(disjoint(i, j) && disjoint(j, k) && disjoint(i, k)) {
                return Err(Error::Precondition(format!("{name}: windows overlap")));
            }
            let m = out.letters_mut();
            for pos in [i, j, k] {
                m.swap(pos - 1, pos);
            }
        }
    }
    Ok(out)
}

/// Applies one move to a complete word.
pub fn apply_move(word: &DiceWord, mv: &RewriteMove) -> Result<DiceWord> {
    word.sides()?;
    apply_lenient(word, mv)
}

/// All disjoint `(AB, BC, CA)` window triples, ordered by `(i, j, k)`.
pub fn find_step2_sites(word: &DiceWord) -> Result<Vec<RewriteMove>> {
    word.sides()?;
    let letters = word.letters();
    let windows = |x: Letter, y: Letter| -> Vec<usize> {
        letters
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] == x && w[1] == y)
            .map(|(p, _)| p + 1)
            .collect()
    };
    let ab = windows(Letter::A, Letter::B);
    let bc = windows(Letter::B, Letter::C);
    let ca = windows(Letter::C, Letter::A);
    let mut sites = Vec::new();
    for &i in &ab {
        for &j in bc.iter().filter(|&&j| disjoint(i, j)) {
            for &k in ca.iter().filter(|&&k| disjoint(i, k) && disjoint(j, k)) {
                sites.push(RewriteMove::Step2 { i, j, k });
            }
        }
    }
    Ok(sites)
}

/// Count-preserving moves available at `word`, in the fixed enumeration
/// order (window position ascending, exchanges before rotations).
pub fn neighbours(word: &DiceWord, moves: MoveSet) -> Vec<(RewriteMove, DiceWord)> {
    let letters = word.letters();
    let len = letters.len();
    let mut out = Vec::new();
    for i in 1..len {
        let (x, y) = (letters[i - 1], letters[i]);
        if x == y {
            continue;
        }
        for j in i + 2..len {
            if letters[j - 1] == y && letters[j] == x {
                let mv = RewriteMove::SymmExchange { i, j };
                let mut next = word.clone();
                let m = next.letters_mut();
                m.swap(i - 1, i);
                m.swap(j - 1, j);
                out.push((mv, next));
            }
        }
    }
    if len >= 3 {
        for mv in [
            RewriteMove::TripleRotateFrontToBack,
            RewriteMove::TripleRotateBackToFront,
        ] {
            if let Ok(next) = apply_lenient(word, &mv) {
                out.push((mv, next));
            }
        }
    }
    if moves == MoveSet::InContext {
        for i in 1..=len.saturating_sub(5) {
            let head_distinct = distinct3(&letters[i - 1..i + 2]);
            // j = i+2 + 3k, τ = letters[i+2..j]
            let mut j = i + 5;
            while j <= len {
                if !(i == 1 && j == len) {
                    if head_distinct && equal_counts(&letters[i + 2..j]) {
                        let mv = RewriteMove::BlockRotateRight { i, j };
                        let mut next = word.clone();
                        next.letters_mut()[i - 1..j].rotate_left(3);
                        out.push((mv, next));
                    }
                    if distinct3(&letters[j - 3..j]) && equal_counts(&letters[i - 1..j - 3]) {
                        let mv = RewriteMove::BlockRotateLeft { i, j };
                        let mut next = word.clone();
                        next.letters_mut()[i - 1..j].rotate_right(3);
                        out.push((mv, next));
                    }
                }
                j += 3;
            }
        }
    }
    out
}

/// A replayable sequence of moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovePath {
    pub start: DiceWord,
    pub moves: Vec<RewriteMove>,
    pub end: DiceWord,
}

impl MovePath {
    pub fn trivial(word: DiceWord) -> Self {
        MovePath {
            start: word.clone(),
            moves: Vec::new(),
            end: word,
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Replays the moves from `start`, calling `inspect` on every
    /// intermediate word (including the start), and checks the endpoint.
    pub fn replay_with(&self, mut inspect: impl FnMut(&DiceWord)) -> Result<()> {
        let mut cur = self.start.clone();
        inspect(&cur);
        for mv in &self.moves {
            cur = apply_lenient(&cur, mv)?;
            inspect(&cur);
        }
        if cur != self.end {
            return Err(Error::Precondition(format!(
                "replay ends at {cur}, path claims {}",
                self.end
            )));
        }
        Ok(())
    }

    pub fn verify(&self) -> Result<()> {
        self.replay_with(|_| {})
    }

    /// Appends another path that starts where this one ends.
    pub fn extend(&mut self, other: MovePath) -> Result<()> {
        if other.start != self.end {
            return Err(Error::Precondition(format!(
                "cannot join paths: {} then {}",
                self.end, other.start
            )));
        }
        self.moves.extend(other.moves);
        self.end = other.end;
        Ok(())
    }
}

/// Outcome of a bounded similarity search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Similarity {
    Similar(MovePath),
    /// The whole similarity class of the start word was explored.
    NotSimilar { explored: usize },
    /// The state budget ran out first.
    Unknown { explored: usize },
}

pub const DEFAULT_BUDGET: usize = 2_000_000;

struct Node {
    parent: usize,
    mv: Option<RewriteMove>,
}

/// Level-synchronous breadth-first search. Frontier expansion runs in
/// parallel; the merge into the visited set is sequential in frontier order,
/// so the discovered tree does not depend on scheduling.
struct Search {
    moves: MoveSet,
    words: Vec<DiceWord>,
    nodes: Vec<Node>,
    index: HashMap<DiceWord, usize>,
}

enum Stop {
    Found(usize),
    Exhausted,
    Budget,
}

impl Search {
    fn new(sources: impl IntoIterator<Item = DiceWord>, moves: MoveSet) -> Self {
        let mut s = Search {
            moves,
            words: Vec::new(),
            nodes: Vec::new(),
            index: HashMap::new(),
        };
        for w in sources {
            if !s.index.contains_key(&w) {
                s.index.insert(w.clone(), s.words.len());
                s.words.push(w);
                s.nodes.push(Node {
                    parent: usize::MAX,
                    mv: None,
                });
            }
        }
        s
    }

    fn run(&mut self, budget: usize, is_goal: impl Fn(&DiceWord) -> bool) -> Stop {
        if let Some(hit) = self.words.iter().position(&is_goal) {
            return Stop::Found(hit);
        }
        let mut frontier: Vec<usize> = (0..self.words.len()).collect();
        while !frontier.is_empty() {
            let expanded: Vec<Vec<(RewriteMove, DiceWord)>> = frontier
                .par_iter()
                .map(|&idx| neighbours(&self.words[idx], self.moves))
                .collect();
            let mut next = Vec::new();
            for (&parent, succ) in frontier.iter().zip(expanded) {
                for (mv, word) in succ {
                    if self.index.contains_key(&word) {
                        continue;
                    }
                    if self.words.len() >= budget {
                        return Stop::Budget;
                    }
                    let idx = self.words.len();
                    let goal = is_goal(&word);
                    self.index.insert(word.clone(), idx);
                    self.words.push(word);
                    self.nodes.push(Node {
                        parent,
                        mv: Some(mv),
                    });
                    if goal {
                        return Stop::Found(idx);
                    }
                    next.push(idx);
                }
            }
            frontier = next;
        }
        Stop::Exhausted
    }

    fn path_to(&self, mut idx: usize) -> MovePath {
        let end = self.words[idx].clone();
        let mut moves = Vec::new();
        while let Some(mv) = self.nodes[idx].mv {
            moves.push(mv);
            idx = self.nodes[idx].parent;
        }
        moves.reverse();
        MovePath {
            start: self.words[idx].clone(),
            moves,
            end,
        }
    }
}

/// Shortest rewrite path from `from` to `to` using count-preserving moves.
/// Among shortest paths the lexicographically smallest move sequence is
/// returned.
pub fn similar(from: &DiceWord, to: &DiceWord, budget: usize, moves: MoveSet) -> Result<Similarity> {
    if from.len() != to.len() {
        return Err(Error::LengthMismatch {
            left: from.len(),
            right: to.len(),
        });
    }
    from.sides()?;
    to.sides()?;
    let mut search = Search::new([from.clone()], moves);
    Ok(match search.run(budget.max(1), |w| w == to) {
        Stop::Found(idx) => Similarity::Similar(search.path_to(idx)),
        Stop::Exhausted => Similarity::NotSimilar {
            explored: search.words.len(),
        },
        Stop::Budget => Similarity::Unknown {
            explored: search.words.len(),
        },
    })
}

/// The union of the similarity classes of `sources`.
#[derive(Debug, Clone)]
pub struct Reachable {
    words: HashMap<DiceWord, usize>,
    /// False when the budget stopped the search before the classes closed.
    pub complete: bool,
}

impl Reachable {
    pub fn contains(&self, word: &DiceWord) -> bool {
        self.words.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &DiceWord> {
        self.words.keys()
    }
}

pub fn similarity_class(
    sources: &[DiceWord],
    budget: usize,
    moves: MoveSet,
) -> Result<Reachable> {
    for s in sources {
        s.sides()?;
    }
    let mut search = Search::new(sources.iter().cloned(), moves);
    let complete = match search.run(budget.max(1), |_| false) {
        Stop::Exhausted => true,
        Stop::Budget => false,
        Stop::Found(_) => unreachable!("goal predicate is constant false"),
    };
    Ok(Reachable {
        words: search.index,
        complete,
    })
}

/// Rewrites a fair two-letter word over `{A, B}` to `(ABBA)^m`, or to
/// `(BAAB)^m` when it starts with `B`, using symmetric exchanges only.
///
/// Works position by position: the first letter that disagrees with the
/// target is fixed by walking the next occurrence of the wanted letter
/// leftwards, one adjacent swap at a time, each paired with the opposite swap
/// on a window further right.
pub fn normalize_two_letter_fair(word: &DiceWord) -> Result<MovePath> {
    let letters = word.letters();
    if letters.contains(&Letter::C) {
        return Err(domain("two-letter normalization takes words over A and B only"));
    }
    let len = letters.len();
    let [a, b, _] = word.letter_counts();
    if !len.is_multiple_of(4) || a != b {
        return Err(domain(format!(
            "{word}: expected length 4m with equal A and B counts, got {a} A and {b} B"
        )));
    }
    let m = (len / 4) as u64;
    let wins = word.wins(Letter::A, Letter::B);
    if wins != 2 * m * m {
        return Err(domain(format!(
            "{word} is not fair: N(A>B) = {wins}, expected {}",
            2 * m * m
        )));
    }
    if len == 0 {
        return Ok(MovePath::trivial(word.clone()));
    }
    let block = if letters[0] == Letter::A {
        [Letter::A, Letter::B, Letter::B, Letter::A]
    } else {
        [Letter::B, Letter::A, Letter::A, Letter::B]
    };
    let target: Vec<Letter> = block.iter().copied().cycle().take(len).collect();

    let mut cur = letters.to_vec();
    let mut moves = Vec::new();
    for p in 0..len {
        if cur[p] == target[p] {
            continue;
        }
        let want = target[p];
        let other = cur[p];
        let mut q = (p + 1..len)
            .find(|&k| cur[k] == want)
            .expect("letter counts match the target");
        while q > p {
            // (q-1, q) reads other·want; pair with a want·other window right of q
            let k = (q + 1..len - 1)
                .find(|&k| cur[k] == want && cur[k + 1] == other)
                .ok_or_else(|| {
                    domain(format!(
                        "normalization stuck at {} (position {})",
                        DiceWord::new(cur.clone()),
                        q
                    ))
                })?;
            cur.swap(q - 1, q);
            cur.swap(k, k + 1);
            moves.push(RewriteMove::SymmExchange { i: q, j: k + 1 });
            q -= 1;
        }
    }
    Ok(MovePath {
        start: word.clone(),
        moves,
        end: DiceWord::new(cur),
    })
}
