//! Exact arithmetic for balanced non-transitive dice.
//!
//! A set of three `n`-sided dice with labels `1..=3n` is encoded as a word
//! over `{A, B, C}` whose `i`-th letter names the die holding label `i`.
//! Win counts, probabilities, rewriting moves, constructions and exhaustive
//! scans all work on that encoding with integers and reduced fractions.

pub mod algebra;
pub mod bounds;
pub mod construct;
pub mod enumerate;
pub mod error;
pub mod rational;
pub mod rewrite;
pub mod word;

pub use algebra::{combined_probability, concat, is_irreducible, predict_counts, IrreducibilityReport};
pub use error::{Error, Result};
pub use rational::{Probability, Rational};
pub use rewrite::{apply_move, similar, MovePath, MoveSet, RewriteMove, Similarity};
pub use word::{DiceSet, DiceWord, Letter, PairCounts, Verdict};
