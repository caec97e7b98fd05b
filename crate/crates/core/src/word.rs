//! Dice sets, their words, and exact win counts.
//!
//! A set of `n`-sided dice splits the labels `1..=3n` into three dice. Its
//! word has one letter per label: position `i` (1-based) names the die that
//! carries label `i`. All probability questions about the set reduce to
//! counting ordered letter pairs in the word.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Letter {
    A = 0,
    B = 1,
    C = 2,
}

impl Letter {
    pub const ALL: [Letter; 3] = [Letter::A, Letter::B, Letter::C];

    pub fn from_char(ch: char) -> Option<Letter> {
        match ch {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            'C' => Some(Letter::C),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'A',
            Letter::B => 'B',
            Letter::C => 'C',
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Letter {
        Letter::ALL[i]
    }

    /// The die this one is supposed to beat in the cycle A > B > C > A.
    #[inline]
    pub fn prey(self) -> Letter {
        Letter::from_index((self.index() + 1) % 3)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A word over `{A, B, C}`. Complete words have equal letter counts; other
/// words are representable as rewrite intermediates but rejected by every
/// counting operation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DiceWord {
    letters: Vec<Letter>,
}

impl DiceWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        DiceWord { letters }
    }

    pub fn empty() -> Self {
        DiceWord::default()
    }

    /// Parses the plain letter serialization. Incomplete words parse fine;
    /// check [`DiceWord::is_complete`] before counting.
    pub fn parse(text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .enumerate()
            .map(|(i, ch)| {
                Letter::from_char(ch).ok_or(Error::Format {
                    position: i + 1,
                    found: ch,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiceWord { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// 1-based access, matching label numbering.
    pub fn at(&self, position: usize) -> Option<Letter> {
        position
            .checked_sub(1)
            .and_then(|i| self.letters.get(i).copied())
    }

    pub fn letter_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &l in &self.letters {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn is_complete(&self) -> bool {
        let [a, b, c] = self.letter_counts();
        a == b && b == c
    }

    /// Number of sides `n` of a complete word, or the incompleteness error.
    pub fn sides(&self) -> Result<usize> {
        let [a, b, c] = self.letter_counts();
        if a == b && b == c {
            Ok(a)
        } else {
            Err(Error::Incomplete { a, b, c })
        }
    }

    /// Number of label pairs where a letter `winner` sits above a letter
    /// `loser`. Defined for any word, complete or not.
    pub fn wins(&self, winner: Letter, loser: Letter) -> u64 {
        let mut seen = 0u64;
        let mut total = 0u64;
        for &l in &self.letters {
            if l == winner {
                total += seen;
            }
            if l == loser {
                seen += 1;
            }
        }
        total
    }

    /// `(N(A>B), N(B>C), N(C>A))` in one left-to-right pass over running
    /// letter tallies, for any word.
    pub fn raw_counts(&self) -> (u64, u64, u64) {
        let mut tally = [0u64; 3];
        let mut out = [0u64; 3];
        for &l in &self.letters {
            let i = l.index();
            out[i] += tally[l.prey().index()];
            tally[i] += 1;
        }
        (out[0], out[1], out[2])
    }

    pub fn pair_counts(&self) -> Result<PairCounts> {
        let n = self.sides()? as u64;
        let (ab, bc, ca) = self.raw_counts();
        Ok(PairCounts { n, ab, bc, ca })
    }

    pub fn classify(&self) -> Result<Verdict> {
        Ok(Verdict::from_counts(self.pair_counts()?))
    }

    pub fn from_dice(dice: &DiceSet) -> DiceWord {
        let mut letters = vec![Letter::A; 3 * dice.n];
        for (letter, labels) in [
            (Letter::A, &dice.a),
            (Letter::B, &dice.b),
            (Letter::C, &dice.c),
        ] {
            for &label in labels {
                letters[label as usize - 1] = letter;
            }
        }
        DiceWord { letters }
    }

    pub fn to_dice(&self) -> Result<DiceSet> {
        let n = self.sides()?;
        let mut sets: [Vec<u32>; 3] = Default::default();
        for (i, &l) in self.letters.iter().enumerate() {
            sets[l.index()].push(i as u32 + 1);
        }
        let [a, b, c] = sets;
        Ok(DiceSet { n, a, b, c })
    }

    pub fn concat(&self, other: &DiceWord) -> DiceWord {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        DiceWord { letters }
    }

    pub fn repeat(&self, times: usize) -> DiceWord {
        DiceWord {
            letters: self.letters.repeat(times),
        }
    }

    pub fn slice(&self, from: usize, to: usize) -> DiceWord {
        DiceWord {
            letters: self.letters[from..to].to_vec(),
        }
    }

    /// Mutable access for the rewriting layer.
    pub(crate) fn letters_mut(&mut self) -> &mut [Letter] {
        &mut self.letters
    }
}

impl fmt::Display for DiceWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for DiceWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiceWord::parse(s)
    }
}

impl Serialize for DiceWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DiceWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        DiceWord::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Three disjoint label sets of size `n` covering `1..=3n`. Labels are kept
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDiceSet")]
pub struct DiceSet {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<u32>,
    #[serde(rename = "B")]
    b: Vec<u32>,
    #[serde(rename = "C")]
    c: Vec<u32>,
}

#[derive(Deserialize)]
struct RawDiceSet {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<u32>,
    #[serde(rename = "B")]
    b: Vec<u32>,
    #[serde(rename = "C")]
    c: Vec<u32>,
}

impl TryFrom<RawDiceSet> for DiceSet {
    type Error = Error;

    fn try_from(raw: RawDiceSet) -> Result<Self> {
        DiceSet::new(raw.n, raw.a, raw.b, raw.c)
    }
}

impl DiceSet {
    pub fn new(n: usize, a: Vec<u32>, b: Vec<u32>, c: Vec<u32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDice("n must be positive".into()));
        }
        let top = 3 * n as u32;
        let mut owner: Vec<Option<char>> = vec![None; 3 * n];
        for (name, labels) in [('A', &a), ('B', &b), ('C', &c)] {
            if labels.len() != n {
                return Err(Error::InvalidDice(format!(
                    "die {name} has {} labels, expected {n}",
                    labels.len()
                )));
            }
            for &label in labels {
                if label == 0 || label > top {
                    return Err(Error::InvalidDice(format!(
                        "label {label} on die {name} is outside 1..={top}"
                    )));
                }
                let slot = &mut owner[label as usize - 1];
                if let Some(prev) = *slot {
                    return Err(Error::InvalidDice(if prev == name {
                        format!("label {label} repeated on die {name}")
                    } else {
                        format!("label {label} appears on both die {prev} and die {name}")
                    }));
                }
                *slot = Some(name);
            }
        }
        // sizes are n each and labels are distinct, so every label is covered
        let sorted = |v: Vec<u32>| v.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(DiceSet {
            n,
            a: sorted(a),
            b: sorted(b),
            c: sorted(c),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self, die: Letter) -> &[u32] {
        match die {
            Letter::A => &self.a,
            Letter::B => &self.b,
            Letter::C => &self.c,
        }
    }
}

/// Winning-pair counts of a complete word: `ab = N(A>B)` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairCounts {
    pub n: u64,
    pub ab: u64,
    pub bc: u64,
    pub ca: u64,
}

impl PairCounts {
    pub fn new(n: u64, ab: u64, bc: u64, ca: u64) -> Self {
        PairCounts { n, ab, bc, ca }
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.ab, self.bc, self.ca]
    }

    pub fn squares(&self) -> u64 {
        self.n * self.n
    }

    pub fn is_balanced(&self) -> bool {
        self.ab == self.bc && self.bc == self.ca
    }

    pub fn is_nontransitive(&self) -> bool {
        let sq = self.squares();
        2 * self.ab > sq && 2 * self.bc > sq && 2 * self.ca > sq
    }

    pub fn is_fair(&self) -> bool {
        let sq = self.squares();
        2 * self.ab == sq && 2 * self.bc == sq && 2 * self.ca == sq
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub counts: PairCounts,
    pub p_ab: Probability,
    pub p_bc: Probability,
    pub p_ca: Probability,
    pub balanced: bool,
    pub nontransitive: bool,
    pub fair: bool,
}

impl Verdict {
    pub fn from_counts(counts: PairCounts) -> Self {
        let sq = counts.squares();
        let p = |x: u64| {
            if sq == 0 {
                Probability::zero()
            } else {
                Probability::new(x as i128, sq as i128)
            }
        };
        Verdict {
            counts,
            p_ab: p(counts.ab),
            p_bc: p(counts.bc),
            p_ca: p(counts.ca),
            balanced: counts.is_balanced(),
            nontransitive: counts.is_nontransitive(),
            fair: counts.is_fair(),
        }
    }

    /// The single win probability of a balanced word.
    pub fn common_probability(&self) -> Option<Probability> {
        self.balanced.then_some(self.p_ab)
    }
}
