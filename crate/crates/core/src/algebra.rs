//! Concatenation laws and irreducibility.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rational::{Probability, Rational};
use crate::word::{DiceWord, PairCounts};

/// Concatenates two complete words; the second word's labels land above the
/// first word's.
pub fn concat(first: &DiceWord, second: &DiceWord) -> Result<DiceWord> {
    first.sides()?;
    second.sides()?;
    Ok(first.concat(second))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcatPrediction {
    pub m: u64,
    pub n: u64,
    pub predicted: PairCounts,
}

/// Counts of `στ` from the counts of `σ` (m sides) and `τ` (n sides):
/// each component is the sum of the operands plus `m·n`.
pub fn predict_counts(first: &PairCounts, second: &PairCounts) -> ConcatPrediction {
    let cross = first.n * second.n;
    ConcatPrediction {
        m: first.n,
        n: second.n,
        predicted: PairCounts {
            n: first.n + second.n,
            ab: first.ab + second.ab + cross,
            bc: first.bc + second.bc + cross,
            ca: first.ca + second.ca + cross,
        },
    }
}

/// `½ + ((count₁ − m²/2) + (count₂ − n²/2)) / (m+n)²`, i.e. the
/// probability of the concatenation written through each factor's distance
/// from fairness.
pub fn combined_probability(m: u64, count1: u64, n: u64, count2: u64) -> Result<Probability> {
    if m + n == 0 {
        return Err(domain("combined probability needs at least one side"));
    }
    if count1 > m * m || count2 > n * n {
        return Err(domain(format!(
            "counts out of range: {count1} > {m}² or {count2} > {n}²"
        )));
    }
    let half = Rational::new(1, 2);
    let dev = |count: u64, sides: u64| {
        Rational::from_integer(count as i128) - Rational::new((sides * sides) as i128, 2)
    };
    let total = (m + n) as i128;
    let p = half + (dev(count1, m) + dev(count2, n)) / Rational::from_integer(total * total);
    Ok(Probability::from_rational(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub irreducible: bool,
    /// Prefix length (a multiple of 3) at which both factors are balanced
    /// and non-transitive; the smallest one is reported.
    pub witness_split: Option<usize>,
}

/// Checks every binary split `w = σ₁σ₂` into nonempty complete words for a
/// pair of balanced non-transitive factors.
pub fn is_irreducible(word: &DiceWord) -> Result<IrreducibilityReport> {
    let verdict = word.classify()?;
    if !(verdict.balanced && verdict.nontransitive) {
        return Err(domain(format!(
            "irreducibility is only defined for balanced non-transitive words; {word} is not"
        )));
    }
    let letters = word.letters();
    let mut tally = [0u64; 3];
    let mut wins = [0u64; 3];
    for (i, &l) in letters.iter().enumerate().take(letters.len().saturating_sub(1)) {
        let idx = l.index();
        wins[idx] += tally[l.prey().index()];
        tally[idx] += 1;
        // cheap screen: equal letter counts, then the prefix itself
        if tally[0] != tally[1] || tally[1] != tally[2] {
            continue;
        }
        let prefix = PairCounts::new(tally[0], wins[0], wins[1], wins[2]);
        if !(prefix.is_balanced() && prefix.is_nontransitive()) {
            continue;
        }
        let split = i + 1;
        let suffix = word.slice(split, letters.len()).pair_counts()?;
        if suffix.is_balanced() && suffix.is_nontransitive() {
            return Ok(IrreducibilityReport {
                irreducible: false,
                witness_split: Some(split),
            });
        }
    }
    Ok(IrreducibilityReport {
        irreducible: true,
        witness_split: None,
    })
}
