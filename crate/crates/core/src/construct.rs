//! Construction families: irreducible words for every `n ≥ 3`, words with
//! probability arbitrarily close to one half, and the block-word optimizer
//! that pushes the common probability up with `Step2` replacements.

use serde::{Deserialize, Serialize};

use crate::algebra::is_irreducible;
use crate::error::{domain, Result};
use crate::rational::{serde_rational, Probability, Rational};
use crate::rewrite::{apply_lenient, MovePath, RewriteMove};
use crate::word::{DiceSet, DiceWord, Letter, PairCounts};

/// The fair 2-sided word `ABCCBA`.
pub const TAU: &str = "ABCCBA";
/// Irreducible 3-sided word, dice A={9,5,1}, B={8,4,3}, C={7,6,2}.
pub const D3: &str = "ACBBACCBA";
/// Irreducible 4-sided word, dice A={10,7,5,4}, B={12,9,3,2}, C={11,8,6,1}.
pub const D4: &str = "CBBAACACBACB";
pub const SIGMA3: &str = "CBABACACB";
/// Balanced non-transitive 4-sided word with probability 9/16.
pub const SIGMA4: &str = "CBABAACCBCBA";
/// The 6-sided set with probability 19/36 on all three pairs.
pub const SIX_SIDED: &str = "CBBAACACBACBABCCBA";

pub fn word(text: &str) -> DiceWord {
    DiceWord::parse(text).expect("built-in words are valid")
}

/// The three building-block dice tables of the earlier concatenation
/// construction (3, 4 and 5 sides).
pub fn building_block_tables() -> Vec<DiceSet> {
    vec![
        DiceSet::new(3, vec![9, 5, 1], vec![8, 4, 3], vec![7, 6, 2]),
        DiceSet::new(4, vec![12, 10, 3, 1], vec![9, 8, 7, 2], vec![11, 6, 5, 4]),
        DiceSet::new(
            5,
            vec![15, 11, 7, 4, 3],
            vec![14, 10, 9, 5, 2],
            vec![13, 12, 8, 6, 1],
        ),
    ]
    .into_iter()
    .map(|d| d.expect("tables are valid dice sets"))
    .collect()
}

/// `floor((n² + 2) / 2)`: the smallest count above `n²/2`.
pub fn least_winning_count(n: u64) -> u64 {
    (n * n + 2) / 2
}

/// `τ^k·D₃` for odd `n = 3 + 2k`, `τ^k·D₄` for even `n = 4 + 2k`.
pub fn construct_irreducible(n: usize) -> Result<DiceWord> {
    if n < 3 {
        return Err(domain(format!(
            "no balanced non-transitive set of {n}-sided dice exists (need n >= 3)"
        )));
    }
    let (k, base) = if n % 2 == 1 {
        ((n - 3) / 2, D3)
    } else {
        ((n - 4) / 2, D4)
    };
    Ok(word(TAU).repeat(k).concat(&word(base)))
}

/// `(ACBCBA)(ABCCBA)^{m-1}(BAC)`, a `(2m+1)`-sided word whose counts are all
/// `2m² + 2m + 1`.
pub fn construct_near_half(m: usize) -> Result<DiceWord> {
    if m < 1 {
        return Err(domain("near-half construction needs m >= 1"));
    }
    Ok(word("ACBCBA")
        .concat(&word(TAU).repeat(m - 1))
        .concat(&word("BAC")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    UnmixedFair,
    Sigma1,
    Sigma2,
}

/// Block sizes of the optimizer family: `n = 2q`, `q = 3p + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockParams {
    pub n: u64,
    pub p: u64,
    pub q: u64,
    pub r: u64,
}

impl BlockParams {
    pub fn new(n: usize) -> Result<Self> {
        if n < 6 || n % 2 == 1 {
            return Err(domain(format!(
                "block construction needs even n >= 6 (n mod 6 in {{0, 2, 4}}), got {n}"
            )));
        }
        let n = n as u64;
        Ok(BlockParams {
            n,
            p: n / 6,
            q: n / 2,
            r: (n % 6) / 2,
        })
    }

    /// Excess count (above `n²/2`) of the `σ₂` stage: `p·q`.
    pub fn sigma2_excess(&self) -> u64 {
        self.p * self.q
    }
}

fn blocks(parts: &[(Letter, u64)]) -> DiceWord {
    let mut letters = Vec::new();
    for &(l, len) in parts {
        letters.extend(std::iter::repeat_n(l, len as usize));
    }
    DiceWord::new(letters)
}

/// The block words of the optimizer. With `n = 2q`, `p = ⌊n/6⌋`, `r = q − 3p`:
///
/// ```text
/// unmixed fair  A^q B^q C^q C^q B^q A^q
/// sigma1        A^q B^(q−p) C^q B^p C^(q−p) B^q C^p A^q
/// sigma2        B^p A^q B^r C^q B^(2p) C^(q−p) B^q A^q C^p
/// ```
pub fn stage_word(n: usize, stage: Stage) -> Result<DiceWord> {
    use Letter::{A, B, C};
    let BlockParams { p, q, r, .. } = BlockParams::new(n)?;
    Ok(match stage {
        Stage::UnmixedFair => blocks(&[(A, q), (B, q), (C, 2 * q), (B, q), (A, q)]),
        Stage::Sigma1 => blocks(&[
            (A, q),
            (B, q - p),
            (C, q),
            (B, p),
            (C, q - p),
            (B, q),
            (C, p),
            (A, q),
        ]),
        Stage::Sigma2 => blocks(&[
            (B, p),
            (A, q),
            (B, r),
            (C, q),
            (B, 2 * p),
            (C, q - p),
            (B, q),
            (A, q),
            (C, p),
        ]),
    })
}

/// Left-hand side of the residue-class inequality for `m` extra rounds:
///
/// * `n = 6p`:   `m² − 13pm + 4p²`, i.e. `(2p − m)² − 9pm`
/// * `n = 6p+2`: `m² − (13p+4)m + (4p² − p − 1)`
/// * `n = 6p+4`: `m² − (13p+8)m + (4p² − 2p − 4)`
pub fn round_inequality(params: &BlockParams, m: u64) -> i128 {
    let (p, m) = (params.p as i128, m as i128);
    let (lin, constant) = match params.r {
        0 => (13 * p, 4 * p * p),
        1 => (13 * p + 4, 4 * p * p - p - 1),
        _ => (13 * p + 8, 4 * p * p - 2 * p - 4),
    };
    m * m - lin * m + constant
}

/// Largest `m` in `0..=2p` with a nonnegative round inequality, found by
/// bisection over integers (the quadratic decreases on `0..=2p`). Returns 0
/// when even `m = 0` fails, which only happens at `n = 10`.
pub fn m_max(n: usize) -> Result<u64> {
    let params = BlockParams::new(n)?;
    let ok = |m: u64| round_inequality(&params, m) >= 0;
    if !ok(0) {
        return Ok(0);
    }
    let (mut lo, mut hi) = (0u64, 2 * params.p);
    if ok(hi) {
        return Ok(hi);
    }
    // invariant: ok(lo), !ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageWords {
    pub unmixed_fair: DiceWord,
    pub sigma1: DiceWord,
    pub sigma2: DiceWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub n: u64,
    pub p: u64,
    pub stage_words: StageWords,
    pub m_max: u64,
    /// Rounds actually completed by the schedule.
    pub rounds: u64,
    /// Predicted probability minus one half: `(p + m_max)·q / n²`.
    #[serde(with = "serde_rational")]
    pub target_excess: Rational,
    pub target_probability: Probability,
    pub word: DiceWord,
    pub achieved_counts: PairCounts,
    pub achieved_probability: Probability,
    #[serde(with = "serde_rational")]
    pub gap: Rational,
    pub step1_moves: usize,
    pub step2_moves: usize,
    pub move_log: MovePath,
}

/// Move recorder that validates every move against the current word.
struct Recorder {
    path: MovePath,
    step1: usize,
    step2: usize,
}

impl Recorder {
    fn new(start: DiceWord) -> Self {
        Recorder {
            path: MovePath::trivial(start),
            step1: 0,
            step2: 0,
        }
    }

    fn letters(&self) -> &[Letter] {
        self.path.end.letters()
    }

    fn apply(&mut self, mv: RewriteMove) -> Result<()> {
        self.path.end = apply_lenient(&self.path.end, &mv)?;
        self.path.moves.push(mv);
        if mv.preserves_counts() {
            self.step1 += 1;
        } else {
            self.step2 += 1;
        }
        Ok(())
    }

    /// Leftmost 0-based window start `k` in `lo..=hi` reading `x y`.
    fn find(&self, x: Letter, y: Letter, lo: usize, hi: usize) -> Option<usize> {
        let w = self.letters();
        (lo..=hi.min(w.len().saturating_sub(2))).find(|&k| w[k] == x && w[k + 1] == y)
    }
}

/// `σ_f → σ₁` with `p·q` symmetric exchanges: the last `p` letters of the
/// first `B` block walk right across the first `C` block while the last `p`
/// letters of the second `C` block walk right across the second `B` block.
fn unmixed_to_sigma1(rec: &mut Recorder, params: &BlockParams) -> Result<()> {
    let (p, q) = (params.p as usize, params.q as usize);
    // 0-based inclusive regions
    let left = (2 * q - p, 3 * q - 1);
    let right = (4 * q - p, 5 * q - 1);
    for _ in 0..p * q {
        let i = rec
            .find(Letter::B, Letter::C, left.0, left.1 - 1)
            .ok_or_else(|| domain("sigma1: no BC window left"))?;
        let j = rec
            .find(Letter::C, Letter::B, right.0, right.1 - 1)
            .ok_or_else(|| domain("sigma1: no CB window left"))?;
        rec.apply(RewriteMove::SymmExchange { i: i + 1, j: j + 1 })?;
    }
    Ok(())
}

/// `σ₁ → σ₂` with `p·q` Step2 replacements: the first `p` letters of the
/// leading `B` block cross the first `A` block, the last `p` of that `B` block
/// cross the first `C` block, and the final `C^p` crosses the last `A` block.
fn sigma1_to_sigma2(rec: &mut Recorder, params: &BlockParams) -> Result<()> {
    let (p, q) = (params.p as usize, params.q as usize);
    let ab = (0, q + p - 1);
    let bc = (2 * q - 2 * p, 3 * q - p - 1);
    let ca = (5 * q - p, 6 * q - 1);
    for _ in 0..p * q {
        let i = rec.find(Letter::A, Letter::B, ab.0, ab.1 - 1);
        let j = rec.find(Letter::B, Letter::C, bc.0, bc.1 - 1);
        let k = rec.find(Letter::C, Letter::A, ca.0, ca.1 - 1);
        match (i, j, k) {
            (Some(i), Some(j), Some(k)) => rec.apply(RewriteMove::Step2 {
                i: i + 1,
                j: j + 1,
                k: k + 1,
            })?,
            _ => return Err(domain("sigma2: missing Step2 window")),
        }
    }
    Ok(())
}

/// One optimizer round on the zone `zl..=zr` (0-based) of `B`/`C` letters
/// sitting between the two `A` blocks. Returns `false` if a needed window is
/// missing.
fn round(rec: &mut Recorder, zl: usize, zr: usize, q: usize) -> Result<bool> {
    use Letter::{A, B, C};
    // Step1: walk the leftmost zone B to the left end of the zone
    let Some(mut j) = (zl..=zr).find(|&k| rec.letters()[k] == B) else {
        return Ok(false);
    };
    while j > zl {
        // (j-1, j) reads CB; pair it with a BC further right
        let Some(k) = rec.find(B, C, j + 1, zr - 1) else {
            return Ok(false);
        };
        rec.apply(RewriteMove::SymmExchange { i: j, j: k + 1 })?;
        j -= 1;
    }
    // Step1: walk the rightmost zone C to the right end of the zone
    let Some(mut j) = (zl + 1..=zr).rev().find(|&k| rec.letters()[k] == C) else {
        return Ok(false);
    };
    while j < zr {
        // (j, j+1) reads CB; pair it with a BC further left, clear of the placed B
        let Some(k) = (j >= zl + 3).then(|| rec.find(B, C, zl + 1, j - 2)).flatten() else {
            return Ok(false);
        };
        rec.apply(RewriteMove::SymmExchange { i: k + 1, j: j + 1 })?;
        j += 1;
    }
    // Step2, q times: the B hops left through the A block, the C hops right
    let (mut b, mut c) = (zl, zr);
    for _ in 0..q {
        let w = rec.letters();
        if !(w[b - 1] == A && w[b] == B && w[c] == C && w[c + 1] == A) {
            return Ok(false);
        }
        let Some(k) = (zr >= zl + 3).then(|| rec.find(B, C, zl + 1, zr - 2)).flatten() else {
            return Ok(false);
        };
        rec.apply(RewriteMove::Step2 {
            i: b,
            j: k + 1,
            k: c + 1,
        })?;
        b -= 1;
        c += 1;
    }
    Ok(true)
}

/// Builds `σ_f → σ₁ → σ₂` and then runs `m_max(n)` rounds. Each round uses
/// symmetric exchanges to bring one `B` of the middle zone to its left edge
/// and one `C` to its right edge, then applies `q` Step2 replacements, each
/// raising all three counts by one. The report compares the final count with
/// the closed-form target and records the gap.
pub fn optimize_max_prob(n: usize) -> Result<OptimizerReport> {
    let params = BlockParams::new(n)?;
    let stage_words = StageWords {
        unmixed_fair: stage_word(n, Stage::UnmixedFair)?,
        sigma1: stage_word(n, Stage::Sigma1)?,
        sigma2: stage_word(n, Stage::Sigma2)?,
    };
    let mut rec = Recorder::new(stage_words.unmixed_fair.clone());
    unmixed_to_sigma1(&mut rec, &params)?;
    debug_assert_eq!(rec.path.end, stage_words.sigma1);
    sigma1_to_sigma2(&mut rec, &params)?;
    debug_assert_eq!(rec.path.end, stage_words.sigma2);

    let m_max = m_max(n)?;
    let (p, q) = (params.p as usize, params.q as usize);
    let len = 3 * n;
    let mut rounds = 0u64;
    for t in 0..m_max as usize {
        let zl = p + q + t;
        let zr = len - 1 - q - p - t;
        if zr < zl + 3 || !round(&mut rec, zl, zr, q)? {
            break;
        }
        rounds += 1;
    }

    let sq = (params.n * params.n) as i128;
    let target_excess = Rational::new(((params.p + m_max) * params.q) as i128, sq);
    let target_probability = Probability::from_rational(Rational::new(1, 2) + target_excess);
    let achieved_counts = rec.path.end.pair_counts()?;
    let achieved_probability = Probability::new(achieved_counts.ab as i128, sq);
    let gap = target_excess - achieved_probability.excess();
    Ok(OptimizerReport {
        n: params.n,
        p: params.p,
        stage_words,
        m_max,
        rounds,
        target_excess,
        target_probability,
        word: rec.path.end.clone(),
        achieved_counts,
        achieved_probability,
        gap,
        step1_moves: rec.step1,
        step2_moves: rec.step2,
        move_log: rec.path,
    })
}

/// `construct_irreducible` together with its irreducibility check, for
/// reporting.
pub fn irreducible_with_check(n: usize) -> Result<(DiceWord, bool)> {
    let w = construct_irreducible(n)?;
    let report = is_irreducible(&w)?;
    Ok((w, report.irreducible))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(w: &DiceWord) -> [u64; 3] {
        w.pair_counts().unwrap().as_array()
    }

    #[test]
    fn base_words() {
        assert!(word(TAU).classify().unwrap().fair);
        for w in [D3, D4, SIGMA3] {
            let v = word(w).classify().unwrap();
            assert!(v.balanced && v.nontransitive, "{w}");
            assert!(is_irreducible(&word(w)).unwrap().irreducible, "{w}");
        }
        assert_eq!(counts(&word(SIGMA4)), [9, 9, 9]);
        let d4 = DiceSet::new(4, vec![10, 7, 5, 4], vec![12, 9, 3, 2], vec![11, 8, 6, 1]).unwrap();
        assert_eq!(DiceWord::from_dice(&d4), word(D4));
    }

    #[test]
    fn irreducible_examples() {
        let w3 = construct_irreducible(3).unwrap();
        assert_eq!(w3, word(D3));
        assert_eq!(counts(&w3), [5, 5, 5]);

        let w5 = construct_irreducible(5).unwrap();
        assert_eq!(w5, word("ABCCBAACBBACCBA"));
        assert_eq!(counts(&w5), [13, 13, 13]);
        assert_eq!(least_winning_count(5), 13);

        let w4 = construct_irreducible(4).unwrap();
        assert_eq!(w4.to_string(), "CBBAACACBACB");
        assert_eq!(counts(&w4), [9, 9, 9]);

        assert!(construct_irreducible(2).is_err());
        assert!(construct_irreducible(0).is_err());
    }

    #[test]
    fn near_half_examples() {
        let w1 = construct_near_half(1).unwrap();
        assert_eq!(w1.to_string(), "ACBCBABAC");
        assert_eq!(w1.classify().unwrap().p_ab, Probability::new(5, 9));

        let w2 = construct_near_half(2).unwrap();
        assert_eq!(w2.len(), 15);
        assert_eq!(counts(&w2), [13, 13, 13]);

        let w3 = construct_near_half(3).unwrap();
        assert_eq!(w3.classify().unwrap().p_ab, Probability::new(25, 49));

        assert!(construct_near_half(0).is_err());
    }

    #[test]
    fn stage_examples() {
        let f = stage_word(6, Stage::UnmixedFair).unwrap();
        assert_eq!(f.to_string(), "AAABBBCCCCCCBBBAAA");
        assert!(f.classify().unwrap().fair);

        let s2 = stage_word(6, Stage::Sigma2).unwrap();
        let v = s2.classify().unwrap();
        assert_eq!(v.counts.as_array(), [21, 21, 21]);
        assert_eq!(v.p_ab, Probability::new(7, 12));

        let s2 = stage_word(8, Stage::Sigma2).unwrap();
        let v = s2.classify().unwrap();
        assert_eq!(v.p_ab.excess(), Rational::new(1, 16));
        assert_eq!(v.p_ab, Probability::new(9, 16));

        assert!(stage_word(4, Stage::Sigma1).is_err());
        assert!(stage_word(9, Stage::Sigma1).is_err());
    }

    #[test]
    fn m_max_examples() {
        assert_eq!(m_max(6).unwrap(), 0);
        assert_eq!(m_max(24).unwrap(), 1);
        assert_eq!(m_max(8).unwrap(), 0);
        assert_eq!(m_max(12).unwrap(), 0);
        let p = BlockParams::new(6).unwrap();
        assert_eq!(round_inequality(&p, 1), -8);
        let p = BlockParams::new(24).unwrap();
        assert_eq!(round_inequality(&p, 1), 13);
        // n = 10: even zero extra rounds violate the inequality
        let p = BlockParams::new(10).unwrap();
        assert_eq!(round_inequality(&p, 0), -2);
        assert_eq!(m_max(10).unwrap(), 0);
        assert!(m_max(7).is_err());
    }

    #[test]
    fn optimizer_examples() {
        let r = optimize_max_prob(6).unwrap();
        assert_eq!(r.m_max, 0);
        assert_eq!(r.achieved_probability, Probability::new(7, 12));
        assert_eq!(r.gap, Rational::from_integer(0));

        let r = optimize_max_prob(12).unwrap();
        assert_eq!(r.m_max, 0);
        assert_eq!(r.target_probability, Probability::new(7, 12));
        assert_eq!(r.gap, Rational::from_integer(0));

        let r = optimize_max_prob(8).unwrap();
        assert_eq!(r.target_probability, Probability::new(9, 16));
        assert_eq!(r.gap, Rational::from_integer(0));

        let r = optimize_max_prob(24).unwrap();
        assert_eq!(r.m_max, 1);
        assert_eq!(r.rounds, 1);
        assert_eq!(r.achieved_counts.as_array(), [348, 348, 348]);
        assert_eq!(r.gap, Rational::from_integer(0));
        r.move_log.verify().unwrap();
    }

    #[test]
    fn building_blocks_hit_least_winning_count() {
        for d in building_block_tables() {
            let w = DiceWord::from_dice(&d);
            let n = d.n() as u64;
            let c = w.pair_counts().unwrap();
            assert!(c.is_balanced() && c.is_nontransitive(), "{w}");
            assert_eq!(c.ab, least_winning_count(n), "{w}");
        }
    }
}
