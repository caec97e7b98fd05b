//! Exhaustive generation and classification of every complete word at a
//! fixed number of sides, plus the fair-word similarity check and a JSON
//! stats cache.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rational::Probability;
use crate::rewrite::{similarity_class, MoveSet};
use crate::word::{DiceWord, Letter};

/// Witnesses kept for the maximum probability.
pub const WITNESS_CAP: usize = 10;
pub const STATS_FORMAT_VERSION: u32 = 1;
/// Largest `n` accepted; `n = 7` additionally needs `long_run`.
pub const MAX_SIDES: usize = 7;

/// Conjunctive filter for words streamed to a consumer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumFilter {
    pub balanced: bool,
    pub nontransitive: bool,
    pub fair: bool,
    /// Exact `[ab, bc, ca]`.
    pub counts: Option<[u64; 3]>,
}

impl EnumFilter {
    pub fn balanced_nontransitive() -> Self {
        EnumFilter {
            balanced: true,
            nontransitive: true,
            ..Default::default()
        }
    }

    pub fn fair() -> Self {
        EnumFilter {
            fair: true,
            ..Default::default()
        }
    }

    pub fn with_counts(counts: [u64; 3]) -> Self {
        EnumFilter {
            counts: Some(counts),
            ..Default::default()
        }
    }

    fn matches(&self, counts: [u64; 3], sq: u64) -> bool {
        let [ab, bc, ca] = counts;
        (!self.balanced || (ab == bc && bc == ca))
            && (!self.nontransitive || counts.iter().all(|&c| 2 * c > sq))
            && (!self.fair || counts.iter().all(|&c| 2 * c == sq))
            && self.counts.is_none_or(|t| t == counts)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumOptions {
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    pub long_run: bool,
}

impl EnumOptions {
    pub fn workers(workers: usize) -> Self {
        EnumOptions {
            workers,
            long_run: false,
        }
    }
}

pub type Consumer<'a> = dyn Fn(&DiceWord) + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxProb {
    pub p: Probability,
    /// Lexicographically smallest words attaining `p`, at most ten.
    pub witnesses: Vec<DiceWord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumStats {
    pub n: u64,
    pub total_words: u64,
    pub count_balanced: u64,
    pub count_balanced_nontransitive: u64,
    pub count_fair: u64,
    /// Over balanced non-transitive words.
    pub max_prob: Option<MaxProb>,
    /// Common probability of each balanced word, to number of words.
    pub histogram: BTreeMap<Probability, u64>,
}

/// `(3n)! / (n!)³`.
pub fn multinomial(n: u64) -> u64 {
    // C(3n, n) · C(2n, n)
    let binom = |top: u64, k: u64| (1..=k).fold(1u64, |acc, i| acc * (top - k + i) / i);
    binom(3 * n, n) * binom(2 * n, n)
}

#[derive(Clone)]
struct Acc {
    total: u64,
    balanced: u64,
    bnt: u64,
    fair: u64,
    best: Option<u64>,
    witnesses: Vec<u64>,
    /// Indexed by the common count.
    histogram: Vec<u64>,
}

impl Acc {
    fn new(sq: u64) -> Self {
        Acc {
            total: 0,
            balanced: 0,
            bnt: 0,
            fair: 0,
            best: None,
            witnesses: Vec::new(),
            histogram: vec![0; sq as usize + 1],
        }
    }

    fn merge(&mut self, other: Acc) {
        self.total += other.total;
        self.balanced += other.balanced;
        self.bnt += other.bnt;
        self.fair += other.fair;
        for (h, o) in self.histogram.iter_mut().zip(other.histogram) {
            *h += o;
        }
        match (self.best, other.best) {
            (_, None) => {}
            (None, Some(_)) => {
                self.best = other.best;
                self.witnesses = other.witnesses;
            }
            (Some(a), Some(b)) if b > a => {
                self.best = other.best;
                self.witnesses = other.witnesses;
            }
            (Some(a), Some(b)) if a == b => {
                // packed words compare like their letter strings
                self.witnesses.extend(other.witnesses);
                self.witnesses.sort_unstable();
                self.witnesses.dedup();
                self.witnesses.truncate(WITNESS_CAP);
            }
            _ => {}
        }
    }
}

fn unpack(packed: u64, len: usize) -> DiceWord {
    DiceWord::new(
        (0..len)
            .map(|i| Letter::from_index(((packed >> (2 * (len - 1 - i))) & 3) as usize))
            .collect(),
    )
}

/// Prefix state: letters so far packed with the first letter highest.
#[derive(Clone, Copy)]
struct State {
    pos: usize,
    packed: u64,
    rem: [u32; 3],
    tally: [u64; 3],
    wins: [u64; 3],
}

impl State {
    fn start(n: u32) -> Self {
        State {
            pos: 0,
            packed: 0,
            rem: [n; 3],
            tally: [0; 3],
            wins: [0; 3],
        }
    }

    #[inline]
    fn push(&self, l: usize) -> State {
        let mut s = *self;
        s.wins[l] += s.tally[(l + 1) % 3];
        s.tally[l] += 1;
        s.rem[l] -= 1;
        s.packed = (s.packed << 2) | l as u64;
        s.pos += 1;
        s
    }
}

struct Walker<'a> {
    len: usize,
    sq: u64,
    filter: &'a EnumFilter,
    consumer: Option<&'a Consumer<'a>>,
    acc: Acc,
}

impl Walker<'_> {
    fn dfs(&mut self, s: State) {
        if s.pos == self.len {
            self.leaf(s.packed, s.wins);
            return;
        }
        for l in 0..3 {
            if s.rem[l] > 0 {
                self.dfs(s.push(l));
            }
        }
    }

    #[inline]
    fn leaf(&mut self, packed: u64, counts: [u64; 3]) {
        let acc = &mut self.acc;
        acc.total += 1;
        let [ab, bc, ca] = counts;
        if ab == bc && bc == ca {
            acc.balanced += 1;
            acc.histogram[ab as usize] += 1;
            if 2 * ab > self.sq {
                acc.bnt += 1;
                match acc.best {
                    Some(b) if b > ab => {}
                    Some(b) if b == ab => {
                        if acc.witnesses.len() < WITNESS_CAP {
                            acc.witnesses.push(packed);
                        }
                    }
                    _ => {
                        acc.best = Some(ab);
                        acc.witnesses.clear();
                        acc.witnesses.push(packed);
                    }
                }
            } else if 2 * ab == self.sq {
                acc.fair += 1;
            }
        }
        if let Some(consumer) = self.consumer {
            if self.filter.matches(counts, self.sq) {
                consumer(&unpack(packed, self.len));
            }
        }
    }
}

/// All feasible prefixes of length `k`, in lexicographic order.
fn prefixes(n: u32, k: usize) -> Vec<State> {
    let mut level = vec![State::start(n)];
    for _ in 0..k {
        level = level
            .iter()
            .flat_map(|s| (0..3).filter(|&l| s.rem[l] > 0).map(|l| s.push(l)))
            .collect();
    }
    level
}

fn check_sides(n: usize, lo: usize, opts: &EnumOptions) -> Result<()> {
    if n < lo || n > MAX_SIDES {
        return Err(domain(format!(
            "enumeration supports {lo} <= n <= {MAX_SIDES}, got {n}"
        )));
    }
    if n == MAX_SIDES && !opts.long_run {
        return Err(domain(format!(
            "n = 7 enumerates {} words; pass the long-run flag to allow it",
            multinomial(7)
        )));
    }
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| domain(format!("cannot start worker pool: {e}")))
}

/// Generates every complete word of length `3n` once, classifies it, and
/// hands words matching `filter` to `consumer` (concurrently, in no
/// particular order). Stats do not depend on the worker count.
pub fn enumerate(
    n: usize,
    filter: &EnumFilter,
    opts: &EnumOptions,
    consumer: Option<&Consumer<'_>>,
) -> Result<EnumStats> {
    check_sides(n, 1, opts)?;
    let len = 3 * n;
    let sq = (n * n) as u64;
    let pool = pool(opts.workers)?;
    let target = 64 * pool.current_num_threads();
    let k = (0..=len)
        .find(|&k| prefixes(n as u32, k).len() >= target)
        .unwrap_or(len);
    let parts = prefixes(n as u32, k);

    let accs: Vec<Acc> = pool.install(|| {
        parts
            .par_iter()
            .map(|&s| {
                let mut w = Walker {
                    len,
                    sq,
                    filter,
                    consumer,
                    acc: Acc::new(sq),
                };
                w.dfs(s);
                w.acc
            })
            .collect()
    });
    let mut total = Acc::new(sq);
    for a in accs {
        total.merge(a);
    }

    let histogram = total
        .histogram
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(count, &c)| (Probability::new(count as i128, sq as i128), c))
        .collect();
    let max_prob = total.best.map(|best| MaxProb {
        p: Probability::new(best as i128, sq as i128),
        witnesses: total.witnesses.iter().map(|&w| unpack(w, len)).collect(),
    });
    Ok(EnumStats {
        n: n as u64,
        total_words: total.total,
        count_balanced: total.balanced,
        count_balanced_nontransitive: total.bnt,
        count_fair: total.fair,
        max_prob,
        histogram,
    })
}

/// Largest common probability of a balanced non-transitive word with `n`
/// sides, or `None` when there is no such word.
pub fn max_probability(n: usize, opts: &EnumOptions) -> Result<Option<MaxProb>> {
    check_sides(n, 2, opts)?;
    Ok(enumerate(n, &EnumFilter::default(), opts, None)?.max_prob)
}

/// Every complete word matching `filter`, sorted.
pub fn collect_words(n: usize, filter: &EnumFilter, opts: &EnumOptions) -> Result<Vec<DiceWord>> {
    let found = std::sync::Mutex::new(Vec::new());
    let push = |w: &DiceWord| found.lock().expect("collector poisoned").push(w.clone());
    enumerate(n, filter, opts, Some(&push))?;
    let mut words = found.into_inner().expect("collector poisoned");
    words.sort();
    Ok(words)
}

/// The six blocks `xyzzyx`.
pub fn canonical_blocks() -> Vec<DiceWord> {
    let mut out = Vec::new();
    for x in Letter::ALL {
        for y in Letter::ALL {
            for z in Letter::ALL {
                if x != y && y != z && x != z {
                    out.push(DiceWord::new(vec![x, y, z, z, y, x]));
                }
            }
        }
    }
    out
}

/// Products of `n/2` blocks: with `mixed = false` every block uses the same
/// permutation, otherwise blocks may differ.
pub fn canonical_products(n: usize, mixed: bool) -> Vec<DiceWord> {
    if n % 2 == 1 {
        return Vec::new();
    }
    let blocks = canonical_blocks();
    if !mixed {
        return blocks.iter().map(|b| b.repeat(n / 2)).collect();
    }
    let mut words = vec![DiceWord::empty()];
    for _ in 0..n / 2 {
        words = words
            .iter()
            .flat_map(|w| blocks.iter().map(move |b| w.concat(b)))
            .collect();
    }
    words
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretationReport {
    /// Number of canonical products used as BFS sources.
    pub canonical_words: usize,
    /// Size of their joint similarity class.
    pub class_size: usize,
    pub class_complete: bool,
    pub reachable: u64,
    /// Not in the class, with the class fully explored.
    pub unreachable: u64,
    /// Not in the class, with the budget exhausted.
    pub unresolved: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairConjectureReport {
    pub n: u64,
    pub fair_words_found: u64,
    /// `"enumeration"`, or `"parity"` when `n = 7` was not enumerated.
    pub fair_count_source: String,
    pub parity_ok: bool,
    /// Every block uses the same permutation.
    pub same_perm: Option<InterpretationReport>,
    /// Blocks may use different permutations.
    pub mixed_perm: Option<InterpretationReport>,
}

fn interpretation(
    fair: &[DiceWord],
    sources: &[DiceWord],
    budget: usize,
    moves: MoveSet,
) -> Result<InterpretationReport> {
    let class = similarity_class(sources, budget, moves)?;
    let reachable = fair.iter().filter(|w| class.contains(w)).count() as u64;
    let missing = fair.len() as u64 - reachable;
    let (unreachable, unresolved) = if class.complete {
        (missing, 0)
    } else {
        (0, missing)
    };
    Ok(InterpretationReport {
        canonical_words: sources.len(),
        class_size: class.len(),
        class_complete: class.complete,
        reachable,
        unreachable,
        unresolved,
    })
}

/// Counts fair words at `n` and, for `n ≤ 4`, checks each one against the
/// similarity class of the block products under both interpretations.
/// Odd `n` has no fair word since `n²/2` is not an integer; at `n = 7`
/// that argument stands in for the scan unless `long_run` is set.
pub fn verify_fair_conjecture(
    n: usize,
    budget: usize,
    moves: MoveSet,
    opts: &EnumOptions,
) -> Result<FairConjectureReport> {
    if !(1..=MAX_SIDES).contains(&n) {
        return Err(domain(format!(
            "fair-word check supports 1 <= n <= {MAX_SIDES}, got {n}"
        )));
    }
    let (fair, source) = if n == MAX_SIDES && !opts.long_run {
        (Vec::new(), "parity")
    } else {
        (collect_words(n, &EnumFilter::fair(), opts)?, "enumeration")
    };
    let parity_ok = fair.is_empty() || n.is_multiple_of(2);
    let (same_perm, mixed_perm) = if n.is_multiple_of(2) && n <= 4 {
        (
            Some(interpretation(&fair, &canonical_products(n, false), budget, moves)?),
            Some(interpretation(&fair, &canonical_products(n, true), budget, moves)?),
        )
    } else {
        (None, None)
    };
    Ok(FairConjectureReport {
        n: n as u64,
        fair_words_found: fair.len() as u64,
        fair_count_source: source.to_string(),
        parity_ok,
        same_perm,
        mixed_perm,
    })
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    format_version: u32,
    #[serde(flatten)]
    stats: EnumStats,
}

pub fn stats_json(stats: &EnumStats) -> Result<String> {
    let file = StatsFile {
        format_version: STATS_FORMAT_VERSION,
        stats: stats.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn cache_stats(stats: &EnumStats, path: &Path) -> Result<()> {
    fs::write(path, stats_json(stats)?)?;
    Ok(())
}

pub fn load_stats(path: &Path) -> Result<EnumStats> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Cache(format!("{}: corrupt JSON: {e}", path.display())))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == STATS_FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Cache(format!(
                "{}: format version {v}, expected {STATS_FORMAT_VERSION}",
                path.display()
            )))
        }
        None => {
            return Err(Error::Cache(format!(
                "{}: missing format_version",
                path.display()
            )))
        }
    }
    let file: StatsFile = serde_json::from_value(value)
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    verify_stats(&file.stats)?;
    Ok(file.stats)
}

/// Consistency checks on loaded stats; every witness is re-classified.
pub fn verify_stats(stats: &EnumStats) -> Result<()> {
    let bad = |msg: String| Err(Error::Integrity(msg));
    let n = stats.n;
    if n == 0 || n > MAX_SIDES as u64 {
        return bad(format!("n = {n} out of range"));
    }
    if stats.total_words != multinomial(n) {
        return bad(format!(
            "total_words {} != {} for n = {n}",
            stats.total_words,
            multinomial(n)
        ));
    }
    let hist_total: u64 = stats.histogram.values().sum();
    if hist_total != stats.count_balanced {
        return bad(format!(
            "histogram sums to {hist_total}, count_balanced is {}",
            stats.count_balanced
        ));
    }
    let half = stats.histogram.get(&Probability::half()).copied().unwrap_or(0);
    if half != stats.count_fair {
        return bad(format!("histogram has {half} words at 1/2, count_fair is {}", stats.count_fair));
    }
    let above: u64 = stats
        .histogram
        .iter()
        .filter(|(p, _)| **p > Probability::half())
        .map(|(_, c)| c)
        .sum();
    if above != stats.count_balanced_nontransitive {
        return bad(format!(
            "histogram has {above} words above 1/2, count_balanced_nontransitive is {}",
            stats.count_balanced_nontransitive
        ));
    }
    match &stats.max_prob {
        None if stats.count_balanced_nontransitive > 0 => {
            return bad("max_prob missing".into());
        }
        None => {}
        Some(mp) => {
            if mp.witnesses.is_empty() || mp.witnesses.len() > WITNESS_CAP {
                return bad(format!("{} witnesses stored", mp.witnesses.len()));
            }
            if stats.histogram.keys().next_back() != Some(&mp.p) {
                return bad(format!("max_prob {} is not the largest histogram key", mp.p));
            }
            for w in &mp.witnesses {
                let ok = w.len() as u64 == 3 * n
                    && w.classify().is_ok_and(|v| {
                        v.balanced && v.nontransitive && v.common_probability() == Some(mp.p)
                    });
                if !ok {
                    return bad(format!("witness {w} does not have probability {}", mp.p));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;
    use std::sync::Mutex;

    use super::*;

    fn all(n: usize) -> EnumStats {
        enumerate(n, &EnumFilter::default(), &EnumOptions::workers(1), None).unwrap()
    }

    #[test]
    fn totals_match_multinomial() {
        assert_eq!(
            (1..=4).map(multinomial).collect::<Vec<_>>(),
            [6, 90, 1680, 34650]
        );
        assert_eq!(multinomial(6), 17_153_136);
        assert_eq!(multinomial(7), 399_072_960);
        for n in 1..=4 {
            assert_eq!(all(n).total_words, multinomial(n as u64));
        }
    }

    #[test]
    fn every_word_once_in_order_within_partitions() {
        for n in 1..=4 {
            let seen = Mutex::new(Vec::new());
            let push = |w: &DiceWord| seen.lock().unwrap().push(w.to_string());
            enumerate(n, &EnumFilter::default(), &EnumOptions::workers(1), Some(&push)).unwrap();
            let seen = seen.into_inner().unwrap();
            let set: HashSet<_> = seen.iter().collect();
            assert_eq!(set.len(), seen.len());
            assert_eq!(seen.len() as u64, multinomial(n as u64));
            // one worker visits partitions in order
            assert!(seen.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn small_examples() {
        let s = all(1);
        assert_eq!((s.total_words, s.count_balanced), (6, 0));
        let s = all(2);
        assert_eq!(s.total_words, 90);
        assert_eq!(s.count_balanced_nontransitive, 0);
        assert!(s.max_prob.is_none());
        let s = all(3);
        assert_eq!(s.total_words, 1680);
        let mp = s.max_prob.clone().unwrap();
        assert_eq!(mp.p, Probability::new(5, 9));
        assert_eq!(s.count_balanced_nontransitive, 6);
        assert!(mp.witnesses.iter().any(|w| w.to_string() == "ACBBACCBA"));
        verify_stats(&s).unwrap();
    }

    #[test]
    fn stats_match_a_direct_classification() {
        let words = collect_words(3, &EnumFilter::default(), &EnumOptions::workers(1)).unwrap();
        let mut balanced = 0;
        let mut bnt = Vec::new();
        for w in &words {
            let v = w.classify().unwrap();
            balanced += v.balanced as u64;
            if v.balanced && v.nontransitive {
                bnt.push(w.clone());
            }
        }
        let s = all(3);
        assert_eq!(s.count_balanced, balanced);
        assert_eq!(s.max_prob.unwrap().witnesses, bnt);
    }

    #[test]
    fn worker_count_does_not_change_stats() {
        let one = enumerate(4, &EnumFilter::default(), &EnumOptions::workers(1), None).unwrap();
        let four = enumerate(4, &EnumFilter::default(), &EnumOptions::workers(4), None).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn filters_are_conjunctive() {
        let opts = EnumOptions::workers(2);
        let bnt = collect_words(3, &EnumFilter::balanced_nontransitive(), &opts).unwrap();
        assert_eq!(bnt.len(), 6);
        let exact = collect_words(3, &EnumFilter::with_counts([5, 5, 5]), &opts).unwrap();
        assert_eq!(exact, bnt);
        let none = EnumFilter {
            fair: true,
            nontransitive: true,
            ..Default::default()
        };
        assert!(collect_words(2, &none, &opts).unwrap().is_empty());
        assert_eq!(collect_words(2, &EnumFilter::fair(), &opts).unwrap().len(), 6);
    }

    #[test]
    fn range_checks() {
        let opts = EnumOptions::workers(1);
        assert!(enumerate(0, &EnumFilter::default(), &opts, None).is_err());
        assert!(enumerate(8, &EnumFilter::default(), &opts, None).is_err());
        assert!(enumerate(7, &EnumFilter::default(), &opts, None).is_err());
        assert!(max_probability(1, &opts).is_err());
        assert_eq!(max_probability(2, &opts).unwrap(), None);
    }

    #[test]
    fn canonical_products_shape() {
        assert_eq!(canonical_blocks().len(), 6);
        assert!(canonical_blocks().iter().all(|b| b.classify().unwrap().fair));
        assert_eq!(canonical_products(4, false).len(), 6);
        assert_eq!(canonical_products(4, true).len(), 36);
        assert!(canonical_products(3, true).is_empty());
    }

    #[test]
    fn fair_examples() {
        let opts = EnumOptions::workers(1);
        let r = verify_fair_conjecture(3, 1000, MoveSet::default(), &opts).unwrap();
        assert_eq!(r.fair_words_found, 0);
        assert!(r.parity_ok && r.same_perm.is_none());

        let r = verify_fair_conjecture(2, 1000, MoveSet::default(), &opts).unwrap();
        assert_eq!(r.fair_words_found, 6);
        for rep in [r.same_perm.unwrap(), r.mixed_perm.unwrap()] {
            assert_eq!((rep.reachable, rep.unresolved, rep.unreachable), (6, 0, 0));
        }

        let r = verify_fair_conjecture(7, 1000, MoveSet::default(), &opts).unwrap();
        assert_eq!(r.fair_count_source, "parity");
    }

    #[test]
    fn cache_round_trip_and_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n3.json");
        let s = all(3);
        cache_stats(&s, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"p\": \"5/9\""));
        assert!(text.contains("\"format_version\": 1"));
        assert_eq!(load_stats(&path).unwrap(), s);

        let tampered = text.replacen("ACBBACCBA", "ACBBACCAB", 1);
        fs::write(&path, tampered).unwrap();
        assert!(matches!(load_stats(&path), Err(Error::Integrity(_))));

        fs::write(&path, text.replace("\"format_version\": 1", "\"format_version\": 9")).unwrap();
        assert!(matches!(load_stats(&path), Err(Error::Cache(_))));

        fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_stats(&path), Err(Error::Cache(_))));

        assert!(matches!(load_stats(&dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
