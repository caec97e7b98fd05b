//! The `ntdice` command line: argument parsing, dispatch to the library and
//! output formatting. `run` is the whole program minus process exit.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use ntdice::algebra::{combined_probability, concat, is_irreducible, predict_counts};
use ntdice::bounds::{bound_report_up_to, decimal, BoundReport};
use ntdice::construct::{
    construct_irreducible, construct_near_half, optimize_max_prob, OptimizerReport,
};
use ntdice::enumerate::{
    cache_stats, enumerate, load_stats, max_probability, stats_json, verify_fair_conjecture,
    EnumFilter, EnumOptions, EnumStats, FairConjectureReport, InterpretationReport, MaxProb,
};
use ntdice::rewrite::{
    apply_move, find_step2_sites, normalize_two_letter_fair, similar, MovePath, MoveSet,
    Similarity, DEFAULT_BUDGET,
};
use ntdice::{DiceSet, DiceWord, Error, Probability, Verdict};

/// Names the directory holding cached enumeration stats.
pub const CACHE_ENV: &str = "NTDICE_CACHE_DIR";

/// Module operation → the subcommand that exposes it.
pub const COMMAND_TABLE: &[(&str, &str)] = &[
    ("parse_word", "analyze"),
    ("pair_counts", "analyze"),
    ("classify", "analyze"),
    ("find_step2_sites", "analyze"),
    ("word_from_dice", "dice2word"),
    ("dice_from_word", "word2dice"),
    ("concat", "concat"),
    ("predict_counts", "concat"),
    ("combined_probability", "concat"),
    ("is_irreducible", "irreducible"),
    ("construct_irreducible", "construct"),
    ("construct_near_half", "near-half"),
    ("stage_word", "optimize"),
    ("m_max", "optimize"),
    ("optimize_max_prob", "optimize"),
    ("bound_report", "bounds"),
    ("enumerate", "enumerate"),
    ("cache_stats", "enumerate"),
    ("load_stats", "enumerate"),
    ("max_probability", "scan-max"),
    ("verify_fair_conjecture", "verify-fair"),
    ("similar", "similar"),
    ("apply_move", "similar"),
    ("normalize_two_letter_fair", "normalize2"),
];

#[derive(Parser, Debug)]
#[command(name = "ntdice", version, about = "Exact computations on balanced non-transitive dice")]
pub struct Cli {
    /// Print JSON instead of a table
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// State budget for the breadth-first search
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Only allow triple rotations at the ends of the word
    #[arg(long)]
    strict_moves: bool,
}

impl SearchArgs {
    fn moves(&self) -> MoveSet {
        if self.strict_moves {
            MoveSet::Strict
        } else {
            MoveSet::InContext
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ScanArgs {
    /// Sides per die
    #[arg(long)]
    n: usize,
    /// Worker threads (0: one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Allow n = 7
    #[arg(long)]
    long_run: bool,
}

impl ScanArgs {
    fn options(&self) -> EnumOptions {
        EnumOptions {
            workers: self.workers,
            long_run: self.long_run,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Win counts and probabilities of a word
    Analyze {
        word: String,
        /// Also list the Step2 sites
        #[arg(long)]
        sites: bool,
    },
    /// Word of a dice set given as three comma-separated label lists
    Dice2word { a: String, b: String, c: String },
    /// Dice set of a complete word
    Word2dice { word: String },
    /// Concatenate two words and check the count law
    Concat { first: String, second: String },
    /// Look for a split into two balanced non-transitive factors
    Irreducible { word: String },
    /// Irreducible balanced non-transitive word with n sides
    Construct {
        #[arg(long)]
        n: usize,
    },
    /// Word with 2m+1 sides and probability close to one half
    NearHalf {
        #[arg(long)]
        m: usize,
    },
    /// Block-word optimizer for even n >= 6
    Optimize {
        #[arg(long)]
        n: usize,
        /// Include the move log in the table output
        #[arg(long)]
        log: bool,
    },
    /// Closed-form limits and exact comparisons
    Bounds {
        /// Check the families for p = 1..=P
        #[arg(long, default_value_t = 1_000_000)]
        p_max: u64,
    },
    /// Exhaustive scan of every word with n sides
    Enumerate {
        #[command(flatten)]
        scan: ScanArgs,
        /// Write the stats file here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print words matching all of: balanced, nontransitive, fair
        #[arg(long, value_delimiter = ',')]
        filter: Vec<String>,
        /// Print words with exactly these counts, e.g. 5,5,5
        #[arg(long, value_delimiter = ',', num_args = 3)]
        counts: Option<Vec<u64>>,
    },
    /// Largest probability of a balanced non-transitive word with n sides
    ScanMax {
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Fair words and their similarity to products of xyzzyx blocks
    VerifyFair {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Shortest rewrite path between two words
    Similar {
        from: String,
        to: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Rewrite a fair word over A and B to (ABBA)^m or (BAAB)^m
    Normalize2 { word: String },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Dice2word { .. } => "dice2word",
            Command::Word2dice { .. } => "word2dice",
            Command::Concat { .. } => "concat",
            Command::Irreducible { .. } => "irreducible",
            Command::Construct { .. } => "construct",
            Command::NearHalf { .. } => "near-half",
            Command::Optimize { .. } => "optimize",
            Command::Bounds { .. } => "bounds",
            Command::Enumerate { .. } => "enumerate",
            Command::ScanMax { .. } => "scan-max",
            Command::VerifyFair { .. } => "verify-fair",
            Command::Similar { .. } => "similar",
            Command::Normalize2 { .. } => "normalize2",
        }
    }
}

/// Subcommand names as clap sees them.
pub fn subcommand_names() -> Vec<String> {
    use clap::CommandFactory;
    Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect()
}

/// Result of a command: JSON value plus its table rendering.
struct Output {
    json: Value,
    text: String,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(v)?)
}

fn prob(p: &Probability) -> String {
    format!("{p} (≈{:.6})", p.approx())
}

fn parse(word: &str) -> Result<DiceWord, Error> {
    DiceWord::parse(word)
}

fn parse_labels(text: &str) -> Result<Vec<u32>, Error> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidDice(format!("bad label {t:?}")))
        })
        .collect()
}

fn verdict_json(n: usize, v: &Verdict) -> Value {
    json!({
        "n": n,
        "counts": v.counts.as_array(),
        "p": v.common_probability().map(|p| p.to_string()),
        "balanced": v.balanced,
        "nontransitive": v.nontransitive,
        "fair": v.fair,
    })
}

fn verdict_text(word: &DiceWord, n: usize, v: &Verdict) -> String {
    let mut s = format!("word   {word}\nsides  {n}\n");
    for (pair, count, p) in [
        ("A>B", v.counts.ab, &v.p_ab),
        ("B>C", v.counts.bc, &v.p_bc),
        ("C>A", v.counts.ca, &v.p_ca),
    ] {
        s += &format!("P({pair})  {count}/{} = {}\n", n * n, prob(p));
    }
    s += &format!(
        "balanced {}  nontransitive {}  fair {}\n",
        v.balanced, v.nontransitive, v.fair
    );
    s
}

fn analyze(word: &str, sites: bool) -> Result<Output, Error> {
    let w = parse(word)?;
    let n = w.sides()?;
    let v = w.classify()?;
    let mut json = verdict_json(n, &v);
    let mut text = verdict_text(&w, n, &v);
    if sites {
        let found = find_step2_sites(&w)?;
        let list: Vec<String> = found.iter().map(|m| m.to_string()).collect();
        text += &format!(
            "step2 sites  {}\n",
            if list.is_empty() { "none".to_string() } else { list.join(" ") }
        );
        json["step2_sites"] = to_value(&found)?;
    }
    Ok(Output { json, text })
}

fn dice2word(a: &str, b: &str, c: &str) -> Result<Output, Error> {
    let a = parse_labels(a)?;
    let dice = DiceSet::new(a.len(), a, parse_labels(b)?, parse_labels(c)?)?;
    let w = DiceWord::from_dice(&dice);
    Ok(Output {
        json: json!({ "n": dice.n(), "word": w }),
        text: format!("{w}\n"),
    })
}

fn word2dice(word: &str) -> Result<Output, Error> {
    let dice = parse(word)?.to_dice()?;
    let list = |l| {
        dice.labels(l)
            .iter()
            .map(|x: &u32| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    use ntdice::Letter::{A, B, C};
    Ok(Output {
        json: to_value(&dice)?,
        text: format!("A  {}\nB  {}\nC  {}\n", list(A), list(B), list(C)),
    })
}

fn concat_cmd(first: &str, second: &str) -> Result<Output, Error> {
    let (x, y) = (parse(first)?, parse(second)?);
    let joined = concat(&x, &y)?;
    let (cx, cy) = (x.pair_counts()?, y.pair_counts()?);
    let pred = predict_counts(&cx, &cy);
    let actual = joined.pair_counts()?;
    let combined = combined_probability(cx.n, cx.ab, cy.n, cy.ab)?;
    let json = json!({
        "word": joined,
        "counts": actual.as_array(),
        "predicted": pred.predicted.as_array(),
        "law_holds": pred.predicted == actual,
        "p_ab": combined.to_string(),
    });
    let text = format!(
        "word       {joined}\ncounts     {:?}\npredicted  {:?} (first + second + {}·{})\nP(A>B)     {}\n",
        actual.as_array(),
        pred.predicted.as_array(),
        pred.m,
        pred.n,
        prob(&combined)
    );
    Ok(Output { json, text })
}

fn irreducible(word: &str) -> Result<Output, Error> {
    let w = parse(word)?;
    let r = is_irreducible(&w)?;
    let text = match r.witness_split {
        None => format!("{w} is irreducible\n"),
        Some(s) => format!(
            "{w} is reducible: {} · {}\n",
            w.slice(0, s),
            w.slice(s, w.len())
        ),
    };
    Ok(Output {
        json: to_value(&r)?,
        text,
    })
}

fn construct(n: usize) -> Result<Output, Error> {
    let w = construct_irreducible(n)?;
    let v = w.classify()?;
    let irr = is_irreducible(&w)?.irreducible;
    let p = v.common_probability().expect("construction is balanced");
    Ok(Output {
        json: json!({
            "n": n,
            "word": w,
            "counts": v.counts.as_array(),
            "p": p.to_string(),
            "irreducible": irr,
        }),
        text: format!(
            "word         {w}\ncounts       {:?}\nP            {}\nirreducible  {irr}\n",
            v.counts.as_array(),
            prob(&p)
        ),
    })
}

fn near_half(m: usize) -> Result<Output, Error> {
    let w = construct_near_half(m)?;
    let v = w.classify()?;
    let p = v.common_probability().expect("construction is balanced");
    Ok(Output {
        json: json!({
            "m": m,
            "n": 2 * m + 1,
            "word": w,
            "counts": v.counts.as_array(),
            "p": p.to_string(),
            "excess": p.excess().to_string(),
        }),
        text: format!(
            "word    {w}\ncounts  {:?}\nP       {}\nexcess  {}\n",
            v.counts.as_array(),
            prob(&p),
            p.excess()
        ),
    })
}

fn optimize(n: usize, log: bool) -> Result<Output, Error> {
    let r: OptimizerReport = optimize_max_prob(n)?;
    let mut text = format!(
        "n {}  p {}  m_max {}  rounds {}\nsigma_f  {}\nsigma_1  {}\nsigma_2  {}\nfinal    {}\n\
         counts   {:?}\ntarget   {}\nachieved {}\ngap      {}\nmoves    {} step1, {} step2\n",
        r.n,
        r.p,
        r.m_max,
        r.rounds,
        r.stage_words.unmixed_fair,
        r.stage_words.sigma1,
        r.stage_words.sigma2,
        r.word,
        r.achieved_counts.as_array(),
        prob(&r.target_probability),
        prob(&r.achieved_probability),
        r.gap,
        r.step1_moves,
        r.step2_moves,
    );
    if log {
        for mv in &r.move_log.moves {
            text += &format!("  {mv}\n");
        }
    }
    Ok(Output {
        json: to_value(&r)?,
        text,
    })
}

fn bounds(p_max: u64) -> Result<Output, Error> {
    if p_max < 1 {
        return Err(Error::Domain("--p-max must be at least 1".into()));
    }
    let r: BoundReport = bound_report_up_to(p_max);
    let mut text = format!("discriminant (n = 6p)  {}·p²\n", r.discriminant_6p);
    for c in &r.constants {
        text += &format!(
            "{:<26} {}  in [{}, {}]  < 1/9: {}\n",
            c.name, c.value, c.enclosure[0], c.enclosure[1], c.below_one_ninth
        );
    }
    text += &format!("limit < 1/9.12: {}\n", r.limit_below_1_over_9_12);
    for f in &r.families {
        text += &format!(
            "n = 6p+{}  p <= {}: root increasing {}, excess < 1/9 {}\n",
            f.residue, f.p_max, f.numerator_increasing, f.excess_below_one_ninth
        );
    }
    for e in &r.errata {
        text += &format!("note: {e}\n");
    }
    Ok(Output {
        json: to_value(&r)?,
        text,
    })
}

fn max_prob_text(mp: &Option<MaxProb>) -> String {
    match mp {
        None => "max P     none (no balanced non-transitive word)\n".into(),
        Some(mp) => {
            let excess = mp.p.excess();
            let mut s = format!(
                "max P     {}  excess {} (≈{})\n",
                prob(&mp.p),
                excess,
                decimal(&excess, 6, false)
            );
            for w in &mp.witnesses {
                s += &format!("  {w}\n");
            }
            s
        }
    }
}

fn stats_text(s: &EnumStats) -> String {
    let mut t = format!(
        "n {}  words {}\nbalanced  {}\nbalanced non-transitive  {}\nfair  {}\n",
        s.n, s.total_words, s.count_balanced, s.count_balanced_nontransitive, s.count_fair
    );
    t += &max_prob_text(&s.max_prob);
    t += "histogram\n";
    for (p, c) in &s.histogram {
        t += &format!("  {p:>8}  {c}\n");
    }
    t
}

fn cache_path(n: usize) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(Path::new(&dir).join(format!("stats-n{n}.json")))
}

/// Stats for `n`, from the cache directory when a verified file exists.
fn cached_stats(scan: &ScanArgs) -> Result<EnumStats, Error> {
    let path = cache_path(scan.n);
    if let Some(p) = path.as_deref().filter(|p| p.exists()) {
        let stats = load_stats(p)?;
        if stats.n == scan.n as u64 {
            return Ok(stats);
        }
    }
    let stats = enumerate(scan.n, &EnumFilter::default(), &scan.options(), None)?;
    if let Some(p) = path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        cache_stats(&stats, &p)?;
    }
    Ok(stats)
}

fn enumerate_cmd(
    scan: &ScanArgs,
    out: Option<&Path>,
    filter: &[String],
    counts: Option<&[u64]>,
) -> Result<Output, Error> {
    let mut f = EnumFilter::default();
    for flag in filter {
        match flag.as_str() {
            "balanced" => f.balanced = true,
            "nontransitive" => f.nontransitive = true,
            "fair" => f.fair = true,
            other => return Err(Error::Domain(format!("unknown filter {other:?}"))),
        }
    }
    if let Some(c) = counts {
        f.counts = Some([c[0], c[1], c[2]]);
    }
    let listing = f != EnumFilter::default();
    let (stats, words) = if listing {
        let found = Mutex::new(Vec::new());
        let push = |w: &DiceWord| found.lock().expect("collector poisoned").push(w.clone());
        let stats = enumerate(scan.n, &f, &scan.options(), Some(&push))?;
        let mut words = found.into_inner().expect("collector poisoned");
        words.sort();
        (stats, Some(words))
    } else {
        (cached_stats(scan)?, None)
    };
    if let Some(path) = out {
        cache_stats(&stats, path)?;
    }
    let mut json: Value = serde_json::from_str(&stats_json(&stats)?)?;
    let mut text = stats_text(&stats);
    if let Some(words) = words {
        text += &format!("matching words ({})\n", words.len());
        for w in &words {
            text += &format!("  {w}\n");
        }
        json["matching"] = to_value(&words)?;
    }
    Ok(Output { json, text })
}

fn scan_max(scan: &ScanArgs) -> Result<Output, Error> {
    let mp = match cache_path(scan.n).filter(|p| p.exists()) {
        Some(_) if scan.n >= 2 => cached_stats(scan)?.max_prob,
        _ => max_probability(scan.n, &scan.options())?,
    };
    let json = json!({
        "n": scan.n,
        "max_prob": mp,
        "below_one_ninth_bound": mp.as_ref().map(|m| m.p.excess() < ntdice::Rational::new(1, 9)),
    });
    Ok(Output {
        json,
        text: format!("n {}\n{}", scan.n, max_prob_text(&mp)),
    })
}

fn interpretation_text(name: &str, r: &Option<InterpretationReport>) -> String {
    match r {
        None => format!("{name}: not checked\n"),
        Some(r) => format!(
            "{name}: {} sources, class {} ({}), reachable {}, unreachable {}, unresolved {}\n",
            r.canonical_words,
            r.class_size,
            if r.class_complete { "complete" } else { "budget hit" },
            r.reachable,
            r.unreachable,
            r.unresolved
        ),
    }
}

fn verify_fair(scan: &ScanArgs, search: &SearchArgs) -> Result<Output, Error> {
    let r: FairConjectureReport =
        verify_fair_conjecture(scan.n, search.budget, search.moves(), &scan.options())?;
    let text = format!(
        "n {}  fair words {} (by {})  parity ok {}\n{}{}",
        r.n,
        r.fair_words_found,
        r.fair_count_source,
        r.parity_ok,
        interpretation_text("same permutation ", &r.same_perm),
        interpretation_text("mixed permutation", &r.mixed_perm),
    );
    Ok(Output {
        json: to_value(&r)?,
        text,
    })
}

fn path_text(path: &MovePath, words: &[DiceWord]) -> String {
    let mut s = format!("{} moves\n  {}\n", path.len(), path.start);
    for (mv, w) in path.moves.iter().zip(&words[1..]) {
        s += &format!("  {w}  {mv}\n");
    }
    s
}

/// Intermediate words of a path between complete words, replayed move by
/// move with the checked `apply_move`.
fn replay_checked(path: &MovePath) -> Result<Vec<DiceWord>, Error> {
    let mut words = vec![path.start.clone()];
    for mv in &path.moves {
        let next = apply_move(words.last().expect("nonempty"), mv)?;
        words.push(next);
    }
    if words.last() != Some(&path.end) {
        return Err(Error::Integrity(format!("path does not end at {}", path.end)));
    }
    Ok(words)
}

fn similar_cmd(from: &str, to: &str, search: &SearchArgs) -> Result<Output, Error> {
    let (x, y) = (parse(from)?, parse(to)?);
    Ok(match similar(&x, &y, search.budget, search.moves())? {
        Similarity::Similar(path) => {
            let words = replay_checked(&path)?;
            Output {
                text: format!("similar: {}", path_text(&path, &words)),
                json: json!({ "result": "similar", "path": path }),
            }
        }
        Similarity::NotSimilar { explored } => Output {
            text: format!("not similar: the class of {x} has {explored} words\n"),
            json: json!({ "result": "not_similar", "explored": explored }),
        },
        Similarity::Unknown { explored } => Output {
            text: format!("unknown: budget exhausted after {explored} words\n"),
            json: json!({ "result": "unknown", "explored": explored }),
        },
    })
}

fn normalize2(word: &str) -> Result<Output, Error> {
    let path = normalize_two_letter_fair(&parse(word)?)?;
    let mut words = Vec::new();
    path.replay_with(|w| words.push(w.clone()))?;
    Ok(Output {
        text: path_text(&path, &words),
        json: to_value(&path)?,
    })
}

fn dispatch(cmd: &Command) -> Result<Output, Error> {
    match cmd {
        Command::Analyze { word, sites } => analyze(word, *sites),
        Command::Dice2word { a, b, c } => dice2word(a, b, c),
        Command::Word2dice { word } => word2dice(word),
        Command::Concat { first, second } => concat_cmd(first, second),
        Command::Irreducible { word } => irreducible(word),
        Command::Construct { n } => construct(*n),
        Command::NearHalf { m } => near_half(*m),
        Command::Optimize { n, log } => optimize(*n, *log),
        Command::Bounds { p_max } => bounds(*p_max),
        Command::Enumerate {
            scan,
            out,
            filter,
            counts,
        } => enumerate_cmd(scan, out.as_deref(), filter, counts.as_deref()),
        Command::ScanMax { scan } => scan_max(scan),
        Command::VerifyFair { scan, search } => verify_fair(scan, search),
        Command::Similar { from, to, search } => similar_cmd(from, to, search),
        Command::Normalize2 { word } => normalize2(word),
    }
}

/// Runs the program on `args` (including the program name) and returns
/// the exit code: 0 success, 1 domain error, 2 usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(&cli.command) {
        Ok(o) => {
            let res = if cli.json {
                writeln!(out, "{}", o.json)
            } else {
                write!(out, "{}", o.text)
            };
            match res {
                Ok(()) => 0,
                Err(_) => 1,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "ntdice {}: {e}", cli.command.name());
            1
        }
    }
}
