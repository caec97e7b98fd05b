use proptest::prelude::*;
use proptest::sample::Index;

use ntdice::algebra::{combined_probability, concat, is_irreducible, predict_counts};
use ntdice::construct::{self, construct_irreducible, construct_near_half};
use ntdice::rewrite::{
    apply_move, find_step2_sites, neighbours, normalize_two_letter_fair, similar, MoveSet,
    RewriteMove, Similarity,
};
use ntdice::{DiceSet, DiceWord, Letter, Probability, Rational};

fn letters(text: &str) -> Vec<Letter> {
    DiceWord::parse(text).unwrap().into_letters()
}

/// Uniformly shuffled complete word with `n` sides.
fn complete(n: impl Strategy<Value = usize>) -> impl Strategy<Value = DiceWord> {
    n.prop_flat_map(|n| {
        let mut v = Vec::with_capacity(3 * n);
        for l in Letter::ALL {
            v.extend(std::iter::repeat_n(l, n));
        }
        Just(v).prop_shuffle().prop_map(DiceWord::new)
    })
}

fn permutation3() -> impl Strategy<Value = Vec<Letter>> {
    Just(Letter::ALL.to_vec()).prop_shuffle()
}

/// `N(X>Y)` by walking from the right: each `Y` meets the `X`s already
/// seen, which all carry larger labels.
fn reversed_scan(w: &DiceWord, x: Letter, y: Letter) -> u64 {
    let mut seen_x = 0;
    let mut total = 0;
    for &l in w.letters().iter().rev() {
        if l == x {
            seen_x += 1;
        } else if l == y {
            total += seen_x;
        }
    }
    total
}

fn brute_force(w: &DiceWord, x: Letter, y: Letter) -> u64 {
    let l = w.letters();
    let mut total = 0;
    for i in 0..l.len() {
        for j in 0..i {
            if l[i] == x && l[j] == y {
                total += 1;
            }
        }
    }
    total
}

fn counts(w: &DiceWord) -> [u64; 3] {
    w.pair_counts().unwrap().as_array()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn word_dice_round_trip(w in complete(1usize..=10)) {
        let d = w.to_dice().unwrap();
        prop_assert_eq!(DiceWord::from_dice(&d), w);
    }

    #[test]
    fn dice_word_round_trip(labels in (1usize..=10).prop_flat_map(|n| {
        Just((1..=3 * n as u32).collect::<Vec<_>>()).prop_shuffle()
    })) {
        let n = labels.len() / 3;
        let d = DiceSet::new(n, labels[..n].to_vec(), labels[n..2 * n].to_vec(), labels[2 * n..].to_vec()).unwrap();
        let w = DiceWord::from_dice(&d);
        prop_assert_eq!(w.to_dice().unwrap(), d.clone());
        let json = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(serde_json::from_str::<DiceSet>(&json).unwrap(), d);
    }

    #[test]
    fn complement_law(w in complete(1usize..=12)) {
        let sq = (w.len() / 3).pow(2) as u64;
        let c = w.pair_counts().unwrap();
        prop_assert_eq!(c.ab + reversed_scan(&w, Letter::B, Letter::A), sq);
        prop_assert_eq!(c.bc + reversed_scan(&w, Letter::C, Letter::B), sq);
        prop_assert_eq!(c.ca + reversed_scan(&w, Letter::A, Letter::C), sq);
    }

    #[test]
    fn scan_matches_brute_force(w in complete(1usize..=12)) {
        use Letter::{A, B, C};
        prop_assert_eq!(counts(&w), [brute_force(&w, A, B), brute_force(&w, B, C), brute_force(&w, C, A)]);
    }

    #[test]
    fn fair_needs_even_sides(w in complete(1usize..=9)) {
        if w.classify().unwrap().fair {
            prop_assert_eq!((w.len() / 3) % 2, 0);
        }
    }

    #[test]
    fn concatenation_law(x in complete(1usize..=8), y in complete(1usize..=8)) {
        let joined = concat(&x, &y).unwrap();
        let pred = predict_counts(&x.pair_counts().unwrap(), &y.pair_counts().unwrap());
        prop_assert_eq!(joined.pair_counts().unwrap(), pred.predicted);
        // the probability formula agrees with counting
        let (cx, cy) = (x.pair_counts().unwrap(), y.pair_counts().unwrap());
        let p = combined_probability(cx.n, cx.ab, cy.n, cy.ab).unwrap();
        prop_assert_eq!(p, joined.classify().unwrap().p_ab);
    }

    #[test]
    fn prepending_tau_adds_two_plus_two_n(w in complete(1usize..=8), k in 0usize..4) {
        let n = (w.len() / 3) as u64;
        let tau = construct::word(construct::TAU);
        let joined = tau.repeat(k).concat(&w);
        let k = k as u64;
        // each τ adds 2 + 2·(sides to its right)
        let shift: u64 = (0..k).map(|i| 2 + 2 * (n + 2 * i)).sum();
        let base = counts(&w);
        prop_assert_eq!(counts(&joined), base.map(|c| c + shift));
        let (v, vj) = (w.classify().unwrap(), joined.classify().unwrap());
        prop_assert_eq!(v.balanced, vj.balanced);
        prop_assert_eq!(v.fair, vj.fair);
    }

    #[test]
    fn symmetric_exchange_keeps_counts(w in complete(3usize..=8), pick in any::<Index>()) {
        let moves: Vec<_> = neighbours(&w, MoveSet::Strict)
            .into_iter()
            .filter(|(m, _)| matches!(m, RewriteMove::SymmExchange { .. }))
            .collect();
        prop_assume!(!moves.is_empty());
        let (mv, next) = &moves[pick.index(moves.len())];
        prop_assert_eq!(&apply_move(&w, mv).unwrap(), next);
        prop_assert_eq!(counts(next), counts(&w));
    }

    #[test]
    fn end_rotation_keeps_counts(xyz in permutation3(), rest in complete(0usize..=8), front in any::<bool>()) {
        let (word, mv) = if front {
            (DiceWord::new(xyz).concat(&rest), RewriteMove::TripleRotateFrontToBack)
        } else {
            (rest.concat(&DiceWord::new(xyz)), RewriteMove::TripleRotateBackToFront)
        };
        let next = apply_move(&word, &mv).unwrap();
        prop_assert_eq!(counts(&next), counts(&word));
        let back = if front { RewriteMove::TripleRotateBackToFront } else { RewriteMove::TripleRotateFrontToBack };
        prop_assert_eq!(apply_move(&next, &back).unwrap(), word);
    }

    #[test]
    fn interior_rotation_keeps_counts(
        left in complete(0usize..=4),
        xyz in permutation3(),
        tau in complete(1usize..=4),
        right in complete(0usize..=4),
    ) {
        let block = DiceWord::new(xyz);
        let word = left.concat(&block).concat(&tau).concat(&right);
        let i = left.len() + 1;
        let j = i + 3 + tau.len() - 1;
        let mv = RewriteMove::BlockRotateRight { i, j };
        let next = apply_move(&word, &mv).unwrap();
        prop_assert_eq!(&next, &left.concat(&tau).concat(&block).concat(&right));
        prop_assert_eq!(counts(&next), counts(&word));
        prop_assert_eq!(apply_move(&next, &RewriteMove::BlockRotateLeft { i, j }).unwrap(), word);
    }

    #[test]
    fn step2_raises_every_count_by_one(
        rest in (2usize..=8).prop_flat_map(|n| complete(Just(n - 2))),
        cuts in (any::<Index>(), any::<Index>()),
    ) {
        let r = rest.letters();
        let mut c = [cuts.0.index(r.len() + 1), cuts.1.index(r.len() + 1)];
        c.sort();
        let mut v = letters("AB");
        v.extend(&r[..c[0]]);
        v.extend(letters("BC"));
        v.extend(&r[c[0]..c[1]]);
        v.extend(letters("CA"));
        v.extend(&r[c[1]..]);
        let w = DiceWord::new(v);
        let n = (w.len() / 3) as i128;
        let sites = find_step2_sites(&w).unwrap();
        prop_assert!(!sites.is_empty());
        for mv in sites {
            let next = apply_move(&w, &mv).unwrap();
            prop_assert_eq!(counts(&next), counts(&w).map(|x| x + 1));
            let (a, b) = (w.classify().unwrap(), next.classify().unwrap());
            prop_assert_eq!(a.balanced, b.balanced);
            if a.balanced {
                prop_assert_eq!(b.p_ab.value() - a.p_ab.value(), Rational::new(1, n * n));
            }
        }
    }

    #[test]
    fn max_bound_law(
        (m, c1) in (1u64..=60).prop_flat_map(|m| (Just(m), (m * m / 2 + 1)..=(m * m))),
        (n, c2) in (1u64..=60).prop_flat_map(|n| (Just(n), (n * n / 2 + 1)..=(n * n))),
    ) {
        let p1 = Probability::new(c1 as i128, (m * m) as i128);
        let p2 = Probability::new(c2 as i128, (n * n) as i128);
        let p = combined_probability(m, c1, n, c2).unwrap();
        prop_assert!(p > Probability::half());
        if p1 < Probability::new(1, 1) || p2 < Probability::new(1, 1) {
            prop_assert!(p < p1.max(p2), "{p} vs {p1}, {p2}");
        }
        prop_assert!(p <= p1.max(p2));
    }

    #[test]
    fn split_witness_certifies_itself(i in 0usize..6, j in 0usize..6) {
        let family = |k: usize| match k {
            0 => construct::word(construct::D3),
            1 => construct::word(construct::SIGMA3),
            2 => construct::word(construct::SIGMA4),
            3 => construct_irreducible(5).unwrap(),
            4 => construct_near_half(2).unwrap(),
            _ => construct::word(construct::D4),
        };
        let (x, y) = (family(i), family(j));
        let w = x.concat(&y);
        let r = is_irreducible(&w).unwrap();
        let split = r.witness_split.unwrap();
        prop_assert!(split <= x.len());
        prop_assert_eq!(split % 3, 0);
        for part in [w.slice(0, split), w.slice(split, w.len())] {
            let v = part.classify().unwrap();
            prop_assert!(v.balanced && v.nontransitive);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_walks_keep_the_verdict(w in complete(2usize..=8), steps in prop::collection::vec(any::<Index>(), 1..12)) {
        let start = w.classify().unwrap();
        let mut cur = w;
        for pick in steps {
            let nb = neighbours(&cur, MoveSet::InContext);
            if nb.is_empty() {
                break;
            }
            cur = nb[pick.index(nb.len())].1.clone();
            prop_assert_eq!(cur.classify().unwrap(), start.clone());
        }
    }

    #[test]
    fn similar_paths_keep_the_verdict(
        w in complete(2usize..=3),
        steps in prop::collection::vec(any::<Index>(), 0..6),
        strict in any::<bool>(),
    ) {
        let moves = if strict { MoveSet::Strict } else { MoveSet::InContext };
        let mut target = w.clone();
        for pick in steps {
            let nb = neighbours(&target, moves);
            if nb.is_empty() {
                break;
            }
            target = nb[pick.index(nb.len())].1.clone();
        }
        match similar(&w, &target, 100_000, moves).unwrap() {
            Similarity::Similar(path) => {
                path.verify().unwrap();
                prop_assert_eq!(&path.end, &target);
                path.replay_with(|x| assert_eq!(x.classify().unwrap(), w.classify().unwrap())).unwrap();
            }
            other => prop_assert!(false, "random walk target not found: {other:?}"),
        }
    }
}

/// All words over `{A, B}` of length `4m` with `2m` of each letter.
fn two_letter_words(m: usize) -> Vec<DiceWord> {
    let len = 4 * m;
    (0u32..1 << len)
        .filter(|bits| bits.count_ones() as usize == 2 * m)
        .map(|bits| {
            DiceWord::new(
                (0..len)
                    .map(|i| if bits >> (len - 1 - i) & 1 == 1 { Letter::B } else { Letter::A })
                    .collect(),
            )
        })
        .collect()
}

#[test]
fn two_letter_normalization_is_exhaustively_sound() {
    let mut checked = 0;
    for m in 1..=4 {
        let len = 4 * m;
        let fair_ab = 2 * (m * m) as u64;
        for w in two_letter_words(m) {
            if w.wins(Letter::A, Letter::B) != fair_ab {
                assert!(normalize_two_letter_fair(&w).is_err());
                continue;
            }
            let path = normalize_two_letter_fair(&w).unwrap();
            path.replay_with(|x| {
                assert_eq!(x.wins(Letter::A, Letter::B), fair_ab, "{x}");
                assert_eq!(x.letter_counts()[2], 0);
            })
            .unwrap();
            let block = if w.letters()[0] == Letter::A { "ABBA" } else { "BAAB" };
            assert_eq!(path.end.to_string(), block.repeat(m));
            assert!(path.len() <= len * len, "{w}: {} moves", path.len());
            checked += 1;
        }
    }
    // central coefficients of the Gaussian binomials [4m, 2m]
    assert_eq!(checked, 2 + 8 + 58 + 526);
}
