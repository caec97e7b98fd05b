//! Closed-form constants of the optimizer family as exact surds, with
//! integer-only comparisons and certified rational enclosures.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Roots;
use serde::{Deserialize, Serialize};

use crate::rational::{serde_rational, Rational};

/// `(a + b·√d) / c` with `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Surd {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

fn mul(x: i128, y: i128) -> i128 {
    x.checked_mul(y).expect("surd comparison overflowed i128")
}

/// Sign of `x + y·√d` for `d ≥ 0`.
fn sign_plus_root(x: i128, y: i128, d: i128) -> Ordering {
    let root_sign = if d == 0 { Ordering::Equal } else { y.cmp(&0) };
    match (x.cmp(&0), root_sign) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (sx, sy) if sx == sy => sx,
        (sx, _) => {
            // opposite signs: compare x² with y²·d
            let lhs = mul(x, x);
            let rhs = mul(mul(y, y), d);
            match lhs.cmp(&rhs) {
                Ordering::Equal => Ordering::Equal,
                Ordering::Greater => sx,
                Ordering::Less => sx.reverse(),
            }
        }
    }
}

impl Surd {
    pub fn new(a: i128, b: i128, c: i128, d: i128) -> Self {
        assert!(c > 0 && d >= 0, "surd needs c > 0 and d >= 0");
        Surd { a, b, c, d }
    }

    pub fn rational(r: Rational) -> Self {
        Surd::new(*r.numer(), 0, *r.denom(), 0)
    }

    /// Exact comparison with a rational, by cross-multiplying and squaring.
    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        let (rn, rd) = (*r.numer(), *r.denom());
        let x = mul(self.a, rd) - mul(rn, self.c);
        let y = mul(self.b, rd);
        sign_plus_root(x, y, self.d)
    }

    /// Exact comparison of two surds sharing the same radicand.
    pub fn cmp_same_radicand(&self, other: &Surd) -> Ordering {
        assert_eq!(self.d, other.d, "radicands differ");
        let x = mul(self.a, other.c) - mul(other.a, self.c);
        let y = mul(self.b, other.c) - mul(other.b, self.c);
        sign_plus_root(x, y, self.d)
    }

    /// Rational enclosure `[lo, hi]` from `⌊√d·2^bits⌋`; the width is
    /// `|b| / (c·2^bits)` (zero when `d` is a perfect square).
    pub fn enclosure(&self, bits: u32) -> (Rational, Rational) {
        assert!(bits <= 56, "enclosure precision limited to 56 bits");
        let scale = 1i128 << bits;
        let scaled = (self.d as u128) << (2 * bits);
        let s = scaled.sqrt() as i128;
        let exact = (s as u128) * (s as u128) == scaled;
        let den = mul(self.c, scale);
        let lo_root = mul(self.a, scale) + mul(self.b, s);
        let hi_root = if exact { lo_root } else { lo_root + self.b };
        let (lo, hi) = if self.b >= 0 {
            (lo_root, hi_root)
        } else {
            (hi_root, lo_root)
        };
        (Rational::new(lo, den), Rational::new(hi, den))
    }

    pub fn approx(&self) -> f64 {
        (self.a as f64 + self.b as f64 * (self.d as f64).sqrt()) / self.c as f64
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.b < 0 { '-' } else { '+' };
        write!(f, "({} {} {}·√{})/{}", self.a, sign, self.b.abs(), self.d, self.c)
    }
}

/// Ordering of `r` against an enclosure, or `None` when `r` falls inside it.
pub fn enclosure_verdict(lo: &Rational, hi: &Rational, r: &Rational) -> Option<Ordering> {
    if hi < r {
        Some(Ordering::Less)
    } else if lo > r {
        Some(Ordering::Greater)
    } else {
        None
    }
}

/// Decimal string of `r` truncated (`round_up = false`) or rounded up to
/// `digits` places.
pub fn decimal(r: &Rational, digits: u32, round_up: bool) -> String {
    let scaled = *r * Rational::from_integer(10i128.pow(digits));
    let v = if round_up { scaled.ceil() } else { scaled.floor() }.to_integer();
    let neg = v < 0;
    let v = v.unsigned_abs();
    let p = 10u128.pow(digits);
    format!(
        "{}{}.{:0width$}",
        if neg { "-" } else { "" },
        v / p,
        v % p,
        width = digits as usize
    )
}

pub const ENCLOSURE_BITS: u32 = 44;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedConstant {
    pub name: String,
    pub value: Surd,
    /// Decimal strings bracketing the value.
    pub enclosure: [String; 2],
    #[serde(with = "serde_rational")]
    pub width: Rational,
    pub below_one_ninth: bool,
}

impl NamedConstant {
    fn new(name: &str, value: Surd) -> Self {
        let (lo, hi) = value.enclosure(ENCLOSURE_BITS);
        NamedConstant {
            name: name.to_string(),
            value,
            enclosure: [decimal(&lo, 15, false), decimal(&hi, 15, true)],
            width: hi - lo,
            below_one_ninth: value.cmp_rational(&Rational::new(1, 9)) == Ordering::Less,
        }
    }
}

/// Per-family numerator `u(p) − √D(p)` of the largest admissible round
/// count (times 2), where `u(p) = 13p + k` and `D(p) = 153p² + βp + γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub residue: u64,
    pub k: i128,
    pub beta: i128,
    pub gamma: i128,
}

pub const FAMILIES: [Family; 3] = [
    Family { residue: 0, k: 0, beta: 0, gamma: 0 },
    Family { residue: 2, k: 4, beta: 108, gamma: 20 },
    Family { residue: 4, k: 8, beta: 216, gamma: 80 },
];

impl Family {
    pub fn radicand(&self, p: i128) -> i128 {
        153 * p * p + self.beta * p + self.gamma
    }

    /// `q = 3p + r` for this residue.
    pub fn q(&self, p: i128) -> i128 {
        3 * p + (self.residue as i128) / 2
    }

    /// Closed-form excess with the real root in place of `m_max`:
    /// `(p + (u − √D)/2)·q / (2q)²`.
    pub fn excess(&self, p: i128) -> Surd {
        let q = self.q(p);
        let u = 13 * p + self.k;
        Surd::new((2 * p + u) * q, -q, 2 * 4 * q * q, self.radicand(p))
    }

    /// `u(p+1) − √D(p+1) > u(p) − √D(p)`, i.e. `13 + √D(p) > √D(p+1)`,
    /// decided as `26·√D(p) > D(p+1) − D(p) − 169`.
    pub fn numerator_increases_at(&self, p: i128) -> bool {
        let rhs = self.radicand(p + 1) - self.radicand(p) - 169;
        sign_plus_root(-rhs, 26, self.radicand(p)) == Ordering::Greater
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub residue: u64,
    pub p_max: u64,
    pub numerator_increasing: bool,
    pub first_non_increase: Option<u64>,
    pub excess_below_one_ninth: bool,
    pub first_excess_violation: Option<u64>,
    pub limit: Surd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `13² − 4·4`, the discriminant of `m² − 13m + 4` (the `n = 6p` round
    /// inequality divided by `p²`).
    pub discriminant_6p: i128,
    pub constants: Vec<NamedConstant>,
    /// `(15 − √153)/24 < 1/9.12`, decided exactly.
    pub limit_below_1_over_9_12: bool,
    pub families: Vec<FamilyCheck>,
    pub errata: Vec<String>,
}

pub fn bound_report() -> BoundReport {
    bound_report_up_to(1_000_000)
}

pub fn bound_report_up_to(p_max: u64) -> BoundReport {
    let disc = 13 * 13 - 4 * 4;
    let printed_6p = Surd::new(15, -1, 24, 154);
    let recomputed_6p = Surd::new(15, -1, 24, disc);
    let limit = Surd::new(15, -1, 24, 153);
    let abstract_printed = Surd::new(13, -1, 24, 153);
    let constants = vec![
        NamedConstant::new("root_ratio_6p_printed", Surd::new(13, -1, 2, 154)),
        NamedConstant::new("root_ratio_6p_recomputed", Surd::new(13, -1, 2, disc)),
        NamedConstant::new("excess_6p_printed", printed_6p),
        NamedConstant::new("excess_6p_recomputed", recomputed_6p),
        NamedConstant::new("excess_limit_6p2_6p4", limit),
        NamedConstant::new("abstract_excess_printed", abstract_printed),
    ];
    let one_ninth = Rational::new(1, 9);
    let families = FAMILIES
        .iter()
        .map(|fam| {
            let first_non_increase =
                (1..p_max).find(|&p| !fam.numerator_increases_at(p as i128));
            let first_excess_violation = (1..=p_max)
                .find(|&p| fam.excess(p as i128).cmp_rational(&one_ninth) != Ordering::Less);
            FamilyCheck {
                residue: fam.residue,
                p_max,
                numerator_increasing: first_non_increase.is_none(),
                first_non_increase,
                excess_below_one_ninth: first_excess_violation.is_none(),
                first_excess_violation,
                limit,
            }
        })
        .collect();
    let mut errata = Vec::new();
    if disc != 154 {
        errata.push(format!(
            "n = 6p: (2p − m)² ≥ 9pm is m² − 13pm + 4p² ≥ 0 with discriminant {disc}p², so the root is \
             (13 − √{disc})p/2 and the excess constant is (15 − √{disc})/24; the printed √154 \
             gives (15 − √154)/24"
        ));
    }
    if abstract_printed.cmp_same_radicand(&limit) != Ordering::Equal {
        errata.push(
            "the summary excess (13 − √153)/24 omits the 1/12 term; the limit of the \
             6p+2 and 6p+4 families is 1/12 + (13 − √153)/24 = (15 − √153)/24"
                .to_string(),
        );
    }
    BoundReport {
        discriminant_6p: disc,
        constants,
        limit_below_1_over_9_12: limit.cmp_rational(&Rational::new(25, 228)) == Ordering::Less,
        families,
        errata,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        let s = Surd::new(15, -1, 24, 153);
        assert_eq!(s.cmp_rational(&Rational::new(1, 9)), Ordering::Less);
        assert_eq!(s.cmp_rational(&Rational::new(1, 10)), Ordering::Greater);
        // √4 = 2 exactly
        let two = Surd::new(0, 1, 1, 4);
        assert_eq!(two.cmp_rational(&Rational::from_integer(2)), Ordering::Equal);
        assert_eq!(Surd::rational(Rational::new(1, 3)).cmp_rational(&Rational::new(1, 3)), Ordering::Equal);
    }

    #[test]
    fn enclosures_bracket_the_value() {
        let s = Surd::new(15, -1, 24, 154);
        let (lo, hi) = s.enclosure(ENCLOSURE_BITS);
        assert!(lo <= hi);
        assert!(hi - lo <= Rational::new(1, 1_000_000_000_000));
        assert_eq!(s.cmp_rational(&lo), Ordering::Greater);
        assert_eq!(s.cmp_rational(&hi), Ordering::Less);
        let (lo, hi) = Surd::new(1, 3, 2, 9).enclosure(10);
        assert_eq!((lo, hi), (Rational::from_integer(5), Rational::from_integer(5)));
    }

    #[test]
    fn decimals() {
        assert_eq!(decimal(&Rational::new(1, 3), 4, false), "0.3333");
        assert_eq!(decimal(&Rational::new(1, 3), 4, true), "0.3334");
        assert_eq!(decimal(&Rational::new(-1, 4), 2, false), "-0.25");
    }

    #[test]
    fn report_examples() {
        let r = bound_report_up_to(1000);
        assert_eq!(r.discriminant_6p, 153);
        let get = |name: &str| r.constants.iter().find(|c| c.name == name).unwrap().clone();
        let limit = get("excess_limit_6p2_6p4");
        assert!(limit.enclosure[0].starts_with("0.1096"));
        assert!(limit.below_one_ninth);
        let printed = get("excess_6p_printed");
        assert!(printed.enclosure[0].starts_with("0.1079"));
        assert!(printed.below_one_ninth);
        assert!(r.limit_below_1_over_9_12);
        assert_eq!(r.errata.len(), 2);
        for f in &r.families {
            assert!(f.numerator_increasing && f.excess_below_one_ninth, "{f:?}");
        }
    }
}
