//! Exact probabilities for the classical hypothesis test behind the
//! protocol.
//!
//! A permutation-invariant adversary is a mixture of fixed class profiles:
//! `a` copies of class (1,0), `b` of (0,1), `c` of (1,1), and the rest clean,
//! shuffled uniformly over the `2k+1` positions. Positions `1..=k` are tested
//! for `s`, positions `k+1..=2k` for `t`, and position `2k+1` is kept.
//! Every quantity here is an exact [`Rational`]; only [`trace_bound`]
//! returns a float.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

pub type Rational = BigRational;

/// Largest `k` the enumeration oracle accepts.
pub const ORACLE_MAX_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("invalid class counts a={a}, b={b}, c={c} for k={k}")]
    InvalidCounts {
        a: usize,
        b: usize,
        c: usize,
        k: usize,
    },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("({a}, {b}) is outside the domain for k={k}: need a, b <= k+1 and a+b <= 2k+1")]
    OutOfDomain { a: usize, b: usize, k: usize },
    #[error("conditioning on an event of probability zero")]
    ZeroProbabilityCondition,
    #[error("significance level {alpha} must satisfy 1/(2k+1) < alpha <= 1 (k={k})")]
    AlphaOutOfRange { alpha: String, k: usize },
    #[error("{0} is not a probability")]
    NotAProbability(String),
    #[error("{0} does not sum to 1")]
    Unnormalized(&'static str),
    #[error("{which} has support point ({a}, {b}) outside its domain for k={k}")]
    BadSupport {
        which: &'static str,
        a: usize,
        b: usize,
        k: usize,
    },
    #[error("enumeration oracle supports k <= {ORACLE_MAX_K}, got {0}")]
    OracleTooLarge(usize),
    #[error("cannot parse {0:?} as a rational number")]
    Parse(String),
}

fn int(n: usize) -> BigInt {
    BigInt::from(n)
}

fn ratio(num: BigInt, den: BigInt) -> Rational {
    Rational::new(num, den)
}

/// `n (n-1) ... (n-m+1)`; the empty product is 1, and the product is 0 when
/// it runs through zero.
fn falling(n: usize, m: usize) -> BigInt {
    if m > n {
        return BigInt::zero();
    }
    (0..m).fold(BigInt::one(), |acc, i| acc * int(n - i))
}

fn two_k_plus_one(k: usize) -> usize {
    2 * k + 1
}

/// Numbers of non-clean copies of each class among `2k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassCounts {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub k: usize,
}

impl ClassCounts {
    pub fn new(a: usize, b: usize, c: usize, k: usize) -> Result<Self, AnalyticsError> {
        if k == 0 {
            return Err(AnalyticsError::ZeroK);
        }
        if a + b + c > two_k_plus_one(k) {
            return Err(AnalyticsError::InvalidCounts { a, b, c, k });
        }
        Ok(Self { a, b, c, k })
    }

    pub fn clean(&self) -> usize {
        two_k_plus_one(self.k) - self.a - self.b - self.c
    }

    /// Every valid `(a, b, c)` for this `k`, in lexicographic order.
    pub fn all(k: usize) -> impl Iterator<Item = ClassCounts> {
        let n = two_k_plus_one(k);
        (0..=n).flat_map(move |a| {
            (0..=n - a).flat_map(move |b| (0..=n - a - b).map(move |c| ClassCounts { a, b, c, k }))
        })
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(a={}, b={}, c={}, k={})",
            self.a, self.b, self.c, self.k
        )
    }
}

fn check_c0_domain(a: usize, b: usize, k: usize) -> Result<(), AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::ZeroK);
    }
    if a > k + 1 || b > k + 1 || a + b > two_k_plus_one(k) {
        return Err(AnalyticsError::OutOfDomain { a, b, k });
    }
    Ok(())
}

/// Probability that every test copy passes.
pub fn pass_prob(cc: &ClassCounts) -> Rational {
    let ClassCounts { a, b, c, k } = *cc;
    match c {
        0 if a > k + 1 || b > k + 1 => Rational::zero(),
        0 => {
            // ((k+1)^2 - ab) / (k+1)^2 * (k+1)_a (k+1)_b / (2k+1)_{a+b}
            let kk = int((k + 1) * (k + 1));
            let lead = ratio(kk.clone() - int(a * b), kk);
            lead * ratio(
                falling(k + 1, a) * falling(k + 1, b),
                falling(two_k_plus_one(k), a + b),
            )
        }
        1 if a > k || b > k => Rational::zero(),
        1 => {
            // 1/(2k+1) * k_a k_b / (2k)_{a+b}
            ratio(BigInt::one(), int(two_k_plus_one(k)))
                * ratio(falling(k, a) * falling(k, b), falling(2 * k, a + b))
        }
        _ => Rational::zero(),
    }
}

/// Probability that every test copy passes and the kept copy is clean, for
/// a profile without (1,1) copies.
pub fn joint_prob(a: usize, b: usize, k: usize) -> Result<Rational, AnalyticsError> {
    check_c0_domain(a, b, k)?;
    Ok(ratio(
        falling(k, a) * falling(k, b),
        falling(two_k_plus_one(k), a + b),
    ))
}

/// Probability that the kept copy is clean given that the test passed, for
/// a profile without (1,1) copies.
pub fn conditional_fidelity(a: usize, b: usize, k: usize) -> Result<Rational, AnalyticsError> {
    let joint = joint_prob(a, b, k)?;
    let pass = pass_prob(&ClassCounts::new(a, b, 0, k)?);
    if pass.is_zero() {
        return Err(AnalyticsError::ZeroProbabilityCondition);
    }
    Ok(joint / pass)
}

/// `(k+1-a)(k+1-b) / ((k+1)^2 - ab)`, the simplified form of
/// [`conditional_fidelity`].
pub fn conditional_fidelity_closed_form(
    a: usize,
    b: usize,
    k: usize,
) -> Result<Rational, AnalyticsError> {
    check_c0_domain(a, b, k)?;
    let den = int((k + 1) * (k + 1)) - int(a * b);
    if den.is_zero() {
        return Err(AnalyticsError::ZeroProbabilityCondition);
    }
    Ok(ratio(int(k + 1 - a) * int(k + 1 - b), den))
}

/// Slack of the per-profile fidelity inequality, scaled by
/// `(k+1)^2 - ab`; it is non-negative exactly when the inequality holds.
pub fn xi(a: usize, b: usize, k: usize) -> Result<Rational, AnalyticsError> {
    check_c0_domain(a, b, k)?;
    let kp = k + 1;
    let poly = int((kp - a) * (kp - b)) - int(kp * kp) + int(a * b);
    let tail = ratio(
        int(kp * kp) * falling(two_k_plus_one(k), a + b),
        int(two_k_plus_one(k)) * falling(kp, a) * falling(kp, b),
    );
    Ok(Rational::from_integer(poly) + tail)
}

/// Fidelity floor guaranteed at significance level `alpha`:
/// `1 - 1/(alpha (2k+1))`.
pub fn fidelity_bound(alpha: &Rational, k: usize) -> Result<Rational, AnalyticsError> {
    let n = Rational::from_integer(int(two_k_plus_one(k)));
    if alpha * &n <= Rational::one() || *alpha > Rational::one() {
        return Err(AnalyticsError::AlphaOutOfRange {
            alpha: alpha.to_string(),
            k,
        });
    }
    Ok(Rational::one() - (alpha * n).recip())
}

/// Bound `1/sqrt(alpha (2k+1))` on how far any measurement statistic of the
/// kept copy can drift from the ideal one.
///
/// Accepts the boundary `alpha = 1/(2k+1)`, where the bound is the trivial
/// value 1.
pub fn trace_bound(alpha: &Rational, k: usize) -> Result<f64, AnalyticsError> {
    let scaled = alpha * Rational::from_integer(int(two_k_plus_one(k)));
    if scaled < Rational::one() || *alpha > Rational::one() {
        return Err(AnalyticsError::AlphaOutOfRange {
            alpha: alpha.to_string(),
            k,
        });
    }
    Ok(1.0 / to_f64(&scaled).sqrt())
}

/// Exact test of `deviation <= 1/sqrt(alpha (2k+1))` for a non-negative
/// `deviation`, done as `deviation^2 alpha (2k+1) <= 1`.
pub fn within_trace_bound(
    deviation: &Rational,
    alpha: &Rational,
    k: usize,
) -> Result<bool, AnalyticsError> {
    trace_bound(alpha, k)?;
    let scaled = alpha * Rational::from_integer(int(two_k_plus_one(k)));
    Ok(!deviation.is_negative() && deviation * deviation * scaled <= Rational::one())
}

/// A permutation-invariant adversary: with probability `beta` no copy is of
/// class (1,1) and `(a, b)` is drawn from `q0`; otherwise exactly one copy
/// is (1,1) and `(a, b)` is drawn from `q1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDistribution {
    beta: Rational,
    q0: Vec<(usize, usize, Rational)>,
    q1: Vec<(usize, usize, Rational)>,
}

fn check_probability(p: &Rational) -> Result<(), AnalyticsError> {
    if p.is_negative() || *p > Rational::one() {
        return Err(AnalyticsError::NotAProbability(p.to_string()));
    }
    Ok(())
}

fn normalize(
    weights: Vec<(usize, usize, Rational)>,
    which: &'static str,
) -> Result<Vec<(usize, usize, Rational)>, AnalyticsError> {
    if weights.iter().any(|w| w.2.is_negative()) {
        return Err(AnalyticsError::NotAProbability(which.to_string()));
    }
    let total: Rational = weights.iter().map(|w| w.2.clone()).sum();
    if total.is_zero() {
        return Err(AnalyticsError::Unnormalized(which));
    }
    Ok(weights
        .into_iter()
        .map(|(a, b, w)| (a, b, w / &total))
        .collect())
}

impl ClassDistribution {
    /// `q0` and `q1` must each sum to exactly 1; one of them may be empty
    /// when its branch has probability zero.
    pub fn new(
        beta: Rational,
        q0: Vec<(usize, usize, Rational)>,
        q1: Vec<(usize, usize, Rational)>,
    ) -> Result<Self, AnalyticsError> {
        check_probability(&beta)?;
        for (name, q, needed) in [
            ("q0", &q0, !beta.is_zero()),
            ("q1", &q1, beta != Rational::one()),
        ] {
            for (_, _, w) in q {
                check_probability(w)?;
            }
            let total: Rational = q.iter().map(|w| w.2.clone()).sum();
            if (needed || !q.is_empty()) && total != Rational::one() {
                return Err(AnalyticsError::Unnormalized(name));
            }
        }
        Ok(Self { beta, q0, q1 })
    }

    /// Like [`Self::new`] but rescales non-negative weights to sum to 1.
    pub fn from_weights(
        beta: Rational,
        q0: Vec<(usize, usize, Rational)>,
        q1: Vec<(usize, usize, Rational)>,
    ) -> Result<Self, AnalyticsError> {
        let q0 = if q0.is_empty() {
            q0
        } else {
            normalize(q0, "q0")?
        };
        let q1 = if q1.is_empty() {
            q1
        } else {
            normalize(q1, "q1")?
        };
        Self::new(beta, q0, q1)
    }

    /// Point mass on a single profile `(a, b, c)` with `c` in {0, 1}.
    pub fn point(a: usize, b: usize, c: usize) -> Result<Self, AnalyticsError> {
        let one = Rational::one();
        match c {
            0 => Self::new(one.clone(), vec![(a, b, one)], vec![]),
            1 => Self::new(Rational::zero(), vec![], vec![(a, b, one)]),
            _ => Err(AnalyticsError::InvalidCounts { a, b, c, k: 0 }),
        }
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn q0(&self) -> &[(usize, usize, Rational)] {
        &self.q0
    }

    pub fn q1(&self) -> &[(usize, usize, Rational)] {
        &self.q1
    }

    /// Checks that every support point is admissible for `k`: `q0` points
    /// need `a, b <= k+1` and `a+b <= 2k+1`, `q1` points need `a, b <= k`.
    pub fn validate_for(&self, k: usize) -> Result<(), AnalyticsError> {
        if k == 0 {
            return Err(AnalyticsError::ZeroK);
        }
        for &(a, b, _) in &self.q0 {
            if a > k + 1 || b > k + 1 || a + b > two_k_plus_one(k) {
                return Err(AnalyticsError::BadSupport {
                    which: "q0",
                    a,
                    b,
                    k,
                });
            }
        }
        for &(a, b, _) in &self.q1 {
            if a > k || b > k {
                return Err(AnalyticsError::BadSupport {
                    which: "q1",
                    a,
                    b,
                    k,
                });
            }
        }
        Ok(())
    }

    /// Full law of `(a, b, c)` as `(counts, probability)` pairs, zero-weight
    /// entries dropped.
    pub fn profiles(&self, k: usize) -> Result<Vec<(ClassCounts, Rational)>, AnalyticsError> {
        self.validate_for(k)?;
        let mut out = Vec::new();
        for &(a, b, ref w) in &self.q0 {
            let p = &self.beta * w;
            if !p.is_zero() {
                out.push((ClassCounts::new(a, b, 0, k)?, p));
            }
        }
        let one_minus = Rational::one() - &self.beta;
        for &(a, b, ref w) in &self.q1 {
            let p = &one_minus * w;
            if !p.is_zero() {
                out.push((ClassCounts::new(a, b, 1, k)?, p));
            }
        }
        Ok(out)
    }

    /// A random mixture with small rational weights, used by sweeps and
    /// benchmarks.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let den = rng.random_range(1..=12usize);
        let num = rng.random_range(0..=den);
        let beta = ratio(int(num), int(den));
        let mut pick = |q1: bool| {
            let points = rng.random_range(1..=4usize);
            (0..points)
                .map(|_| {
                    let (a, b) = if q1 {
                        (rng.random_range(0..=k), rng.random_range(0..=k))
                    } else {
                        let a = rng.random_range(0..=k + 1);
                        let b = rng.random_range(0..=(k + 1).min(two_k_plus_one(k) - a));
                        (a, b)
                    };
                    (
                        a,
                        b,
                        Rational::from_integer(int(rng.random_range(1..=10usize))),
                    )
                })
                .collect::<Vec<_>>()
        };
        let q0 = pick(false);
        let q1 = pick(true);
        Self::from_weights(beta, q0, q1).expect("random weights are positive")
    }
}

/// The three expectations that determine the protocol's statistics for a
/// [`ClassDistribution`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TFunctionals {
    /// Pass probability averaged over `q0`.
    pub t1: Rational,
    /// Pass probability averaged over `q1`.
    pub t2: Rational,
    /// Pass-and-clean probability averaged over `q0`.
    pub t3: Rational,
    pub beta: Rational,
}

impl TFunctionals {
    /// `beta T1 + (1 - beta) T2`.
    pub fn pass(&self) -> Rational {
        &self.beta * &self.t1 + (Rational::one() - &self.beta) * &self.t2
    }

    /// `beta T3`: probability of passing with a clean kept copy.
    pub fn joint(&self) -> Rational {
        &self.beta * &self.t3
    }

    /// `beta T3 / pass`; `None` when the pass probability is zero.
    pub fn conditional(&self) -> Option<Rational> {
        let pass = self.pass();
        (!pass.is_zero()).then(|| self.joint() / pass)
    }
}

pub fn t_functionals(dist: &ClassDistribution, k: usize) -> Result<TFunctionals, AnalyticsError> {
    dist.validate_for(k)?;
    let mut t1 = Rational::zero();
    let mut t3 = Rational::zero();
    for &(a, b, ref w) in dist.q0() {
        t1 += w * pass_prob(&ClassCounts::new(a, b, 0, k)?);
        t3 += w * joint_prob(a, b, k)?;
    }
    let mut t2 = Rational::zero();
    for &(a, b, ref w) in dist.q1() {
        t2 += w * pass_prob(&ClassCounts::new(a, b, 1, k)?);
    }
    Ok(TFunctionals {
        t1,
        t2,
        t3,
        beta: dist.beta().clone(),
    })
}

/// Outcome of checking the fidelity guarantee on one adversary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuaranteeVerdict {
    pub pass: Rational,
    pub conditional: Option<Rational>,
    pub bound: Rational,
    /// Whether `pass >= alpha`.
    pub premise: bool,
    /// Whether the implication `premise => conditional >= bound` holds.
    pub holds: bool,
}

pub fn guarantee_check(
    dist: &ClassDistribution,
    k: usize,
    alpha: &Rational,
) -> Result<GuaranteeVerdict, AnalyticsError> {
    let bound = fidelity_bound(alpha, k)?;
    let t = t_functionals(dist, k)?;
    let pass = t.pass();
    let conditional = t.conditional();
    let premise = pass >= *alpha;
    let holds = !premise || conditional.as_ref().is_some_and(|c| *c >= bound);
    Ok(GuaranteeVerdict {
        pass,
        conditional,
        bound,
        premise,
        holds,
    })
}

/// Brute-force values for one profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleValues {
    pub arrangements: u64,
    pub pass: Rational,
    pub joint: Rational,
    pub conditional: Option<Rational>,
}

/// Enumerates every distinct placement of the profile's classes over the
/// `2k+1` positions and counts those that pass (no `s` among the first `k`,
/// no `t` among the next `k`) and those that also leave the last position
/// clean.
pub fn oracle(cc: &ClassCounts) -> Result<OracleValues, AnalyticsError> {
    if cc.k > ORACLE_MAX_K {
        return Err(AnalyticsError::OracleTooLarge(cc.k));
    }
    let cc = ClassCounts::new(cc.a, cc.b, cc.c, cc.k)?;
    // remaining[i] = copies left of class i, classes ordered (0,0),(1,0),(0,1),(1,1)
    const S: [bool; 4] = [false, true, false, true];
    const T: [bool; 4] = [false, false, true, true];
    let k = cc.k;
    let n = two_k_plus_one(k);
    let mut remaining = [cc.clean(), cc.a, cc.b, cc.c];
    let mut placed = Vec::with_capacity(n);
    let mut tally = (0u64, 0u64, 0u64);

    fn walk(
        remaining: &mut [usize; 4],
        placed: &mut Vec<usize>,
        n: usize,
        k: usize,
        tally: &mut (u64, u64, u64),
    ) {
        if placed.len() == n {
            tally.0 += 1;
            let passes =
                placed[..k].iter().all(|&c| !S[c]) && placed[k..2 * k].iter().all(|&c| !T[c]);
            if passes {
                tally.1 += 1;
                if placed[2 * k] == 0 {
                    tally.2 += 1;
                }
            }
            return;
        }
        for class in 0..4 {
            if remaining[class] == 0 {
                continue;
            }
            remaining[class] -= 1;
            placed.push(class);
            walk(remaining, placed, n, k, tally);
            placed.pop();
            remaining[class] += 1;
        }
    }

    walk(&mut remaining, &mut placed, n, k, &mut tally);
    let (total, passing, clean) = tally;
    let pass = ratio(BigInt::from(passing), BigInt::from(total));
    let joint = ratio(BigInt::from(clean), BigInt::from(total));
    let conditional = (passing > 0).then(|| ratio(BigInt::from(clean), BigInt::from(passing)));
    Ok(OracleValues {
        arrangements: total,
        pass,
        joint,
        conditional,
    })
}

/// One line of the bound-verification grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridRow {
    pub counts: ClassCounts,
    pub pass: Rational,
    pub joint: Rational,
    pub conditional: Option<Rational>,
    pub xi: Option<Rational>,
    pub bound_ok: bool,
}

/// Evaluates a profile and checks every guarantee that applies to it:
/// without (1,1) copies, `xi >= 0` and the per-profile fidelity inequality
/// must agree and hold; with one (1,1) copy, passing is at most `1/(2k+1)`
/// and the kept copy is never clean; with more, the test never passes.
pub fn grid_row(cc: &ClassCounts) -> GridRow {
    let k = cc.k;
    let pass = pass_prob(cc);
    let inv_n = ratio(BigInt::one(), int(two_k_plus_one(k)));
    match cc.c {
        0 if cc.a <= k + 1 && cc.b <= k + 1 => {
            let joint = joint_prob(cc.a, cc.b, k).expect("in domain");
            let conditional = &joint / &pass;
            let xi_val = xi(cc.a, cc.b, k).expect("in domain");
            let floor = Rational::one() - &inv_n / &pass;
            let inequality = conditional >= floor;
            let closed = conditional_fidelity_closed_form(cc.a, cc.b, k).expect("in domain");
            let bound_ok = !xi_val.is_negative() && inequality && closed == conditional;
            GridRow {
                counts: *cc,
                pass,
                joint,
                conditional: Some(conditional),
                xi: Some(xi_val),
                bound_ok,
            }
        }
        0 => GridRow {
            counts: *cc,
            bound_ok: pass.is_zero(),
            pass,
            joint: Rational::zero(),
            conditional: None,
            xi: None,
        },
        c => {
            let bound_ok = if c == 1 {
                pass <= inv_n
            } else {
                pass.is_zero()
            };
            let conditional = (!pass.is_zero()).then(Rational::zero);
            GridRow {
                counts: *cc,
                pass,
                joint: Rational::zero(),
                conditional,
                xi: None,
                bound_ok,
            }
        }
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.25` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, AnalyticsError> {
    let bad = || AnalyticsError::Parse(text.to_string());
    let s = text.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole
            .chars()
            .chain(frac.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let numer: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// `p/q` in lowest terms (or just `p` for integers).
pub fn format_rational(r: &Rational) -> String {
    let (n, d) = (r.numer(), r.denom());
    debug_assert!(n.gcd(d).is_one() || n.is_zero());
    if d.is_one() {
        n.to_string()
    } else {
        format!("{n}/{d}")
    }
}
