//! Independent checks of the win-probability formula: exhaustive outcome
//! enumeration, seeded Monte Carlo, and a randomized cross-module suite.
//!
//! Random streams use ChaCha8 seeded with `seed_from_u64(seed)`; work item
//! `j` (a Monte Carlo shard or a verify case) reads stream `j`, so results
//! do not depend on thread count or scheduling.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{Rational, Scalar};
use crate::optimizer::{optimal_dp, optimal_exhaustive_with, optimal_ola, SearchOptions};
use crate::par::{self, Exec};
use crate::patterns::{pattern_vector, winning_witnesses};
use crate::strategy::{
    block_partition, simulate_threshold_run, win_probability, OddsSequence, Outcome,
    ThresholdVector,
};

/// Largest sequence length accepted by [`enumerate_win_probability`].
pub const MAX_ENUMERATION_N: usize = 22;

/// Trials per Monte Carlo shard.
pub const SHARD_TRIALS: u64 = 65_536;

/// Largest denominator of randomly generated success probabilities.
pub const MAX_RANDOM_DENOMINATOR: i64 = 64;

/// Positions fixed per enumeration chunk; the rest are walked in Gray-code
/// order.
const PREFIX_BITS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactResult {
    #[serde(serialize_with = "as_fraction")]
    pub probability: Rational,
    pub outcomes: u64,
    pub winning_outcomes: u64,
}

fn as_fraction<S: serde::Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::numerics::rat_to_string(x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub trials: u64,
    pub wins: u64,
    /// `sqrt(p̂ (1 - p̂) / T)`.
    pub standard_error: f64,
}

/// One outcome of the enumeration with its probability mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub outcome: String,
    pub result: Outcome,
    #[serde(serialize_with = "as_fraction")]
    pub mass: Rational,
}

fn check_enumerable(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::BudgetExceeded {
            what: "outcome enumeration (2^N outcomes)",
            required: 1u128 << n.min(127),
            limit: 1u128 << limit,
        });
    }
    Ok(())
}

/// Tests bit `i` of `mask` as trial `i + 1`.
fn outcome_of(mask: u32, n: usize, buf: &mut [bool]) {
    for (i, slot) in buf.iter_mut().enumerate().take(n) {
        *slot = mask >> i & 1 == 1;
    }
}

fn wins(x: &[bool], t: &ThresholdVector) -> bool {
    simulate_threshold_run(x, t).expect("validated").result == Outcome::Win
}

/// Exact win probability as the total mass of winning outcomes.
pub fn enumerate_win_probability(seq: &OddsSequence, t: &ThresholdVector) -> Result<ExactResult> {
    enumerate_win_probability_with(seq, t, Exec::default())
}

pub fn enumerate_win_probability_with(
    seq: &OddsSequence,
    t: &ThresholdVector,
    exec: Exec,
) -> Result<ExactResult> {
    let n = seq.len();
    check_enumerable(n, MAX_ENUMERATION_N)?;
    t.validate_for(n)?;
    // positions low..n are fixed per chunk, 0..low are walked
    let low = n.saturating_sub(PREFIX_BITS);
    let chunks = 1usize << (n - low);
    let (p, q, r) = (seq.p(), seq.q(), seq.r());

    let parts = par::map_range(0..chunks, exec, |chunk| {
        let mut x = vec![false; n];
        let mut mass = Rational::one();
        for i in low..n {
            let bit = chunk >> (i - low) & 1 == 1;
            x[i] = bit;
            mass *= if bit { &p[i] } else { &q[i] };
        }
        for qi in &q[..low] {
            mass *= qi;
        }
        let mut total = Rational::zero();
        let mut winning = 0u64;
        // Gray-code walk over the low positions: step g flips bit
        // trailing_zeros(g).
        for g in 0u64..(1u64 << low) {
            if g > 0 {
                let i = g.trailing_zeros() as usize;
                x[i] = !x[i];
                if x[i] {
                    mass *= &r[i];
                } else {
                    mass /= &r[i];
                }
            }
            if wins(&x, t) {
                total += &mass;
                winning += 1;
            }
        }
        (total, winning)
    });

    let mut probability = Rational::zero();
    let mut winning_outcomes = 0;
    for (part, count) in parts {
        probability += part;
        winning_outcomes += count;
    }
    Ok(ExactResult {
        probability,
        outcomes: 1u64 << n,
        winning_outcomes,
    })
}

/// Every outcome in increasing binary order (trial 1 first in the string).
pub fn enumerate_trace(seq: &OddsSequence, t: &ThresholdVector) -> Result<Vec<TraceEntry>> {
    let n = seq.len();
    check_enumerable(n, 16)?;
    t.validate_for(n)?;
    let mut x = vec![false; n];
    Ok((0u32..(1 << n))
        .map(|mask| {
            outcome_of(mask, n, &mut x);
            let mass = x
                .iter()
                .enumerate()
                .map(|(i, &b)| if b { seq.p()[i].clone() } else { seq.q()[i].clone() })
                .product();
            TraceEntry {
                outcome: x.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                result: if wins(&x, t) { Outcome::Win } else { Outcome::Lose },
                mass,
            }
        })
        .collect())
}

fn shard_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `trials` independent realizations of the threshold procedure.
/// Success draws compare a uniform `f64` in `[0, 1)` with `p_i` rounded to
/// `f64`.
pub fn monte_carlo_win_probability(
    seq: &OddsSequence,
    t: &ThresholdVector,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    monte_carlo_win_probability_with(seq, t, trials, seed, Exec::default())
}

pub fn monte_carlo_win_probability_with(
    seq: &OddsSequence,
    t: &ThresholdVector,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let n = seq.len();
    t.validate_for(n)?;
    let p: Vec<f64> = seq.p().iter().map(Scalar::as_f64).collect();
    let mut opened = vec![0u32; n + 1];
    for &i in t.as_slice() {
        opened[i - 1] += 1;
    }
    let shards = trials.div_ceil(SHARD_TRIALS);
    let counts = par::map_range(0..shards as usize, exec, |shard| {
        let mut rng = shard_rng(seed, shard as u64);
        let start = shard as u64 * SHARD_TRIALS;
        let count = SHARD_TRIALS.min(trials - start);
        let mut won = 0u64;
        for _ in 0..count {
            let mut slack = 0u32;
            let mut winning = false;
            for i in 0..n {
                slack += opened[i];
                if rng.random::<f64>() < p[i] {
                    if slack > 0 {
                        slack -= 1;
                        winning = true;
                    } else {
                        winning = false;
                    }
                }
            }
            won += winning as u64;
        }
        won
    });
    let wins: u64 = counts.into_iter().sum();
    let estimate = wins as f64 / trials as f64;
    Ok(Estimate {
        estimate,
        trials,
        wins,
        standard_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
    })
}

/// A success probability `a/b` with `2 <= b <= 64`, `1 <= a < b`.
pub fn random_probability<R: Rng>(rng: &mut R) -> Rational {
    let den = rng.random_range(2..=MAX_RANDOM_DENOMINATOR);
    let num = rng.random_range(1..den);
    Rational::new(num.into(), den.into())
}

pub fn random_sequence<R: Rng>(rng: &mut R, n: usize) -> OddsSequence {
    OddsSequence::new((0..n).map(|_| random_probability(rng)).collect())
        .expect("probabilities lie strictly inside (0, 1)")
}

/// `m` thresholds drawn uniformly from `1..=n` and sorted.
pub fn random_thresholds<R: Rng>(rng: &mut R, n: usize, m: usize) -> ThresholdVector {
    let mut values: Vec<usize> = (0..m).map(|_| rng.random_range(1..=n)).collect();
    values.sort_unstable();
    ThresholdVector::new(values).expect("sorted and positive")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckTally {
    pub name: &'static str,
    pub passed: u64,
    pub failed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub cases: usize,
    pub seed: u64,
    pub checks: Vec<CheckTally>,
    /// One line per failed check, in case order.
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.failed == 0)
    }
}

const CHECKS: [&str; 5] = [
    "formula_vs_enumeration",
    "winning_pattern_characterization",
    "winning_pattern_uniqueness",
    "dp_vs_exhaustive",
    "ola_vs_dp",
];

/// Randomized certification over `cases` instances with `N <= max_n`,
/// `m <= m_max`. Failures are collected, never raised.
pub fn verify_suite(
    max_n: usize,
    m_max: usize,
    cases: usize,
    seed: u64,
    exec: Exec,
) -> Result<VerifyReport> {
    if max_n == 0 || m_max == 0 {
        return Err(Error::Precondition("max_n and m_max must be positive".into()));
    }
    check_enumerable(max_n, MAX_ENUMERATION_N)?;
    let per_case = par::map_range(0..cases, exec, |case| run_case(case, max_n, m_max, seed));

    let mut checks: Vec<CheckTally> = CHECKS
        .iter()
        .map(|&name| CheckTally {
            name,
            ..CheckTally::default()
        })
        .collect();
    let mut failures = Vec::new();
    for outcome in per_case {
        for (slot, result) in checks.iter_mut().zip(outcome) {
            match result {
                Ok(()) => slot.passed += 1,
                Err(message) => {
                    slot.failed += 1;
                    failures.push(message);
                }
            }
        }
    }
    Ok(VerifyReport {
        cases,
        seed,
        checks,
        failures,
    })
}

type CaseResult = std::result::Result<(), String>;

fn run_case(case: usize, max_n: usize, m_max: usize, seed: u64) -> Vec<CaseResult> {
    let mut rng = shard_rng(seed, case as u64);
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=m_max);
    let seq = random_sequence(&mut rng, n);
    let t = random_thresholds(&mut rng, n, m);
    let label = format!("case {case} (N={n}, m={m}, t={t})");

    let formula = (|| -> CaseResult {
        let a = win_probability(&seq, &t).map_err(|e| e.to_string())?;
        let b = enumerate_win_probability_with(&seq, &t, Exec::Sequential)
            .map_err(|e| e.to_string())?
            .probability;
        if a == b {
            Ok(())
        } else {
            Err(format!("{label}: formula {a} != enumeration {b}"))
        }
    })();

    // Lemma-1 style characterization and uniqueness over outcomes.
    let blocks = block_partition(&t, n).expect("thresholds drawn within 1..=n");
    let mut characterization = Ok(());
    let mut uniqueness = Ok(());
    let mut x = vec![false; n];
    let sample: Vec<u32> = if n <= 12 {
        (0..1u32 << n).collect()
    } else {
        (0..512).map(|_| rng.random_range(0..1u32 << n)).collect()
    };
    for mask in sample {
        outcome_of(mask, n, &mut x);
        let b = pattern_vector(&x, &blocks).expect("lengths agree");
        let witnesses = winning_witnesses(b.entries());
        if wins(&x, &t) != !witnesses.is_empty() && characterization.is_ok() {
            characterization = Err(format!("{label}: outcome {x:?} misclassified"));
        }
        if witnesses.len() > 1 && uniqueness.is_ok() {
            uniqueness = Err(format!("{label}: pattern {:?} has witnesses {witnesses:?}", b.entries()));
        }
    }

    let options = SearchOptions {
        exec: Exec::Sequential,
        ..SearchOptions::default()
    };
    let dp = optimal_dp(&seq, m).map(|r| r.value);
    let exhaustive = optimal_exhaustive_with(&seq, m, options).map(|r| r.value);
    let ola = optimal_ola(&seq, m).map(|r| r.value);
    let dp_vs_exhaustive = match (&dp, &exhaustive) {
        (Ok(a), Ok(b)) if a == b => Ok(()),
        (Ok(a), Ok(b)) => Err(format!("{label}: dp {a} != exhaustive {b}")),
        (Err(e), _) | (_, Err(e)) => Err(format!("{label}: {e}")),
    };
    let ola_vs_dp = match (&dp, &ola) {
        (Ok(a), Ok(b)) if a == b => Ok(()),
        (Ok(a), Ok(b)) => Err(format!("{label}: dp {a} != look-ahead {b}")),
        (Err(e), _) | (_, Err(e)) => Err(format!("{label}: {e}")),
    };
    vec![formula, characterization, uniqueness, dp_vs_exhaustive, ola_vs_dp]
}
