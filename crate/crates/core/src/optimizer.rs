//! Optimal strategies: exhaustive threshold search, backward induction and
//! the one-stage look-ahead threshold scan.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{Rational, Scalar};
use crate::par::{self, Exec};
use crate::patterns;
use crate::strategy::{
    block_partition, elementary_symmetric, monotone_threshold_count, monotone_thresholds,
    win_probability, win_probability_in, OddsSequence, ThresholdVector,
};

/// Default cap on the number of threshold vectors an exhaustive search
/// evaluates. Covers `N <= 20` at `m = 3`.
pub const DEFAULT_MAX_CANDIDATES: u128 = 5_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Dp,
    Ola,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "dp" => Ok(Method::Dp),
            "ola" => Ok(Method::Ola),
            other => Err(Error::Precondition(format!(
                "unknown method {other:?}; expected exhaustive, dp or ola"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalResult<S = Rational> {
    pub value: S,
    /// `None` for the dynamic program, which yields the value only.
    pub thresholds: Option<ThresholdVector>,
    pub method: Method,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub max_candidates: u128,
    pub exec: Exec,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_candidates: DEFAULT_MAX_CANDIDATES,
            exec: Exec::default(),
        }
    }
}

fn check_inputs(seq: &OddsSequence, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange {
            what: "number of stops m",
            value: 0,
            min: 1,
            max: patterns::MAX_PATTERN_K,
        });
    }
    if seq.is_empty() {
        return Err(Error::Precondition("sequence has no trials".into()));
    }
    Ok(())
}

pub fn optimal_exhaustive(seq: &OddsSequence, m: usize) -> Result<OptimalResult> {
    optimal_exhaustive_with(seq, m, SearchOptions::default())
}

/// Maximizes the exact win probability over all monotone threshold
/// vectors; among maximizers the lexicographically largest vector wins.
pub fn optimal_exhaustive_with(
    seq: &OddsSequence,
    m: usize,
    options: SearchOptions,
) -> Result<OptimalResult> {
    check_inputs(seq, m)?;
    let n = seq.len();
    let required = monotone_threshold_count(n, m);
    if required > options.max_candidates {
        return Err(Error::BudgetExceeded {
            what: "exhaustive threshold search",
            required,
            limit: options.max_candidates,
        });
    }
    let candidates = monotone_thresholds(n, m);
    let values = par::map(&candidates, options.exec, |t| win_probability(seq, t));
    let mut best: Option<(Rational, &ThresholdVector)> = None;
    for (t, value) in candidates.iter().zip(values) {
        let value = value?;
        // candidates ascend lexicographically, so `>=` keeps the largest tie
        if best.as_ref().is_none_or(|(v, _)| value >= *v) {
            best = Some((value, t));
        }
    }
    let (value, t) = best.expect("at least one candidate");
    Ok(OptimalResult {
        value,
        thresholds: Some(t.clone()),
        method: Method::Exhaustive,
    })
}

/// Backward induction over all (not only threshold) strategies.
///
/// `V(i, s, h)` is the optimal win probability from trial `i` on with `s`
/// selections left, where `h = 1` means the latest selection is currently
/// the last success seen: `V(N+1, s, h) = h` and
/// `V(i, s, h) = q_i V(i+1, s, h) + p_i max(V(i+1, s, 0), [s > 0] V(i+1, s-1, 1))`.
pub fn optimal_dp(seq: &OddsSequence, m: usize) -> Result<OptimalResult> {
    check_inputs(seq, m)?;
    let n = seq.len();
    // next[s][h] = V(i+1, s, h)
    let mut next: Vec<[Rational; 2]> = (0..=m)
        .map(|_| [Rational::zero(), Rational::from_usize(1)])
        .collect();
    for i in (0..n).rev() {
        let (p, q) = (&seq.p()[i], &seq.q()[i]);
        let current: Vec<[Rational; 2]> = (0..=m)
            .map(|s| {
                let stay = next[s][0].clone();
                let take = if s > 0 { next[s - 1][1].clone() } else { Rational::zero() };
                let on_success = p * stay.max(take);
                [
                    q * &next[s][0] + &on_success,
                    q * &next[s][1] + &on_success,
                ]
            })
            .collect();
        next = current;
    }
    Ok(OptimalResult {
        value: next[m][0].clone(),
        thresholds: None,
        method: Method::Dp,
    })
}

pub fn optimal_ola(seq: &OddsSequence, m: usize) -> Result<OptimalResult> {
    check_inputs(seq, m)?;
    optimal_ola_in(seq.q(), seq.r(), m)
}

/// One-stage look-ahead thresholds, computed from the innermost outwards.
///
/// With inner thresholds fixed, moving `i^(k)` from `i` down to `i - 1`
/// changes the win probability by `Q p_{i-1} D(i)` where `Q > 0` and
/// `D(i) = 1 - S_k - Σ_{i <= i' < i^(k-1)} r_i'`,
/// `S_k = Σ_{b ∈ Ξ_k, b ≠ e} Π_{j<k} f^{b_j}(B_j)`. `D` increases with `i`,
/// so the best `i^(k)` is the largest `i <= i^(k-1)` with `D(i) <= 0`, or 1
/// if there is none.
pub fn optimal_ola_in<S: Scalar>(q: &[S], r: &[S], m: usize) -> Result<OptimalResult<S>> {
    if q.len() != r.len() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            found: r.len(),
        });
    }
    let n = q.len();
    if n == 0 || m == 0 {
        return Err(Error::Precondition(
            "one-stage look-ahead needs at least one trial and one stop".into(),
        ));
    }
    // inner[k - 1] = i^(k)
    let mut inner: Vec<usize> = Vec::with_capacity(m);
    for k in 1..=m {
        let s_k = if k == 1 {
            S::zero()
        } else {
            let t = ThresholdVector::new(inner.iter().rev().copied().collect())?;
            let blocks = block_partition(&t, n)?;
            let f: Vec<Vec<S>> = (1..k)
                .map(|j| {
                    let range = blocks.block(j);
                    elementary_symmetric(&r[range.start - 1..range.end - 1], k)
                })
                .collect();
            let mut total = S::zero();
            let mut carry = S::zero();
            for v in patterns::xi(k)? {
                if v.b(k) != 0 {
                    continue;
                }
                let mut product = S::one();
                for j in 1..k {
                    let b = v.b(j) as usize;
                    if b != 0 {
                        product = product * f[j - 1][b].clone();
                    }
                }
                S::accumulate(&mut total, &mut carry, product);
            }
            S::settle(total, carry)
        };
        let upper = inner.last().copied().unwrap_or(n + 1);
        let base = S::one() - s_k;
        let mut tail = S::zero();
        let mut tail_carry = S::zero();
        let mut chosen = 1;
        for i in (1..=upper.min(n)).rev() {
            if i < upper {
                S::accumulate(&mut tail, &mut tail_carry, r[i - 1].clone());
            }
            let d = base.clone() - S::settle(tail.clone(), tail_carry.clone());
            if d <= S::zero() {
                chosen = i;
                break;
            }
        }
        inner.push(chosen);
    }
    let t = ThresholdVector::new(inner.into_iter().rev().collect())?;
    let value = win_probability_in(q, r, &t)?;
    Ok(OptimalResult {
        value,
        thresholds: Some(t),
        method: Method::Ola,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::strategy::win_probability;
    use proptest::prelude::*;

    fn halves(n: usize) -> OddsSequence {
        OddsSequence::new(vec![rat(1, 2); n]).unwrap()
    }

    #[test]
    fn exhaustive_examples() {
        let one = optimal_exhaustive(&halves(2), 1).unwrap();
        assert_eq!(one.value, rat(1, 2));
        assert_eq!(one.thresholds.unwrap().as_slice(), &[2]);
        assert_eq!(optimal_exhaustive(&halves(3), 2).unwrap().value, rat(3, 4));
        assert_eq!(optimal_exhaustive(&halves(3), 3).unwrap().value, rat(7, 8));
    }

    #[test]
    fn exhaustive_budget() {
        let seq = halves(40);
        let err = optimal_exhaustive(&seq, 3).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 11480, .. }));
        assert_eq!(err.exit_code(), 3);
        let opts = SearchOptions {
            max_candidates: 12_000,
            exec: Exec::Sequential,
        };
        assert!(optimal_exhaustive_with(&seq, 3, opts).is_ok());
    }

    #[test]
    fn dp_examples() {
        assert_eq!(optimal_dp(&halves(3), 2).unwrap().value, rat(3, 4));
        assert_eq!(optimal_dp(&halves(3), 1).unwrap().value, rat(1, 2));
        let single = OddsSequence::new(vec![rat(2, 7)]).unwrap();
        assert_eq!(optimal_dp(&single, 1).unwrap().value, rat(2, 7));
    }

    #[test]
    fn ola_examples() {
        let r_one = halves(2);
        assert_eq!(optimal_ola(&r_one, 1).unwrap().thresholds.unwrap().as_slice(), &[2]);
        // r = 2/5 over five trials: Σ_{3..5} r = 6/5 >= 1 > Σ_{4..5} r
        let seq = OddsSequence::new(vec![rat(2, 7); 5]).unwrap();
        let ola = optimal_ola(&seq, 1).unwrap();
        assert_eq!(ola.thresholds.unwrap().as_slice(), &[3]);
        assert_eq!(ola.value, optimal_exhaustive(&seq, 1).unwrap().value);
    }

    #[test]
    fn many_stops_select_every_success() {
        let seq = OddsSequence::new(vec![rat(1, 3), rat(1, 5), rat(3, 4)]).unwrap();
        let all_fail: Rational = seq.q().iter().product();
        let everything = rat(1, 1) - all_fail;
        for m in 3..=5 {
            assert_eq!(optimal_dp(&seq, m).unwrap().value, everything);
            assert_eq!(optimal_exhaustive(&seq, m).unwrap().value, everything);
            assert_eq!(optimal_ola(&seq, m).unwrap().value, everything);
        }
    }

    fn small_p() -> impl Strategy<Value = Rational> {
        (2i64..=64).prop_flat_map(|den| (1i64..den).prop_map(move |num| rat(num, den)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn three_methods_agree(ps in prop::collection::vec(small_p(), 1..=9), m in 1usize..=3) {
            let seq = OddsSequence::new(ps).unwrap();
            let ex = optimal_exhaustive(&seq, m).unwrap();
            let dp = optimal_dp(&seq, m).unwrap();
            let ola = optimal_ola(&seq, m).unwrap();
            prop_assert_eq!(&ex.value, &dp.value);
            prop_assert_eq!(&ola.value, &dp.value);
            prop_assert_eq!(win_probability(&seq, ex.thresholds.as_ref().unwrap()).unwrap(), ex.value);
        }

        #[test]
        fn value_is_nondecreasing_in_m(ps in prop::collection::vec(small_p(), 1..=8)) {
            let seq = OddsSequence::new(ps).unwrap();
            let values: Vec<Rational> = (1..=4).map(|m| optimal_dp(&seq, m).unwrap().value).collect();
            prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn outer_threshold_profile_is_unimodal(ps in prop::collection::vec(small_p(), 2..=9), m in 2usize..=3) {
            let seq = OddsSequence::new(ps).unwrap();
            let n = seq.len();
            let ola = optimal_ola(&seq, m - 1).unwrap();
            let inner = ola.thresholds.unwrap();
            let profile: Vec<Rational> = (1..=inner.as_slice()[0])
                .map(|i| {
                    let mut t = vec![i];
                    t.extend_from_slice(inner.as_slice());
                    win_probability(&seq, &ThresholdVector::new(t).unwrap()).unwrap()
                })
                .collect();
            // nondecreasing then nonincreasing
            let peak = profile
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > profile[best] { i } else { best });
            prop_assert!(profile[..=peak].windows(2).all(|w| w[0] <= w[1]), "n={} {:?}", n, profile);
            prop_assert!(profile[peak..].windows(2).all(|w| w[0] >= w[1]), "n={} {:?}", n, profile);
        }
    }
}
