//! Odds sequences, threshold strategies and their exact win probability.

use std::ops::Range;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{rat_to_string, Rational, Scalar};
use crate::patterns::{self, MAX_PATTERN_K};

/// Independent Bernoulli trials given by their success probabilities.
///
/// Positions are 1-based and local to the sequence; `index_offset` is the
/// original index of position 1 (2 for secretary sequences).
#[derive(Clone, Debug, PartialEq)]
pub struct OddsSequence {
    p: Vec<Rational>,
    q: Vec<Rational>,
    r: Vec<Rational>,
    index_offset: usize,
}

impl OddsSequence {
    pub fn new(p: Vec<Rational>) -> Result<Self> {
        Self::with_offset(p, 1)
    }

    pub fn with_offset(p: Vec<Rational>, index_offset: usize) -> Result<Self> {
        for (pos, value) in p.iter().enumerate() {
            if !(value > &Rational::zero() && value < &Rational::one()) {
                return Err(Error::InvalidProbability {
                    index: pos + index_offset,
                    value: rat_to_string(value),
                });
            }
        }
        let q: Vec<Rational> = p.iter().map(|x| Rational::one() - x).collect();
        let r = p.iter().zip(&q).map(|(a, b)| a / b).collect();
        Ok(OddsSequence {
            p,
            q,
            r,
            index_offset,
        })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    pub fn q(&self) -> &[Rational] {
        &self.q
    }

    pub fn r(&self) -> &[Rational] {
        &self.r
    }

    pub fn index_offset(&self) -> usize {
        self.index_offset
    }

    /// Original index of local position `pos` (1-based).
    pub fn original_index(&self, pos: usize) -> usize {
        pos + self.index_offset - 1
    }

    pub fn odds_as<S: Scalar>(&self) -> Vec<S> {
        self.r.iter().map(S::from_rational).collect()
    }

    pub fn failures_as<S: Scalar>(&self) -> Vec<S> {
        self.q.iter().map(S::from_rational).collect()
    }

    /// Appends one more trial after the current last one.
    pub fn appended(&self, p: Rational) -> Result<Self> {
        let mut all = self.p.clone();
        all.push(p);
        Self::with_offset(all, self.index_offset)
    }

    /// Prepends one trial; the offset is unchanged, so positions shift.
    pub fn prepended(&self, p: Rational) -> Result<Self> {
        let mut all = vec![p];
        all.extend(self.p.iter().cloned());
        Self::with_offset(all, self.index_offset)
    }
}

/// Thresholds `(i^(m), ..., i^(1))`, outermost first: with `s` selections
/// left, a success at position `i` is accepted iff `i >= i^(s)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdVector(Vec<usize>);

impl ThresholdVector {
    pub fn new(thresholds: Vec<usize>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidThresholds("at least one threshold is required".into()));
        }
        if thresholds[0] == 0 {
            return Err(Error::InvalidThresholds("thresholds are 1-based".into()));
        }
        if let Some(w) = thresholds.windows(2).find(|w| w[0] > w[1]) {
            return Err(Error::InvalidThresholds(format!(
                "thresholds must be nondecreasing outermost first, got {} before {}",
                w[0], w[1]
            )));
        }
        Ok(ThresholdVector(thresholds))
    }

    /// Parses a comma-separated list such as `"2,4"`.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    Error::InvalidThresholds(format!("{:?} is not a positive integer", part.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    /// Number of stops `m`.
    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `i^(k)` for `1 <= k <= m`.
    pub fn threshold(&self, k: usize) -> usize {
        self.0[self.0.len() - k]
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        let last = *self.0.last().expect("nonempty");
        if last > n {
            return Err(Error::InvalidThresholds(format!(
                "threshold {last} exceeds sequence length {n}"
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for ThresholdVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Blocks `B_1, ..., B_{m+1}` of positions `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    /// `bounds[k] = i^(k)` for `k = 1..=m`, `bounds[0] = n + 1`.
    bounds: Vec<usize>,
}

impl BlockPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Positions of `B_k` as a half-open range, `1 <= k <= m + 1`.
    pub fn block(&self, k: usize) -> Range<usize> {
        let m = self.m();
        assert!((1..=m + 1).contains(&k), "block index {k} outside 1..={}", m + 1);
        if k == m + 1 {
            1..self.bounds[m]
        } else {
            self.bounds[k]..self.bounds[k - 1]
        }
    }
}

pub fn block_partition(t: &ThresholdVector, n: usize) -> Result<BlockPartition> {
    t.validate_for(n)?;
    let mut bounds = vec![n + 1];
    bounds.extend((1..=t.m()).map(|k| t.threshold(k)));
    Ok(BlockPartition { n, bounds })
}

/// `e_0, ..., e_max` of `odds`: `e_b` is the sum over `b`-subsets of the
/// product of their entries.
pub fn elementary_symmetric<S: Scalar>(odds: &[S], max_degree: usize) -> Vec<S> {
    let mut e = vec![S::zero(); max_degree + 1];
    e[0] = S::one();
    for (seen, x) in odds.iter().enumerate() {
        let top = max_degree.min(seen + 1);
        for b in (1..=top).rev() {
            let add = e[b - 1].clone() * x.clone();
            e[b] = e[b].clone() + add;
        }
    }
    e
}

/// `f^b(B)` for a block with the given odds.
pub fn sym_f<S: Scalar>(odds: &[S], b: usize) -> S {
    if b > odds.len() {
        return S::zero();
    }
    elementary_symmetric(odds, b).pop().expect("degree b present")
}

/// Exact win probability of the threshold strategy `t` on `seq`.
pub fn win_probability(seq: &OddsSequence, t: &ThresholdVector) -> Result<Rational> {
    win_probability_in(seq.q(), seq.r(), t)
}

/// Win probability over any scalar, given failure probabilities and odds:
/// `Σ_k (Π_{i >= i^(k)} q_i) Σ_{b ∈ Ξ_k} Π_j f^{b_j}(B_j)`.
pub fn win_probability_in<S: Scalar>(q: &[S], r: &[S], t: &ThresholdVector) -> Result<S> {
    if q.len() != r.len() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            found: r.len(),
        });
    }
    let n = q.len();
    let m = t.m();
    if m > MAX_PATTERN_K {
        return Err(Error::OutOfRange {
            what: "number of thresholds m",
            value: m,
            min: 1,
            max: MAX_PATTERN_K,
        });
    }
    let blocks = block_partition(t, n)?;
    // f[j - 1][b] = f^b(B_j)
    let f: Vec<Vec<S>> = (1..=m)
        .map(|j| {
            let range = blocks.block(j);
            elementary_symmetric(&r[range.start - 1..range.end - 1], m)
        })
        .collect();

    let mut total = S::zero();
    let mut carry = S::zero();
    let mut q_tail = S::one();
    for k in 1..=m {
        let range = blocks.block(k);
        for qi in &q[range.start - 1..range.end - 1] {
            q_tail = q_tail * qi.clone();
        }
        let mut inner = S::zero();
        for v in patterns::xi(k)? {
            let mut product = S::one();
            for (idx, &entry) in v.entries().iter().enumerate() {
                if entry == 0 {
                    continue;
                }
                product = product * f[k - idx - 1][entry as usize].clone();
                if product.is_zero() {
                    break;
                }
            }
            inner = inner + product;
        }
        S::accumulate(&mut total, &mut carry, q_tail.clone() * inner);
    }
    Ok(S::settle(total, carry))
}

/// Every monotone threshold vector with `m` entries in `1..=n`, in
/// lexicographic order. There are `C(n + m - 1, m)` of them.
pub fn monotone_thresholds(n: usize, m: usize) -> Vec<ThresholdVector> {
    fn go(n: usize, m: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<ThresholdVector>) {
        if cur.len() == m {
            out.push(ThresholdVector(cur.clone()));
            return;
        }
        for i in lo..=n {
            cur.push(i);
            go(n, m, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        go(n, m, 1, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// `C(n + m - 1, m)`, saturating.
pub fn monotone_threshold_count(n: usize, m: usize) -> u128 {
    let mut count: u128 = 1;
    for j in 1..=m as u128 {
        count = count.saturating_mul(n as u128 + j - 1) / j;
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Lose,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub result: Outcome,
    pub last: Option<usize>,
    pub accepted: Vec<usize>,
}

/// Replays the threshold procedure on the realization `x` (positions
/// `1..=x.len()`).
pub fn simulate_threshold_run(x: &[bool], t: &ThresholdVector) -> Result<RunOutcome> {
    let n = x.len();
    t.validate_for(n)?;
    let mut opened = vec![0usize; n + 2];
    for &i in t.as_slice() {
        opened[i] += 1;
    }
    let mut slack = 0usize;
    let mut winning = false;
    let mut accepted = Vec::new();
    for i in 1..=n {
        slack += opened[i];
        if x[i - 1] {
            if slack > 0 {
                slack -= 1;
                accepted.push(i);
                winning = true;
            } else {
                winning = false;
            }
        }
    }
    Ok(RunOutcome {
        result: if winning { Outcome::Win } else { Outcome::Lose },
        last: accepted.last().copied(),
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::patterns::{is_winning_pattern, pattern_vector};
    use proptest::prelude::*;

    fn halves(n: usize) -> OddsSequence {
        OddsSequence::new(vec![rat(1, 2); n]).unwrap()
    }

    fn tv(v: &[usize]) -> ThresholdVector {
        ThresholdVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sequence_validation() {
        assert!(OddsSequence::new(vec![rat(0, 1)]).is_err());
        assert!(OddsSequence::new(vec![rat(1, 1)]).is_err());
        let err = OddsSequence::with_offset(vec![rat(1, 2), rat(3, 2)], 2).unwrap_err();
        assert!(err.to_string().contains("p_3"));
        let s = OddsSequence::new(vec![rat(1, 3)]).unwrap();
        assert_eq!(s.r()[0], rat(1, 2));
    }

    #[test]
    fn threshold_validation() {
        assert!(ThresholdVector::new(vec![]).is_err());
        assert!(ThresholdVector::new(vec![0, 1]).is_err());
        assert!(ThresholdVector::new(vec![3, 2]).is_err());
        assert_eq!(ThresholdVector::parse(" 2, 4").unwrap(), tv(&[2, 4]));
        assert!(ThresholdVector::parse("2,x").is_err());
        assert!(tv(&[2, 4]).validate_for(3).is_err());
        assert_eq!(tv(&[2, 4]).threshold(1), 4);
        assert_eq!(tv(&[2, 4]).to_string(), "(2,4)");
    }

    #[test]
    fn block_examples() {
        let b = block_partition(&tv(&[2, 4]), 5).unwrap();
        assert_eq!(b.block(1), 4..6);
        assert_eq!(b.block(2), 2..4);
        assert_eq!(b.block(3), 1..2);
        let b = block_partition(&tv(&[1]), 3).unwrap();
        assert_eq!(b.block(1), 1..4);
        assert!(b.block(2).is_empty());
        let b = block_partition(&tv(&[3, 3]), 4).unwrap();
        assert!(b.block(2).is_empty());
        assert_eq!(b.block(1), 3..5);
    }

    #[test]
    fn sym_f_examples() {
        assert_eq!(sym_f::<Rational>(&[], 0), rat(1, 1));
        assert_eq!(sym_f(&[rat(1, 1), rat(1, 1)], 2), rat(1, 1));
        assert_eq!(sym_f(&[rat(1, 2), rat(1, 3), rat(1, 4)], 2), rat(3, 8));
        assert_eq!(sym_f(&[rat(1, 2)], 2), rat(0, 1));
    }

    #[test]
    fn win_probability_examples() {
        assert_eq!(win_probability(&halves(3), &tv(&[2])).unwrap(), rat(1, 2));
        assert_eq!(win_probability(&halves(2), &tv(&[1])).unwrap(), rat(1, 2));
        assert_eq!(win_probability(&halves(3), &tv(&[1, 2])).unwrap(), rat(3, 4));
        assert!(win_probability(&halves(3), &tv(&[4])).is_err());
    }

    #[test]
    fn float_path_agrees() {
        let seq = OddsSequence::new(vec![rat(1, 3), rat(2, 5), rat(1, 7), rat(1, 2), rat(3, 11)]).unwrap();
        let t = tv(&[2, 3, 5]);
        let exact = win_probability(&seq, &t).unwrap();
        let approx =
            win_probability_in(&seq.failures_as::<f64>(), &seq.odds_as::<f64>(), &t).unwrap();
        assert!((approx - exact.as_f64()).abs() < 1e-14);
    }

    #[test]
    fn run_examples() {
        let lose = simulate_threshold_run(&[false; 4], &tv(&[1, 2])).unwrap();
        assert_eq!(lose.result, Outcome::Lose);
        assert_eq!(lose.last, None);
        let win = simulate_threshold_run(&[true, false, true], &tv(&[2])).unwrap();
        assert_eq!(win.result, Outcome::Win);
        assert_eq!(win.last, Some(3));
        let lose = simulate_threshold_run(&[false, true, true], &tv(&[2])).unwrap();
        assert_eq!(lose.result, Outcome::Lose);
        assert_eq!(lose.accepted, vec![2]);
        assert!(simulate_threshold_run(&[true], &tv(&[2])).is_err());
    }

    #[test]
    fn runs_follow_the_pattern_characterization() {
        for n in 1..=8usize {
            for m in 1..=3usize {
                for t in monotone_thresholds(n, m) {
                    let blocks = block_partition(&t, n).unwrap();
                    for mask in 0u32..(1 << n) {
                        let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                        let run = simulate_threshold_run(&x, &t).unwrap();
                        let b = pattern_vector(&x, &blocks).unwrap();
                        assert_eq!(
                            run.result == Outcome::Win,
                            is_winning_pattern(b.entries()).is_some(),
                            "x={x:?} t={t}"
                        );
                    }
                }
            }
        }
    }

    fn small_p() -> impl Strategy<Value = Rational> {
        (2i64..=64).prop_flat_map(|den| (1i64..den).prop_map(move |num| rat(num, den)))
    }

    proptest! {
        #[test]
        fn sym_f_matches_subset_sums(odds in prop::collection::vec(small_p(), 0..=12), b in 0usize..6) {
            let n = odds.len();
            let mut brute = Rational::zero();
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize == b {
                    let mut prod = Rational::one();
                    for (i, x) in odds.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            prod *= x;
                        }
                    }
                    brute += prod;
                }
            }
            prop_assert_eq!(sym_f(&odds, b), brute);
        }

        #[test]
        fn leading_trials_before_the_outer_threshold_do_not_matter(
            ps in prop::collection::vec(small_p(), 1..=6),
            extra in small_p(),
            raw in prop::collection::vec(1usize..=6, 1..=3),
        ) {
            let n = ps.len();
            let mut th: Vec<usize> = raw.into_iter().map(|i| i.min(n)).collect();
            th.sort_unstable();
            let t = ThresholdVector::new(th.clone()).unwrap();
            let seq = OddsSequence::new(ps).unwrap();
            let shifted = ThresholdVector::new(th.iter().map(|i| i + 1).collect()).unwrap();
            let longer = seq.prepended(extra).unwrap();
            prop_assert_eq!(
                win_probability(&seq, &t).unwrap(),
                win_probability(&longer, &shifted).unwrap()
            );
        }
    }
}
