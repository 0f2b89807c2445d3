//! The constants `λ_1, ..., λ_m` and the asymptotic lower bound.
//!
//! `λ` is the unique positive solution of the equality system
//! `Σ_{b ∈ Ξ_k} Π_j λ_j^{b_j} / b_j! = 1`, `k = 1..m`. Two solvers are
//! provided: a lattice-path dynamic program over the weights `γ(k, k')`
//! (cubic in `m`), and direct summation over the enumerated pattern sets
//! (exponential, used as a cross-check).
//!
//! `γ(k, k')` is the total weight of the paths from `(k, k')` down to
//! `(0, 0)`, where the step from level `j` to `j - 1` that drops `d` columns
//! weighs `λ_j^d / d!`. Splitting on the first step gives
//!
//! ```text
//! γ(0, 0) = 1,  γ(0, c) = 0 for c > 0,
//! γ(k, k') = Σ_{c = k-1}^{k'} λ_k^{k'-c} / (k'-c)! · γ(k-1, c),
//! ```
//!
//! and `λ_k = 1 - γ(k-1, k)` is exactly the condition `γ(k, k) = 1`.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{exp_neg, rat_to_decimal_with, Rational, Rounding, Scalar};
use crate::patterns::{self, MAX_PATTERN_K};

/// Extra decimal digits carried by the exponentials behind a rendered bound.
pub const BOUND_GUARD_DIGITS: u32 = 10;

/// Solution of the equality system together with the full `γ` table.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSolution<S = Rational> {
    pub m: usize,
    pub lambda: Vec<S>,
    pub cumsum: Vec<S>,
    /// Dense upper-triangular table, `(m+1)(m+2)/2` entries, row-major in
    /// `k`; read it through [`LambdaSolution::gamma`].
    pub gamma: Vec<S>,
}

impl<S> LambdaSolution<S> {
    fn offset(m: usize, k: usize) -> usize {
        k * (m + 1) - k * k.saturating_sub(1) / 2
    }

    fn index(m: usize, k: usize, k_prime: usize) -> usize {
        debug_assert!(k <= k_prime && k_prime <= m);
        Self::offset(m, k) + (k_prime - k)
    }

    /// `γ(k, k')` for `0 <= k <= k' <= m`.
    pub fn gamma(&self, k: usize, k_prime: usize) -> &S {
        assert!(
            k <= k_prime && k_prime <= self.m,
            "gamma({k}, {k_prime}) outside 0 <= k <= k' <= {}",
            self.m
        );
        &self.gamma[Self::index(self.m, k, k_prime)]
    }

    /// `λ_k`, 1-based.
    pub fn lambda(&self, k: usize) -> &S {
        &self.lambda[k - 1]
    }
}

/// Arithmetic operations performed by the dynamic program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DpStats {
    pub multiplications: u64,
    pub additions: u64,
    pub divisions: u64,
}

impl DpStats {
    pub fn total(&self) -> u64 {
        self.multiplications + self.additions + self.divisions
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange {
            what: "number of stops m",
            value: m,
            min: 1,
            max: usize::MAX,
        });
    }
    Ok(())
}

/// Exact `λ` by the lattice-path recurrence.
pub fn solve_lambda_dp(m: usize) -> Result<LambdaSolution> {
    solve_lambda_dp_in::<Rational>(m, None).map(|(sol, _)| sol)
}

/// The dynamic program over any scalar, optionally aborting once `budget`
/// has elapsed. The operation sequence does not depend on `S`.
pub fn solve_lambda_dp_in<S: Scalar>(
    m: usize,
    budget: Option<Duration>,
) -> Result<(LambdaSolution<S>, DpStats)> {
    check_m(m)?;
    let started = Instant::now();
    let check_deadline = |k: usize| -> Result<()> {
        match budget {
            Some(limit) if started.elapsed() > limit => Err(Error::DeadlineExceeded {
                what: format!("solving for lambda_{k} of m = {m}"),
                seconds: limit.as_secs_f64(),
            }),
            _ => Ok(()),
        }
    };

    let mut stats = DpStats::default();
    let size = (m + 1) * (m + 2) / 2;
    let mut gamma: Vec<S> = vec![S::zero(); size];
    gamma[0] = S::one();
    let idx = LambdaSolution::<S>::index;

    let mut lambda = Vec::with_capacity(m);
    let mut cumsum: Vec<S> = Vec::with_capacity(m);
    for k in 1..=m {
        check_deadline(k)?;
        let lam = S::one() - gamma[idx(m, k - 1, k)].clone();
        stats.additions += 1;

        // weights[d] = λ_k^d / d!, by w_d = (λ_k / d) · w_{d-1}
        let span = m - k + 1;
        let mut weights = Vec::with_capacity(span + 1);
        weights.push(S::one());
        for d in 1..=span {
            check_deadline(k)?;
            let w = lam.clone() / S::from_usize(d) * weights[d - 1].clone();
            stats.divisions += 1;
            stats.multiplications += 1;
            weights.push(w);
        }

        for k_prime in k..=m {
            check_deadline(k)?;
            let mut acc = S::zero();
            for c in (k - 1)..=k_prime {
                let below = &gamma[idx(m, k - 1, c)];
                if below.is_zero() {
                    continue;
                }
                acc = acc + weights[k_prime - c].clone() * below.clone();
                stats.multiplications += 1;
                stats.additions += 1;
            }
            gamma[idx(m, k, k_prime)] = acc;
        }

        let running = match cumsum.last() {
            Some(prev) => {
                stats.additions += 1;
                prev.clone() + lam.clone()
            }
            None => lam.clone(),
        };
        cumsum.push(running);
        lambda.push(lam);
    }

    Ok((
        LambdaSolution {
            m,
            lambda,
            cumsum,
            gamma,
        },
        stats,
    ))
}

/// Exact `λ` by summing over the enumerated `Ξ_k`.
///
/// Every member of `Ξ_k` other than the unit vector has `b_k = 0`, so the
/// k-th equality reads `λ_k + (terms in λ_1..λ_{k-1}) = 1`.
pub fn solve_lambda_naive(m: usize) -> Result<LambdaSolution> {
    check_m(m)?;
    if m > MAX_PATTERN_K {
        return Err(Error::OutOfRange {
            what: "m for pattern summation",
            value: m,
            min: 1,
            max: MAX_PATTERN_K,
        });
    }
    let mut lambda: Vec<Rational> = Vec::with_capacity(m);
    for k in 1..=m {
        let table = power_table(&lambda, k);
        let mut rest = Rational::from_usize(0);
        for v in patterns::xi(k)? {
            if v.b(k) != 0 {
                if v.b(k) != 1 || v.total() != 1 {
                    return Err(Error::Precondition(format!(
                        "pattern {:?} of Xi_{k} has a nonzero leading entry",
                        v.entries()
                    )));
                }
                continue;
            }
            rest += term(&table, v.entries());
        }
        lambda.push(Rational::from_usize(1) - rest);
    }
    // γ is not part of this path; rebuild it from λ for a complete object.
    let gamma = gamma_from_lambda(&lambda);
    let cumsum = running_sums(&lambda);
    Ok(LambdaSolution {
        m,
        lambda,
        cumsum,
        gamma,
    })
}

/// `table[j-1][b] = λ_j^b / b!` for the `λ` known so far and `b <= k`.
fn power_table(lambda: &[Rational], k: usize) -> Vec<Vec<Rational>> {
    lambda
        .iter()
        .map(|lam| {
            let mut row = vec![Rational::from_usize(1)];
            for d in 1..=k {
                let next = &row[d - 1] * lam / Rational::from_usize(d);
                row.push(next);
            }
            row
        })
        .collect()
}

/// `Π_j λ_j^{b_j} / b_j!` over the entries of `b` (outermost first), using
/// only blocks covered by `table`.
fn term(table: &[Vec<Rational>], b: &[u32]) -> Rational {
    let k = b.len();
    let mut product = Rational::from_usize(1);
    for (idx, &entry) in b.iter().enumerate() {
        if entry == 0 {
            continue;
        }
        let j = k - idx;
        product *= &table[j - 1][entry as usize];
    }
    product
}

fn running_sums(lambda: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::from_usize(0);
    lambda
        .iter()
        .map(|l| {
            acc += l;
            acc.clone()
        })
        .collect()
}

fn gamma_from_lambda(lambda: &[Rational]) -> Vec<Rational> {
    let m = lambda.len();
    let idx = LambdaSolution::<Rational>::index;
    let mut gamma = vec![Rational::from_usize(0); (m + 1) * (m + 2) / 2];
    gamma[0] = Rational::from_usize(1);
    for k in 1..=m {
        let table = power_table(&lambda[k - 1..k], m);
        for k_prime in k..=m {
            let mut acc = Rational::from_usize(0);
            for c in (k - 1)..=k_prime {
                acc += &table[0][k_prime - c] * &gamma[idx(m, k - 1, c)];
            }
            gamma[idx(m, k, k_prime)] = acc;
        }
    }
    gamma
}

/// Left-hand side of each equality `Σ_{Ξ_k} Π λ^b / b!` for `k = 1..m`,
/// evaluated exactly at `sol`. Every entry is 1 for a true solution.
pub fn equality_values(sol: &LambdaSolution) -> Result<Vec<Rational>> {
    if sol.m > MAX_PATTERN_K {
        return Err(Error::OutOfRange {
            what: "m for pattern summation",
            value: sol.m,
            min: 1,
            max: MAX_PATTERN_K,
        });
    }
    (1..=sol.m)
        .map(|k| {
            let table = power_table(&sol.lambda[..k], k);
            let mut total = Rational::from_usize(0);
            for v in patterns::xi(k)? {
                total += term(&table, v.entries());
            }
            Ok(total)
        })
        .collect()
}

/// `Σ_{k' <= k} λ_k'`.
pub fn cumulative_lambda<S: Clone>(sol: &LambdaSolution<S>, k: usize) -> Result<S> {
    if k == 0 || k > sol.m {
        return Err(Error::OutOfRange {
            what: "cumulative index k",
            value: k,
            min: 1,
            max: sol.m,
        });
    }
    Ok(sol.cumsum[k - 1].clone())
}

/// Indices `(k, k')` where the strict decrease `γ(k, k') > γ(k, k'+1)` fails
/// by less than `margin`, together with rows where `γ(k, k) != 1` by more
/// than `margin`. Rows `k >= 1` are checked; row 0 is the boundary condition.
pub fn gamma_monotonicity_violations<S: Scalar>(
    sol: &LambdaSolution<S>,
    margin: &S,
) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for k in 1..=sol.m {
        let diag = sol.gamma(k, k).clone();
        let off = if diag > S::one() {
            diag - S::one()
        } else {
            S::one() - diag
        };
        if off > *margin {
            bad.push((k, k));
        }
        for k_prime in k..sol.m {
            let drop = sol.gamma(k, k_prime).clone() - sol.gamma(k, k_prime + 1).clone();
            if drop <= *margin {
                bad.push((k, k_prime));
            }
        }
    }
    bad
}

/// The terms `e^{-cumsum_k}` and their sum, rendered with `digits`
/// decimals rounded down so the printed sum remains a lower bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub digits: u32,
    pub terms: Vec<String>,
    pub bound: String,
}

pub fn lower_bound<S: Scalar>(sol: &LambdaSolution<S>, digits: u32) -> Result<LowerBound> {
    if digits == 0 {
        return Err(Error::OutOfRange {
            what: "decimal digits",
            value: 0,
            min: 1,
            max: u32::MAX as usize,
        });
    }
    let work = digits + BOUND_GUARD_DIGITS;
    let exps: Vec<Rational> = sol
        .cumsum
        .iter()
        .map(|c| exp_neg(&c.to_rational(), work))
        .collect();
    let sum: Rational = exps.iter().sum();
    Ok(LowerBound {
        digits,
        terms: exps
            .iter()
            .map(|e| rat_to_decimal_with(e, digits, Rounding::Floor))
            .collect(),
        bound: rat_to_decimal_with(&sum, digits, Rounding::Floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rat, rat_parse, rat_to_decimal, rat_to_string, Fixed};

    #[test]
    fn table_one_prefix() {
        let sol = solve_lambda_dp(6).unwrap();
        let got: Vec<String> = sol.lambda.iter().map(rat_to_string).collect();
        assert_eq!(
            got,
            vec![
                "1",
                "1/2",
                "11/24",
                "505/1152",
                "209519/491520",
                "49081919440723/117413668454400",
            ]
        );
        let cums: Vec<String> = sol.cumsum.iter().map(rat_to_string).collect();
        assert_eq!(
            cums,
            vec![
                "1",
                "3/2",
                "47/24",
                "2761/1152",
                "4162637/1474560",
                "380537052235603/117413668454400",
            ]
        );
        assert_eq!(rat_to_decimal(&sol.lambda[5], 6), "0.418026");
    }

    #[test]
    fn m_one_and_errors() {
        let sol = solve_lambda_dp(1).unwrap();
        assert_eq!(sol.lambda, vec![rat(1, 1)]);
        assert!(solve_lambda_dp(0).is_err());
        assert!(solve_lambda_naive(0).is_err());
        assert!(solve_lambda_naive(MAX_PATTERN_K + 1).is_err());
        assert!(cumulative_lambda(&sol, 2).is_err());
        assert_eq!(cumulative_lambda(&sol, 1).unwrap(), rat(1, 1));
    }

    #[test]
    fn gamma_diagonal_and_first_row() {
        let sol = solve_lambda_dp(7).unwrap();
        for k in 0..=7 {
            assert_eq!(*sol.gamma(k, k), rat(1, 1), "k={k}");
        }
        let mut factorial = 1i64;
        for k_prime in 1..=7 {
            factorial *= k_prime;
            assert_eq!(*sol.gamma(1, k_prime as usize), rat(1, factorial));
        }
        assert!(gamma_monotonicity_violations(&sol, &rat(0, 1)).is_empty());
    }

    #[test]
    fn naive_matches_dp() {
        for m in 1..=7 {
            assert_eq!(solve_lambda_naive(m).unwrap(), solve_lambda_dp(m).unwrap(), "m={m}");
        }
    }

    #[test]
    fn worked_system_for_two_stops() {
        let sol = solve_lambda_naive(2).unwrap();
        // λ₂ + λ₁²/2 = 1
        assert_eq!(&sol.lambda[1] + &sol.lambda[0] * &sol.lambda[0] / rat(2, 1), rat(1, 1));
    }

    #[test]
    fn equalities_hold() {
        let sol = solve_lambda_dp(8).unwrap();
        for value in equality_values(&sol).unwrap() {
            assert_eq!(value, rat(1, 1));
        }
        let mut perturbed = sol.clone();
        perturbed.lambda[2] += rat(1, 1000);
        assert_ne!(equality_values(&perturbed).unwrap()[2], rat(1, 1));
    }

    #[test]
    fn fixed_point_tracks_exact() {
        let exact = solve_lambda_dp(9).unwrap();
        let (approx, stats_a) = solve_lambda_dp_in::<Fixed<60>>(9, None).unwrap();
        let (_, stats_e) = solve_lambda_dp_in::<Rational>(9, None).unwrap();
        assert_eq!(stats_a, stats_e);
        let tolerance = rat_parse("1/1000000000000000000000000000000000000000000000000000").unwrap();
        for (a, e) in approx.lambda.iter().zip(&exact.lambda) {
            let diff = a.to_rational() - e;
            assert!(diff.clone() * diff.clone() < tolerance.clone() * tolerance.clone());
        }
    }

    #[test]
    fn lower_bound_small() {
        let sol = solve_lambda_dp(3).unwrap();
        let lb = lower_bound(&sol, 10).unwrap();
        assert_eq!(lb.bound, "0.7321029820");
        assert_eq!(lb.terms[0], "0.3678794411");
        assert_eq!(lower_bound(&solve_lambda_dp(1).unwrap(), 10).unwrap().bound, "0.3678794411");
        assert!(lower_bound(&sol, 0).is_err());
    }

    #[test]
    fn deadline_is_reported() {
        let err = solve_lambda_dp_in::<Rational>(40, Some(Duration::ZERO)).unwrap_err();
        assert!(matches!(err, Error::DeadlineExceeded { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn operation_count_is_cubic() {
        for m in [5usize, 10, 20, 30] {
            let (_, stats) = solve_lambda_dp_in::<Fixed<40>>(m, None).unwrap();
            let m3 = (m * m * m) as u64;
            assert!(stats.total() <= 2 * m3, "m={m}: {} ops", stats.total());
        }
    }
}
