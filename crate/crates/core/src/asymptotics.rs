//! The secretary and common-odds families, the surrogate lower-bound
//! thresholds, and convergence reports against the asymptotic constants.
//!
//! The surrogate is an IID sequence of length `L` with common odds `r`.
//! Its thresholds are the positions where the remaining odds mass
//! `(L - j) r` first drops below `λ_1 + ... + λ_k`; as `r → 0` with
//! `L r` held above `Σ λ`, their win probability tends to
//! `Σ_k e^{-(λ_1 + ... + λ_k)}`.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lambda::{solve_lambda_dp, LambdaSolution};
use crate::numerics::{exp_neg, rat_to_decimal, rat_to_string, Rational, Scalar};
use crate::optimizer::{optimal_ola, optimal_ola_in};
use crate::par::{self, Exec};
use crate::strategy::{win_probability, OddsSequence, ThresholdVector};

/// Decimals used when a report is rendered.
pub const REPORT_DIGITS: u32 = 12;

/// Digits carried by the exponential targets.
const TARGET_DIGITS: u32 = 30;

/// `p_i = 1/i` for `i = 2..=n`; position 1 is original index 2.
pub fn secretary_sequence(n: usize) -> Result<OddsSequence> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "secretary length n",
            value: n,
            min: 2,
            max: usize::MAX,
        });
    }
    let p = (2..=n).map(|i| Rational::new(1.into(), i.into())).collect();
    OddsSequence::with_offset(p, 2)
}

/// `n` trials with failure probability `q` each, so common odds `(1-q)/q`.
pub fn iid_sequence(q: &Rational, n: usize) -> Result<OddsSequence> {
    if !(q > &Rational::zero() && q < &Rational::one()) {
        return Err(Error::Precondition(format!(
            "common failure probability q = {} must lie strictly between 0 and 1",
            rat_to_string(q)
        )));
    }
    OddsSequence::new(vec![Rational::one() - q; n])
}

/// IID sequence with common odds `r`, i.e. `q = 1/(1+r)`.
pub fn iid_sequence_with_odds(r: &Rational, n: usize) -> Result<OddsSequence> {
    if !r.is_positive() {
        return Err(Error::Precondition(format!(
            "common odds r = {} must be positive",
            rat_to_string(r)
        )));
    }
    iid_sequence(&(Rational::one() / (Rational::one() + r)), n)
}

/// `j^(k) = min { j in 1..=L : cumsum_k > (L - j) r }`, outermost first.
pub fn surrogate_lb_thresholds(
    sol: &LambdaSolution,
    length: usize,
    r: &Rational,
) -> Result<ThresholdVector> {
    let total = &sol.cumsum[sol.m - 1];
    let mass = Rational::from_usize(length) * r;
    if !r.is_positive() || mass <= *total {
        return Err(Error::Precondition(format!(
            "need L * r > lambda_1 + ... + lambda_m: L = {length}, r = {}, L * r = {}, sum = {}",
            rat_to_string(r),
            rat_to_string(&mass),
            rat_to_string(total)
        )));
    }
    let thresholds = (1..=sol.m)
        .rev()
        .map(|k| {
            // j > L - cumsum_k / r
            let cut = Rational::from_usize(length) - &sol.cumsum[k - 1] / r;
            let floor = cut.numer().div_floor(cut.denom());
            (floor + 1u32).to_usize().expect("0 < j <= L")
        })
        .collect();
    ThresholdVector::new(thresholds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Secretary,
    Iid,
}

fn decimal<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rat_to_decimal(x, REPORT_DIGITS))
}

fn decimals<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| rat_to_decimal(x, REPORT_DIGITS)))
}

fn opt_decimal<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => decimal(v, s),
        None => s.serialize_none(),
    }
}

fn opt_rational<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&rat_to_string(v)),
        None => s.serialize_none(),
    }
}

/// `e^{-cumsum_k}` for each `k` and their sum.
#[derive(Clone, Debug, Serialize)]
pub struct Targets {
    #[serde(serialize_with = "decimals")]
    pub terms: Vec<Rational>,
    #[serde(serialize_with = "decimal")]
    pub bound: Rational,
}

impl Targets {
    pub fn new(sol: &LambdaSolution) -> Self {
        let terms: Vec<Rational> = sol
            .cumsum
            .iter()
            .map(|c| exp_neg(c, TARGET_DIGITS))
            .collect();
        let bound = terms.iter().sum();
        Targets { terms, bound }
    }
}

/// One instance of a schedule. Thresholds are outermost first, as original
/// indices; ratios are thresholds divided by `size`.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    /// `n` for the secretary family, `L` for the IID family.
    pub size: usize,
    #[serde(serialize_with = "opt_rational")]
    pub odds: Option<Rational>,
    #[serde(serialize_with = "decimal")]
    pub optimal_value: Rational,
    pub optimal_thresholds: Vec<usize>,
    #[serde(serialize_with = "decimals")]
    pub ratios: Vec<Rational>,
    #[serde(serialize_with = "decimal")]
    pub ratio_sum: Rational,
    /// `|optimal_value - bound|`.
    #[serde(serialize_with = "decimal")]
    pub value_deviation: Rational,
    /// `|ratio_k - e^{-cumsum_k}|`, secretary family only.
    #[serde(serialize_with = "decimals")]
    pub ratio_deviations: Vec<Rational>,
    #[serde(serialize_with = "opt_decimal")]
    pub surrogate_value: Option<Rational>,
    pub surrogate_thresholds: Option<Vec<usize>>,
    #[serde(serialize_with = "opt_decimal")]
    pub surrogate_deviation: Option<Rational>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub family: Family,
    pub m: usize,
    pub targets: Targets,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One header line plus one line per row; list cells are `;`-separated.
    pub fn to_csv(&self) -> String {
        let join_dec = |xs: &[Rational]| {
            xs.iter()
                .map(|x| rat_to_decimal(x, REPORT_DIGITS))
                .collect::<Vec<_>>()
                .join(";")
        };
        let join_idx = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        let opt_dec = |x: &Option<Rational>| {
            x.as_ref()
                .map(|v| rat_to_decimal(v, REPORT_DIGITS))
                .unwrap_or_default()
        };
        let mut out = String::from(
            "family,m,size,odds,optimal_value,optimal_thresholds,ratios,ratio_sum,\
             value_deviation,ratio_deviations,surrogate_value,surrogate_thresholds,\
             surrogate_deviation,bound\n",
        );
        let family = match self.family {
            Family::Secretary => "secretary",
            Family::Iid => "iid",
        };
        for row in &self.rows {
            let fields = [
                family.to_string(),
                self.m.to_string(),
                row.size.to_string(),
                row.odds.as_ref().map(rat_to_string).unwrap_or_default(),
                rat_to_decimal(&row.optimal_value, REPORT_DIGITS),
                join_idx(&row.optimal_thresholds),
                join_dec(&row.ratios),
                rat_to_decimal(&row.ratio_sum, REPORT_DIGITS),
                rat_to_decimal(&row.value_deviation, REPORT_DIGITS),
                join_dec(&row.ratio_deviations),
                opt_dec(&row.surrogate_value),
                row.surrogate_thresholds
                    .as_deref()
                    .map(join_idx)
                    .unwrap_or_default(),
                opt_dec(&row.surrogate_deviation),
                rat_to_decimal(&self.targets.bound, REPORT_DIGITS),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Whether `value_deviation` never increases along the rows from index
    /// `warmup` on.
    pub fn deviations_nonincreasing_after(&self, warmup: usize) -> bool {
        self.rows
            .iter()
            .skip(warmup)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1].value_deviation <= w[0].value_deviation)
    }
}

fn ratio_row(thresholds: &[usize], size: usize) -> (Vec<Rational>, Rational) {
    let ratios: Vec<Rational> = thresholds
        .iter()
        .map(|&i| Rational::new(i.into(), size.into()))
        .collect();
    let sum = ratios.iter().sum();
    (ratios, sum)
}

/// IID schedule entry `(L, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub length: usize,
    pub odds: Rational,
}

/// For each `(L, r)`: the surrogate-threshold win probability and the
/// one-stage look-ahead optimum on `L` IID trials with odds `r`, both exact.
pub fn bound_convergence(
    m: usize,
    schedule: &[ScheduleEntry],
    exec: Exec,
) -> Result<ConvergenceReport> {
    let sol = solve_lambda_dp(m)?;
    let targets = Targets::new(&sol);
    // validate every entry before spending time on any of them
    for entry in schedule {
        surrogate_lb_thresholds(&sol, entry.length, &entry.odds)?;
    }
    let rows = par::map(schedule, exec, |entry| -> Result<ConvergenceRow> {
        let seq = iid_sequence_with_odds(&entry.odds, entry.length)?;
        let surrogate = surrogate_lb_thresholds(&sol, entry.length, &entry.odds)?;
        let surrogate_value = win_probability(&seq, &surrogate)?;
        let optimum = optimal_ola(&seq, m)?;
        let thresholds = optimum.thresholds.expect("look-ahead yields thresholds");
        let (ratios, ratio_sum) = ratio_row(thresholds.as_slice(), entry.length);
        Ok(ConvergenceRow {
            size: entry.length,
            odds: Some(entry.odds.clone()),
            value_deviation: (&optimum.value - &targets.bound).abs(),
            optimal_value: optimum.value,
            optimal_thresholds: thresholds.as_slice().to_vec(),
            ratios,
            ratio_sum,
            ratio_deviations: Vec::new(),
            surrogate_deviation: Some((&surrogate_value - &targets.bound).abs()),
            surrogate_value: Some(surrogate_value),
            surrogate_thresholds: Some(surrogate.as_slice().to_vec()),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        family: Family::Iid,
        m,
        targets,
        rows,
    })
}

/// The common schedule of the IID experiments: `L = ceil(factor * Σλ / r)`.
pub fn scaled_length(sol: &LambdaSolution, r: &Rational, factor: &Rational) -> usize {
    let raw = factor * &sol.cumsum[sol.m - 1] / r;
    raw.ceil().to_integer().to_usize().expect("length fits in usize")
}

/// Secretary optimum for each `n`, by the look-ahead scan in `f64` with
/// compensated summation.
pub fn secretary_convergence(
    m: usize,
    n_schedule: &[usize],
    exec: Exec,
) -> Result<ConvergenceReport> {
    let sol = solve_lambda_dp(m)?;
    let targets = Targets::new(&sol);
    if let Some(&bad) = n_schedule.iter().find(|&&n| n < 2) {
        return Err(Error::OutOfRange {
            what: "secretary length n",
            value: bad,
            min: 2,
            max: usize::MAX,
        });
    }
    let rows = par::map(n_schedule, exec, |&n| -> Result<ConvergenceRow> {
        let (value, local) = secretary_optimum_f64(n, m)?;
        // position 1 is index 2
        let thresholds: Vec<usize> = local.as_slice().iter().map(|i| i + 1).collect();
        let (ratios, ratio_sum) = ratio_row(&thresholds, n);
        let ratio_deviations = ratios
            .iter()
            .enumerate()
            .map(|(pos, ratio)| {
                let k = m - pos;
                (ratio - &targets.terms[k - 1]).abs()
            })
            .collect();
        let value = Rational::from_float(value).expect("finite probability");
        Ok(ConvergenceRow {
            size: n,
            odds: None,
            value_deviation: (&value - &targets.bound).abs(),
            optimal_value: value,
            optimal_thresholds: thresholds,
            ratios,
            ratio_sum,
            ratio_deviations,
            surrogate_value: None,
            surrogate_thresholds: None,
            surrogate_deviation: None,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        family: Family::Secretary,
        m,
        targets,
        rows,
    })
}

/// Optimal value and local-position thresholds of the `n`-secretary
/// problem with `m` stops, in double precision.
pub fn secretary_optimum_f64(n: usize, m: usize) -> Result<(f64, ThresholdVector)> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "secretary length n",
            value: n,
            min: 2,
            max: usize::MAX,
        });
    }
    let q: Vec<f64> = (2..=n).map(|i| 1.0 - 1.0 / i as f64).collect();
    let r: Vec<f64> = (2..=n).map(|i| 1.0 / (i - 1) as f64).collect();
    let result = optimal_ola_in::<f64>(&q, &r, m)?;
    Ok((
        result.value.as_f64(),
        result.thresholds.expect("look-ahead yields thresholds"),
    ))
}
