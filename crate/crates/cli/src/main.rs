use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use multistop::asymptotics::{bound_convergence, secretary_convergence, ConvergenceReport};
use multistop::io::{load_schedule, load_sequence};
use multistop::lambda::{lower_bound, solve_lambda_dp_in, LambdaSolution};
use multistop::optimizer::{
    optimal_dp, optimal_exhaustive_with, optimal_ola, Method, SearchOptions,
    DEFAULT_MAX_CANDIDATES,
};
use multistop::oracle::{enumerate_win_probability, monte_carlo_win_probability, verify_suite};
use multistop::patterns::{self, PatternKind};
use multistop::strategy::{win_probability, ThresholdVector};
use multistop::{rat_to_decimal, rat_to_string, Exec, Fixed, Rational, Result, Scalar};

/// Table cells longer than this are wrapped.
const WRAP: usize = 60;

#[derive(Parser)]
#[command(name = "multistop", version, about = "Threshold strategies for the multiple-stopping odds problem")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,

    /// Run every stage sequentially.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Xi,
    Hat,
    XiPlus,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exhaustive,
    Dp,
    Ola,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMethod {
    Formula,
    Enumerate,
}

#[derive(Subcommand)]
enum Command {
    /// Constants λ_1..λ_m, their running sums and the lower bound.
    Lambda {
        #[arg(long)]
        m: usize,
        /// Decimals for the bound and its terms.
        #[arg(long, default_value_t = 10)]
        decimals: u32,
        /// Decimals for λ and the running sums.
        #[arg(long, default_value_t = 6)]
        lambda_decimals: u32,
        /// Use 200-digit fixed point instead of exact rationals.
        #[arg(long)]
        approx: bool,
        /// Give up after this many seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Enumerate or count winning-pattern sets.
    Xi {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Kind::Xi)]
        kind: Kind,
        #[arg(long)]
        count_only: bool,
        /// Show the lattice paths from (k,k) to (0,0) instead.
        #[arg(long)]
        paths: bool,
    },
    /// Exact win probability of a threshold strategy.
    Winprob {
        #[arg(long)]
        sequence: PathBuf,
        /// Thresholds outermost first, e.g. `2,4`.
        #[arg(long)]
        thresholds: String,
        #[arg(long, value_enum, default_value_t = EvalMethod::Formula)]
        method: EvalMethod,
        #[arg(long, default_value_t = 12)]
        decimals: u32,
    },
    /// Optimal value and thresholds.
    Optimal {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Ola)]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_MAX_CANDIDATES)]
        max_candidates: u128,
        #[arg(long, default_value_t = 12)]
        decimals: u32,
    },
    /// Secretary problem convergence report.
    Secretary {
        /// One or more sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        m: usize,
    },
    /// Common-odds convergence report for a schedule of (L, r).
    Bound {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Monte Carlo estimate of a threshold strategy.
    Simulate {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        thresholds: String,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomized cross-checks of formula, oracle and optimizers.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let out = match &cli.command {
        Command::Lambda {
            m,
            decimals,
            lambda_decimals,
            approx,
            timeout,
        } => lambda(cli.format, *m, *decimals, *lambda_decimals, *approx, *timeout)?,
        Command::Xi {
            k,
            kind,
            count_only,
            paths,
        } => xi(cli.format, *k, *kind, *count_only, *paths)?,
        Command::Winprob {
            sequence,
            thresholds,
            method,
            decimals,
        } => {
            let seq = load_sequence(sequence)?;
            let t = ThresholdVector::parse(thresholds)?;
            t.validate_for(seq.len())?;
            let value = match method {
                EvalMethod::Formula => win_probability(&seq, &t)?,
                EvalMethod::Enumerate => enumerate_win_probability(&seq, &t)?.probability,
            };
            value_output(cli.format, &value, Some(&t), None, *decimals)
        }
        Command::Optimal {
            sequence,
            m,
            method,
            max_candidates,
            decimals,
        } => {
            let seq = load_sequence(sequence)?;
            let result = match method {
                MethodArg::Exhaustive => optimal_exhaustive_with(
                    &seq,
                    *m,
                    SearchOptions {
                        max_candidates: *max_candidates,
                        exec,
                    },
                )?,
                MethodArg::Dp => optimal_dp(&seq, *m)?,
                MethodArg::Ola => optimal_ola(&seq, *m)?,
            };
            value_output(
                cli.format,
                &result.value,
                result.thresholds.as_ref(),
                Some(result.method),
                *decimals,
            )
        }
        Command::Secretary { n, m } => report(cli.format, &secretary_convergence(*m, n, exec)?),
        Command::Bound { m, schedule } => {
            let schedule = load_schedule(schedule)?;
            report(cli.format, &bound_convergence(*m, &schedule, exec)?)
        }
        Command::Simulate {
            sequence,
            thresholds,
            trials,
            seed,
        } => {
            let seq = load_sequence(sequence)?;
            let t = ThresholdVector::parse(thresholds)?;
            let est = monte_carlo_win_probability(&seq, &t, *trials, *seed)?;
            match cli.format {
                Format::Json => to_json(&json!({
                    "thresholds": t,
                    "trials": est.trials,
                    "seed": seed,
                    "wins": est.wins,
                    "estimate": est.estimate,
                    "standard_error": est.standard_error,
                })),
                Format::Csv => format!(
                    "thresholds,trials,seed,wins,estimate,standard_error\n{},{},{},{},{},{}\n",
                    join(t.as_slice(), ";"),
                    est.trials,
                    seed,
                    est.wins,
                    est.estimate,
                    est.standard_error
                ),
                Format::Table => format!(
                    "thresholds      {t}\ntrials          {}\nseed            {seed}\nwins            {}\nestimate        {:.6}\nstandard error  {:.6}\n",
                    est.trials, est.wins, est.estimate, est.standard_error
                ),
            }
        }
        Command::Verify {
            max_n,
            m,
            cases,
            seed,
        } => {
            let report = verify_suite(*max_n, *m, *cases, *seed, exec)?;
            let text = match cli.format {
                Format::Json => to_json(&report),
                Format::Csv => {
                    let mut s = String::from("check,passed,failed\n");
                    for c in &report.checks {
                        s.push_str(&format!("{},{},{}\n", c.name, c.passed, c.failed));
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("cases {}  seed {}\n", report.cases, report.seed);
                    for c in &report.checks {
                        s.push_str(&format!("{:<34} {:>6} passed {:>6} failed\n", c.name, c.passed, c.failed));
                    }
                    for f in &report.failures {
                        s.push_str(&format!("FAIL {f}\n"));
                    }
                    s
                }
            };
            print!("{text}");
            return Ok(if report.all_passed() { 0 } else { 1 });
        }
    };
    print!("{out}");
    Ok(0)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn wrap(text: &str, width: usize) -> Vec<&str> {
    if text.is_empty() {
        return vec![""];
    }
    let mut parts = Vec::new();
    let mut rest = text;
    while rest.len() > width {
        let (head, tail) = rest.split_at(width);
        parts.push(head);
        rest = tail;
    }
    parts.push(rest);
    parts
}

fn push_wrapped(out: &mut String, label: &str, value: &str) {
    for (i, piece) in wrap(value, WRAP).into_iter().enumerate() {
        let head = if i == 0 { label } else { "" };
        out.push_str(&format!("  {head:<10} {piece}\n"));
    }
}

fn lambda(
    format: Format,
    m: usize,
    digits: u32,
    lambda_digits: u32,
    approx: bool,
    timeout: f64,
) -> Result<String> {
    let budget = Some(Duration::from_secs_f64(timeout.max(0.0)));
    let (exact, bound, sol_rat): (bool, _, LambdaSolution<Rational>) = if approx {
        let (sol, _) = solve_lambda_dp_in::<Fixed<200>>(m, budget)?;
        let bound = lower_bound(&sol, digits)?;
        let as_rat = LambdaSolution {
            m: sol.m,
            lambda: sol.lambda.iter().map(Scalar::to_rational).collect(),
            cumsum: sol.cumsum.iter().map(Scalar::to_rational).collect(),
            gamma: Vec::new(),
        };
        (false, bound, as_rat)
    } else {
        let (sol, _) = solve_lambda_dp_in::<Rational>(m, budget)?;
        let bound = lower_bound(&sol, digits)?;
        (true, bound, sol)
    };
    // approximate values print as long decimals instead of fractions
    let show = |x: &Rational| {
        if exact {
            rat_to_string(x)
        } else {
            rat_to_decimal(x, 50)
        }
    };
    let lambda: Vec<String> = sol_rat.lambda.iter().map(show).collect();
    let cumsum: Vec<String> = sol_rat.cumsum.iter().map(show).collect();
    let lambda_dec: Vec<String> = sol_rat
        .lambda
        .iter()
        .map(|x| rat_to_decimal(x, lambda_digits))
        .collect();
    let cumsum_dec: Vec<String> = sol_rat
        .cumsum
        .iter()
        .map(|x| rat_to_decimal(x, lambda_digits))
        .collect();

    Ok(match format {
        Format::Json => to_json(&json!({
            "m": m,
            "exact": exact,
            "lambda": lambda,
            "lambda_decimal": lambda_dec,
            "cumsum": cumsum,
            "cumsum_decimal": cumsum_dec,
            "bound_terms": bound.terms,
            "bound": bound.bound,
        })),
        Format::Csv => {
            let mut s = String::from("k,lambda,lambda_decimal,cumsum,cumsum_decimal,bound_term\n");
            for k in 0..m {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    k + 1,
                    lambda[k],
                    lambda_dec[k],
                    cumsum[k],
                    cumsum_dec[k],
                    bound.terms[k]
                ));
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            for k in 0..m {
                s.push_str(&format!("k = {}\n", k + 1));
                push_wrapped(&mut s, "lambda", &lambda[k]);
                push_wrapped(&mut s, "", &format!("= {}", lambda_dec[k]));
                push_wrapped(&mut s, "cumsum", &cumsum[k]);
                push_wrapped(&mut s, "", &format!("= {}", cumsum_dec[k]));
                push_wrapped(&mut s, "e^-cumsum", &bound.terms[k]);
            }
            s.push_str(&format!("bound (m = {m})  {}\n", bound.bound));
            s
        }
    })
}

fn xi(format: Format, k: usize, kind: Kind, count_only: bool, paths: bool) -> Result<String> {
    let kind = match kind {
        Kind::Xi => PatternKind::Xi,
        Kind::Hat => PatternKind::Hat,
        Kind::XiPlus => PatternKind::XiPlus,
    };
    let vector = |v: &[u32]| format!("({})", join(v, ","));
    if paths {
        let report = patterns::lattice_paths(k)?;
        return Ok(match format {
            Format::Json => to_json(&report),
            Format::Csv => {
                let mut s = String::from("vector,first_apex,vertices\n");
                for p in &report.paths {
                    let vertices: Vec<String> =
                        p.vertices.iter().map(|(a, b)| format!("({a};{b})")).collect();
                    s.push_str(&format!(
                        "\"{}\",{},{}\n",
                        vector(p.vector.entries()),
                        p.first_apex,
                        vertices.join(" ")
                    ));
                }
                s
            }
            Format::Table => {
                let mut s = String::new();
                for p in &report.paths {
                    let vertices: Vec<String> =
                        p.vertices.iter().map(|(a, b)| format!("({a},{b})")).collect();
                    s.push_str(&format!(
                        "{:<24} apex {}  {}\n",
                        vector(p.vector.entries()),
                        p.first_apex,
                        vertices.join(" -> ")
                    ));
                }
                s.push_str(&format!(
                    "{} paths; matches xi_plus: {}\n",
                    report.paths.len(),
                    report.matches_xi_plus
                ));
                s
            }
        });
    }
    if count_only {
        let count = match kind {
            PatternKind::Xi => patterns::xi_count(k)?,
            other => patterns::enumerate(other, k)?.len() as u128,
        };
        return Ok(match format {
            Format::Json => to_json(&json!({ "k": k, "kind": kind, "count": count.to_string() })),
            Format::Csv => format!("k,count\n{k},{count}\n"),
            Format::Table => format!("{count}\n"),
        });
    }
    let set = patterns::enumerate(kind, k)?;
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string(&set).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("vector\n");
            for v in &set.vectors {
                s.push_str(&format!("\"{}\"\n", vector(v.entries())));
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            for v in &set.vectors {
                s.push_str(&vector(v.entries()));
                s.push('\n');
            }
            s
        }
    })
}

fn value_output(
    format: Format,
    value: &Rational,
    thresholds: Option<&ThresholdVector>,
    method: Option<Method>,
    digits: u32,
) -> String {
    let exact = rat_to_string(value);
    let decimal = rat_to_decimal(value, digits);
    match format {
        Format::Json => {
            let mut obj = json!({ "value": exact, "decimal": decimal });
            if let Some(t) = thresholds {
                obj["thresholds"] = json!(t);
            }
            if let Some(m) = method {
                obj["method"] = json!(m);
            }
            to_json(&obj)
        }
        Format::Csv => format!(
            "value,decimal,thresholds\n{exact},{decimal},{}\n",
            thresholds.map(|t| join(t.as_slice(), ";")).unwrap_or_default()
        ),
        Format::Table => {
            let mut s = String::new();
            if let Some(m) = method {
                s.push_str(&format!("method      {}\n", serde_json::to_value(m).expect("enum")
                    .as_str()
                    .expect("string")));
            }
            if let Some(t) = thresholds {
                s.push_str(&format!("thresholds  {t}\n"));
            }
            for (i, piece) in wrap(&exact, WRAP).into_iter().enumerate() {
                let label = if i == 0 { "value" } else { "" };
                s.push_str(&format!("{label:<11} {piece}\n"));
            }
            s.push_str(&format!("decimal     {decimal}\n"));
            s
        }
    }
}

fn report(format: Format, report: &ConvergenceReport) -> String {
    match format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
        Format::Table => {
            let mut s = format!(
                "targets: terms {}  bound {}\n",
                join(
                    &report
                        .targets
                        .terms
                        .iter()
                        .map(|t| rat_to_decimal(t, 10))
                        .collect::<Vec<_>>(),
                    " "
                ),
                rat_to_decimal(&report.targets.bound, 10)
            );
            s.push_str(&format!(
                "{:>8} {:>10} {:>14} {:>14} {:>12} {:>14}  {}\n",
                "size", "odds", "optimal", "deviation", "ratio sum", "surrogate", "thresholds"
            ));
            for row in &report.rows {
                s.push_str(&format!(
                    "{:>8} {:>10} {:>14} {:>14} {:>12} {:>14}  {}\n",
                    row.size,
                    row.odds.as_ref().map(rat_to_string).unwrap_or_else(|| "-".into()),
                    rat_to_decimal(&row.optimal_value, 10),
                    rat_to_decimal(&row.value_deviation, 10),
                    rat_to_decimal(&row.ratio_sum, 8),
                    row.surrogate_value
                        .as_ref()
                        .map(|v| rat_to_decimal(v, 10))
                        .unwrap_or_else(|| "-".into()),
                    join(&row.optimal_thresholds, ",")
                ));
            }
            s
        }
    }
}
