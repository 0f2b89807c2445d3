//! Exact evaluation and optimization of threshold strategies for the
//! multiple-stopping odds problem.
//!
//! A decision maker observes independent Bernoulli trials `X_1, ..., X_N`
//! and may select up to `m` successes; the goal is that the last selection
//! is the last success of the whole sequence. This crate provides:
//!
//! - [`patterns`]: the winning-pattern sets (`Ξ̂_k`, `Ξ_k`, `Ξ⁺_k`) and the
//!   lattice-path view of them;
//! - [`lambda`]: the constants `λ_1, ..., λ_m`, computed both by the
//!   lattice-path dynamic program and by direct pattern summation, plus the
//!   asymptotic lower bound `Σ_k exp(-Σ_{k'≤k} λ_k')`;
//! - [`strategy`]: odds sequences, threshold vectors and the exact win
//!   probability of a threshold strategy;
//! - [`optimizer`]: exhaustive threshold search, backward induction and the
//!   one-stage look-ahead threshold scan;
//! - [`asymptotics`]: secretary and common-odds families and convergence
//!   reports against the asymptotic constants;
//! - [`oracle`]: exhaustive outcome enumeration and seeded Monte Carlo.
//!
//! All probabilities are exact [`Rational`]s unless a function says
//! otherwise.

pub mod asymptotics;
pub mod error;
pub mod io;
pub mod lambda;
pub mod numerics;
pub mod optimizer;
pub mod oracle;
pub mod par;
pub mod patterns;
pub mod strategy;

pub use error::{Error, Result};
pub use numerics::{
    exp_neg, rat_parse, rat_to_decimal, rat_to_decimal_with, rat_to_string, Fixed, Rational,
    Rounding, Scalar,
};
pub use par::Exec;
