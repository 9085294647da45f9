//! Sparse recovery by `ℓp^p / ℓq^p` ratio minimization.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod norms;
pub mod prox;
pub mod registry;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use instance::{ProblemInstance, SparsityProfile};
pub use norms::{best_k_split, lp_norm_pow, ratio_objective, RatioParams};
pub use solver::{dlpa_solve, l1_baseline_solve, DlpaConfig, SolveResult, StopReason};
