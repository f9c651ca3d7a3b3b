//! Distributionally robust objectives over f-divergence balls around an
//! empirical distribution, and calibrated confidence intervals for the
//! optimal value of stochastic programs.

pub mod bench;
pub mod datagen;
pub mod divergences;
pub mod error;
pub mod format;
pub mod inference;
pub mod inner;
pub mod outer;
pub mod problems;
pub mod stats;

pub use divergences::DivergenceSpec;
pub use error::{Error, Result};
pub use inference::{BlockStats, ConfidenceInterval, Method};
pub use inner::{RobustEvaluation, UncertaintyBudget};
pub use outer::{Solution, SolveConfig};
pub use problems::{LossModel, Sample};
