//! Episode execution for every strategy and Monte Carlo evaluation.

mod episode;
mod evaluate;
mod stats;

use thiserror::Error;

use crate::mdp::ModelError;
use crate::solver::SolveError;

pub use episode::{execute_episode, run_episodes, EpisodeRecord, ExecSettings, Plan};
pub use evaluate::{
    evaluate, EvalSettings, EvaluationSummary, HistogramRow, SummaryRow, TailStats,
};
pub use stats::{
    bootstrap_cvar_se, empirical_cvar, mean_and_se, sample_quantile, Histogram, StatsError,
};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("episode {episode} hit the step limit of {limit}")]
    StepLimit { episode: u64, limit: usize },
    #[error("switched episode {episode} cost {cost} exceeds VaR {var}")]
    SwitchViolation { episode: u64, cost: f64, var: f64 },
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
