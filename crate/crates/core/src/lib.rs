//! Risk-averse planning for stochastic shortest path (SSP) MDPs.
//!
//! The crate computes four kinds of policies over a finite SSP MDP:
//!
//! - expected-cost optimal ([`solver::ev`]),
//! - minimum worst-case cost ([`solver::worst`]),
//! - static CVaR optimal, via minimax value iteration on the CVaR stochastic
//!   game with an interpolated budget coordinate ([`solver::cvar`]),
//! - lexicographic: minimum expected cost among CVaR-optimal behaviours,
//!   obtained by switching to a VaR-respecting policy once the adversary
//!   assigns the current history zero probability ([`solver::lex`]).
//!
//! [`exec`] runs episodes for each strategy and produces summary statistics,
//! [`domains`] builds the benchmark models and reads/writes MDP documents.
//!
//! Inner loops (value-iteration sweeps, episode batches, bootstrap resampling)
//! run on rayon when the `parallel` feature is enabled; every entry point
//! takes an [`Execution`] so the sequential path stays available and results
//! are identical in both modes.

pub mod domains;
pub mod exec;
pub mod mdp;
pub mod par;
pub mod solver;

pub use mdp::{ActionId, Mdp, MdpBuilder, StateId};
pub use par::Execution;
