//! Value-iteration solvers: expected cost, worst case, CVaR game, and the
//! cost-constrained (lexicographic) stage.

pub mod cvar;
pub mod ev;
pub mod lex;
pub mod worst;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{ActionId, Mdp, ModelError, StateId};
use crate::par::Execution;

pub use cvar::{
    build_ygrid, cvar_greedy_action, cvar_greedy_response, cvar_value_iteration,
    inner_adversary_max, query_value, AdversaryResponse, CvarSolution, InnerMethod, YGrid,
};
pub use ev::{solve_expected_value, ValueTable};
pub use lex::{
    enabled_actions, estimate_var, lex_policy_action, solve_constrained_ev, CostAxis, CostGrid,
    LexSolution, VarEstimate, VarSettings,
};
pub use worst::{solve_worst_case, WorstCaseSolution};

/// Candidate actions must beat the incumbent by more than this to replace
/// it, so near-ties resolve to the lowest action index.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Stop once the sup-norm change of a sweep drops below this.
    pub epsilon: f64,
    pub max_sweeps: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            epsilon: 1e-6,
            max_sweeps: 10_000,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(
        "no convergence after {sweeps} sweeps (residual {residual:e}); the model may be improper"
    )]
    NotConverged { sweeps: usize, residual: f64 },
    #[error("no finite worst-case policy: values still growing after {0} sweeps")]
    NoFiniteWorstCase(usize),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("y = {0} outside [0, 1]")]
    BudgetOutOfRange(f64),
    #[error(
        "VaR estimate {var} is below the minimum worst-case cost {v_worst} at the initial state"
    )]
    InfeasibleRoot { var: f64, v_worst: f64 },
    #[error("accumulated cost {cost} exceeds VaR {var}")]
    BudgetExceeded { cost: f64, var: f64 },
    #[error("reachable augmented cell ({state}, {cost}) has no enabled action")]
    DeadCell { state: String, cost: f64 },
    #[error("VaR estimation: {0}")]
    Estimation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Lowest-index argmin of `q` over the actions of `s`, with [`TIE_EPS`].
pub(crate) fn argmin_action(
    mdp: &Mdp,
    s: StateId,
    mut q: impl FnMut(ActionId) -> f64,
) -> (ActionId, f64) {
    let mut best: Option<(ActionId, f64)> = None;
    for a in mdp.actions(s) {
        let v = q(a);
        match best {
            Some((_, b)) if !(v < b - TIE_EPS) => {}
            _ => best = Some((a, v)),
        }
    }
    best.expect("state has at least one action")
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}
