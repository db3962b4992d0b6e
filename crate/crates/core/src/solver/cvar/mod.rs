//! CVaR minimisation as a game between the agent and a budget-splitting
//! adversary, solved on a log-spaced grid of budgets `y`.

mod grid;
mod inner;
pub mod lp;
mod vi;

use serde::{Deserialize, Serialize};

pub use grid::{build_ygrid, YGrid};
pub use inner::InnerMethod;
pub use vi::{cvar_value_iteration, CvarSolution};

use crate::mdp::{ActionId, Mdp, StateId};
use crate::solver::worst::worst_q;
use crate::solver::{argmin_action, SolveError};

/// The adversary's best reply at (s, y, a), excluding the immediate cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryResponse {
    /// `max Σ T(s'|s,a) ξ(s') V(s', y ξ(s'))` with interpolated `V`.
    pub value: f64,
    /// Density ratio per successor, in successor order.
    pub xi: Vec<(StateId, f64)>,
}

impl AdversaryResponse {
    pub fn xi_of(&self, s: StateId) -> f64 {
        self.xi
            .iter()
            .find(|(t, _)| *t == s)
            .map_or(0.0, |(_, x)| *x)
    }
}

fn check_budget(y: f64) -> Result<(), SolveError> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(SolveError::BudgetOutOfRange(y))
    }
}

/// `V(s, y)`: the stored value at grid knots, linear interpolation of
/// `y·V` in between, and the worst-case value at `y = 0`.
pub fn query_value(sol: &CvarSolution, s: StateId, y: f64) -> Result<f64, SolveError> {
    check_budget(y)?;
    if y == 0.0 {
        return Ok(sol.v_worst[s.0]);
    }
    if let Some(k) = sol.grid.knot(y) {
        return Ok(sol.value_at(s, k));
    }
    let pts = sol.grid.points();
    let k = sol.grid.segment(y);
    let w = (y - pts[k]) / (pts[k + 1] - pts[k]);
    let lo = pts[k] * sol.value_at(s, k);
    let hi = pts[k + 1] * sol.value_at(s, k + 1);
    Ok((lo * (1.0 - w) + hi * w) / y)
}

/// Solves the adversary's problem at (s, y, a) for `y ∈ (0, 1]`.
pub fn inner_adversary_max(
    mdp: &Mdp,
    sol: &CvarSolution,
    s: StateId,
    y: f64,
    a: ActionId,
    method: InnerMethod,
) -> Result<AdversaryResponse, SolveError> {
    check_budget(y)?;
    if y == 0.0 {
        return Err(SolveError::BudgetOutOfRange(y));
    }
    debug_assert_eq!(mdp.action_state(a), s);
    let succs = mdp.successors(a);
    let (r, t) = inner::solve_single(
        method,
        &sol.grid,
        succs,
        |i, k| sol.slope(succs[i].state, k),
        y,
    );
    Ok(AdversaryResponse {
        value: r / y,
        xi: succs.iter().zip(t).map(|(x, t)| (x.state, t / y)).collect(),
    })
}

/// Greedy action at (s, y) together with the adversary's reply to it.
///
/// At `y = 0` the action minimises the worst-case Q computed from the
/// `y = 0` column, and no reply is returned.
pub fn cvar_greedy_response(
    mdp: &Mdp,
    sol: &CvarSolution,
    s: StateId,
    y: f64,
) -> Result<(ActionId, Option<AdversaryResponse>), SolveError> {
    check_budget(y)?;
    mdp.first_action(s)
        .ok_or_else(|| crate::mdp::ModelError::NoActions(mdp.state_name(s).to_string()))?;
    if y == 0.0 {
        let (a, _) = argmin_action(mdp, s, |a| worst_q(mdp, &sol.v_worst, a));
        return Ok((a, None));
    }
    let mut replies = Vec::with_capacity(mdp.num_actions_at(s));
    let (a, _) = argmin_action(mdp, s, |a| {
        let r = inner_adversary_max(mdp, sol, s, y, a, InnerMethod::Greedy)
            .expect("budget checked above");
        let q = mdp.cost(a) + r.value;
        replies.push((a, r));
        q
    });
    let reply = replies.into_iter().find(|(b, _)| *b == a).map(|(_, r)| r);
    Ok((a, reply))
}

/// Greedy action at (s, y).
pub fn cvar_greedy_action(
    mdp: &Mdp,
    sol: &CvarSolution,
    s: StateId,
    y: f64,
) -> Result<ActionId, SolveError> {
    cvar_greedy_response(mdp, sol, s, y).map(|(a, _)| a)
}

#[cfg(test)]
mod tests;
