use serde::{Deserialize, Serialize};

use super::{argmin_action, sup_diff, SolveError, SweepSettings};
use crate::mdp::{ActionId, Mdp, StateId};
use crate::par::map_range;

/// Expected-cost values and the greedy policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub policy: Vec<ActionId>,
    pub sweeps: usize,
}

impl ValueTable {
    pub fn value(&self, s: StateId) -> f64 {
        self.values[s.0]
    }

    pub fn action(&self, s: StateId) -> ActionId {
        self.policy[s.0]
    }
}

fn q_value(mdp: &Mdp, v: &[f64], a: ActionId) -> f64 {
    mdp.cost(a)
        + mdp
            .successors(a)
            .iter()
            .map(|x| x.prob * v[x.state.0])
            .sum::<f64>()
}

/// Synchronous value iteration for the expected total cost.
pub fn solve_expected_value(mdp: &Mdp, set: &SweepSettings) -> Result<ValueTable, SolveError> {
    mdp.require_actions()?;
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for sweep in 1..=set.max_sweeps {
        let next = map_range(set.exec, n, |i| {
            let s = StateId(i);
            if mdp.is_goal(s) {
                0.0
            } else {
                argmin_action(mdp, s, |a| q_value(mdp, &v, a)).1
            }
        });
        residual = sup_diff(&next, &v);
        v = next;
        if residual < set.epsilon {
            let policy = map_range(set.exec, n, |i| {
                argmin_action(mdp, StateId(i), |a| q_value(mdp, &v, a)).0
            });
            return Ok(ValueTable {
                values: v,
                policy,
                sweeps: sweep,
            });
        }
    }
    Err(SolveError::NotConverged {
        sweeps: set.max_sweeps,
        residual,
    })
}
