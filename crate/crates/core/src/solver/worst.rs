use serde::{Deserialize, Serialize};

use super::{argmin_action, sup_diff, SolveError, SweepSettings};
use crate::mdp::{ActionId, Mdp, StateId, SUPPORT_EPS};
use crate::par::map_range;

/// Minimum worst-case cost-to-go, assuming the adversary may move to any
/// supported successor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSolution {
    pub v_worst: Vec<f64>,
    /// Indexed by global action id.
    pub q_worst: Vec<f64>,
    pub policy: Vec<ActionId>,
    pub sweeps: usize,
}

impl WorstCaseSolution {
    pub fn value(&self, s: StateId) -> f64 {
        self.v_worst[s.0]
    }

    pub fn q(&self, a: ActionId) -> f64 {
        self.q_worst[a.0]
    }

    pub fn action(&self, s: StateId) -> ActionId {
        self.policy[s.0]
    }
}

/// `C(s,a) + max` of `v` over successors with probability at least
/// [`SUPPORT_EPS`].
pub fn worst_q(mdp: &Mdp, v: &[f64], a: ActionId) -> f64 {
    mdp.cost(a)
        + mdp
            .successors(a)
            .iter()
            .filter(|x| x.prob >= SUPPORT_EPS)
            .map(|x| v[x.state.0])
            .fold(0.0, f64::max)
}

pub fn solve_worst_case(mdp: &Mdp, set: &SweepSettings) -> Result<WorstCaseSolution, SolveError> {
    mdp.require_actions()?;
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    for sweep in 1..=set.max_sweeps {
        let next = map_range(set.exec, n, |i| {
            let s = StateId(i);
            if mdp.is_goal(s) {
                0.0
            } else {
                argmin_action(mdp, s, |a| worst_q(mdp, &v, a)).1
            }
        });
        let residual = sup_diff(&next, &v);
        v = next;
        if residual < set.epsilon {
            let q_worst: Vec<f64> = map_range(set.exec, mdp.num_actions(), |i| {
                let a = ActionId(i);
                if mdp.is_goal(mdp.action_state(a)) {
                    0.0
                } else {
                    worst_q(mdp, &v, a)
                }
            });
            let policy = map_range(set.exec, n, |i| {
                argmin_action(mdp, StateId(i), |a| q_worst[a.0]).0
            });
            return Ok(WorstCaseSolution {
                v_worst: v,
                q_worst,
                policy,
                sweeps: sweep,
            });
        }
    }
    Err(SolveError::NoFiniteWorstCase(set.max_sweeps))
}
