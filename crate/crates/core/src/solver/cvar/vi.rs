use serde::{Deserialize, Serialize};

use super::grid::YGrid;
use super::inner::{greedy_batch, row_slopes};
use crate::mdp::{ActionId, Mdp, StateId};
use crate::par::map_range;
use crate::solver::worst::WorstCaseSolution;
use crate::solver::{sup_diff, SolveError, SweepSettings, TIE_EPS};

/// Converged CVaR game values on the budget grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvarSolution {
    pub grid: YGrid,
    /// Row-major `num_states × grid.len()`.
    pub values: Vec<f64>,
    /// Greedy action per grid cell; the `y = 0` column holds the worst-case
    /// policy.
    pub actions: Vec<ActionId>,
    pub v_worst: Vec<f64>,
    pub sweeps: usize,
}

impl CvarSolution {
    pub fn row(&self, s: StateId) -> &[f64] {
        let g = self.grid.len();
        &self.values[s.0 * g..(s.0 + 1) * g]
    }

    pub fn value_at(&self, s: StateId, k: usize) -> f64 {
        self.values[s.0 * self.grid.len() + k]
    }

    pub fn action_at(&self, s: StateId, k: usize) -> ActionId {
        self.actions[s.0 * self.grid.len() + k]
    }

    pub fn num_states(&self) -> usize {
        self.v_worst.len()
    }

    /// Slope of `y·V(s, y)` on grid segment `k`.
    pub fn slope(&self, s: StateId, k: usize) -> f64 {
        let p = self.grid.points();
        let row = self.row(s);
        (p[k + 1] * row[k + 1] - p[k] * row[k]) / (p[k + 1] - p[k])
    }
}

/// Value iteration for the CVaR game on the augmented space (s, y).
///
/// Starts from the worst-case values, which upper-bound the game value, so
/// the iterates decrease monotonically. The `y = 0` column stays pinned to
/// `worst.v_worst` and goal rows stay at zero.
pub fn cvar_value_iteration(
    mdp: &Mdp,
    grid: &YGrid,
    worst: &WorstCaseSolution,
    set: &SweepSettings,
) -> Result<CvarSolution, SolveError> {
    mdp.require_actions()?;
    let n = mdp.num_states();
    let g = grid.len();
    let pts = grid.points();
    let mut values = vec![0.0; n * g];
    for s in mdp.states() {
        if !mdp.is_goal(s) {
            values[s.0 * g..(s.0 + 1) * g].fill(worst.v_worst[s.0]);
        }
    }
    let mut slopes = vec![0.0; n * (g - 1)];
    let mut residual = f64::INFINITY;
    for sweep in 1..=set.max_sweeps {
        for s in 0..n {
            row_slopes(
                pts,
                &values[s * g..(s + 1) * g],
                &mut slopes[s * (g - 1)..(s + 1) * (g - 1)],
            );
        }
        let rows = map_range(set.exec, n, |s| {
            backup_row(mdp, pts, &slopes, worst, StateId(s))
        });
        let mut next = Vec::with_capacity(n * g);
        let mut actions = Vec::with_capacity(n * g);
        for (v, a) in rows {
            next.extend(v);
            actions.extend(a);
        }
        residual = sup_diff(&values, &next);
        values = next;
        if residual < set.epsilon {
            return Ok(CvarSolution {
                grid: grid.clone(),
                values,
                actions,
                v_worst: worst.v_worst.clone(),
                sweeps: sweep,
            });
        }
    }
    Err(SolveError::NotConverged {
        sweeps: set.max_sweeps,
        residual,
    })
}

fn backup_row(
    mdp: &Mdp,
    pts: &[f64],
    slopes: &[f64],
    worst: &WorstCaseSolution,
    s: StateId,
) -> (Vec<f64>, Vec<ActionId>) {
    let g = pts.len();
    let segs = g - 1;
    let first = mdp.first_action(s).expect("checked by require_actions");
    if mdp.is_goal(s) {
        return (vec![0.0; g], vec![first; g]);
    }
    let mut best = vec![f64::INFINITY; g];
    let mut arg = vec![first; g];
    best[0] = worst.v_worst[s.0];
    arg[0] = worst.policy[s.0];
    let ys = &pts[1..];
    let mut r = vec![0.0; ys.len()];
    for a in mdp.actions(s) {
        let succs = mdp.successors(a);
        greedy_batch(
            pts,
            succs,
            |i, k| slopes[succs[i].state.0 * segs + k],
            ys,
            &mut r,
        );
        let c = mdp.cost(a);
        for (k, (&y, &rk)) in ys.iter().zip(&r).enumerate() {
            let q = c + rk / y;
            if q < best[k + 1] - TIE_EPS || best[k + 1].is_infinite() {
                best[k + 1] = q;
                arg[k + 1] = a;
            }
        }
    }
    (best, arg)
}
