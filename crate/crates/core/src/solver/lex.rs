//! The lexicographic stage: VaR of the CVaR-optimal policy, then the
//! expected-cost-optimal policy among those that never exceed it.
//!
//! The augmented model tracks accumulated cost `c`. At (s, c) an action is
//! enabled only if `c + Q_worst(s, a) ≤ VaR`, so any history following
//! enabled actions ends with total cost at most VaR.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::cvar::CvarSolution;
use super::worst::WorstCaseSolution;
use super::{sup_diff, SolveError, SweepSettings, TIE_EPS};
use crate::exec::{run_episodes, sample_quantile, ExecSettings, Plan};
use crate::mdp::{ActionId, Mdp, RandomSource, StateId, VarConvention};
use crate::par::{map_range, Execution};

/// Slack on the action constraint and on the VaR bound.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VarSettings {
    pub episodes: usize,
    pub seed: u64,
    pub convention: VarConvention,
    /// Use the next lower order statistic.
    pub margin: bool,
}

impl Default for VarSettings {
    fn default() -> Self {
        VarSettings {
            episodes: 20_000,
            seed: 0,
            convention: VarConvention::Lower,
            margin: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub value: f64,
    pub alpha: f64,
    pub episodes: usize,
    pub convention: VarConvention,
    pub margin: bool,
}

/// Monte Carlo VaR of the CVaR-optimal policy (no switching).
pub fn estimate_var(
    mdp: &Mdp,
    cvar: &CvarSolution,
    alpha: f64,
    set: &VarSettings,
    exec: &ExecSettings,
    execution: Execution,
) -> Result<VarEstimate, SolveError> {
    if set.episodes == 0 {
        return Err(SolveError::Estimation("zero episodes requested".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SolveError::Estimation(format!(
            "alpha {alpha} outside (0, 1]"
        )));
    }
    let plan = Plan::CvarWc { cvar, alpha };
    let records = run_episodes(
        mdp,
        &plan,
        set.episodes,
        RandomSource::new(set.seed),
        exec,
        execution,
    )
    .map_err(|e| SolveError::Estimation(e.to_string()))?;
    let mut costs: Vec<f64> = records.iter().map(|r| r.total_cost).collect();
    costs.sort_by(f64::total_cmp);
    let value = sample_quantile(&costs, alpha, set.convention, set.margin);
    Ok(VarEstimate {
        value,
        alpha,
        episodes: set.episodes,
        convention: set.convention,
        margin: set.margin,
    })
}

/// How the accumulated-cost coordinate is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostAxis {
    /// Evenly spaced points from 0 to VaR.
    Uniform { points: usize },
    /// Every integer up to VaR, plus VaR itself; exact for integer costs.
    Integer,
}

impl Default for CostAxis {
    fn default() -> Self {
        CostAxis::Uniform { points: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostGrid {
    points: Vec<f64>,
}

impl CostGrid {
    pub fn build(axis: CostAxis, var: f64) -> Result<Self, SolveError> {
        if !(var >= 0.0 && var.is_finite()) {
            return Err(SolveError::BadGrid(format!(
                "VaR {var} must be finite and >= 0"
            )));
        }
        let mut points = match axis {
            CostAxis::Uniform { points } => {
                if points < 3 {
                    return Err(SolveError::BadGrid(format!(
                        "need at least 3 cost points, got {points}"
                    )));
                }
                let mut p: Vec<f64> = (0..points)
                    .map(|i| var * i as f64 / (points - 1) as f64)
                    .collect();
                p[points - 1] = var;
                p
            }
            CostAxis::Integer => {
                let top = var.floor() as usize;
                let mut p: Vec<f64> = (0..=top).map(|i| i as f64).collect();
                if var > top as f64 {
                    p.push(var);
                }
                p
            }
        };
        points.dedup();
        Ok(CostGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Value table of the augmented model.
///
/// Each state keeps the global grid points up to its feasibility bound
/// `VaR − v_worst(s)`, plus the bound itself as a final knot, so lookups
/// after an enabled action always land inside the table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LexSolution {
    pub var: VarEstimate,
    pub grid: CostGrid,
    /// `offsets[s]..offsets[s + 1]` indexes the knots of state `s`.
    pub offsets: Vec<usize>,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub actions: Vec<ActionId>,
    pub v_worst: Vec<f64>,
    pub q_worst: Vec<f64>,
    pub worst_policy: Vec<ActionId>,
    pub goals: Vec<bool>,
    pub sweeps: usize,
}

impl LexSolution {
    pub fn var_value(&self) -> f64 {
        self.var.value
    }

    /// True when (s, c) has an action whose worst case stays within VaR.
    pub fn is_feasible(&self, s: StateId, c: f64) -> bool {
        self.goals[s.0] || c + self.v_worst[s.0] <= self.var.value + BUDGET_TOL
    }

    /// Fails when the initial cell (s0, 0) is infeasible, i.e. VaR lies
    /// below the minimum worst-case cost of the whole problem. The switch
    /// policy is still usable from later feasible cells.
    pub fn require_feasible_root(&self, mdp: &Mdp) -> Result<(), SolveError> {
        let s0 = mdp.initial();
        if self.is_feasible(s0, 0.0) {
            Ok(())
        } else {
            Err(SolveError::InfeasibleRoot {
                var: self.var.value,
                v_worst: self.v_worst[s0.0],
            })
        }
    }

    pub fn state_knots(&self, s: StateId) -> &[f64] {
        &self.knots[self.offsets[s.0]..self.offsets[s.0 + 1]]
    }

    pub fn state_values(&self, s: StateId) -> &[f64] {
        &self.values[self.offsets[s.0]..self.offsets[s.0 + 1]]
    }

    /// Interpolated `V'(s, c)`; `+∞` beyond the state's feasibility bound.
    pub fn value(&self, s: StateId, c: f64) -> f64 {
        if self.goals[s.0] {
            return 0.0;
        }
        interp(self.state_knots(s), self.state_values(s), c)
    }
}

fn interp(knots: &[f64], values: &[f64], c: f64) -> f64 {
    let Some(&last) = knots.last() else {
        return f64::INFINITY;
    };
    if c > last + 1e-7 {
        return f64::INFINITY;
    }
    let c = c.clamp(0.0, last);
    let k = knots.partition_point(|&x| x <= c);
    if k == 0 {
        return values[0];
    }
    if k == knots.len() || knots[k - 1] == c {
        return values[k - 1];
    }
    let w = (c - knots[k - 1]) / (knots[k] - knots[k - 1]);
    values[k - 1] * (1.0 - w) + values[k] * w
}

/// Actions at (s, c) whose worst case keeps the total within `var`.
pub fn enabled_actions(mdp: &Mdp, s: StateId, c: f64, q_worst: &[f64], var: f64) -> Vec<ActionId> {
    mdp.actions(s)
        .filter(|a| c + q_worst[a.0] <= var + BUDGET_TOL)
        .collect()
}

fn best_enabled(mdp: &Mdp, sol: &LexSolution, s: StateId, c: f64) -> Option<(ActionId, f64)> {
    let var = sol.var.value;
    let mut best: Option<(ActionId, f64)> = None;
    for a in mdp.actions(s) {
        if c + sol.q_worst[a.0] > var + BUDGET_TOL {
            continue;
        }
        let c2 = c + mdp.cost(a);
        let q = mdp.cost(a)
            + mdp
                .successors(a)
                .iter()
                .map(|x| x.prob * sol.value(x.state, c2))
                .sum::<f64>();
        match best {
            Some((_, b)) if !(q < b - TIE_EPS) => {}
            _ => best = Some((a, q)),
        }
    }
    best
}

/// Expected-cost value iteration on the augmented model over every state
/// and every cost in `[0, VaR]`. Infeasible cells (cost beyond
/// `VaR − v_worst(s)`) carry no knots and read as `+∞`.
pub fn solve_constrained_ev(
    mdp: &Mdp,
    worst: &WorstCaseSolution,
    var: &VarEstimate,
    axis: CostAxis,
    set: &SweepSettings,
) -> Result<LexSolution, SolveError> {
    mdp.require_actions()?;
    let v = var.value;
    let grid = CostGrid::build(axis, v)?;
    let n = mdp.num_states();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut knots = Vec::new();
    offsets.push(0);
    for s in mdp.states() {
        if !mdp.is_goal(s) {
            let bound = v - worst.v_worst[s.0];
            if bound >= -BUDGET_TOL {
                let bound = bound.max(0.0);
                let start = knots.len();
                knots.extend(
                    grid.points()
                        .iter()
                        .copied()
                        .filter(|&p| p <= bound + BUDGET_TOL),
                );
                if knots.len() == start || bound - knots[knots.len() - 1] > BUDGET_TOL {
                    knots.push(bound);
                }
            }
        }
        offsets.push(knots.len());
    }
    let mut sol = LexSolution {
        var: var.clone(),
        grid,
        values: Vec::new(),
        actions: Vec::new(),
        v_worst: worst.v_worst.clone(),
        q_worst: worst.q_worst.clone(),
        worst_policy: worst.policy.clone(),
        goals: mdp.states().map(|s| mdp.is_goal(s)).collect(),
        sweeps: 0,
        offsets,
        knots,
    };
    // the worst-case value bounds V' from above at every feasible cell
    sol.values = mdp
        .states()
        .flat_map(|s| std::iter::repeat_n(worst.v_worst[s.0], sol.state_knots(s).len()))
        .collect();
    sol.actions = mdp
        .states()
        .flat_map(|s| std::iter::repeat_n(worst.policy[s.0], sol.state_knots(s).len()))
        .collect();
    let mut residual = f64::INFINITY;
    for sweep in 1..=set.max_sweeps {
        let cur = &sol;
        let rows = map_range(set.exec, n, |i| {
            let s = StateId(i);
            cur.state_knots(s)
                .iter()
                .map(|&c| {
                    best_enabled(mdp, cur, s, c).unwrap_or((cur.worst_policy[i], f64::INFINITY))
                })
                .collect::<Vec<_>>()
        });
        let mut values = Vec::with_capacity(sol.values.len());
        let mut actions = Vec::with_capacity(sol.values.len());
        for row in rows {
            for (a, q) in row {
                actions.push(a);
                values.push(q);
            }
        }
        residual = sup_diff(&values, &sol.values);
        sol.values = values;
        sol.actions = actions;
        if residual < set.epsilon {
            sol.sweeps = sweep;
            return Ok(sol);
        }
    }
    Err(SolveError::NotConverged {
        sweeps: set.max_sweeps,
        residual,
    })
}

/// Greedy action of the switch policy at the exact accumulated cost `c`.
pub fn lex_policy_action(
    mdp: &Mdp,
    sol: &LexSolution,
    s: StateId,
    c: f64,
) -> Result<ActionId, SolveError> {
    let var = sol.var.value;
    if c > var + BUDGET_TOL {
        return Err(SolveError::BudgetExceeded { cost: c, var });
    }
    if mdp.is_goal(s) {
        return Ok(mdp.first_action(s).expect("goals carry a stay action"));
    }
    Ok(best_enabled(mdp, sol, s, c)
        .map(|(a, _)| a)
        .unwrap_or(sol.worst_policy[s.0]))
}

/// Result of an exhaustive walk over the augmented cells reachable from
/// (s0, 0) under the switch policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachAudit {
    pub cells: usize,
    pub truncated: bool,
}

/// Visits every (s, c) reachable under the switch policy from (`start`, `c0`)
/// and fails on the first non-goal cell without an enabled action.
pub fn audit_reachable(
    mdp: &Mdp,
    sol: &LexSolution,
    start: StateId,
    c0: f64,
    limit: usize,
) -> Result<ReachAudit, SolveError> {
    let mut seen: HashSet<(usize, u64)> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert((start.0, c0.to_bits()));
    queue.push_back((start, c0));
    while let Some((s, c)) = queue.pop_front() {
        if mdp.is_goal(s) {
            continue;
        }
        if enabled_actions(mdp, s, c, &sol.q_worst, sol.var.value).is_empty() {
            return Err(SolveError::DeadCell {
                state: mdp.state_name(s).to_string(),
                cost: c,
            });
        }
        let a = lex_policy_action(mdp, sol, s, c)?;
        let c2 = c + mdp.cost(a);
        for x in mdp.successors(a) {
            if x.prob <= 0.0 {
                continue;
            }
            if seen.insert((x.state.0, c2.to_bits())) {
                if seen.len() > limit {
                    return Ok(ReachAudit {
                        cells: seen.len(),
                        truncated: true,
                    });
                }
                queue.push_back((x.state, c2));
            }
        }
    }
    Ok(ReachAudit {
        cells: seen.len(),
        truncated: false,
    })
}
