use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use super::model::{Mdp, StateId};

/// Absolute tolerance on successor-probability row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    RowSum {
        state: String,
        action: String,
        sum: f64,
    },
    ProbabilityRange {
        state: String,
        action: String,
        prob: f64,
    },
    NegativeCost {
        state: String,
        action: String,
        cost: f64,
    },
    EmptyRow {
        state: String,
        action: String,
    },
    NoActions {
        state: String,
    },
    GoalNotAbsorbing {
        state: String,
        action: String,
    },
    GoalCost {
        state: String,
        action: String,
        cost: f64,
    },
    GoalUnreachable {
        state: String,
    },
    NoGoals,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { state, action, sum } => {
                write!(f, "row sum: ({state}, {action}) probabilities sum to {sum}")
            }
            Violation::ProbabilityRange {
                state,
                action,
                prob,
            } => {
                write!(f, "probability range: ({state}, {action}) has p = {prob}")
            }
            Violation::NegativeCost {
                state,
                action,
                cost,
            } => {
                write!(f, "negative cost: ({state}, {action}) costs {cost}")
            }
            Violation::EmptyRow { state, action } => {
                write!(f, "empty row: ({state}, {action}) has no successors")
            }
            Violation::NoActions { state } => write!(f, "no actions: non-goal state {state}"),
            Violation::GoalNotAbsorbing { state, action } => {
                write!(f, "goal not absorbing: ({state}, {action}) leaves the goal")
            }
            Violation::GoalCost {
                state,
                action,
                cost,
            } => {
                write!(f, "goal cost: ({state}, {action}) costs {cost}")
            }
            Violation::GoalUnreachable { state } => {
                write!(f, "goal unreachable: no path from {state} to a goal")
            }
            Violation::NoGoals => write!(f, "no goals: the model has no goal state"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the SSP invariants of `mdp` and reports every breach.
///
/// Besides the per-row checks, flags non-goal states from which no goal is
/// reachable in the transition graph, a necessary condition for the
/// existence of a proper policy.
pub fn validate_mdp(mdp: &Mdp) -> ValidationReport {
    let mut out = Vec::new();
    for s in mdp.states() {
        let sn = || mdp.state_name(s).to_string();
        if mdp.num_actions_at(s) == 0 && !mdp.is_goal(s) {
            out.push(Violation::NoActions { state: sn() });
        }
        for a in mdp.actions(s) {
            let an = || mdp.action_label(a).to_string();
            let cost = mdp.cost(a);
            if !(cost >= 0.0) || !cost.is_finite() {
                out.push(Violation::NegativeCost {
                    state: sn(),
                    action: an(),
                    cost,
                });
            }
            let succs = mdp.successors(a);
            if succs.is_empty() {
                out.push(Violation::EmptyRow {
                    state: sn(),
                    action: an(),
                });
                continue;
            }
            let mut sum = 0.0;
            for x in succs {
                if !(x.prob > 0.0 && x.prob <= 1.0) {
                    out.push(Violation::ProbabilityRange {
                        state: sn(),
                        action: an(),
                        prob: x.prob,
                    });
                }
                sum += x.prob;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                out.push(Violation::RowSum {
                    state: sn(),
                    action: an(),
                    sum,
                });
            }
            if mdp.is_goal(s) {
                if succs.iter().any(|x| x.state != s) {
                    out.push(Violation::GoalNotAbsorbing {
                        state: sn(),
                        action: an(),
                    });
                }
                if cost != 0.0 {
                    out.push(Violation::GoalCost {
                        state: sn(),
                        action: an(),
                        cost,
                    });
                }
            }
        }
    }
    if mdp.goals().next().is_none() {
        out.push(Violation::NoGoals);
    } else {
        for s in goal_unreachable(mdp) {
            out.push(Violation::GoalUnreachable {
                state: mdp.state_name(s).to_string(),
            });
        }
    }
    ValidationReport { violations: out }
}

/// Non-goal states with no graph path to any goal.
fn goal_unreachable(mdp: &Mdp) -> Vec<StateId> {
    let n = mdp.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in mdp.states() {
        for a in mdp.actions(s) {
            for x in mdp.successors(a) {
                if x.prob > 0.0 {
                    preds[x.state.0].push(s.0);
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for g in mdp.goals() {
        seen[g.0] = true;
        queue.push_back(g.0);
    }
    while let Some(t) = queue.pop_front() {
        for &p in &preds[t] {
            if !seen[p] {
                seen[p] = true;
                queue.push_back(p);
            }
        }
    }
    (0..n).filter(|&i| !seen[i]).map(StateId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn two_state(p: f64) -> Mdp {
        let mut b = MdpBuilder::new();
        let s = b.add_state("s").unwrap();
        let g = b.add_state("g").unwrap();
        b.add_action(s, "x", 1.0, vec![(g, p), (s, 0.5)]).unwrap();
        b.mark_goal(g).unwrap();
        b.set_initial(s).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn row_sum_violation() {
        let r = validate_mdp(&two_state(0.49));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RowSum { .. })));
        assert!(r.to_string().contains("row sum"));
        assert!(validate_mdp(&two_state(0.5)).is_valid());
    }

    #[test]
    fn unreachable_goal_flagged() {
        let mut b = MdpBuilder::new();
        let s = b.add_state("s0").unwrap();
        let t = b.add_state("trap").unwrap();
        let g = b.add_state("g").unwrap();
        b.add_action(s, "x", 1.0, vec![(t, 1.0)]).unwrap();
        b.add_action(t, "x", 1.0, vec![(t, 1.0)]).unwrap();
        b.mark_goal(g).unwrap();
        b.set_initial(s).unwrap();
        let r = validate_mdp(&b.build().unwrap());
        let flagged: Vec<_> = r
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::GoalUnreachable { state } => Some(state.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(flagged, vec!["s0", "trap"]);
    }

    #[test]
    fn negative_probability_and_goal_rules() {
        let mut b = MdpBuilder::new();
        let s = b.add_state("s").unwrap();
        let g = b.add_state("g").unwrap();
        let h = b.add_state("h").unwrap();
        b.add_action(s, "x", -1.0, vec![(g, 1.1), (h, -0.1)])
            .unwrap();
        b.add_action(g, "leak", 2.0, vec![(s, 1.0)]).unwrap();
        b.mark_goal(g).unwrap();
        b.set_initial(s).unwrap();
        let r = validate_mdp(&b.build().unwrap());
        let kinds: Vec<_> = r.violations.iter().map(|v| v.to_string()).collect();
        assert!(kinds.iter().any(|k| k.starts_with("negative cost")));
        assert_eq!(
            kinds
                .iter()
                .filter(|k| k.starts_with("probability range"))
                .count(),
            2
        );
        assert!(kinds.iter().any(|k| k.starts_with("goal not absorbing")));
        assert!(kinds.iter().any(|k| k.starts_with("goal cost")));
        assert!(kinds.iter().any(|k| k.starts_with("no actions")));
    }
}
