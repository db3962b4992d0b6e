use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Successor probabilities below this are treated as unsupported by the
/// support-based (worst-case) backups.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Label given to the implicit zero-cost self-loop of goal states.
pub const GOAL_ACTION: &str = "stay";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

/// Global action index. Actions of one state occupy a contiguous range, and
/// their order within that range is the tie-break order used by all solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Successor {
    pub state: StateId,
    pub prob: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("initial state not set")]
    NoInitial,
    #[error("action {action:?} does not belong to state `{state}`")]
    ForeignAction { state: String, action: ActionId },
    #[error(
        "history step {step}: `{from}` -> `{to}` has zero probability under action `{action}`"
    )]
    ImpossibleStep {
        step: usize,
        from: String,
        action: String,
        to: String,
    },
    #[error("state `{0}` has no actions")]
    NoActions(String),
}

#[derive(Clone, Debug)]
struct PendingAction {
    label: String,
    cost: f64,
    succs: Vec<(StateId, f64)>,
}

/// Incremental constructor for [`Mdp`].
///
/// Duplicate successors of one action are merged (probabilities summed).
/// Goal states without actions receive a zero-cost self-loop labelled
/// [`GOAL_ACTION`]. Numeric invariants are not enforced here; run
/// [`crate::mdp::validate_mdp`] on the result.
#[derive(Clone, Debug, Default)]
pub struct MdpBuilder {
    names: Vec<String>,
    index: HashMap<String, StateId>,
    actions: Vec<Vec<PendingAction>>,
    goals: Vec<bool>,
    initial: Option<StateId>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> Result<StateId, ModelError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateState(name));
        }
        Ok(self.insert(name))
    }

    /// Returns the existing state with this name, or adds it.
    pub fn state(&mut self, name: &str) -> StateId {
        match self.index.get(name) {
            Some(&s) => s,
            None => self.insert(name.to_string()),
        }
    }

    fn insert(&mut self, name: String) -> StateId {
        let id = StateId(self.names.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.actions.push(Vec::new());
        self.goals.push(false);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn add_action(
        &mut self,
        state: StateId,
        label: impl Into<String>,
        cost: f64,
        succs: Vec<(StateId, f64)>,
    ) -> Result<(), ModelError> {
        self.check(state)?;
        for &(s, _) in &succs {
            self.check(s)?;
        }
        self.actions[state.0].push(PendingAction {
            label: label.into(),
            cost,
            succs,
        });
        Ok(())
    }

    pub fn mark_goal(&mut self, state: StateId) -> Result<(), ModelError> {
        self.check(state)?;
        self.goals[state.0] = true;
        Ok(())
    }

    pub fn set_initial(&mut self, state: StateId) -> Result<(), ModelError> {
        self.check(state)?;
        self.initial = Some(state);
        Ok(())
    }

    fn check(&self, s: StateId) -> Result<(), ModelError> {
        if s.0 < self.names.len() {
            Ok(())
        } else {
            Err(ModelError::StateOutOfRange(s.0))
        }
    }

    pub fn build(self) -> Result<Mdp, ModelError> {
        let initial = self.initial.ok_or(ModelError::NoInitial)?;
        let n = self.names.len();
        let mut labels: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, u32> = HashMap::new();
        let mut action_start = Vec::with_capacity(n + 1);
        let mut action_label = Vec::new();
        let mut action_cost = Vec::new();
        let mut action_state = Vec::new();
        let mut succ_start = vec![0usize];
        let mut succs = Vec::new();

        for (s, mut acts) in self.actions.into_iter().enumerate() {
            action_start.push(action_label.len());
            if self.goals[s] && acts.is_empty() {
                acts.push(PendingAction {
                    label: GOAL_ACTION.to_string(),
                    cost: 0.0,
                    succs: vec![(StateId(s), 1.0)],
                });
            }
            for act in acts {
                let next = labels.len() as u32;
                let lid = *label_index.entry(act.label.clone()).or_insert_with(|| {
                    labels.push(act.label.clone());
                    next
                });
                action_label.push(lid);
                action_cost.push(act.cost);
                action_state.push(StateId(s));
                // merge duplicates, keeping first-occurrence order
                let mut merged: Vec<Successor> = Vec::with_capacity(act.succs.len());
                for (t, p) in act.succs {
                    match merged.iter_mut().find(|x| x.state == t) {
                        Some(x) => x.prob += p,
                        None => merged.push(Successor { state: t, prob: p }),
                    }
                }
                succs.extend(merged);
                succ_start.push(succs.len());
            }
        }
        action_start.push(action_label.len());

        Ok(Mdp {
            state_names: self.names,
            name_index: self.index,
            action_start,
            labels,
            action_label,
            action_cost,
            action_state,
            succ_start,
            succs,
            goal: self.goals,
            initial,
        })
    }
}

/// A finite SSP MDP in compressed adjacency form.
///
/// Immutable after construction, so it can be shared freely across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    state_names: Vec<String>,
    name_index: HashMap<String, StateId>,
    action_start: Vec<usize>,
    labels: Vec<String>,
    action_label: Vec<u32>,
    action_cost: Vec<f64>,
    action_state: Vec<StateId>,
    succ_start: Vec<usize>,
    succs: Vec<Successor>,
    goal: Vec<bool>,
    initial: StateId,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_label.len()
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = StateId> {
        (0..self.num_states()).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goal[s.0]
    }

    pub fn goals(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| self.is_goal(s))
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.0]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.name_index.get(name).copied()
    }

    /// Actions available in `s`, in tie-break order.
    pub fn actions(&self, s: StateId) -> impl ExactSizeIterator<Item = ActionId> + Clone {
        (self.action_start[s.0]..self.action_start[s.0 + 1]).map(ActionId)
    }

    pub fn num_actions_at(&self, s: StateId) -> usize {
        self.action_start[s.0 + 1] - self.action_start[s.0]
    }

    pub fn action_by_label(&self, s: StateId, label: &str) -> Option<ActionId> {
        self.actions(s).find(|&a| self.action_label(a) == label)
    }

    pub fn action_label(&self, a: ActionId) -> &str {
        &self.labels[self.action_label[a.0] as usize]
    }

    pub fn action_state(&self, a: ActionId) -> StateId {
        self.action_state[a.0]
    }

    pub fn cost(&self, a: ActionId) -> f64 {
        self.action_cost[a.0]
    }

    pub fn successors(&self, a: ActionId) -> &[Successor] {
        &self.succs[self.succ_start[a.0]..self.succ_start[a.0 + 1]]
    }

    /// Transition probability T(s, a, s'), where `s` is the owner of `a`.
    pub fn prob(&self, a: ActionId, to: StateId) -> f64 {
        self.successors(a)
            .iter()
            .find(|x| x.state == to)
            .map_or(0.0, |x| x.prob)
    }

    /// Goal-state self-loop (or the first action of `s`).
    pub fn first_action(&self, s: StateId) -> Option<ActionId> {
        self.actions(s).next()
    }

    /// Fails with [`ModelError::NoActions`] on the first non-goal state
    /// without actions. Solvers call this before sweeping.
    pub fn require_actions(&self) -> Result<(), ModelError> {
        match self.states().find(|&s| self.num_actions_at(s) == 0) {
            Some(s) => Err(ModelError::NoActions(self.state_name(s).to_string())),
            None => Ok(()),
        }
    }

    /// True when every cost is integral. Used to choose an exact cost axis.
    pub fn has_integer_costs(&self) -> bool {
        self.action_cost.iter().all(|c| c.fract() == 0.0)
    }

    /// Draws a successor of (`s`, `a`) from T(s, a, ·).
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        s: StateId,
        a: ActionId,
        rng: &mut R,
    ) -> Result<StateId, ModelError> {
        if a.0 >= self.num_actions() || self.action_state(a) != s {
            return Err(ModelError::ForeignAction {
                state: self.state_name(s).to_string(),
                action: a,
            });
        }
        let succs = self.successors(a);
        if succs.len() == 1 {
            return Ok(succs[0].state);
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for x in succs {
            acc += x.prob;
            if u < acc {
                return Ok(x.state);
            }
        }
        // rounding slack: last supported successor
        Ok(succs
            .iter()
            .rev()
            .find(|x| x.prob > 0.0)
            .unwrap_or(&succs[succs.len() - 1])
            .state)
    }
}

/// A finite history s0 a0 s1 a1 ... s_n.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct History {
    pub steps: Vec<(StateId, ActionId)>,
    pub last: Option<StateId>,
}

impl History {
    pub fn at(state: StateId) -> Self {
        History {
            steps: Vec::new(),
            last: Some(state),
        }
    }

    /// Builds a history from state/action labels, e.g.
    /// `[("s0","a"), ("s1","d"), ("s3","go")]` ending in `"g"`.
    pub fn from_labels(mdp: &Mdp, steps: &[(&str, &str)], last: &str) -> Result<Self, ModelError> {
        let lookup = |n: &str| {
            mdp.state_by_name(n)
                .ok_or_else(|| ModelError::UnknownState(n.to_string()))
        };
        let mut out = Vec::with_capacity(steps.len());
        for &(s, a) in steps {
            let sid = lookup(s)?;
            let aid = mdp
                .action_by_label(sid, a)
                .ok_or_else(|| ModelError::UnknownState(format!("{s}/{a}")))?;
            out.push((sid, aid));
        }
        Ok(History {
            steps: out,
            last: Some(lookup(last)?),
        })
    }
}

/// Sum of per-step costs along `h`; errors if `h` is not a history of `mdp`.
pub fn cumulative_cost(mdp: &Mdp, h: &History) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for (i, &(s, a)) in h.steps.iter().enumerate() {
        if mdp.action_state(a) != s {
            return Err(ModelError::ForeignAction {
                state: mdp.state_name(s).to_string(),
                action: a,
            });
        }
        let next = h.steps.get(i + 1).map(|x| x.0).or(h.last);
        if let Some(t) = next {
            if mdp.prob(a, t) <= 0.0 {
                return Err(ModelError::ImpossibleStep {
                    step: i,
                    from: mdp.state_name(s).to_string(),
                    action: mdp.action_label(a).to_string(),
                    to: mdp.state_name(t).to_string(),
                });
            }
        }
        total += mdp.cost(a);
    }
    Ok(total)
}

/// A stationary deterministic policy: one action per state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationaryPolicy(pub Vec<ActionId>);

impl StationaryPolicy {
    /// First action everywhere, overridden by `(state, action)` labels.
    pub fn from_labels(mdp: &Mdp, overrides: &[(&str, &str)]) -> Result<Self, ModelError> {
        mdp.require_actions()?;
        let mut acts: Vec<ActionId> = mdp
            .states()
            .map(|s| mdp.first_action(s).expect("checked"))
            .collect();
        for &(s, a) in overrides {
            let sid = mdp
                .state_by_name(s)
                .ok_or_else(|| ModelError::UnknownState(s.to_string()))?;
            acts[sid.0] = mdp
                .action_by_label(sid, a)
                .ok_or_else(|| ModelError::UnknownState(format!("{s}/{a}")))?;
        }
        Ok(StationaryPolicy(acts))
    }

    pub fn action(&self, s: StateId) -> ActionId {
        self.0[s.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::build_desk_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builder_merges_duplicate_successors() {
        let mut b = MdpBuilder::new();
        let s = b.add_state("s").unwrap();
        let g = b.add_state("g").unwrap();
        b.add_action(s, "x", 1.0, vec![(g, 0.25), (s, 0.5), (g, 0.25)])
            .unwrap();
        b.mark_goal(g).unwrap();
        b.set_initial(s).unwrap();
        let m = b.build().unwrap();
        let a = m.actions(s).next().unwrap();
        assert_eq!(m.successors(a).len(), 2);
        assert_eq!(m.prob(a, g), 0.5);
        let stay = m.first_action(g).unwrap();
        assert_eq!(m.action_label(stay), GOAL_ACTION);
        assert_eq!(
            m.successors(stay),
            &[Successor {
                state: g,
                prob: 1.0
            }]
        );
    }

    #[test]
    fn duplicate_state_rejected() {
        let mut b = MdpBuilder::new();
        b.add_state("x").unwrap();
        assert!(matches!(
            b.add_state("x"),
            Err(ModelError::DuplicateState(_))
        ));
        assert!(matches!(b.clone().build(), Err(ModelError::NoInitial)));
    }

    #[test]
    fn cumulative_cost_desk_paths() {
        let m = build_desk_instance();
        let h = History::from_labels(&m, &[("s0", "a"), ("s2", "f")], "g").unwrap();
        assert_eq!(cumulative_cost(&m, &h).unwrap(), 10.0);
        let h = History::from_labels(&m, &[("s0", "a"), ("s1", "d"), ("s3", "go")], "g").unwrap();
        assert_eq!(cumulative_cost(&m, &h).unwrap(), 9.0);
        let g = m.state_by_name("g").unwrap();
        assert_eq!(cumulative_cost(&m, &History::at(g)).unwrap(), 0.0);
    }

    #[test]
    fn cumulative_cost_rejects_impossible_step() {
        let m = build_desk_instance();
        // f leads to g, never to s3
        let h = History::from_labels(&m, &[("s0", "a"), ("s2", "f")], "s3").unwrap();
        assert!(matches!(
            cumulative_cost(&m, &h),
            Err(ModelError::ImpossibleStep { step: 1, .. })
        ));
    }

    #[test]
    fn sampling_frequencies() {
        let m = build_desk_instance();
        let s0 = m.initial();
        let a = m.first_action(s0).unwrap();
        let s2 = m.state_by_name("s2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| m.sample_transition(s0, a, &mut rng).unwrap() == s2)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.15).abs() < 0.01, "{freq}");

        // deterministic rows and goal self-loops
        let f = m.first_action(s2).unwrap();
        let g = m.state_by_name("g").unwrap();
        assert_eq!(m.sample_transition(s2, f, &mut rng).unwrap(), g);
        let stay = m.first_action(g).unwrap();
        assert_eq!(m.sample_transition(g, stay, &mut rng).unwrap(), g);
        // foreign action
        assert!(m.sample_transition(g, f, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = build_desk_instance();
        let s0 = m.initial();
        let a = m.first_action(s0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| m.sample_transition(s0, a, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
    }
}
