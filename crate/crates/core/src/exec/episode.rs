use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExecError;
use crate::mdp::{Mdp, RandomSource, StateId};
use crate::par::{try_map_range, Execution};
use crate::solver::cvar::cvar_greedy_response;
use crate::solver::lex::BUDGET_TOL;
use crate::solver::{lex_policy_action, CvarSolution, LexSolution, ValueTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecSettings {
    /// Density ratios below this count as zero.
    pub xi_tol: f64,
    pub step_limit: usize,
}

impl Default for ExecSettings {
    fn default() -> Self {
        ExecSettings {
            xi_tol: 1e-6,
            step_limit: 1_000_000,
        }
    }
}

/// A strategy together with the solutions it executes.
#[derive(Clone, Copy, Debug)]
pub enum Plan<'a> {
    /// Expected-cost greedy policy.
    Ev(&'a ValueTable),
    /// CVaR game policy with budget tracking, never switching.
    CvarWc { cvar: &'a CvarSolution, alpha: f64 },
    /// CVaR game policy that switches to the VaR-constrained expected-cost
    /// policy once the adversary zeroes the current history.
    CvarEv {
        cvar: &'a CvarSolution,
        lex: &'a LexSolution,
        alpha: f64,
    },
}

impl Plan<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Plan::Ev(_) => "EV",
            Plan::CvarWc { .. } => "CVaR-WC",
            Plan::CvarEv { .. } => "CVaR-EV",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Plan::Ev(_) => None,
            Plan::CvarWc { alpha, .. } | Plan::CvarEv { alpha, .. } => Some(alpha),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub total_cost: f64,
    pub switched: bool,
    pub switch_step: Option<usize>,
    /// State and accumulated cost where the switch happened.
    pub switch_cell: Option<(StateId, f64)>,
    pub final_y: f64,
    pub steps: usize,
    /// Largest residual budget seen along the episode.
    pub max_y: f64,
}

/// Runs one episode from the initial state. `episode` only labels errors.
pub fn execute_episode<R: Rng + ?Sized>(
    mdp: &Mdp,
    plan: &Plan,
    settings: &ExecSettings,
    episode: u64,
    rng: &mut R,
) -> Result<EpisodeRecord, ExecError> {
    let mut s = mdp.initial();
    let mut cost = 0.0;
    let mut steps = 0;
    let mut y = plan.alpha().unwrap_or(1.0);
    if !(y > 0.0 && y <= 1.0) {
        return Err(ExecError::BadAlpha(y));
    }
    let mut max_y = y;
    let mut switch_step = None;
    let mut switch_cell = None;
    while !mdp.is_goal(s) {
        if steps >= settings.step_limit {
            return Err(ExecError::StepLimit {
                episode,
                limit: settings.step_limit,
            });
        }
        let (a, xi) = match *plan {
            Plan::Ev(v) => (v.action(s), None),
            Plan::CvarEv { lex, .. } if switch_step.is_some() => {
                (lex_policy_action(mdp, lex, s, cost)?, None)
            }
            Plan::CvarWc { cvar, .. } | Plan::CvarEv { cvar, .. } => {
                let (a, reply) = cvar_greedy_response(mdp, cvar, s, y)?;
                (a, Some(reply))
            }
        };
        let next = mdp.sample_transition(s, a, rng)?;
        cost += mdp.cost(a);
        steps += 1;
        let mut zeroed = false;
        if let Some(reply) = xi {
            // at y = 0 there is no reply and the budget stays exhausted
            let ratio = reply.as_ref().map_or(0.0, |r| r.xi_of(next));
            zeroed = ratio < settings.xi_tol;
            y = if zeroed {
                0.0
            } else {
                (y * ratio).clamp(0.0, 1.0)
            };
            max_y = max_y.max(y);
        }
        s = next;
        if mdp.is_goal(s) {
            break;
        }
        if let Plan::CvarEv { lex, .. } = plan {
            // switch only where the VaR is still attainable in the worst case
            if switch_step.is_none()
                && zeroed
                && cost + lex.v_worst[s.0] <= lex.var_value() + BUDGET_TOL
            {
                switch_step = Some(steps);
                switch_cell = Some((s, cost));
            }
        }
    }
    if let (Plan::CvarEv { lex, .. }, Some(_)) = (plan, switch_step) {
        if cost > lex.var_value() + BUDGET_TOL {
            return Err(ExecError::SwitchViolation {
                episode,
                cost,
                var: lex.var_value(),
            });
        }
    }
    Ok(EpisodeRecord {
        total_cost: cost,
        switched: switch_step.is_some(),
        switch_step,
        switch_cell,
        final_y: y,
        steps,
        max_y,
    })
}

/// Runs `n` episodes, episode `i` drawing from substream `i` of `source`.
pub fn run_episodes(
    mdp: &Mdp,
    plan: &Plan,
    n: usize,
    source: RandomSource,
    settings: &ExecSettings,
    exec: Execution,
) -> Result<Vec<EpisodeRecord>, ExecError> {
    try_map_range(exec, n, |i| {
        let mut rng = source.episode(i as u64);
        execute_episode(mdp, plan, settings, i as u64, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::build_desk_instance;
    use crate::mdp::VarConvention;
    use crate::solver::{
        build_ygrid, cvar_value_iteration, solve_constrained_ev, solve_expected_value,
        solve_worst_case, CostAxis, SweepSettings, VarEstimate,
    };

    struct Desk {
        mdp: Mdp,
        ev: ValueTable,
        cvar: CvarSolution,
        lex: LexSolution,
    }

    fn desk() -> Desk {
        let mdp = build_desk_instance();
        let set = SweepSettings::default();
        let worst = solve_worst_case(&mdp, &set).unwrap();
        let ev = solve_expected_value(&mdp, &set).unwrap();
        let cvar =
            cvar_value_iteration(&mdp, &build_ygrid(30, 1e-3).unwrap(), &worst, &set).unwrap();
        let var = VarEstimate {
            value: 10.0,
            alpha: 0.1,
            episodes: 0,
            convention: VarConvention::Lower,
            margin: false,
        };
        let lex = solve_constrained_ev(&mdp, &worst, &var, CostAxis::default(), &set).unwrap();
        Desk { mdp, ev, cvar, lex }
    }

    #[test]
    fn desk_lex_switches_at_s1() {
        let d = desk();
        let plan = Plan::CvarEv {
            cvar: &d.cvar,
            lex: &d.lex,
            alpha: 0.1,
        };
        let recs = run_episodes(
            &d.mdp,
            &plan,
            2000,
            RandomSource::new(7),
            &ExecSettings::default(),
            Execution::Parallel,
        )
        .unwrap();
        for r in &recs {
            if r.switched {
                assert_eq!(r.switch_step, Some(1));
                assert!(r.total_cost == 2.0 || r.total_cost == 9.0);
            } else {
                assert_eq!(r.total_cost, 10.0);
            }
            assert!(r.max_y <= 1.0 + 1e-6);
        }
        assert!(recs.iter().any(|r| r.switched) && recs.iter().any(|r| !r.switched));
    }

    #[test]
    fn desk_wc_takes_e() {
        let d = desk();
        let plan = Plan::CvarWc {
            cvar: &d.cvar,
            alpha: 0.1,
        };
        let recs = run_episodes(
            &d.mdp,
            &plan,
            1000,
            RandomSource::new(3),
            &ExecSettings::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(recs
            .iter()
            .all(|r| r.total_cost == 8.0 || r.total_cost == 10.0));
        assert!(recs.iter().all(|r| !r.switched));
    }

    #[test]
    fn ev_policy_and_step_limit() {
        let d = desk();
        let plan = Plan::Ev(&d.ev);
        let mut rng = RandomSource::new(1).episode(0);
        let r = execute_episode(&d.mdp, &plan, &ExecSettings::default(), 0, &mut rng).unwrap();
        assert!([0.0, 20.0, 10.0].contains(&r.total_cost));
        let tight = ExecSettings {
            step_limit: 1,
            ..Default::default()
        };
        let mut rng = RandomSource::new(1).episode(0);
        assert!(matches!(
            execute_episode(&d.mdp, &plan, &tight, 0, &mut rng),
            Err(ExecError::StepLimit { .. })
        ));
    }

    #[test]
    fn modes_are_bit_identical() {
        let d = desk();
        let plan = Plan::CvarEv {
            cvar: &d.cvar,
            lex: &d.lex,
            alpha: 0.1,
        };
        let run = |e| {
            run_episodes(
                &d.mdp,
                &plan,
                500,
                RandomSource::new(11),
                &ExecSettings::default(),
                e,
            )
            .unwrap()
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
