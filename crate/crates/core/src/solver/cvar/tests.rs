use super::*;
use crate::domains::{build_betting_game, build_desk_instance, BettingParams};
use crate::mdp::{
    cvar_of_distribution, enumerate_outcome_distribution, StationaryPolicy, VarConvention,
};
use crate::par::Execution;
use crate::solver::{solve_expected_value, solve_worst_case, SweepSettings};

fn solve(mdp: &Mdp, exec: Execution) -> CvarSolution {
    let set = SweepSettings {
        exec,
        ..Default::default()
    };
    let worst = solve_worst_case(mdp, &set).unwrap();
    let grid = build_ygrid(30, 1e-3).unwrap();
    cvar_value_iteration(mdp, &grid, &worst, &set).unwrap()
}

fn id(mdp: &Mdp, name: &str) -> StateId {
    mdp.state_by_name(name).unwrap()
}

/// Best static CVaR over the three stationary behaviours at `s1`.
fn desk_oracle(alpha: f64) -> f64 {
    let mdp = build_desk_instance();
    ["e", "d", "c"]
        .iter()
        .map(|a| {
            let pol = StationaryPolicy::from_labels(&mdp, &[("s1", a)]).unwrap();
            let dist = enumerate_outcome_distribution(&mdp, &pol, 10, 1000).unwrap();
            cvar_of_distribution(&dist, alpha, VarConvention::Lower)
                .unwrap()
                .1
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn desk_values_match_policy_enumeration() {
    let mdp = build_desk_instance();
    let sol = solve(&mdp, Execution::Sequential);
    for alpha in [0.05, 0.1, 0.3, 1.0] {
        let v = query_value(&sol, mdp.initial(), alpha).unwrap();
        let want = desk_oracle(alpha);
        assert!((v - want).abs() < 0.1, "alpha {alpha}: {v} vs {want}");
    }
    assert!((query_value(&sol, mdp.initial(), 0.1).unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn desk_adversary_reply_at_root() {
    let mdp = build_desk_instance();
    let sol = solve(&mdp, Execution::Sequential);
    let s0 = mdp.initial();
    let a = mdp.first_action(s0).unwrap();
    for method in [InnerMethod::Greedy, InnerMethod::Simplex] {
        let r = inner_adversary_max(&mdp, &sol, s0, 0.1, a, method).unwrap();
        assert!((r.value - 10.0).abs() < 1e-9);
        assert!((r.xi_of(id(&mdp, "s2")) - 1.0 / 0.15).abs() < 1e-9);
        assert!(r.xi_of(id(&mdp, "s1")).abs() < 1e-9);
    }
}

#[test]
fn desk_greedy_actions() {
    let mdp = build_desk_instance();
    let sol = solve(&mdp, Execution::Sequential);
    let s1 = id(&mdp, "s1");
    let label = |y: f64| {
        let a = cvar_greedy_action(&mdp, &sol, s1, y).unwrap();
        mdp.action_label(a).to_string()
    };
    assert_eq!(label(0.0), "e");
    assert_eq!(label(0.05), "e");
    assert_eq!(label(0.3), "d");
    assert_eq!(label(1.0), "c");
}

#[test]
fn boundary_rows_and_shape() {
    let mdp = build_betting_game(&BettingParams::default()).unwrap();
    let set = SweepSettings::default();
    let worst = solve_worst_case(&mdp, &set).unwrap();
    let ev = solve_expected_value(&mdp, &set).unwrap();
    let sol = solve(&mdp, Execution::Parallel);
    let pts = sol.grid.points();
    for s in mdp.states() {
        let row = sol.row(s);
        assert_eq!(row[0], worst.v_worst[s.0]);
        assert!((row[pts.len() - 1] - ev.values[s.0]).abs() < 1e-3);
        for w in row.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9,
                "V not non-increasing in y at {}",
                mdp.state_name(s)
            );
        }
        let slopes: Vec<f64> = (0..pts.len() - 1).map(|k| sol.slope(s, k)).collect();
        for w in slopes.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-6,
                "y·V not concave at {}",
                mdp.state_name(s)
            );
        }
    }
}

#[test]
fn simplex_matches_greedy_on_betting() {
    let mdp = build_betting_game(&BettingParams::default()).unwrap();
    let sol = solve(&mdp, Execution::Parallel);
    let ys = [0.001, 0.02, 0.05, 0.2, 0.5, 0.77, 1.0];
    for s in mdp.states().step_by(7) {
        for a in mdp.actions(s) {
            for &y in &ys {
                let g = inner_adversary_max(&mdp, &sol, s, y, a, InnerMethod::Greedy).unwrap();
                let p = inner_adversary_max(&mdp, &sol, s, y, a, InnerMethod::Simplex).unwrap();
                assert!((g.value - p.value).abs() < 1e-9, "{} {}", g.value, p.value);
                let mass: f64 = g.xi.iter().map(|(t, x)| mdp.prob(a, *t) * x).sum();
                assert!((mass - 1.0).abs() < 1e-9);
                assert!(g.xi.iter().all(|(_, x)| *x >= 0.0 && *x <= 1.0 / y + 1e-9));
            }
        }
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let mdp = build_betting_game(&BettingParams::default()).unwrap();
    let a = solve(&mdp, Execution::Sequential);
    let b = solve(&mdp, Execution::Parallel);
    assert_eq!(a.values, b.values);
    assert_eq!(a.actions, b.actions);
}

#[test]
fn query_edges() {
    let mdp = build_desk_instance();
    let sol = solve(&mdp, Execution::Sequential);
    let s0 = mdp.initial();
    assert_eq!(query_value(&sol, s0, 0.0).unwrap(), 10.0);
    assert!(matches!(
        query_value(&sol, s0, 1.5),
        Err(SolveError::BudgetOutOfRange(_))
    ));
    assert!(query_value(&sol, s0, -0.1).is_err());
    assert!(query_value(&sol, s0, f64::NAN).is_err());
    let k = 12;
    let y = sol.grid.points()[k];
    assert_eq!(query_value(&sol, s0, y).unwrap(), sol.value_at(s0, k));
}
