use lexcvar::domains::{build_desk_instance, mdp_to_json, parse_mdp};
use lexcvar::exec::{evaluate, run_episodes, EvalSettings, ExecSettings, Plan};
use lexcvar::mdp::{validate_mdp, RandomSource};
use lexcvar::solver::{
    build_ygrid, cvar_value_iteration, estimate_var, query_value, solve_constrained_ev,
    solve_expected_value, solve_worst_case, CostAxis, SweepSettings, VarSettings,
};
use lexcvar::{Execution, Mdp, MdpBuilder};
use proptest::prelude::*;

/// Layered random SSP: every action moves one layer down, the last layer
/// feeds the goal, so every policy is proper.
fn layered(spec: &[Vec<Vec<(u8, Vec<(usize, u8)>)>>]) -> Mdp {
    let mut b = MdpBuilder::new();
    let goal = b.add_state("goal").unwrap();
    b.mark_goal(goal).unwrap();
    let ids: Vec<Vec<_>> = spec
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            (0..layer.len())
                .map(|i| b.add_state(format!("l{l}_{i}")).unwrap())
                .collect()
        })
        .collect();
    for (l, layer) in spec.iter().enumerate() {
        for (i, actions) in layer.iter().enumerate() {
            for (k, (cost, succ)) in actions.iter().enumerate() {
                let total: f64 = succ.iter().map(|(_, w)| f64::from(*w)).sum();
                let row: Vec<_> = succ
                    .iter()
                    .map(|&(j, w)| {
                        let to = match ids.get(l + 1) {
                            Some(next) => next[j % next.len()],
                            None => goal,
                        };
                        (to, f64::from(w) / total)
                    })
                    .collect();
                b.add_action(ids[l][i], format!("a{k}"), f64::from(*cost), row)
                    .unwrap();
            }
        }
    }
    b.set_initial(ids[0][0]).unwrap();
    b.build().unwrap()
}

fn layered_spec() -> impl Strategy<Value = Vec<Vec<Vec<(u8, Vec<(usize, u8)>)>>>> {
    let succ = prop::collection::vec((0usize..3, 1u8..5), 1..4);
    let action = (0u8..12, succ);
    let state = prop::collection::vec(action, 1..4);
    let layer = prop::collection::vec(state, 1..4);
    prop::collection::vec(layer, 2..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_chain_invariants(spec in layered_spec(), alpha in 0.05f64..0.6) {
        let mdp = layered(&spec);
        prop_assert!(validate_mdp(&mdp).is_valid());
        let set = SweepSettings::default();
        let ev = solve_expected_value(&mdp, &set).unwrap();
        let worst = solve_worst_case(&mdp, &set).unwrap();
        let cvar = cvar_value_iteration(&mdp, &build_ygrid(20, 1e-3).unwrap(), &worst, &set).unwrap();
        let last = cvar.grid.len() - 1;
        for s in mdp.states() {
            prop_assert_eq!(cvar.value_at(s, 0), worst.v_worst[s.0]);
            prop_assert!((cvar.value_at(s, last) - ev.value(s)).abs() <= 1e-6);
            for k in 0..last {
                prop_assert!(cvar.value_at(s, k + 1) <= cvar.value_at(s, k) + 1e-9);
            }
        }
        let root = query_value(&cvar, mdp.initial(), alpha).unwrap();
        prop_assert!(root >= ev.value(mdp.initial()) - 1e-9);
        prop_assert!(root <= worst.v_worst[mdp.initial().0] + 1e-9);

        let var = estimate_var(
            &mdp,
            &cvar,
            alpha,
            &VarSettings { episodes: 2000, ..VarSettings::default() },
            &ExecSettings::default(),
            Execution::Parallel,
        )
        .unwrap();
        let lex = solve_constrained_ev(&mdp, &worst, &var, CostAxis::Integer, &set).unwrap();
        if lex.require_feasible_root(&mdp).is_ok() {
            let v = lex.value(mdp.initial(), 0.0);
            prop_assert!(v >= ev.value(mdp.initial()) - 1e-9);
            prop_assert!(v <= worst.v_worst[mdp.initial().0] + 1e-9);
        }
        let plan = Plan::CvarEv { cvar: &cvar, lex: &lex, alpha };
        let par = run_episodes(&mdp, &plan, 500, RandomSource::new(3), &ExecSettings::default(), Execution::Parallel).unwrap();
        let seq = run_episodes(&mdp, &plan, 500, RandomSource::new(3), &ExecSettings::default(), Execution::Sequential).unwrap();
        prop_assert_eq!(par, seq);
    }
}

#[test]
fn desk_through_document_matches_builder() {
    let desk = build_desk_instance();
    let loaded = parse_mdp(&mdp_to_json(&desk)).unwrap();
    assert_eq!(loaded, desk);

    let set = SweepSettings::default();
    let worst = solve_worst_case(&loaded, &set).unwrap();
    let cvar =
        cvar_value_iteration(&loaded, &build_ygrid(30, 1e-3).unwrap(), &worst, &set).unwrap();
    assert!((query_value(&cvar, loaded.initial(), 0.1).unwrap() - 10.0).abs() < 1e-9);
    let settings = EvalSettings {
        episodes: 4000,
        alphas: vec![0.1],
        ..EvalSettings::default()
    };
    let (s, _) = evaluate(
        &loaded,
        &Plan::CvarWc {
            cvar: &cvar,
            alpha: 0.1,
        },
        &settings,
    )
    .unwrap();
    assert_eq!(s.tail(0.1).unwrap().cvar, 10.0);
}
