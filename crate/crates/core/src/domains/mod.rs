//! Benchmark models and the MDP document format.

mod betting;
mod desk;
mod dst;
mod inventory;
mod io;

use thiserror::Error;

pub use betting::{betting_state_name, build_betting_game, BettingParams};
pub use desk::build_desk_instance;
pub use dst::{
    build_deep_sea_treasure, dst_state_name, Cell, DstConfig, DstLayout, DEFAULT_LAYOUT, DIRECTIONS,
};
pub use inventory::{build_inventory_control, InventoryParams};
pub use io::{
    load_mdp_file, mdp_to_json, parse_mdp, save_mdp_file, MdpDocument, SuccessorDoc, TransitionDoc,
};

use crate::mdp::{ModelError, ValidationReport};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("model violates SSP invariants:\n{0}")]
    Invalid(ValidationReport),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{
        cumulative_cost, cvar_of_distribution, enumerate_outcome_distribution, validate_mdp,
        History, Mdp, StationaryPolicy, VarConvention, ENUMERATION_LIMIT,
    };
    use approx::assert_abs_diff_eq;

    fn assert_valid(m: &Mdp) {
        let r = validate_mdp(m);
        assert!(r.is_valid(), "{r}");
    }

    #[test]
    fn desk_oracle_cvar() {
        let m = build_desk_instance();
        assert_valid(&m);
        let s1 = m.state_by_name("s1").unwrap();
        assert_eq!(m.num_actions_at(s1), 3);
        // all other non-goal states have exactly one action
        for s in m.states().filter(|&s| s != s1 && !m.is_goal(s)) {
            assert_eq!(m.num_actions_at(s), 1);
        }
        for (act, cvar) in [("d", 10.0), ("e", 10.0), ("c", 18.5)] {
            let pol = StationaryPolicy::from_labels(&m, &[("s1", act)]).unwrap();
            let dist = enumerate_outcome_distribution(&m, &pol, 10, ENUMERATION_LIMIT).unwrap();
            let (_, c) = cvar_of_distribution(&dist, 0.1, VarConvention::Lower).unwrap();
            assert_abs_diff_eq!(c, cvar, epsilon = 1e-12);
        }
    }

    #[test]
    fn inventory_profit_expression() {
        let p = InventoryParams::default();
        assert_eq!(p.stage_profit(0, 10, 10), 20.0);
        assert_eq!(p.stage_cost(0, 10, 10), 40.0);
        assert_eq!(p.stage_profit(20, 0, 20), 60.0);
        assert_eq!(p.stage_cost(20, 0, 20), 0.0);
        assert_eq!(p.stage_shift(), 60.0);
        assert_eq!(p.report_offset(), -200.0);
    }

    #[test]
    fn inventory_model_shape() {
        let p = InventoryParams::default();
        let m = build_inventory_control(&p).unwrap();
        assert_valid(&m);
        let s0 = m.initial();
        assert_eq!(m.state_name(s0), "k0_n0_d10");
        assert_eq!(m.num_actions_at(s0), 21);
        let buy10 = m.action_by_label(s0, "buy10").unwrap();
        assert_eq!(m.cost(buy10), 10.0);
        assert_eq!(m.successors(buy10).len(), 11);
        // with demand 10, sell of 10 in stock: 60 - 30 = 30; total stage cost 40
        let sell = m.state_by_name("k0_q10_s10").unwrap();
        let a = m.first_action(sell).unwrap();
        assert_eq!(m.cost(a), 30.0);
        assert_eq!(m.cost(buy10) + m.cost(a), p.stage_cost(0, 10, 10));
        // clamping merges mass at the boundary
        let low = m.state_by_name("k2_n0_d2").unwrap();
        let buy0 = m.action_by_label(low, "buy0").unwrap();
        let zero = m.state_by_name("k2_q0_s0").unwrap();
        assert_abs_diff_eq!(m.prob(buy0, zero), 4.0 / 11.0, epsilon = 1e-12);
        // per-stage cost bounded by K + N (p_u + p_h)
        let bound = p.stage_shift() + 20.0 * 2.0;
        for s in m.states() {
            for a in m.actions(s) {
                assert!(m.cost(a) >= 0.0 && m.cost(a) <= bound);
            }
        }
    }

    #[test]
    fn betting_model_rules() {
        let p = BettingParams::default();
        let m = build_betting_game(&p).unwrap();
        assert_valid(&m);
        let never = StationaryPolicy::from_labels(&m, &[]).unwrap();
        let dist = enumerate_outcome_distribution(&m, &never, 20, ENUMERATION_LIMIT).unwrap();
        assert_eq!(dist.atoms(), &[(95.0, 1.0)]);

        let s = m.state_by_name(&betting_state_name(0, 3));
        if let Some(s) = s {
            assert_eq!(m.num_actions_at(s), 1);
            assert_eq!(m.action_label(m.first_action(s).unwrap()), "bet0");
        }
        let rich = m.state_by_name(&betting_state_name(99, 9)).unwrap();
        let bet1 = m.action_by_label(rich, "bet1").unwrap();
        let capped = m.state_by_name(&betting_state_name(100, 10)).unwrap();
        // win and jackpot both clamp to the cap
        assert_abs_diff_eq!(m.prob(bet1, capped), 0.75, epsilon = 1e-12);
        for s in m.states() {
            for a in m.actions(s) {
                assert!((0.0..=100.0).contains(&m.cost(a)));
            }
        }
        assert!(build_betting_game(&BettingParams { p_win: 0.8, ..p }).is_err());
    }

    #[test]
    fn betting_zero_money_only_bets_zero() {
        let p = BettingParams {
            initial_money: 0,
            ..BettingParams::default()
        };
        let m = build_betting_game(&p).unwrap();
        let s = m.initial();
        assert_eq!(m.num_actions_at(s), 1);
        assert_eq!(m.action_label(m.first_action(s).unwrap()), "bet0");
    }

    #[test]
    fn dst_default_layout() {
        let cfg = DstConfig::default();
        let m = build_deep_sea_treasure(&cfg).unwrap();
        assert_valid(&m);
        // every move row sums to one after wall redistribution
        for s in m.states().filter(|&s| !m.is_goal(s)) {
            for a in m.actions(s) {
                let sum: f64 = m.successors(a).iter().map(|x| x.prob).sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            }
        }
        // pushing north along the surface never finds treasure
        let north: Vec<(String, String)> = m
            .states()
            .filter(|&s| m.action_by_label(s, "N").is_some())
            .map(|s| (m.state_name(s).to_string(), "N".to_string()))
            .collect();
        let pairs: Vec<(&str, &str)> = north
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let pol = StationaryPolicy::from_labels(&m, &pairs).unwrap();
        let dist = enumerate_outcome_distribution(&m, &pol, 40, ENUMERATION_LIMIT).unwrap();
        assert_eq!(dist.atoms(), &[(575.0, 1.0)]);
    }

    #[test]
    fn dst_adjacent_full_treasure() {
        let layout = DstLayout::parse("grid:\nSA\ntreasures:\nA 500\n").unwrap();
        let cfg = DstConfig {
            layout,
            ..DstConfig::default()
        };
        let m = build_deep_sea_treasure(&cfg).unwrap();
        assert_valid(&m);
        let h = History::from_labels(
            &m,
            &[
                (&dst_state_name(0, 0, 0), "E"),
                (&dst_state_name(0, 1, 1), "collect"),
            ],
            "goal",
        )
        .unwrap();
        assert_eq!(cumulative_cost(&m, &h).unwrap(), 5.0);
        let e = m.action_by_label(m.initial(), "E").unwrap();
        let stay = m.state_by_name(&dst_state_name(0, 0, 1)).unwrap();
        assert_abs_diff_eq!(m.prob(e, stay), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn dst_layout_errors() {
        assert!(matches!(
            DstLayout::parse("grid:\nS.\n.\n"),
            Err(DomainError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            DstLayout::parse("grid:\nSZ\n"),
            Err(DomainError::Parse { line: 2, .. })
        ));
        assert!(DstLayout::parse("grid:\n..\n").is_err());
        let bad = DstConfig {
            layout: DstLayout::parse("grid:\nSA\ntreasures:\nA 600\n").unwrap(),
            ..DstConfig::default()
        };
        assert!(build_deep_sea_treasure(&bad).is_err());
    }

    #[test]
    fn document_round_trip() {
        for m in [
            build_desk_instance(),
            build_betting_game(&BettingParams::default()).unwrap(),
        ] {
            let text = mdp_to_json(&m);
            let back = parse_mdp(&text).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn document_errors() {
        let m = build_desk_instance();
        let text = mdp_to_json(&m).replacen("\"p\": 0.85", "\"p\": 1.2", 1);
        match parse_mdp(&text) {
            Err(DomainError::Invalid(r)) => assert!(r.to_string().contains("1.2")),
            other => panic!("expected validation error, got {other:?}"),
        }
        let text = mdp_to_json(&m).replacen("\"initial\"", "\"discount\": 0.9,\n  \"initial\"", 1);
        let err = parse_mdp(&text).unwrap_err().to_string();
        assert!(err.contains("discount"), "{err}");
        assert!(err.starts_with("line "), "{err}");
        assert!(matches!(
            load_mdp_file("/nonexistent/desk.json"),
            Err(DomainError::Io { .. })
        ));
    }
}
