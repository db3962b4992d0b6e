use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::mdp::{Mdp, MdpBuilder, StateId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BettingParams {
    pub stages: u32,
    pub initial_money: u32,
    pub money_cap: u32,
    /// Bets are `0..=max_bet`, limited by the money held.
    pub max_bet: u32,
    pub p_win: f64,
    pub p_jackpot: f64,
    pub p_lose: f64,
    pub jackpot_multiplier: u32,
}

impl Default for BettingParams {
    fn default() -> Self {
        BettingParams {
            stages: 10,
            initial_money: 5,
            money_cap: 100,
            max_bet: 5,
            p_win: 0.7,
            p_jackpot: 0.05,
            p_lose: 0.25,
            jackpot_multiplier: 10,
        }
    }
}

impl BettingParams {
    fn validate(&self) -> Result<(), DomainError> {
        let ps = [self.p_win, self.p_jackpot, self.p_lose];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p))
            || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(DomainError::InvalidParams(
                "betting outcome probabilities must be in [0,1] and sum to 1".into(),
            ));
        }
        if self.initial_money > self.money_cap {
            return Err(DomainError::InvalidParams(
                "initial money exceeds the cap".into(),
            ));
        }
        Ok(())
    }
}

pub fn betting_state_name(money: u32, stage: u32) -> String {
    format!("m{money}_t{stage}")
}

/// Betting game over (money, stage). Only states reachable from the
/// initial money are generated. After the last stage a single `cash_out`
/// action pays `cap - money` and ends the episode.
pub fn build_betting_game(p: &BettingParams) -> Result<Mdp, DomainError> {
    p.validate()?;
    let mut b = MdpBuilder::new();
    let goal = b.add_state("goal")?;
    b.mark_goal(goal)?;
    let mut ids: HashMap<(u32, u32), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: &mut MdpBuilder, q: &mut VecDeque<(u32, u32)>, key: (u32, u32)| {
        *ids.entry(key).or_insert_with(|| {
            q.push_back(key);
            b.state(&betting_state_name(key.0, key.1))
        })
    };
    let start = intern(&mut b, &mut queue, (p.initial_money, 0));
    b.set_initial(start)?;

    while let Some((money, stage)) = queue.pop_front() {
        let here = intern(&mut b, &mut queue, (money, stage));
        if stage == p.stages {
            let cost = f64::from(p.money_cap - money);
            b.add_action(here, "cash_out", cost, vec![(goal, 1.0)])?;
            continue;
        }
        for bet in 0..=p.max_bet.min(money) {
            let win = (money + bet).min(p.money_cap);
            let jackpot = (money + p.jackpot_multiplier * bet).min(p.money_cap);
            let lose = money - bet;
            let mut succ = Vec::with_capacity(3);
            for (m, prob) in [(win, p.p_win), (jackpot, p.p_jackpot), (lose, p.p_lose)] {
                if prob > 0.0 {
                    succ.push((intern(&mut b, &mut queue, (m, stage + 1)), prob));
                }
            }
            b.add_action(here, format!("bet{bet}"), 0.0, succ)?;
        }
    }
    Ok(b.build()?)
}
