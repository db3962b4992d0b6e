use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::mdp::{Mdp, MdpBuilder, StateId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventoryParams {
    pub stages: u32,
    /// Maximum number of units held (N).
    pub capacity: u32,
    pub purchase_price: f64,
    pub revenue: f64,
    pub holding_price: f64,
    /// Demand of the stage before the first one.
    pub initial_demand: u32,
    /// Demand moves by a uniform integer step in `-demand_step..=demand_step`.
    pub demand_step: u32,
    pub initial_inventory: u32,
    /// Best achievable total profit on the reporting scale; costs are
    /// reported as `reference_profit - profit`.
    pub reference_profit: f64,
}

impl Default for InventoryParams {
    fn default() -> Self {
        InventoryParams {
            stages: 10,
            capacity: 20,
            purchase_price: 1.0,
            revenue: 3.0,
            holding_price: 1.0,
            initial_demand: 10,
            demand_step: 5,
            initial_inventory: 0,
            reference_profit: 400.0,
        }
    }
}

impl InventoryParams {
    fn validate(&self) -> Result<(), DomainError> {
        let prices = [self.purchase_price, self.revenue, self.holding_price];
        if self.capacity < 1 || prices.iter().any(|p| !(*p >= 0.0)) {
            return Err(DomainError::InvalidParams(
                "inventory capacity must be >= 1 and prices nonnegative".into(),
            ));
        }
        if self.initial_demand > self.capacity || self.initial_inventory > self.capacity {
            return Err(DomainError::InvalidParams(
                "initial demand and inventory must not exceed capacity".into(),
            ));
        }
        Ok(())
    }

    /// Per-stage cost shift K: the largest single-stage profit, N * r.
    pub fn stage_shift(&self) -> f64 {
        f64::from(self.capacity) * self.revenue
    }

    /// Offset turning a raw episode cost (`stages * K - profit`) into the
    /// reporting scale (`reference_profit - profit`).
    pub fn report_offset(&self) -> f64 {
        self.reference_profit - f64::from(self.stages) * self.stage_shift()
    }

    /// Profit of one stage holding `n`, buying `a`, facing demand `d`.
    pub fn stage_profit(&self, n: u32, a: u32, d: u32) -> f64 {
        let stock = n + a;
        f64::from(d.min(stock)) * self.revenue
            - f64::from(a) * self.purchase_price
            - f64::from(stock.saturating_sub(d)) * self.holding_price
    }

    /// `K - stage_profit`, always in `[0, K + N (p_u + p_h)]`.
    pub fn stage_cost(&self, n: u32, a: u32, d: u32) -> f64 {
        self.stage_shift() - self.stage_profit(n, a, d)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    /// Before ordering: stage, units held, previous demand.
    Order { stage: u32, held: u32, prev: u32 },
    /// After ordering and demand draw: stage, units in stock, demand.
    Sell { stage: u32, stock: u32, demand: u32 },
}

fn node_name(n: Node) -> String {
    match n {
        Node::Order { stage, held, prev } => format!("k{stage}_n{held}_d{prev}"),
        Node::Sell {
            stage,
            stock,
            demand,
        } => format!("k{stage}_q{stock}_s{demand}"),
    }
}

/// Stochastic inventory control with a random-walk demand.
///
/// Each stage takes two MDP steps, with the order placed before the stage's
/// demand is known:
///
/// 1. `buy{a}` at (stage, held n, previous demand) costs `a * p_u` and draws
///    the demand `d = clamp(prev + Δ, 0, N)`;
/// 2. `sell` at (stage, stock n + a, d) costs
///    `K - min(d, n + a) r + max(n + a - d, 0) p_h`.
///
/// The two costs add to `K - profit`. After the last stage `end` moves to
/// the goal at zero cost.
pub fn build_inventory_control(p: &InventoryParams) -> Result<Mdp, DomainError> {
    p.validate()?;
    let cap = p.capacity;
    let mut b = MdpBuilder::new();
    let goal = b.add_state("goal")?;
    b.mark_goal(goal)?;
    let mut ids: HashMap<Node, StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: &mut MdpBuilder, q: &mut VecDeque<Node>, n: Node| {
        *ids.entry(n).or_insert_with(|| {
            q.push_back(n);
            b.state(&node_name(n))
        })
    };
    let start = intern(
        &mut b,
        &mut queue,
        Node::Order {
            stage: 0,
            held: p.initial_inventory,
            prev: p.initial_demand,
        },
    );
    b.set_initial(start)?;
    let steps = 2 * p.demand_step + 1;
    let step_p = 1.0 / f64::from(steps);
    let k = p.stage_shift();

    while let Some(node) = queue.pop_front() {
        let here = intern(&mut b, &mut queue, node);
        match node {
            Node::Order { stage, .. } if stage == p.stages => {
                b.add_action(here, "end", 0.0, vec![(goal, 1.0)])?;
            }
            Node::Order { stage, held, prev } => {
                for a in 0..=(cap - held) {
                    let succ = (0..steps)
                        .map(|i| {
                            let d = (i64::from(prev) + i64::from(i) - i64::from(p.demand_step))
                                .clamp(0, i64::from(cap))
                                as u32;
                            let next = Node::Sell {
                                stage,
                                stock: held + a,
                                demand: d,
                            };
                            (intern(&mut b, &mut queue, next), step_p)
                        })
                        .collect();
                    let cost = f64::from(a) * p.purchase_price;
                    b.add_action(here, format!("buy{a}"), cost, succ)?;
                }
            }
            Node::Sell {
                stage,
                stock,
                demand,
            } => {
                let sold = demand.min(stock);
                let left = stock - sold;
                let cost = k - f64::from(sold) * p.revenue + f64::from(left) * p.holding_price;
                let next = intern(
                    &mut b,
                    &mut queue,
                    Node::Order {
                        stage: stage + 1,
                        held: left,
                        prev: demand,
                    },
                );
                b.add_action(here, "sell", cost, vec![(next, 1.0)])?;
            }
        }
    }
    Ok(b.build()?)
}
