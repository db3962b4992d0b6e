//! SSP MDP data model, CVaR calculators and seeded randomness.

mod dist;
mod model;
mod rng;
mod validate;

pub use dist::{
    cvar_dual, cvar_of_distribution, enumerate_outcome_distribution, DiscreteDistribution,
    DistError, VarConvention, ATOM_MERGE_EPS, ENUMERATION_LIMIT,
};
pub use model::{
    cumulative_cost, ActionId, History, Mdp, MdpBuilder, ModelError, StateId, StationaryPolicy,
    Successor, GOAL_ACTION, SUPPORT_EPS,
};
pub use rng::RandomSource;
pub use validate::{validate_mdp, ValidationReport, Violation, ROW_SUM_TOL};
