use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Mdp, StateId, StationaryPolicy};

/// Atoms closer than this are merged.
pub const ATOM_MERGE_EPS: f64 = 1e-12;

/// Slack used when comparing cumulative probabilities against 1 − α.
const CDF_EPS: f64 = 1e-12;

/// Which quantile is reported as VaR at an atom boundary.
///
/// `Lower` is min{z | F(z) ≥ 1 − α}; `Upper` is min{z | F(z) > 1 − α}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarConvention {
    #[default]
    Lower,
    Upper,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("empty distribution")]
    Empty,
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("invalid atom probability {0}")]
    BadProbability(f64),
    #[error("enumeration exceeded {0} histories")]
    TooManyHistories(usize),
    #[error("{0} probability mass does not reach a goal within the horizon")]
    ResidualMass(f64),
}

/// A finite distribution over real values, atoms sorted ascending by value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    /// Sorts and merges atoms; rejects probabilities outside [0, 1].
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, DistError> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (z, p) in atoms {
            if !(0.0..=1.0).contains(&p) || !z.is_finite() {
                return Err(DistError::BadProbability(p));
            }
            v.push((z, p));
        }
        if v.is_empty() {
            return Err(DistError::Empty);
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (z, p) in v {
            match atoms.last_mut() {
                Some(last) if (z - last.0).abs() <= ATOM_MERGE_EPS => last.1 += p,
                _ => atoms.push((z, p)),
            }
        }
        Ok(DiscreteDistribution { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(z, p)| z * p).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.atoms.last().map_or(f64::NAN, |a| a.0)
    }

    pub fn shifted(&self, k: f64) -> Self {
        DiscreteDistribution {
            atoms: self.atoms.iter().map(|&(z, p)| (z + k, p)).collect(),
        }
    }

    /// Probability assigned to values within 1e-9 of `z`.
    pub fn prob_of(&self, z: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.0 - z).abs() <= 1e-9)
            .map(|a| a.1)
            .sum()
    }

    pub fn value_at_risk(&self, alpha: f64, conv: VarConvention) -> Result<f64, DistError> {
        check_alpha(alpha)?;
        let level = 1.0 - alpha;
        let mut cdf = 0.0;
        for &(z, p) in &self.atoms {
            cdf += p;
            let hit = match conv {
                VarConvention::Lower => cdf >= level - CDF_EPS,
                VarConvention::Upper => cdf > level + CDF_EPS,
            };
            if hit {
                return Ok(z);
            }
        }
        Ok(self.max_value())
    }
}

fn check_alpha(alpha: f64) -> Result<(), DistError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(DistError::BadAlpha(alpha))
    }
}

/// VaR and CVaR of `dist` at level `alpha`.
///
/// CVaR integrates the quantile function over [1 − α, 1] exactly: each
/// atom contributes its value times the length of its quantile interval
/// that falls inside the tail.
pub fn cvar_of_distribution(
    dist: &DiscreteDistribution,
    alpha: f64,
    conv: VarConvention,
) -> Result<(f64, f64), DistError> {
    check_alpha(alpha)?;
    let var = dist.value_at_risk(alpha, conv)?;
    let total = dist.total_mass();
    let lo_tail = 1.0 - alpha;
    let mut lo = 0.0;
    let mut acc = 0.0;
    let n = dist.atoms.len();
    for (i, &(z, p)) in dist.atoms.iter().enumerate() {
        // normalise so the last quantile interval ends exactly at 1
        let hi = if i + 1 == n { 1.0 } else { lo + p / total };
        let overlap = hi.min(1.0) - lo.max(lo_tail);
        if overlap > 0.0 {
            acc += z * overlap;
        }
        lo = hi;
    }
    Ok((var, acc / alpha))
}

/// CVaR as the maximal ξ-weighted expectation over the risk envelope
/// {0 ≤ ξ ≤ 1/α, E[ξ] = 1}, solved by filling the largest values first.
pub fn cvar_dual(dist: &DiscreteDistribution, alpha: f64) -> Result<f64, DistError> {
    check_alpha(alpha)?;
    let cap = 1.0 / alpha;
    let mut budget = 1.0; // perturbed mass still to place
    let mut acc = 0.0;
    for &(z, p) in dist.atoms.iter().rev() {
        if budget <= 0.0 {
            break;
        }
        let xi = (budget / p).min(cap);
        let mass = if xi == cap { p * cap } else { budget };
        acc += z * mass;
        budget -= mass;
    }
    Ok(acc)
}

/// Default history limit for [`enumerate_outcome_distribution`].
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Exact total-cost distribution of a stationary policy, by enumerating all
/// histories of at most `horizon` steps. Intended as a test oracle for
/// small instances.
pub fn enumerate_outcome_distribution(
    mdp: &Mdp,
    policy: &StationaryPolicy,
    horizon: usize,
    limit: usize,
) -> Result<DiscreteDistribution, DistError> {
    let mut atoms = Vec::new();
    let mut residual = 0.0;
    let mut stack: Vec<(StateId, f64, f64, usize)> = vec![(mdp.initial(), 0.0, 1.0, 0)];
    let mut histories = 0usize;
    while let Some((s, cost, prob, depth)) = stack.pop() {
        if mdp.is_goal(s) {
            histories += 1;
            if histories > limit {
                return Err(DistError::TooManyHistories(limit));
            }
            atoms.push((cost, prob));
            continue;
        }
        if depth == horizon {
            residual += prob;
            continue;
        }
        let a = policy.action(s);
        let c = cost + mdp.cost(a);
        for x in mdp.successors(a) {
            if x.prob > 0.0 {
                stack.push((x.state, c, prob * x.prob, depth + 1));
            }
        }
    }
    if residual > 1e-12 {
        return Err(DistError::ResidualMass(residual));
    }
    DiscreteDistribution::new(atoms)
}
