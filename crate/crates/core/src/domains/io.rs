use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::mdp::{validate_mdp, Mdp, MdpBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessorDoc {
    pub state: String,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub state: String,
    pub action: String,
    pub cost: f64,
    pub successors: Vec<SuccessorDoc>,
}

/// Serialized MDP: state names, initial state, goals and one entry per
/// (state, action) pair. Goal self-loops may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub states: Vec<String>,
    pub initial: String,
    pub goals: Vec<String>,
    pub transitions: Vec<TransitionDoc>,
}

impl MdpDocument {
    pub fn from_mdp(mdp: &Mdp) -> Self {
        let name = |s| mdp.state_name(s).to_string();
        let transitions = mdp
            .states()
            .flat_map(|s| mdp.actions(s).map(move |a| (s, a)))
            .map(|(s, a)| TransitionDoc {
                state: name(s),
                action: mdp.action_label(a).to_string(),
                cost: mdp.cost(a),
                successors: mdp
                    .successors(a)
                    .iter()
                    .map(|x| SuccessorDoc {
                        state: name(x.state),
                        p: x.prob,
                    })
                    .collect(),
            })
            .collect();
        MdpDocument {
            states: mdp.states().map(name).collect(),
            initial: name(mdp.initial()),
            goals: mdp.goals().map(name).collect(),
            transitions,
        }
    }

    /// Builds the model without validating it.
    pub fn to_mdp(&self) -> Result<Mdp, DomainError> {
        let mut b = MdpBuilder::new();
        for s in &self.states {
            b.add_state(s.as_str())?;
        }
        let find = |b: &MdpBuilder, n: &str| {
            b.lookup(n)
                .ok_or_else(|| DomainError::UnknownState(n.to_string()))
        };
        for t in &self.transitions {
            let s = find(&b, &t.state)?;
            let succ = t
                .successors
                .iter()
                .map(|x| Ok((find(&b, &x.state)?, x.p)))
                .collect::<Result<Vec<_>, DomainError>>()?;
            b.add_action(s, t.action.as_str(), t.cost, succ)?;
        }
        for g in &self.goals {
            let g = find(&b, g)?;
            b.mark_goal(g)?;
        }
        let init = find(&b, &self.initial)?;
        b.set_initial(init)?;
        Ok(b.build()?)
    }
}

pub fn mdp_to_json(mdp: &Mdp) -> String {
    serde_json::to_string_pretty(&MdpDocument::from_mdp(mdp)).expect("plain data serializes")
}

/// Parses and validates an MDP document.
pub fn parse_mdp(text: &str) -> Result<Mdp, DomainError> {
    let doc: MdpDocument = serde_json::from_str(text).map_err(|e| DomainError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let mdp = doc.to_mdp()?;
    let report = validate_mdp(&mdp);
    if !report.is_valid() {
        return Err(DomainError::Invalid(report));
    }
    Ok(mdp)
}

pub fn load_mdp_file(path: impl AsRef<Path>) -> Result<Mdp, DomainError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DomainError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_mdp(&text)
}

pub fn save_mdp_file(mdp: &Mdp, path: impl AsRef<Path>) -> Result<(), DomainError> {
    let path = path.as_ref();
    std::fs::write(path, mdp_to_json(mdp)).map_err(|e| DomainError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
