use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hypergraph::NodeId;
use crate::production::{GroundCondition, Polarity};

/// How conditions meeting at one node must match up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyncPolicy {
    /// Exactly one output paired with one input of the same action.
    #[default]
    Milner,
    /// One output matched by an input on every other tentacle attached to the node.
    Broadcast,
}

impl fmt::Display for SyncPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyncPolicy::Milner => "milner",
            SyncPolicy::Broadcast => "broadcast",
        })
    }
}

impl std::str::FromStr for SyncPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "milner" => Ok(SyncPolicy::Milner),
            "broadcast" => Ok(SyncPolicy::Broadcast),
            other => Err(format!("unknown policy `{other}` (expected milner or broadcast)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rejection {
    TooManyOutputs,
    UnmatchedInput,
    UnmatchedOutput,
    ActionNameMismatch,
    CommLengthMismatch,
    IdleBystanderInBroadcast,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::TooManyOutputs => "too many outputs",
            Rejection::UnmatchedInput => "unmatched input",
            Rejection::UnmatchedOutput => "unmatched output",
            Rejection::ActionNameMismatch => "action name mismatch",
            Rejection::CommLengthMismatch => "communicated vectors differ in length",
            Rejection::IdleBystanderInBroadcast => "idle bystander on a broadcast node",
        })
    }
}

/// Positionwise equations between communicated vectors.
pub type Equations = Vec<(NodeId, NodeId)>;

fn pair(out: &GroundCondition, inp: &GroundCondition) -> Result<Equations, Rejection> {
    if out.action.name != inp.action.name {
        return Err(Rejection::ActionNameMismatch);
    }
    if out.comm.len() != inp.comm.len() {
        return Err(Rejection::CommLengthMismatch);
    }
    Ok(out.comm.iter().copied().zip(inp.comm.iter().copied()).collect())
}

/// Decides whether the conditions meeting at one node synchronize. `attached_count` is the
/// number of tentacles attached to the node, idle ones included.
pub fn check_node(
    conditions: &[GroundCondition],
    policy: SyncPolicy,
    attached_count: usize,
) -> Result<Equations, Rejection> {
    let active: Vec<&GroundCondition> = conditions
        .iter()
        .filter(|c| c.polarity != Polarity::Idle)
        .collect();
    if active.is_empty() {
        return Ok(Vec::new());
    }
    let outputs: Vec<&GroundCondition> = active
        .iter()
        .copied()
        .filter(|c| c.polarity == Polarity::Output)
        .collect();
    let inputs: Vec<&GroundCondition> = active
        .iter()
        .copied()
        .filter(|c| c.polarity == Polarity::Input)
        .collect();
    if outputs.len() >= 2 {
        return Err(Rejection::TooManyOutputs);
    }

    match policy {
        SyncPolicy::Milner => match (outputs.as_slice(), inputs.as_slice()) {
            ([out], [inp]) => pair(out, inp),
            ([_], []) => Err(Rejection::UnmatchedOutput),
            _ => Err(Rejection::UnmatchedInput),
        },
        SyncPolicy::Broadcast => {
            let Some(out) = outputs.first() else {
                return Err(Rejection::UnmatchedInput);
            };
            let mut equations = Vec::new();
            for inp in &inputs {
                equations.extend(pair(out, inp)?);
            }
            if active.len() < attached_count {
                return Err(Rejection::IdleBystanderInBroadcast);
            }
            Ok(equations)
        }
    }
}
