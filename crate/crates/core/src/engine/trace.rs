use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Transition;
use crate::dsl;
use crate::hypergraph::Hypergraph;

/// Hex SHA-256 of the graph's canonical textual form. Independent of node and edge ids.
pub fn graph_digest(graph: &Hypergraph) -> String {
    hex::encode(Sha256::digest(dsl::print_graph(graph).as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub edge: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edge_name: Option<String>,
    pub label: String,
    pub production: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRecord {
    pub node: String,
    pub action: String,
    pub output: Option<u32>,
    pub inputs: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionRecord {
    pub from: String,
    pub to: String,
}

/// One line of a JSON-lines trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub assignment: Vec<AssignmentRecord>,
    pub fired: Vec<FiredRecord>,
    pub fusion: Vec<FusionRecord>,
    pub result_digest: String,
}

impl TraceStep {
    pub fn new(step: usize, source: &Hypergraph, t: &Transition) -> Self {
        let assignment = t
            .assignment
            .iter()
            .map(|(id, a)| {
                let edge = source.edge(*id);
                AssignmentRecord {
                    edge: id.raw(),
                    edge_name: edge.and_then(|e| e.name()).map(str::to_string),
                    label: edge.map(|e| e.label().name().to_string()).unwrap_or_default(),
                    production: a.production.name.clone(),
                }
            })
            .collect();
        let fired = t
            .fired
            .iter()
            .map(|f| FiredRecord {
                node: t.node_name(source, f.node).to_string(),
                action: f.action.clone(),
                output: f.output.map(|e| e.raw()),
                inputs: f.inputs.iter().map(|e| e.raw()).collect(),
            })
            .collect();
        let fusion = t
            .fusion
            .iter()
            .map(|(from, to)| FusionRecord {
                from: t.node_name(source, *from).to_string(),
                to: t.node_name(source, *to).to_string(),
            })
            .collect();
        TraceStep {
            step,
            assignment,
            fired,
            fusion,
            result_digest: graph_digest(&t.result),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub final_graph: Hypergraph,
}

impl Trace {
    pub fn push(&mut self, source: &Hypergraph, t: &Transition) {
        let step = self.steps.len() + 1;
        self.steps.push(TraceStep::new(step, source, t));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One JSON object per line, each terminated by `\n`.
    pub fn to_json_lines(&self) -> String {
        self.steps
            .iter()
            .map(|s| serde_json::to_string(s).expect("trace records serialize") + "\n")
            .collect()
    }
}
