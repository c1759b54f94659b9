//! Synchronized rewriting.
//!
//! One step assigns at most one production to each edge (unassigned edges are idle), then
//!
//! 1. collects the grounded conditions every assigned edge poses on its tentacle nodes and
//!    checks, node by node, that they synchronize under the [`SyncPolicy`];
//! 2. replaces each assigned edge with the grounded rhs of its production;
//! 3. fuses the nodes equated by the communicated vectors.
//!
//! Fusion is limited: a class may contain at most one pre-existing node, which becomes the
//! representative. Candidates that would merge two pre-existing nodes are dropped.
//!
//! [`applicable_steps`] enumerates every assignment, so it is exponential in the number of
//! edges. It is meant for desk-scale assemblies of about ten edges.

mod sync;
mod trace;
mod unify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, NodeId};
use crate::production::{
    instantiate, validate_all, Diagnostic, FreshAllocator, GroundCondition, InstantiateError,
    InstantiatedRule, Polarity, Production,
};

pub use sync::{check_node, Equations, Rejection, SyncPolicy};
pub use trace::{graph_digest, AssignmentRecord, FiredRecord, FusionRecord, Trace, TraceStep};
pub use unify::{unify, UnifyError};

/// Validated set of productions an engine step may choose from.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    productions: Vec<Production>,
}

impl Registry {
    pub fn new(productions: Vec<Production>) -> Result<Self, Vec<Diagnostic>> {
        let diags = validate_all(&productions);
        if !diags.is_empty() {
            return Err(diags);
        }
        Ok(Registry { productions })
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    /// Productions rewriting edges like `edge`, sorted by name.
    pub fn matching(&self, edge: &Hyperedge) -> Vec<&Production> {
        let mut out: Vec<&Production> = self
            .productions
            .iter()
            .filter(|p| &p.lhs_label == edge.label())
            .collect();
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }

    /// One option list per edge, ready for [`enumerate`].
    pub fn options(&self, graph: &Hypergraph) -> Vec<(EdgeId, Vec<Assigned>)> {
        graph
            .edges()
            .map(|e| {
                let opts = self.matching(e).into_iter().map(Assigned::plain).collect();
                (e.id(), opts)
            })
            .collect()
    }
}

/// A production chosen for one edge. `pins` binds some of its fresh names to existing nodes
/// instead of allocating new ones; manager emissions use this to name a target location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assigned {
    pub production: Production,
    pub pins: BTreeMap<String, NodeId>,
}

impl Assigned {
    pub fn plain(production: &Production) -> Self {
        Assigned {
            production: production.clone(),
            pins: BTreeMap::new(),
        }
    }
}

/// Edge to chosen production; edges absent from the map are idle.
pub type Assignment = BTreeMap<EdgeId, Assigned>;

/// One synchronization that took place at a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fired {
    pub node: NodeId,
    pub action: String,
    pub output: Option<EdgeId>,
    pub inputs: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub assignment: Assignment,
    /// Non-representative node to representative. Never has a pre-existing node as key.
    pub fusion: BTreeMap<NodeId, NodeId>,
    pub fired: Vec<Fired>,
    /// Display names generated for the fresh nodes of this step, including ones that were
    /// fused away or never materialized.
    pub fresh_names: BTreeMap<NodeId, String>,
    pub policy: SyncPolicy,
    pub result: Hypergraph,
    source: String,
}

impl Transition {
    /// `(edge, production name)` for every non-idle edge, in edge order. Transitions are
    /// ordered lexicographically by this key.
    pub fn key(&self) -> Vec<(EdgeId, &str)> {
        self.assignment
            .iter()
            .map(|(e, a)| (*e, a.production.name.as_str()))
            .collect()
    }

    /// Human-readable name for a node of either the source or the result.
    pub fn node_name<'a>(&'a self, source: &'a Hypergraph, node: NodeId) -> &'a str {
        source
            .display_name(node)
            .or_else(|| self.fresh_names.get(&node).map(String::as_str))
            .or_else(|| self.result.display_name(node))
            .unwrap_or("?")
    }
}

/// Why a particular assignment does not yield a transition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepRejection {
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
    #[error("edge {0} is not in the graph")]
    UnknownEdge(EdgeId),
    #[error("node {node}: {reason}")]
    Node { node: NodeId, reason: Rejection },
    #[error(transparent)]
    Fusion(#[from] UnifyError),
    #[error("the all-idle assignment is not a step")]
    AllIdle,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("transition was computed for a different graph")]
    StaleTransition,
}

fn instantiate_all(
    graph: &Hypergraph,
    assignment: &Assignment,
    fresh: &mut FreshAllocator,
) -> Result<Vec<InstantiatedRule>, StepRejection> {
    assignment
        .iter()
        .map(|(edge_id, assigned)| {
            let edge = graph.edge(*edge_id).ok_or(StepRejection::UnknownEdge(*edge_id))?;
            Ok(instantiate(&assigned.production, edge, &assigned.pins, fresh)?)
        })
        .collect()
}

fn group_by_node(rules: &[InstantiatedRule]) -> BTreeMap<NodeId, Vec<GroundCondition>> {
    let mut by_node: BTreeMap<NodeId, Vec<GroundCondition>> = BTreeMap::new();
    for rule in rules {
        for c in &rule.conditions {
            by_node.entry(c.node).or_default().push(c.clone());
        }
    }
    by_node
}

/// Grounded non-idle conditions per node, in `(edge, tentacle)` order. Nodes without
/// conditions are absent.
pub fn collect_conditions(
    graph: &Hypergraph,
    assignment: &Assignment,
    fresh: &mut FreshAllocator,
) -> Result<BTreeMap<NodeId, Vec<GroundCondition>>, StepRejection> {
    let rules = instantiate_all(graph, assignment, fresh)?;
    Ok(group_by_node(&rules))
}

fn fired_at(node: NodeId, conditions: &[GroundCondition]) -> Fired {
    let output = conditions.iter().find(|c| c.polarity == Polarity::Output);
    Fired {
        node,
        action: output
            .or_else(|| conditions.first())
            .map(|c| c.action.name.clone())
            .unwrap_or_default(),
        output: output.map(|c| c.edge),
        inputs: conditions
            .iter()
            .filter(|c| c.polarity == Polarity::Input)
            .map(|c| c.edge)
            .collect(),
    }
}

/// Replaces assigned edges with their grounded rhs and applies the fusion.
fn rewrite(
    graph: &Hypergraph,
    rules: &[InstantiatedRule],
    fusion: &BTreeMap<NodeId, NodeId>,
    fresh: &FreshAllocator,
) -> Hypergraph {
    let mut out = graph.clone();
    let mut inherited: BTreeMap<EdgeId, Option<String>> = BTreeMap::new();
    for rule in rules {
        let removed = out.remove_edge(rule.edge).expect("assigned edges exist");
        inherited.insert(rule.edge, removed.name().map(str::to_string));
    }

    let referenced: BTreeSet<NodeId> = rules
        .iter()
        .flat_map(|r| {
            r.rhs_edges
                .iter()
                .flat_map(|(_, ts)| ts.iter().copied())
                .chain(r.rhs_nodes.iter().copied())
        })
        .collect();
    for node in referenced {
        if graph.contains_node(node) {
            continue;
        }
        let rep = fusion.get(&node).copied().unwrap_or(node);
        for n in [node, rep] {
            if !out.contains_node(n) {
                if let Some(name) = fresh.issued().get(&n) {
                    out.insert_node_with_id(n, name.clone());
                }
            }
        }
    }

    for rule in rules {
        let lhs_label = graph.edge(rule.edge).map(|e| e.label().clone());
        let mut name = inherited.remove(&rule.edge).flatten();
        for (label, tentacles) in &rule.rhs_edges {
            // The first rhs edge with the replaced edge's label keeps its name.
            let edge_name = if Some(label) == lhs_label.as_ref() { name.take() } else { None };
            out.insert_named_edge(label, tentacles, edge_name)
                .expect("grounded rhs references materialized nodes");
        }
    }
    out.apply_substitution(fusion)
}

/// Runs the three rewriting steps for one assignment.
pub fn evaluate_assignment(
    graph: &Hypergraph,
    assignment: &Assignment,
    policy: SyncPolicy,
) -> Result<Transition, StepRejection> {
    if assignment.is_empty() {
        return Err(StepRejection::AllIdle);
    }
    let mut fresh = FreshAllocator::for_graph(graph);
    let rules = instantiate_all(graph, assignment, &mut fresh)?;
    let by_node = group_by_node(&rules);

    let mut equations = Vec::new();
    let mut fired = Vec::new();
    for (node, conditions) in &by_node {
        let attached = graph
            .attached(*node)
            .map(|a| a.len())
            .unwrap_or(conditions.len());
        let eqs = check_node(conditions, policy, attached).map_err(|reason| StepRejection::Node {
            node: *node,
            reason,
        })?;
        equations.extend(eqs);
        fired.push(fired_at(*node, conditions));
    }

    let fusion = unify(&equations, &graph.node_set())?;
    let result = rewrite(graph, &rules, &fusion, &fresh);
    Ok(Transition {
        assignment: assignment.clone(),
        fusion,
        fired,
        fresh_names: fresh.issued().clone(),
        policy,
        result,
        source: graph.fingerprint(),
    })
}

/// Tries every combination of per-edge options (each edge may also stay idle) and keeps the
/// ones that synchronize. The all-idle combination is skipped. Output is sorted by
/// [`Transition::key`], ties broken by option position.
pub fn enumerate(
    graph: &Hypergraph,
    options: &[(EdgeId, Vec<Assigned>)],
    policy: SyncPolicy,
) -> Vec<Transition> {
    let live: Vec<&(EdgeId, Vec<Assigned>)> = options.iter().filter(|(_, o)| !o.is_empty()).collect();
    let mut choice = vec![0usize; live.len()];
    let mut found: Vec<(Vec<usize>, Transition)> = Vec::new();

    loop {
        // Odometer increment; position 0 of each digit means idle.
        let mut i = 0;
        loop {
            if i == live.len() {
                found.sort_by(|(ca, ta), (cb, tb)| ta.key().cmp(&tb.key()).then_with(|| ca.cmp(cb)));
                return found.into_iter().map(|(_, t)| t).collect();
            }
            choice[i] += 1;
            if choice[i] <= live[i].1.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }

        let assignment: Assignment = live
            .iter()
            .zip(&choice)
            .filter(|(_, c)| **c > 0)
            .map(|((edge, opts), c)| (*edge, opts[c - 1].clone()))
            .collect();
        if let Ok(t) = evaluate_assignment(graph, &assignment, policy) {
            found.push((choice.clone(), t));
        }
    }
}

/// Every transition the registry allows from `graph`, in deterministic order.
pub fn applicable_steps(graph: &Hypergraph, registry: &Registry, policy: SyncPolicy) -> Vec<Transition> {
    enumerate(graph, &registry.options(graph), policy)
}

/// Applies a transition computed for `graph`. The result is re-derived from the assignment,
/// so it always equals `transition.result`.
pub fn apply(graph: &Hypergraph, transition: &Transition) -> Result<Hypergraph, EngineError> {
    if graph.fingerprint() != transition.source {
        return Err(EngineError::StaleTransition);
    }
    evaluate_assignment(graph, &transition.assignment, transition.policy)
        .map(|t| t.result)
        .map_err(|_| EngineError::StaleTransition)
}

/// Picks the first transition, i.e. the lexicographically least assignment.
pub fn first_transition(steps: &[Transition]) -> Option<usize> {
    if steps.is_empty() {
        None
    } else {
        Some(0)
    }
}

/// Rewrites until no transition applies, the chooser declines, or `max_steps` steps were
/// taken.
pub fn run(
    graph: &Hypergraph,
    registry: &Registry,
    policy: SyncPolicy,
    chooser: &mut dyn FnMut(&[Transition]) -> Option<usize>,
    max_steps: usize,
) -> Trace {
    let mut current = graph.clone();
    let mut trace = Trace::default();
    while trace.steps.len() < max_steps {
        let steps = applicable_steps(&current, registry, policy);
        let Some(t) = chooser(&steps).and_then(|i| steps.get(i)) else {
            break;
        };
        trace.push(&current, t);
        current = t.result.clone();
    }
    trace.final_graph = current;
    trace
}

impl fmt::Display for Fired {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.action, self.node)
    }
}
