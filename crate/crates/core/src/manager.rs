//! A minimal Autonomic Manager: `when <event> if <guard> then <op>(<target>; <args>)` rules.
//!
//! Evaluating the rules against an injected event does not rewrite anything. Each matching rule
//! is turned into an [`ArmedEmission`]: the emitter production the `am` edge on the target's
//! manager port should fire next. [`armed_steps`] then asks the engine for transitions in which
//! an armed emitter actually synchronizes with its target.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::{enumerate, Assigned, SyncPolicy, Registry, Transition};
use crate::gcm::{self, am_emitter, AdaptOp, CommSpec};
use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(sym: &str) -> Option<CmpOp> {
        [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]
            .into_iter()
            .find(|op| op.symbol() == sym)
    }
}

/// Structural predicate over the current assembly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    True,
    /// Number of edges with this label compared to a constant.
    Count { label: String, op: CmpOp, value: u64 },
    /// Some edge with this label has the named node on the given tentacle.
    Exists { label: String, tentacle: usize, node: String },
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn holds(&self, graph: &Hypergraph) -> bool {
        match self {
            Guard::True => true,
            Guard::Count { label, op, value } => {
                op.holds(graph.edges_with_label(label).count() as u64, *value)
            }
            Guard::Exists { label, tentacle, node } => graph.edges_with_label(label).any(|e| {
                e.tentacles()
                    .get(*tentacle)
                    .and_then(|n| graph.display_name(*n))
                    == Some(node.as_str())
            }),
            Guard::Not(g) => !g.holds(graph),
            Guard::And(a, b) => a.holds(graph) && b.holds(graph),
            Guard::Or(a, b) => a.holds(graph) || b.holds(graph),
        }
    }
}

/// Which edge a rule adapts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSelector {
    /// Edge by name, as given in the graph section.
    Named(String),
    /// The `index`-th edge with this label, in edge-id order.
    Ordinal { label: String, index: usize },
}

impl TargetSelector {
    pub fn resolve<'a>(&self, graph: &'a Hypergraph) -> Option<&'a Hyperedge> {
        match self {
            TargetSelector::Named(name) => graph.edge_by_name(name),
            TargetSelector::Ordinal { label, index } => graph.edges().filter(|e| e.label().name() == label).nth(*index),
        }
    }
}

impl fmt::Display for TargetSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSelector::Named(name) => f.write_str(name),
            TargetSelector::Ordinal { label, index } => write!(f, "{label}#{index}"),
        }
    }
}

/// One entry of the vector a rule makes the manager communicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CommArg {
    /// A node created by the step.
    Fresh,
    /// The manager port of the `am` edge.
    Port,
    /// The location of the `am` edge.
    Location,
    /// An existing node, by display name.
    Node(String),
    /// An existing node whose display name is carried by the event payload under this key.
    Payload(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyRule {
    pub event: String,
    pub guard: Guard,
    pub action: AdaptOp,
    pub target: TargetSelector,
    pub args: Vec<CommArg>,
}

impl PolicyRule {
    /// The rule's argument count must match the communicated vector of its action.
    pub fn check(&self) -> Result<(), String> {
        let action = self.action.action();
        if self.args.len() != action.comm_arity {
            return Err(format!(
                "{} communicates {} names, rule gives {}",
                self.action.name(),
                action.comm_arity,
                self.args.len()
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Event {
    pub name: String,
    pub payload: BTreeMap<String, String>,
}

impl Event {
    pub fn new(name: impl Into<String>) -> Self {
        Event {
            name: name.into(),
            payload: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.payload.insert(key.into(), value.into());
        self
    }
}

/// An emitter ready to fire on a specific `am` edge, on behalf of one rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArmedEmission {
    pub rule: usize,
    pub target: EdgeId,
    pub am_edge: EdgeId,
    pub emitter: Assigned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManagerDiagnostic {
    pub rule: usize,
    pub message: String,
}

impl fmt::Display for ManagerDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule #{}: {}", self.rule, self.message)
    }
}

fn arm(rule: &PolicyRule, event: &Event, graph: &Hypergraph) -> Result<(EdgeId, EdgeId, Assigned), String> {
    rule.check()?;
    let target = rule
        .target
        .resolve(graph)
        .ok_or_else(|| format!("target {} does not resolve", rule.target))?;
    let port = *target
        .tentacles()
        .first()
        .ok_or_else(|| format!("target {} has no manager port", rule.target))?;
    let am = graph
        .edges_with_label(gcm::AM)
        .find(|e| e.tentacles().first() == Some(&port))
        .ok_or_else(|| format!("no am edge on the manager port of {}", rule.target))?;

    let mut spec = Vec::with_capacity(rule.args.len());
    let mut pinned: Vec<(usize, NodeId)> = Vec::new();
    for (i, arg) in rule.args.iter().enumerate() {
        let node_named = |name: &str| {
            graph
                .node_by_name(name)
                .ok_or_else(|| format!("no node named `{name}`"))
        };
        match arg {
            CommArg::Fresh => spec.push(CommSpec::Fresh),
            CommArg::Port => spec.push(CommSpec::Existing(0)),
            CommArg::Location => spec.push(CommSpec::Existing(1)),
            CommArg::Node(name) => {
                pinned.push((i, node_named(name)?));
                spec.push(CommSpec::Fresh);
            }
            CommArg::Payload(key) => {
                let name = event
                    .payload
                    .get(key)
                    .ok_or_else(|| format!("event `{}` carries no `{key}`", event.name))?;
                pinned.push((i, node_named(name)?));
                spec.push(CommSpec::Fresh);
            }
        }
    }
    let production = am_emitter(&rule.action.action(), &spec).map_err(|e| e.to_string())?;
    let pins = pinned
        .into_iter()
        .map(|(i, node)| (format!("c{i}"), node))
        .collect();
    Ok((target.id(), am.id(), Assigned { production, pins }))
}

/// Fires every rule whose event matches and whose guard holds, in rule order. Rules that cannot
/// be resolved against `graph` produce a diagnostic instead of an emission.
pub fn evaluate(
    rules: &[PolicyRule],
    event: &Event,
    graph: &Hypergraph,
) -> (Vec<ArmedEmission>, Vec<ManagerDiagnostic>) {
    let mut armed = Vec::new();
    let mut diags = Vec::new();
    for (i, rule) in rules.iter().enumerate() {
        if rule.event != event.name || !rule.guard.holds(graph) {
            continue;
        }
        match arm(rule, event, graph) {
            Ok((target, am_edge, emitter)) => armed.push(ArmedEmission {
                rule: i,
                target,
                am_edge,
                emitter,
            }),
            Err(message) => diags.push(ManagerDiagnostic { rule: i, message }),
        }
    }
    (armed, diags)
}

/// Transitions in which one of the armed emitters fires and its target takes part.
///
/// `am` edges may only fire armed emitters; every other edge draws from `registry`. The result
/// is a subset of what the engine enumerates over the registry extended with the emitters.
pub fn armed_steps(
    graph: &Hypergraph,
    registry: &Registry,
    armed: &[ArmedEmission],
    policy: SyncPolicy,
) -> Vec<Transition> {
    if armed.is_empty() {
        return Vec::new();
    }
    let options: Vec<(EdgeId, Vec<Assigned>)> = graph
        .edges()
        .map(|e| {
            let opts = if e.label().name() == gcm::AM {
                armed
                    .iter()
                    .filter(|a| a.am_edge == e.id())
                    .map(|a| a.emitter.clone())
                    .collect()
            } else {
                registry.matching(e).into_iter().map(Assigned::plain).collect()
            };
            (e.id(), opts)
        })
        .collect();

    enumerate(graph, &options, policy)
        .into_iter()
        .filter(|t| {
            let mut fired_any = false;
            for a in armed {
                if t.assignment.get(&a.am_edge) == Some(&a.emitter) {
                    fired_any = true;
                    if !t.assignment.contains_key(&a.target) {
                        return false;
                    }
                }
            }
            fired_any
        })
        .collect()
}

/// Evaluates the rules for `event` and returns the first armed transition, or `None` when the
/// system is quiescent for this event.
pub fn step_with_policy(
    graph: &Hypergraph,
    rules: &[PolicyRule],
    event: &Event,
    registry: &Registry,
    policy: SyncPolicy,
) -> Option<Transition> {
    let (armed, _) = evaluate(rules, event, graph);
    armed_steps(graph, registry, &armed, policy).into_iter().next()
}
