//! Productions: one lhs edge, synchronization conditions on its tentacles, and an rhs
//! hypergraph schema written over formal names.
//!
//! Formal names are plain strings scoped to the production. The lhs formals name the tentacle
//! targets of the replaced edge positionally; fresh names (declared explicitly) stand for nodes
//! that the rewriting step allocates. Conditions are keyed by tentacle index, so a production
//! whose edge reaches one node through two tentacles poses two independent conditions there.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, Label, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Input,
    /// The co-action (overlined in the usual notation).
    Output,
    Idle,
}

impl Polarity {
    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Input => Polarity::Output,
            Polarity::Output => Polarity::Input,
            Polarity::Idle => Polarity::Idle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionSig {
    pub name: String,
    pub comm_arity: usize,
}

impl ActionSig {
    pub fn new(name: impl Into<String>, comm_arity: usize) -> Self {
        ActionSig {
            name: name.into(),
            comm_arity,
        }
    }
}

impl fmt::Display for ActionSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.comm_arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub polarity: Polarity,
    /// `None` exactly when idle.
    pub action: Option<ActionSig>,
    pub comm: Vec<String>,
}

impl Condition {
    pub fn input(name: &str, comm: &[&str]) -> Self {
        Self::with(Polarity::Input, name, comm)
    }

    pub fn output(name: &str, comm: &[&str]) -> Self {
        Self::with(Polarity::Output, name, comm)
    }

    pub fn idle() -> Self {
        Condition {
            polarity: Polarity::Idle,
            action: None,
            comm: Vec::new(),
        }
    }

    fn with(polarity: Polarity, name: &str, comm: &[&str]) -> Self {
        Condition {
            polarity,
            action: Some(ActionSig::new(name, comm.len())),
            comm: comm.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_idle(&self) -> bool {
        self.polarity == Polarity::Idle
    }
}

/// The rhs of a production: edges over formal names, plus bare nodes that must exist even
/// without an incident edge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RhsSchema {
    pub edges: Vec<(Label, Vec<String>)>,
    pub nodes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub name: String,
    pub lhs_label: Label,
    pub lhs_formals: Vec<String>,
    /// Tentacle index to condition; a missing index is idle.
    pub conditions: BTreeMap<usize, Condition>,
    /// Declared fresh names, in declaration order (which fixes allocation order).
    pub fresh_names: Vec<String>,
    pub rhs: RhsSchema,
}

impl Production {
    pub fn new(name: impl Into<String>, lhs_label: Label, lhs_formals: &[&str]) -> Self {
        Production {
            name: name.into(),
            lhs_label,
            lhs_formals: lhs_formals.iter().map(|s| s.to_string()).collect(),
            conditions: BTreeMap::new(),
            fresh_names: Vec::new(),
            rhs: RhsSchema::default(),
        }
    }

    pub fn fresh(mut self, names: &[&str]) -> Self {
        self.fresh_names.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn on(mut self, tentacle: usize, condition: Condition) -> Self {
        self.conditions.insert(tentacle, condition);
        self
    }

    pub fn rhs_edge(mut self, label: &Label, formals: &[&str]) -> Self {
        self.rhs
            .edges
            .push((label.clone(), formals.iter().map(|s| s.to_string()).collect()));
        self
    }

    pub fn rhs_node(mut self, formal: &str) -> Self {
        self.rhs.nodes.push(formal.to_string());
        self
    }

    /// Non-idle conditions in tentacle order.
    pub fn active_conditions(&self) -> impl Iterator<Item = (usize, &Condition)> + '_ {
        self.conditions
            .iter()
            .filter(|(_, c)| !c.is_idle())
            .map(|(i, c)| (*i, c))
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionSig> + '_ {
        self.conditions.values().filter_map(|c| c.action.as_ref())
    }

    /// True when the production poses no conditions at all.
    pub fn is_idle(&self) -> bool {
        self.active_conditions().next().is_none()
    }
}

/// The production that leaves an edge of `label` alone: lhs = rhs = one edge, no conditions.
pub fn idle_production(label: &Label) -> Production {
    let formals: Vec<String> = (0..label.arity()).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = formals.iter().map(String::as_str).collect();
    Production::new(format!("idle_{}", label.name()), label.clone(), &refs).rhs_edge(label, &refs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    LhsArityMismatch,
    DuplicateFormal,
    DuplicateFresh,
    FreshShadowsFormal,
    ConditionIndexOutOfRange,
    UndeclaredCommName,
    CommArityMismatch,
    MalformedIdle,
    MissingAction,
    UndeclaredRhsName,
    RhsArityMismatch,
    ActionArityClash,
    LabelArityClash,
    DuplicateProduction,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::LhsArityMismatch => "LHS_ARITY_MISMATCH",
            DiagCode::DuplicateFormal => "DUPLICATE_FORMAL",
            DiagCode::DuplicateFresh => "DUPLICATE_FRESH",
            DiagCode::FreshShadowsFormal => "FRESH_SHADOWS_FORMAL",
            DiagCode::ConditionIndexOutOfRange => "CONDITION_INDEX_OUT_OF_RANGE",
            DiagCode::UndeclaredCommName => "UNDECLARED_COMM_NAME",
            DiagCode::CommArityMismatch => "COMM_ARITY_MISMATCH",
            DiagCode::MalformedIdle => "MALFORMED_IDLE",
            DiagCode::MissingAction => "MISSING_ACTION",
            DiagCode::UndeclaredRhsName => "UNDECLARED_RHS_NAME",
            DiagCode::RhsArityMismatch => "RHS_ARITY_MISMATCH",
            DiagCode::ActionArityClash => "ACTION_ARITY_CLASH",
            DiagCode::LabelArityClash => "LABEL_ARITY_CLASH",
            DiagCode::DuplicateProduction => "DUPLICATE_PRODUCTION",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub production: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in production `{}`: {}", self.code, self.production, self.message)
    }
}

/// Checks one production's well-formedness in isolation. Never fails; an empty list means
/// clean.
pub fn validate(production: &Production) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |code, message: String| {
        diags.push(Diagnostic {
            code,
            production: production.name.clone(),
            message,
        })
    };

    let arity = production.lhs_label.arity();
    if production.lhs_formals.len() != arity {
        push(
            DiagCode::LhsArityMismatch,
            format!(
                "lhs label {} needs {} formals, got {}",
                production.lhs_label,
                arity,
                production.lhs_formals.len()
            ),
        );
    }

    let mut formals = HashSet::new();
    for f in &production.lhs_formals {
        if !formals.insert(f.as_str()) {
            push(DiagCode::DuplicateFormal, format!("lhs formal `{f}` appears twice"));
        }
    }
    let mut fresh = HashSet::new();
    for f in &production.fresh_names {
        if formals.contains(f.as_str()) {
            push(
                DiagCode::FreshShadowsFormal,
                format!("fresh name `{f}` is also an lhs formal"),
            );
        } else if !fresh.insert(f.as_str()) {
            push(DiagCode::DuplicateFresh, format!("fresh name `{f}` declared twice"));
        }
    }
    let declared = |n: &str| formals.contains(n) || fresh.contains(n);

    for (index, cond) in &production.conditions {
        if *index >= arity {
            push(
                DiagCode::ConditionIndexOutOfRange,
                format!("condition on tentacle {index}, but {} has arity {arity}", production.lhs_label),
            );
        }
        match (&cond.polarity, &cond.action) {
            (Polarity::Idle, None) if cond.comm.is_empty() => {}
            (Polarity::Idle, _) => push(
                DiagCode::MalformedIdle,
                format!("idle condition on tentacle {index} carries an action or names"),
            ),
            (_, None) => push(
                DiagCode::MissingAction,
                format!("condition on tentacle {index} has a polarity but no action"),
            ),
            (_, Some(action)) => {
                if action.comm_arity != cond.comm.len() {
                    push(
                        DiagCode::CommArityMismatch,
                        format!(
                            "action {action} communicates {} names on tentacle {index}",
                            cond.comm.len()
                        ),
                    );
                }
                for name in &cond.comm {
                    if !declared(name) {
                        push(
                            DiagCode::UndeclaredCommName,
                            format!("`{name}` in {}⟨…⟩ is neither an lhs formal nor declared fresh", action.name),
                        );
                    }
                }
            }
        }
    }

    for (label, args) in &production.rhs.edges {
        if args.len() != label.arity() {
            push(
                DiagCode::RhsArityMismatch,
                format!("rhs edge {label} has {} tentacles", args.len()),
            );
        }
        if label.name() == production.lhs_label.name() && label.arity() != arity {
            push(
                DiagCode::LabelArityClash,
                format!("label `{}` used with arities {arity} and {}", label.name(), label.arity()),
            );
        }
        for name in args {
            if !declared(name) {
                push(DiagCode::UndeclaredRhsName, format!("rhs refers to undeclared `{name}`"));
            }
        }
    }
    for name in &production.rhs.nodes {
        if !declared(name) {
            push(DiagCode::UndeclaredRhsName, format!("rhs node `{name}` is undeclared"));
        }
    }
    diags
}

/// Validates every production and cross-checks action signatures, label arities and names
/// across the whole set.
pub fn validate_all(productions: &[Production]) -> Vec<Diagnostic> {
    let mut diags: Vec<Diagnostic> = productions.iter().flat_map(validate).collect();

    let mut names = HashSet::new();
    for p in productions {
        if !names.insert(p.name.as_str()) {
            diags.push(Diagnostic {
                code: DiagCode::DuplicateProduction,
                production: p.name.clone(),
                message: format!("production `{}` defined more than once", p.name),
            });
        }
    }

    // First arity seen wins; every later disagreement is reported against it.
    let mut actions: HashMap<&str, (usize, &str)> = HashMap::new();
    let mut labels: HashMap<&str, (usize, &str)> = HashMap::new();
    for p in productions {
        for action in p.actions() {
            let (arity, first) = *actions
                .entry(action.name.as_str())
                .or_insert((action.comm_arity, p.name.as_str()));
            if arity != action.comm_arity {
                diags.push(Diagnostic {
                    code: DiagCode::ActionArityClash,
                    production: p.name.clone(),
                    message: format!(
                        "action `{}` communicates {} names here but {arity} in `{first}`",
                        action.name, action.comm_arity
                    ),
                });
            }
        }
        let used = std::iter::once(&p.lhs_label).chain(p.rhs.edges.iter().map(|(l, _)| l));
        for label in used {
            let (arity, first) = *labels
                .entry(label.name())
                .or_insert((label.arity(), p.name.as_str()));
            if arity != label.arity() && first != p.name {
                diags.push(Diagnostic {
                    code: DiagCode::LabelArityClash,
                    production: p.name.clone(),
                    message: format!(
                        "label `{}` has arity {} here but {arity} in `{first}`",
                        label.name(),
                        label.arity()
                    ),
                });
            }
        }
    }
    diags
}

/// Hands out node ids that do not collide with a given graph, naming them `n#k` with `k`
/// counting up from zero and skipping names the graph already uses.
#[derive(Clone, Debug)]
pub struct FreshAllocator {
    next_id: u32,
    counter: usize,
    taken: HashSet<String>,
    issued: BTreeMap<NodeId, String>,
}

impl FreshAllocator {
    pub fn for_graph(graph: &Hypergraph) -> Self {
        FreshAllocator {
            next_id: graph.next_node_raw(),
            counter: 0,
            taken: graph.nodes().map(|(_, n)| n.to_string()).collect(),
            issued: BTreeMap::new(),
        }
    }

    pub fn alloc(&mut self) -> NodeId {
        let id = NodeId::from_raw(self.next_id);
        self.next_id += 1;
        let name = loop {
            let candidate = format!("n#{}", self.counter);
            self.counter += 1;
            if !self.taken.contains(&candidate) {
                break candidate;
            }
        };
        self.issued.insert(id, name);
        id
    }

    /// Everything allocated so far, with generated display names.
    pub fn issued(&self) -> &BTreeMap<NodeId, String> {
        &self.issued
    }

    pub fn is_fresh(&self, id: NodeId) -> bool {
        self.issued.contains_key(&id)
    }
}

/// A condition after instantiation: communicated names replaced by concrete node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundCondition {
    pub edge: EdgeId,
    pub tentacle: usize,
    pub node: NodeId,
    pub polarity: Polarity,
    pub action: ActionSig,
    pub comm: Vec<NodeId>,
}

/// A production bound to one concrete edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstantiatedRule {
    pub edge: EdgeId,
    pub conditions: Vec<GroundCondition>,
    /// Fresh formal name to the node id it was bound to.
    pub fresh: Vec<(String, NodeId)>,
    pub rhs_edges: Vec<(Label, Vec<NodeId>)>,
    pub rhs_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("production `{production}` rewrites `{expected}` edges, not `{found}`")]
    LabelMismatch {
        production: String,
        expected: String,
        found: String,
    },
    #[error("production `{0}` is not well-formed")]
    Invalid(String),
}

/// Binds `production` to `edge`: formal `i` becomes the edge's `i`-th tentacle target, each
/// fresh name gets a newly allocated node (or the node pinned for it in `pins`).
pub fn instantiate(
    production: &Production,
    edge: &Hyperedge,
    pins: &BTreeMap<String, NodeId>,
    fresh: &mut FreshAllocator,
) -> Result<InstantiatedRule, InstantiateError> {
    if edge.label() != &production.lhs_label {
        return Err(InstantiateError::LabelMismatch {
            production: production.name.clone(),
            expected: production.lhs_label.to_string(),
            found: edge.label().to_string(),
        });
    }
    if production.lhs_formals.len() != edge.tentacles().len() {
        return Err(InstantiateError::Invalid(production.name.clone()));
    }

    let mut env: HashMap<&str, NodeId> = production
        .lhs_formals
        .iter()
        .map(String::as_str)
        .zip(edge.tentacles().iter().copied())
        .collect();
    let mut bound_fresh = Vec::with_capacity(production.fresh_names.len());
    for name in &production.fresh_names {
        let id = pins.get(name).copied().unwrap_or_else(|| fresh.alloc());
        env.insert(name, id);
        bound_fresh.push((name.clone(), id));
    }
    let lookup = |name: &String| {
        env.get(name.as_str())
            .copied()
            .ok_or_else(|| InstantiateError::Invalid(production.name.clone()))
    };

    let mut conditions = Vec::new();
    for (tentacle, cond) in production.active_conditions() {
        let action = cond
            .action
            .clone()
            .ok_or_else(|| InstantiateError::Invalid(production.name.clone()))?;
        let node = *edge
            .tentacles()
            .get(tentacle)
            .ok_or_else(|| InstantiateError::Invalid(production.name.clone()))?;
        conditions.push(GroundCondition {
            edge: edge.id(),
            tentacle,
            node,
            polarity: cond.polarity,
            action,
            comm: cond.comm.iter().map(lookup).collect::<Result<_, _>>()?,
        });
    }

    let rhs_edges = production
        .rhs
        .edges
        .iter()
        .map(|(label, args)| Ok((label.clone(), args.iter().map(lookup).collect::<Result<_, _>>()?)))
        .collect::<Result<_, InstantiateError>>()?;
    let rhs_nodes = production.rhs.nodes.iter().map(lookup).collect::<Result<_, _>>()?;

    Ok(InstantiatedRule {
        edge: edge.id(),
        conditions,
        fresh: bound_fresh,
        rhs_edges,
        rhs_nodes,
    })
}

/// Every node name a production mentions anywhere.
pub fn declared_names(production: &Production) -> BTreeSet<&str> {
    production
        .lhs_formals
        .iter()
        .chain(production.fresh_names.iter())
        .map(String::as_str)
        .collect()
}
