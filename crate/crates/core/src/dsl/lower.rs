//! Name resolution: turns parsed items into a [`SpecFile`], reporting unresolved names and
//! arity problems against the span where they occur.

use std::collections::{BTreeMap, BTreeSet};

use super::parser::{GraphStmt, Item, RawCondKind, RawProduction, RawRule, RawStep, RawUse};
use super::{DslError, ScenarioStep, SourceSpan, SpecFile};
use crate::gcm::{self, am_emitter, AdaptOp, CommSpec};
use crate::hypergraph::{Hypergraph, Label};
use crate::manager::{CommArg, Guard, PolicyRule, TargetSelector};
use crate::production::{validate_all, Condition, Production};

struct Labels {
    declared: BTreeMap<String, usize>,
    builtin: BTreeMap<String, usize>,
    used_builtin: BTreeSet<String>,
}

impl Labels {
    fn resolve(&mut self, name: &str, span: SourceSpan, errors: &mut Vec<DslError>) -> Option<Label> {
        if let Some(&arity) = self.declared.get(name) {
            return Some(Label::new(name, arity));
        }
        if let Some(&arity) = self.builtin.get(name) {
            self.used_builtin.insert(name.to_string());
            return Some(Label::new(name, arity));
        }
        errors.push(DslError::new("UNKNOWN_LABEL", format!("label `{name}` is not declared"), span));
        None
    }

    /// Records a label that a library production brings along.
    fn require(&mut self, label: &Label, span: SourceSpan, errors: &mut Vec<DslError>) {
        match self.declared.get(label.name()) {
            Some(&arity) if arity != label.arity() => errors.push(DslError::new(
                "LABEL_ARITY_CLASH",
                format!("label `{}` is declared /{arity} but the library uses {label}", label.name()),
                span,
            )),
            Some(_) => {}
            None => {
                self.used_builtin.insert(label.name().to_string());
            }
        }
    }

    fn into_sorted(self) -> Vec<Label> {
        let mut all: BTreeMap<String, usize> = self.declared;
        for name in self.used_builtin {
            let arity = self.builtin[&name];
            all.entry(name).or_insert(arity);
        }
        all.into_iter().map(|(n, a)| Label::new(n, a)).collect()
    }
}

fn lower_graph(stmts: &[GraphStmt], labels: &mut Labels, errors: &mut Vec<DslError>) -> Hypergraph {
    let mut graph = Hypergraph::new();
    for stmt in stmts {
        if let GraphStmt::Nodes(names) = stmt {
            for (name, span) in names {
                if graph.node_by_name(name).is_some() {
                    errors.push(DslError::new("DUPLICATE_NODE", format!("node `{name}` declared twice"), *span));
                } else {
                    graph.insert_node(name.clone());
                }
            }
        }
    }
    for stmt in stmts {
        let GraphStmt::Edge { name, label, args } = stmt else {
            continue;
        };
        let Some(resolved) = labels.resolve(&label.0, label.1, errors) else {
            continue;
        };
        if args.len() != resolved.arity() {
            errors.push(DslError::new(
                "ARITY_MISMATCH",
                format!("{} takes {} nodes, {} given", resolved.name(), resolved.arity(), args.len()),
                label.1,
            ));
            continue;
        }
        let mut tentacles = Vec::with_capacity(args.len());
        for (arg, span) in args {
            match graph.node_by_name(arg) {
                Some(id) => tentacles.push(id),
                None => errors.push(DslError::new("UNKNOWN_NODE", format!("node `{arg}` is not declared"), *span)),
            }
        }
        if tentacles.len() != args.len() {
            continue;
        }
        let edge_name = match name {
            Some((n, span)) => {
                if graph.edge_by_name(n).is_some() {
                    errors.push(DslError::new("DUPLICATE_EDGE", format!("edge `{n}` declared twice"), *span));
                    continue;
                }
                Some(n.clone())
            }
            None => None,
        };
        graph
            .insert_named_edge(&resolved, &tentacles, edge_name)
            .expect("arity and nodes were checked");
    }
    graph
}

fn lower_production(raw: &RawProduction, labels: &mut Labels, errors: &mut Vec<DslError>) -> Option<Production> {
    let lhs = labels.resolve(&raw.label.0, raw.label.1, errors)?;
    let formals: Vec<&str> = raw.formals.iter().map(|(n, _)| n.as_str()).collect();
    let fresh: Vec<&str> = raw.fresh.iter().map(|(n, _)| n.as_str()).collect();
    let mut prod = Production::new(raw.name.0.clone(), lhs, &formals).fresh(&fresh);

    for cond in &raw.conds {
        if prod.conditions.contains_key(&cond.index) {
            errors.push(DslError::new(
                "DUPLICATE_CONDITION",
                format!("tentacle {} already has a condition", cond.index),
                cond.span,
            ));
            continue;
        }
        let condition = match &cond.kind {
            RawCondKind::Idle => Condition::idle(),
            RawCondKind::Action { name, output, args } => {
                let comm: Vec<&str> = args.iter().map(|(n, _)| n.as_str()).collect();
                if *output {
                    Condition::output(name, &comm)
                } else {
                    Condition::input(name, &comm)
                }
            }
        };
        prod = prod.on(cond.index, condition);
    }

    for stmt in &raw.rhs {
        match stmt {
            GraphStmt::Nodes(names) => {
                for (n, _) in names {
                    prod = prod.rhs_node(n);
                }
            }
            GraphStmt::Edge { name, label, args } => {
                if let Some((_, span)) = name {
                    errors.push(DslError::new("NAMED_RHS_EDGE", "rhs edges cannot be named", *span));
                }
                if let Some(l) = labels.resolve(&label.0, label.1, errors) {
                    let args: Vec<&str> = args.iter().map(|(n, _)| n.as_str()).collect();
                    prod = prod.rhs_edge(&l, &args);
                }
            }
        }
    }
    Some(prod)
}

fn lower_use(raw: &RawUse, labels: &mut Labels, errors: &mut Vec<DslError>) -> Option<(Production, SourceSpan)> {
    match raw {
        RawUse::Library((name, span)) => {
            let Some(prod) = gcm::library_production(name) else {
                errors.push(DslError::new(
                    "UNKNOWN_LIBRARY_NAME",
                    format!("`{name}` is not a library production"),
                    *span,
                ));
                return None;
            };
            let used: BTreeSet<&Label> = std::iter::once(&prod.lhs_label)
                .chain(prod.rhs.edges.iter().map(|(l, _)| l))
                .collect();
            for label in used {
                labels.require(label, *span, errors);
            }
            Some((prod, *span))
        }
        RawUse::Emit { action, args, alias } => {
            let sig = AdaptOp::from_name(&action.0)
                .map(AdaptOp::action)
                .or_else(|| gcm::actions::all().into_iter().find(|a| a.name == action.0));
            let Some(sig) = sig else {
                errors.push(DslError::new(
                    "UNKNOWN_OP",
                    format!("`{}` is neither an adaptation nor a library action", action.0),
                    action.1,
                ));
                return None;
            };
            let mut spec = Vec::new();
            for (arg, span) in args {
                spec.push(match arg.as_str() {
                    "port" => CommSpec::Existing(0),
                    "loc" => CommSpec::Existing(1),
                    "new" => CommSpec::Fresh,
                    other => {
                        errors.push(DslError::new(
                            "UNKNOWN_COMM_SPEC",
                            format!("`{other}` is not one of port, loc, new"),
                            *span,
                        ));
                        return None;
                    }
                });
            }
            let mut prod = match am_emitter(&sig, &spec) {
                Ok(p) => p,
                Err(e) => {
                    errors.push(DslError::new("EMIT_ARITY_MISMATCH", e.to_string(), action.1));
                    return None;
                }
            };
            labels.require(&prod.lhs_label, action.1, errors);
            if let Some((alias, _)) = alias {
                prod.name = alias.clone();
            }
            Some((prod, action.1))
        }
    }
}

fn guard_labels(guard: &Guard, span: SourceSpan, labels: &mut Labels, errors: &mut Vec<DslError>) {
    match guard {
        Guard::True => {}
        Guard::Count { label, .. } | Guard::Exists { label, .. } => {
            labels.resolve(label, span, errors);
        }
        Guard::Not(g) => guard_labels(g, span, labels, errors),
        Guard::And(a, b) | Guard::Or(a, b) => {
            guard_labels(a, span, labels, errors);
            guard_labels(b, span, labels, errors);
        }
    }
}

/// Returns the rule together with the emitter it would arm, for cross-validation.
fn lower_rule(
    raw: &RawRule,
    graph: &Hypergraph,
    labels: &mut Labels,
    errors: &mut Vec<DslError>,
) -> Option<(PolicyRule, Production)> {
    let before = errors.len();
    let Some(action) = AdaptOp::from_name(&raw.op.0) else {
        errors.push(DslError::new("UNKNOWN_OP", format!("`{}` is not an adaptation", raw.op.0), raw.op.1));
        return None;
    };
    guard_labels(&raw.guard, raw.span, labels, errors);
    labels.require(&gcm::am_label(), raw.span, errors);
    match &raw.target {
        TargetSelector::Named(name) => {
            if graph.edge_by_name(name).is_none() {
                errors.push(DslError::new("UNKNOWN_EDGE", format!("no edge named `{name}`"), raw.op.1));
            }
        }
        TargetSelector::Ordinal { label, .. } => {
            labels.resolve(label, raw.op.1, errors);
        }
    }
    for arg in &raw.args {
        if let CommArg::Node(name) = arg {
            if graph.node_by_name(name).is_none() {
                errors.push(DslError::new("UNKNOWN_NODE", format!("node `{name}` is not declared"), raw.span));
            }
        }
    }
    let rule = PolicyRule {
        event: raw.event.clone(),
        guard: raw.guard.clone(),
        action,
        target: raw.target.clone(),
        args: raw.args.clone(),
    };
    if let Err(message) = rule.check() {
        errors.push(DslError::new("EMIT_ARITY_MISMATCH", message, raw.op.1));
        return None;
    }
    let spec: Vec<CommSpec> = rule
        .args
        .iter()
        .map(|a| match a {
            CommArg::Port => CommSpec::Existing(0),
            CommArg::Location => CommSpec::Existing(1),
            _ => CommSpec::Fresh,
        })
        .collect();
    let emitter = am_emitter(&action.action(), &spec).ok()?;
    (errors.len() == before).then_some((rule, emitter))
}

pub(crate) fn lower(items: Vec<Item>, errors: &mut Vec<DslError>) -> SpecFile {
    let mut labels = Labels {
        declared: BTreeMap::new(),
        builtin: gcm::GcmLabels::default()
            .all()
            .iter()
            .map(|l| (l.name().to_string(), l.arity()))
            .collect(),
        used_builtin: BTreeSet::new(),
    };

    let mut graph_stmts = Vec::new();
    let mut raw_productions = Vec::new();
    let mut uses = Vec::new();
    let mut raw_rules = Vec::new();
    let mut raw_steps: Option<Vec<(RawStep, SourceSpan)>> = None;
    for item in items {
        match item {
            Item::Labels(decls) => {
                for ((name, span), arity) in decls {
                    match labels.declared.get(&name) {
                        Some(&a) if a != arity => errors.push(DslError::new(
                            "LABEL_ARITY_CLASH",
                            format!("label `{name}` declared with arities {a} and {arity}"),
                            span,
                        )),
                        _ => {
                            labels.declared.insert(name, arity);
                        }
                    }
                }
            }
            Item::Graph(stmts) => graph_stmts.extend(stmts),
            Item::Production(p) => raw_productions.push(p),
            Item::Use(u) => uses.extend(u),
            Item::Rules(r) => raw_rules.extend(r),
            Item::Scenario(steps) => raw_steps.get_or_insert_with(Vec::new).extend(steps),
        }
    }

    let graph = lower_graph(&graph_stmts, &mut labels, errors);

    let mut productions: Vec<(Production, SourceSpan)> = Vec::new();
    for raw in &raw_productions {
        if let Some(p) = lower_production(raw, &mut labels, errors) {
            productions.push((p, raw.name.1));
        }
    }
    for u in &uses {
        if let Some(entry) = lower_use(u, &mut labels, errors) {
            productions.push(entry);
        }
    }

    let mut rules = Vec::new();
    let mut checked: Vec<(Production, SourceSpan)> = productions.clone();
    for (i, raw) in raw_rules.iter().enumerate() {
        if let Some((rule, mut emitter)) = lower_rule(raw, &graph, &mut labels, errors) {
            emitter.name = format!("rule#{i}");
            checked.push((emitter, raw.span));
            rules.push(rule);
        }
    }

    let spans: BTreeMap<&str, SourceSpan> = checked
        .iter()
        .rev()
        .map(|(p, span)| (p.name.as_str(), *span))
        .collect();
    let only: Vec<Production> = checked.iter().map(|(p, _)| p.clone()).collect();
    for diag in validate_all(&only) {
        let span = spans.get(diag.production.as_str()).copied().unwrap_or(SourceSpan { line: 1, column: 1, offset: 0 });
        errors.push(DslError::new(diag.code.as_str(), diag.message, span));
    }

    let scenario = raw_steps.map(|steps| {
        steps
            .into_iter()
            .filter_map(|(step, span)| match step {
                RawStep::Inject(event) => Some(ScenarioStep::Inject(event)),
                RawStep::Apply(index) => Some(ScenarioStep::Apply(index)),
                RawStep::AssertCount { label, op, value } => {
                    labels.resolve(&label, span, errors)?;
                    Some(ScenarioStep::AssertCount { label, op, value })
                }
                RawStep::AssertIso(stmts) => Some(ScenarioStep::AssertIso(lower_graph(&stmts, &mut labels, errors))),
            })
            .collect()
    });

    let mut productions: Vec<Production> = productions.into_iter().map(|(p, _)| p).collect();
    productions.sort_by(|a, b| a.name.cmp(&b.name));

    SpecFile {
        labels: labels.into_sorted(),
        graph,
        productions,
        rules,
        scenario,
    }
}
