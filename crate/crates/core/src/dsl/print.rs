use std::fmt::Write;

use super::{ScenarioStep, SpecFile};
use crate::hypergraph::Hypergraph;
use crate::manager::{CommArg, Guard, PolicyRule};
use crate::production::{Condition, Polarity, Production};

const INDENT: &str = "  ";

fn action_text(name: &str) -> String {
    match name.strip_suffix("_store") {
        Some(base) if !base.is_empty() => format!("{base}[store]"),
        _ => name.to_string(),
    }
}

fn graph_body(out: &mut String, graph: &Hypergraph, depth: usize) {
    let pad = INDENT.repeat(depth);
    let names: Vec<&str> = graph.nodes().map(|(_, n)| n).collect();
    if !names.is_empty() {
        writeln!(out, "{pad}node {};", names.join(", ")).unwrap();
    }
    for edge in graph.edges() {
        let args: Vec<&str> = edge
            .tentacles()
            .iter()
            .map(|n| graph.display_name(*n).unwrap_or("?"))
            .collect();
        let prefix = edge.name().map(|n| format!("{n}: ")).unwrap_or_default();
        writeln!(out, "{pad}edge {prefix}{}({});", edge.label().name(), args.join(", ")).unwrap();
    }
}

/// Canonical `graph { ... }` block. Nodes appear in id order, then edges in id order; ids
/// themselves are not printed.
pub fn print_graph(graph: &Hypergraph) -> String {
    let mut out = String::from("graph {\n");
    graph_body(&mut out, graph, 1);
    out.push_str("}\n");
    out
}

fn condition(out: &mut String, index: usize, cond: &Condition) {
    write!(out, "{INDENT}on {index}: ").unwrap();
    match (&cond.polarity, &cond.action) {
        (Polarity::Idle, _) | (_, None) => out.push_str("idle"),
        (polarity, Some(action)) => {
            let bang = if *polarity == Polarity::Output { "!" } else { "" };
            write!(out, "{}{bang}({})", action_text(&action.name), cond.comm.join(", ")).unwrap();
        }
    }
    out.push_str(";\n");
}

fn production(out: &mut String, p: &Production) {
    writeln!(
        out,
        "production {} for {}({}) {{",
        p.name,
        p.lhs_label.name(),
        p.lhs_formals.join(", ")
    )
    .unwrap();
    if !p.fresh_names.is_empty() {
        writeln!(out, "{INDENT}new {};", p.fresh_names.join(", ")).unwrap();
    }
    for (index, cond) in &p.conditions {
        condition(out, *index, cond);
    }
    writeln!(out, "{INDENT}rhs {{").unwrap();
    for (label, args) in &p.rhs.edges {
        writeln!(out, "{INDENT}{INDENT}edge {}({});", label.name(), args.join(", ")).unwrap();
    }
    if !p.rhs.nodes.is_empty() {
        writeln!(out, "{INDENT}{INDENT}node {};", p.rhs.nodes.join(", ")).unwrap();
    }
    writeln!(out, "{INDENT}}}").unwrap();
    out.push_str("}\n");
}

fn guard(g: &Guard) -> String {
    let wrap = |g: &Guard, when: fn(&Guard) -> bool| {
        if when(g) {
            format!("({})", guard(g))
        } else {
            guard(g)
        }
    };
    let is_or = |g: &Guard| matches!(g, Guard::Or(..));
    let is_binary = |g: &Guard| matches!(g, Guard::Or(..) | Guard::And(..));
    match g {
        Guard::True => "true".to_string(),
        Guard::Count { label, op, value } => format!("count({label}) {} {value}", op.symbol()),
        Guard::Exists { label, tentacle, node } => format!("exists({label}, {tentacle}, {node})"),
        Guard::Not(inner) => format!("!{}", wrap(inner, is_binary)),
        Guard::And(a, b) => format!("{} && {}", wrap(a, is_or), wrap(b, is_binary)),
        Guard::Or(a, b) => format!("{} || {}", guard(a), wrap(b, is_or)),
    }
}

fn comm_arg(arg: &CommArg) -> String {
    match arg {
        CommArg::Fresh => "new".to_string(),
        CommArg::Port => "port".to_string(),
        CommArg::Location => "loc".to_string(),
        CommArg::Node(n) => n.clone(),
        CommArg::Payload(k) => format!("${k}"),
    }
}

fn rule(out: &mut String, r: &PolicyRule) {
    write!(out, "{INDENT}when {}", r.event).unwrap();
    if r.guard != Guard::True {
        write!(out, " if {}", guard(&r.guard)).unwrap();
    }
    write!(out, " then {}(target {}", r.action.name(), r.target).unwrap();
    if !r.args.is_empty() {
        let args: Vec<String> = r.args.iter().map(comm_arg).collect();
        write!(out, "; {}", args.join(", ")).unwrap();
    }
    out.push_str(");\n");
}

fn step(out: &mut String, s: &ScenarioStep) {
    match s {
        ScenarioStep::Inject(event) => {
            write!(out, "{INDENT}inject {}", event.name).unwrap();
            if !event.payload.is_empty() {
                let pairs: Vec<String> = event.payload.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                write!(out, "({})", pairs.join(", ")).unwrap();
            }
            out.push_str(";\n");
        }
        ScenarioStep::Apply(index) => writeln!(out, "{INDENT}apply {index};").unwrap(),
        ScenarioStep::AssertCount { label, op, value } => {
            writeln!(out, "{INDENT}assert count({label}) {} {value};", op.symbol()).unwrap()
        }
        ScenarioStep::AssertIso(graph) => {
            writeln!(out, "{INDENT}assert iso {{").unwrap();
            graph_body(out, graph, 2);
            writeln!(out, "{INDENT}}}").unwrap();
        }
    }
}

/// Canonical text: labels, graph, productions (by name), rules, scenario, separated by blank
/// lines. Empty sections are left out, except an empty scenario, which is kept.
pub fn serialize(spec: &SpecFile) -> String {
    let mut sections: Vec<String> = Vec::new();

    if !spec.labels.is_empty() {
        let mut s = String::from("labels {\n");
        for label in &spec.labels {
            writeln!(s, "{INDENT}{}/{};", label.name(), label.arity()).unwrap();
        }
        s.push_str("}\n");
        sections.push(s);
    }
    if spec.graph.node_count() + spec.graph.edge_count() > 0 {
        sections.push(print_graph(&spec.graph));
    }
    let mut productions: Vec<&Production> = spec.productions.iter().collect();
    productions.sort_by(|a, b| a.name.cmp(&b.name));
    for p in productions {
        let mut s = String::new();
        production(&mut s, p);
        sections.push(s);
    }
    if !spec.rules.is_empty() {
        let mut s = String::from("rule {\n");
        for r in &spec.rules {
            rule(&mut s, r);
        }
        s.push_str("}\n");
        sections.push(s);
    }
    if let Some(steps) = &spec.scenario {
        let mut s = String::from("scenario {\n");
        for st in steps {
            step(&mut s, st);
        }
        s.push_str("}\n");
        sections.push(s);
    }
    sections.join("\n")
}
