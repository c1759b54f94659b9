use std::fmt::Write;

use super::Hypergraph;

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as an undirected DOT graph: nodes become points carrying their display
/// name, each hyperedge becomes a box with one numbered link per tentacle.
pub fn to_dot(graph: &Hypergraph) -> String {
    let mut out = String::from("graph hypergraph {\n");
    for (id, name) in graph.nodes() {
        let _ = writeln!(
            out,
            "  n{} [shape=point, xlabel=\"{}\"];",
            id.raw(),
            escape(name)
        );
    }
    for edge in graph.edges() {
        let _ = writeln!(
            out,
            "  e{} [shape=box, label=\"{}\"];",
            edge.id().raw(),
            escape(edge.label().name())
        );
    }
    for edge in graph.edges() {
        for (i, t) in edge.tentacles().iter().enumerate() {
            let _ = writeln!(out, "  e{} -- n{} [label=\"{}\"];", edge.id().raw(), t.raw(), i);
        }
    }
    out.push_str("}\n");
    out
}
