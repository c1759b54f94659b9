//! Backtracking isomorphism test for desk-scale hypergraphs.
//!
//! Nodes are first bucketed by an incidence signature (the sorted multiset of
//! `(label, arity, tentacle position)` they are attached through). Edges of the first graph are
//! then mapped one at a time onto unused edges of the second with the same label, extending an
//! injective node map along the tentacles. Isolated nodes are matched by count.

use std::collections::{BTreeMap, HashMap};

use super::{EdgeId, Hyperedge, Hypergraph, Label, NodeId};

type Signature = Vec<(Label, usize)>;

fn signatures(graph: &Hypergraph) -> HashMap<NodeId, Signature> {
    let mut sig: HashMap<NodeId, Signature> = graph.node_ids().map(|n| (n, Vec::new())).collect();
    for edge in graph.edges() {
        for (i, t) in edge.tentacles().iter().enumerate() {
            sig.entry(*t).or_default().push((edge.label().clone(), i));
        }
    }
    for s in sig.values_mut() {
        s.sort();
    }
    sig
}

fn histogram<K: Ord + Clone>(items: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut h = BTreeMap::new();
    for k in items {
        *h.entry(k).or_insert(0) += 1;
    }
    h
}

struct Search<'a> {
    a_edges: Vec<&'a Hyperedge>,
    b_by_label: HashMap<&'a Label, Vec<&'a Hyperedge>>,
    sig_a: HashMap<NodeId, Signature>,
    sig_b: HashMap<NodeId, Signature>,
    node_map: HashMap<NodeId, NodeId>,
    used_targets: HashMap<NodeId, NodeId>,
    used_edges: Vec<EdgeId>,
}

impl<'a> Search<'a> {
    fn extend(&mut self, depth: usize) -> bool {
        let Some(edge) = self.a_edges.get(depth).copied() else {
            return true;
        };
        let candidates = self.b_by_label.get(edge.label()).cloned().unwrap_or_default();
        for cand in candidates {
            if self.used_edges.contains(&cand.id()) {
                continue;
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (x, y) in edge.tentacles().iter().zip(cand.tentacles()) {
                match (self.node_map.get(x), self.used_targets.get(y)) {
                    (Some(mapped), _) if mapped == y => {}
                    (None, None) if self.sig_a[x] == self.sig_b[y] => {
                        self.node_map.insert(*x, *y);
                        self.used_targets.insert(*y, *x);
                        added.push(*x);
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.used_edges.push(cand.id());
                if self.extend(depth + 1) {
                    return true;
                }
                self.used_edges.pop();
            }
            for x in added {
                if let Some(y) = self.node_map.remove(&x) {
                    self.used_targets.remove(&y);
                }
            }
        }
        false
    }
}

/// Whether there is a node bijection and a label- and tentacle-order-preserving edge bijection
/// between `a` and `b`. Display names and edge names are ignored.
pub fn is_isomorphic(a: &Hypergraph, b: &Hypergraph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let sig_a = signatures(a);
    let sig_b = signatures(b);
    if histogram(sig_a.values().cloned()) != histogram(sig_b.values().cloned()) {
        return false;
    }

    let mut a_edges: Vec<&Hyperedge> = a.edges().collect();
    // Rarest labels first prunes earlier.
    let label_freq = histogram(a.edges().map(|e| e.label().clone()));
    a_edges.sort_by_key(|e| (label_freq[e.label()], e.id()));

    let mut b_by_label: HashMap<&Label, Vec<&Hyperedge>> = HashMap::new();
    for e in b.edges() {
        b_by_label.entry(e.label()).or_default().push(e);
    }

    let mut search = Search {
        a_edges,
        b_by_label,
        sig_a,
        sig_b,
        node_map: HashMap::new(),
        used_targets: HashMap::new(),
        used_edges: Vec::new(),
    };
    search.extend(0)
}
