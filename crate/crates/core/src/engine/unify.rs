use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::hypergraph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    /// Two distinct pre-existing nodes ended up in one class.
    #[error("synchronization would fuse existing nodes {0} and {1}")]
    ExistingNodeFusion(NodeId, NodeId),
}

/// Disjoint-set forest over dense indices, path halving plus union by size.
struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(len: usize) -> Self {
        DisjointSets {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Closes `equations` under union-find and maps every non-representative to its class
/// representative. A pre-existing node always represents its class; otherwise the smallest
/// (earliest allocated) id does.
pub fn unify(
    equations: &[(NodeId, NodeId)],
    pre_existing: &BTreeSet<NodeId>,
) -> Result<BTreeMap<NodeId, NodeId>, UnifyError> {
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    let mut members: Vec<NodeId> = Vec::new();
    let mut slot = |n: NodeId| {
        *index.entry(n).or_insert_with(|| {
            members.push(n);
            members.len() - 1
        })
    };
    let pairs: Vec<(usize, usize)> = equations.iter().map(|(a, b)| (slot(*a), slot(*b))).collect();

    let mut sets = DisjointSets::new(members.len());
    for (a, b) in pairs {
        sets.union(a, b);
    }

    let mut classes: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (i, n) in members.iter().enumerate() {
        classes.entry(sets.find(i)).or_default().push(*n);
    }

    let mut fusion = BTreeMap::new();
    for class in classes.values() {
        let mut existing = class.iter().filter(|n| pre_existing.contains(n));
        let rep = match (existing.next(), existing.next()) {
            (Some(a), Some(b)) => {
                let (a, b) = if a < b { (*a, *b) } else { (*b, *a) };
                return Err(UnifyError::ExistingNodeFusion(a, b));
            }
            (Some(a), None) => *a,
            _ => *class.iter().min().expect("classes are non-empty"),
        };
        for n in class {
            if *n != rep {
                fusion.insert(*n, rep);
            }
        }
    }
    Ok(fusion)
}
