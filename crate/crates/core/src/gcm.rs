//! The GCM adaptation library: migration (`go`, `start`), replication (`rep_share`,
//! `rep_fresh`, `copy`), `kill`, the store's duplication rule, and Autonomic Manager emitters.
//!
//! Tentacle roles are fixed library-wide:
//!
//! | label   | 0            | 1        | 2     |
//! |---------|--------------|----------|-------|
//! | `f`     | manager port | location | store |
//! | `am`    | manager port | location |       |
//! | `sigma` | store        |          |       |
//!
//! The manager-to-component replication signal and the component-to-store duplication signal
//! are both conventionally called `rep`, with different vector lengths. They are kept apart as
//! `rep` (2 names) and `rep_store` (1 name) so every action has exactly one signature.

use thiserror::Error;

use crate::hypergraph::Label;
use crate::production::{ActionSig, Condition, Production};

pub const F: &str = "f";
pub const AM: &str = "am";
pub const SIGMA: &str = "sigma";

pub fn f_label() -> Label {
    Label::new(F, 3)
}

pub fn am_label() -> Label {
    Label::new(AM, 2)
}

pub fn sigma_label() -> Label {
    Label::new(SIGMA, 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcmLabels {
    pub f: Label,
    pub am: Label,
    pub sigma: Label,
}

impl Default for GcmLabels {
    fn default() -> Self {
        GcmLabels {
            f: f_label(),
            am: am_label(),
            sigma: sigma_label(),
        }
    }
}

impl GcmLabels {
    pub fn all(&self) -> [&Label; 3] {
        [&self.f, &self.am, &self.sigma]
    }
}

pub mod actions {
    use crate::production::ActionSig;

    pub fn go() -> ActionSig {
        ActionSig::new("go", 2)
    }
    pub fn start_sigma() -> ActionSig {
        ActionSig::new("start_sigma", 3)
    }
    pub fn rep() -> ActionSig {
        ActionSig::new("rep", 2)
    }
    pub fn rep_sigma() -> ActionSig {
        ActionSig::new("rep_sigma", 2)
    }
    pub fn copy() -> ActionSig {
        ActionSig::new("copy", 3)
    }
    pub fn kill() -> ActionSig {
        ActionSig::new("kill", 0)
    }
    pub fn rep_store() -> ActionSig {
        ActionSig::new("rep_store", 1)
    }

    pub fn all() -> Vec<ActionSig> {
        vec![go(), start_sigma(), rep(), rep_sigma(), copy(), kill(), rep_store()]
    }
}

/// Migration keeping the store: `f(g,l,s)` receives `go⟨g2,l2⟩` on its manager port and
/// becomes `f(g2,l2,s)`. `g` and `l` stay behind as nodes.
pub fn go_production() -> Production {
    Production::new("go", f_label(), &["g", "l", "s"])
        .fresh(&["g2", "l2"])
        .on(0, Condition::input("go", &["g2", "l2"]))
        .rhs_edge(&f_label(), &["g2", "l2", "s"])
        .rhs_node("g")
        .rhs_node("l")
}

/// Migration onto a new store: `start_sigma⟨g2,l2,s2⟩` moves `f` and attaches it to a new
/// `sigma` on `s2`. The old store is left where it was.
pub fn start_production() -> Production {
    Production::new("start", f_label(), &["g", "l", "s"])
        .fresh(&["g2", "l2", "s2"])
        .on(0, Condition::input("start_sigma", &["g2", "l2", "s2"]))
        .rhs_edge(&f_label(), &["g2", "l2", "s2"])
        .rhs_edge(&sigma_label(), &["s2"])
        .rhs_node("g")
        .rhs_node("l")
        .rhs_node("s")
}

/// Replication sharing external state: the replica hangs off the same store node `s`.
pub fn rep_share_production() -> Production {
    Production::new("rep_share", f_label(), &["g", "l", "s"])
        .fresh(&["g2", "l2"])
        .on(0, Condition::input("rep", &["g2", "l2"]))
        .rhs_edge(&f_label(), &["g", "l", "s"])
        .rhs_edge(&f_label(), &["g2", "l2", "s"])
}

/// Replication with a fresh state: the replica gets a brand-new store `s3` that is not
/// communicated to anyone.
pub fn rep_fresh_production() -> Production {
    Production::new("rep_fresh", f_label(), &["g", "l", "s"])
        .fresh(&["g2", "l2", "s3"])
        .on(0, Condition::input("rep_sigma", &["g2", "l2"]))
        .rhs_edge(&f_label(), &["g", "l", "s"])
        .rhs_edge(&f_label(), &["g2", "l2", "s3"])
        .rhs_edge(&sigma_label(), &["s3"])
}

/// Replication with a copied state. Synchronizes on two nodes at once: `copy⟨g2,s2,l2⟩` from
/// the manager on `g`, and `rep_store⟨s2⟩` offered to the store on `s`. The shared fresh `s2`
/// is where the duplicated store ends up.
pub fn copy_production() -> Production {
    Production::new("copy", f_label(), &["g", "l", "s"])
        .fresh(&["g2", "s2", "l2"])
        .on(0, Condition::input("copy", &["g2", "s2", "l2"]))
        .on(2, Condition::output("rep_store", &["s2"]))
        .rhs_edge(&f_label(), &["g", "l", "s"])
        .rhs_edge(&f_label(), &["g2", "l2", "s2"])
}

/// The store's answer to `rep_store`: duplicate onto the communicated node.
pub fn store_rep_production() -> Production {
    Production::new("store_rep", sigma_label(), &["s"])
        .fresh(&["s2"])
        .on(0, Condition::input("rep_store", &["s2"]))
        .rhs_edge(&sigma_label(), &["s"])
        .rhs_edge(&sigma_label(), &["s2"])
}

/// `f` disappears; its three nodes remain.
pub fn kill_production() -> Production {
    Production::new("kill", f_label(), &["g", "l", "s"])
        .on(0, Condition::input("kill", &[]))
        .rhs_node("g")
        .rhs_node("l")
        .rhs_node("s")
}

/// Every component- and store-side library production, in name order.
pub fn library() -> Vec<Production> {
    let mut all = vec![
        copy_production(),
        go_production(),
        kill_production(),
        rep_fresh_production(),
        rep_share_production(),
        start_production(),
        store_rep_production(),
    ];
    all.sort_by(|a, b| a.name.cmp(&b.name));
    all
}

/// Looks a library production up by its reserved name.
pub fn library_production(name: &str) -> Option<Production> {
    library().into_iter().find(|p| p.name == name)
}

/// One entry of an emitter's communicated vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommSpec {
    /// The node on this tentacle of the `am` edge (0 = manager port, 1 = location).
    Existing(usize),
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GcmError {
    #[error("action {action} communicates {expected} names, {found} given")]
    ArityMismatch {
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("am has 2 tentacles, tentacle {0} does not exist")]
    NoSuchTentacle(usize),
}

/// Builds the manager-side production `am(g,l) --action!⟨…⟩--> am(g,l)`, with the output
/// condition on the manager port. Fresh entries are declared as `c<i>` (`i` = vector
/// position).
pub fn am_emitter(action: &ActionSig, comm_spec: &[CommSpec]) -> Result<Production, GcmError> {
    if comm_spec.len() != action.comm_arity {
        return Err(GcmError::ArityMismatch {
            action: action.name.clone(),
            expected: action.comm_arity,
            found: comm_spec.len(),
        });
    }
    let formals = ["g", "l"];
    let mut fresh = Vec::new();
    let mut comm = Vec::new();
    for (i, spec) in comm_spec.iter().enumerate() {
        match spec {
            CommSpec::Existing(t) => comm.push(
                formals
                    .get(*t)
                    .ok_or(GcmError::NoSuchTentacle(*t))?
                    .to_string(),
            ),
            CommSpec::Fresh => {
                let name = format!("c{i}");
                fresh.push(name.clone());
                comm.push(name);
            }
        }
    }
    let name = format!("emit_{}", action.name);
    let fresh_refs: Vec<&str> = fresh.iter().map(String::as_str).collect();
    let comm_refs: Vec<&str> = comm.iter().map(String::as_str).collect();
    Ok(Production::new(name, am_label(), &formals)
        .fresh(&fresh_refs)
        .on(0, Condition::output(&action.name, &comm_refs))
        .rhs_edge(&am_label(), &formals))
}

/// The adaptation operations a policy rule can trigger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdaptOp {
    Go,
    Start,
    RepShare,
    RepFresh,
    Copy,
    Kill,
}

impl AdaptOp {
    pub const ALL: [AdaptOp; 6] = [
        AdaptOp::Go,
        AdaptOp::Start,
        AdaptOp::RepShare,
        AdaptOp::RepFresh,
        AdaptOp::Copy,
        AdaptOp::Kill,
    ];

    /// Reserved name of the component-side production.
    pub fn name(self) -> &'static str {
        match self {
            AdaptOp::Go => "go",
            AdaptOp::Start => "start",
            AdaptOp::RepShare => "rep_share",
            AdaptOp::RepFresh => "rep_fresh",
            AdaptOp::Copy => "copy",
            AdaptOp::Kill => "kill",
        }
    }

    pub fn from_name(name: &str) -> Option<AdaptOp> {
        AdaptOp::ALL.into_iter().find(|op| op.name() == name)
    }

    /// The signal the manager emits to trigger this operation.
    pub fn action(self) -> ActionSig {
        match self {
            AdaptOp::Go => actions::go(),
            AdaptOp::Start => actions::start_sigma(),
            AdaptOp::RepShare => actions::rep(),
            AdaptOp::RepFresh => actions::rep_sigma(),
            AdaptOp::Copy => actions::copy(),
            AdaptOp::Kill => actions::kill(),
        }
    }

    pub fn production(self) -> Production {
        match self {
            AdaptOp::Go => go_production(),
            AdaptOp::Start => start_production(),
            AdaptOp::RepShare => rep_share_production(),
            AdaptOp::RepFresh => rep_fresh_production(),
            AdaptOp::Copy => copy_production(),
            AdaptOp::Kill => kill_production(),
        }
    }
}
