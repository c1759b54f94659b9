//! Synchronized hyperedge replacement for component assemblies.
//!
//! An assembly is a [`hypergraph::Hypergraph`]: components, managers and stores are labelled
//! edges, their ports and locations are nodes. [`production::Production`]s rewrite single edges
//! under synchronization conditions, and the [`engine`] combines them into steps in which
//! neighbouring edges agree on actions and fuse the nodes they communicate.
//!
//! [`gcm`] ships the adaptation operations (migration, replication, copy, kill),
//! [`manager`] evaluates `when/if/then` policy rules that trigger them, and [`dsl`] reads and
//! writes the `.shr` text format.

pub mod dsl;
pub mod engine;
pub mod gcm;
pub mod hypergraph;
pub mod manager;
pub mod production;
