//! Guided selection of a fairness definition.
//!
//! A [`CompassTree`] is an acyclic graph of decision, action and definition
//! nodes loaded from JSON. A [`CompassSession`] walks it one answer at a time,
//! keeping the rationale for each answer, and exports a [`DecisionRecord`]
//! once a definition node is reached.

mod session;
mod tree;

pub use session::{
    replay, start_session, start_session_at, CompassError, CompassSession, DecisionRecord,
    TrailStep,
};
pub use tree::{load_tree, CompassTree, Edge, Node, NodeKind, TreeDocument, TreeError, Violation};

/// The built-in tree document. Editable data, version-stamped.
pub const DEFAULT_TREE_JSON: &str = include_str!("../../data/default_tree.json");

pub fn default_tree() -> CompassTree {
    load_tree(DEFAULT_TREE_JSON).expect("built-in tree is valid")
}
