use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::tree::{CompassTree, Node, NodeKind};
use crate::audit::{FairnessDefinition, Family};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompassError {
    #[error("unknown choice {choice:?} at {node}; valid choices: {}", .valid.join(", "))]
    UnknownChoice {
        node: String,
        choice: String,
        valid: Vec<String>,
    },

    #[error("session complete: {node} is a definition node")]
    SessionComplete { node: String },

    #[error("session is not at a definition (current node {current})")]
    NotAtDefinition { current: String },

    #[error("nothing to undo")]
    NothingToUndo,

    #[error("session was started on tree version {session}, but the tree is version {tree}")]
    VersionMismatch { session: String, tree: String },

    #[error("trail step {step} cannot be replayed: {reason}")]
    InvalidTrail { step: usize, reason: String },
}

/// One visited node. Automatically traversed action nodes have an empty answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailStep {
    pub node: String,
    pub answer: String,
    pub rationale: String,
    pub timestamp: DateTime<Utc>,
}

impl TrailStep {
    pub fn is_automatic(&self) -> bool {
        self.answer.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassSession {
    tree_version: String,
    current: String,
    trail: Vec<TrailStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub tree_version: String,
    pub context: String,
    pub recommended: FairnessDefinition,
    pub family: Family,
    pub definition_node: String,
    pub trail: Vec<TrailStep>,
}

impl DecisionRecord {
    /// Node ids from the root to the recommended definition.
    pub fn path(&self) -> Vec<&str> {
        self.trail
            .iter()
            .map(|s| s.node.as_str())
            .chain(std::iter::once(self.definition_node.as_str()))
            .collect()
    }
}

/// Opens a session at the root; a root action node is traversed immediately.
pub fn start_session(tree: &CompassTree) -> CompassSession {
    start_session_at(tree, Utc::now())
}

pub fn start_session_at(tree: &CompassTree, timestamp: DateTime<Utc>) -> CompassSession {
    let mut session = CompassSession {
        tree_version: tree.version().to_string(),
        current: tree.root().id.clone(),
        trail: Vec::new(),
    };
    session.follow_actions(tree, timestamp);
    session
}

impl CompassSession {
    pub fn tree_version(&self) -> &str {
        &self.tree_version
    }

    pub fn current(&self) -> &str {
        &self.current
    }

    pub fn trail(&self) -> &[TrailStep] {
        &self.trail
    }

    pub fn current_node<'t>(&self, tree: &'t CompassTree) -> Option<&'t Node> {
        tree.node(&self.current)
    }

    pub fn recommendation(&self, tree: &CompassTree) -> Option<FairnessDefinition> {
        self.current_node(tree).and_then(|n| n.definition)
    }

    pub fn is_complete(&self, tree: &CompassTree) -> bool {
        self.recommendation(tree).is_some()
    }

    pub fn answer(
        &mut self,
        tree: &CompassTree,
        choice: &str,
        rationale: &str,
    ) -> Result<(), CompassError> {
        self.answer_at(tree, choice, rationale, Utc::now())
    }

    /// Leaves the session untouched on error.
    pub fn answer_at(
        &mut self,
        tree: &CompassTree,
        choice: &str,
        rationale: &str,
        timestamp: DateTime<Utc>,
    ) -> Result<(), CompassError> {
        self.check_version(tree)?;
        let node = tree
            .node(&self.current)
            .ok_or_else(|| CompassError::InvalidTrail {
                step: self.trail.len(),
                reason: format!("node {} is not in the tree", self.current),
            })?;
        if node.kind == NodeKind::Definition {
            return Err(CompassError::SessionComplete {
                node: node.id.clone(),
            });
        }
        let edge = node
            .edge(choice)
            .filter(|_| node.kind == NodeKind::Decision)
            .ok_or_else(|| CompassError::UnknownChoice {
                node: node.id.clone(),
                choice: choice.to_string(),
                valid: node.choices().into_iter().map(String::from).collect(),
            })?;
        self.trail.push(TrailStep {
            node: node.id.clone(),
            answer: choice.to_string(),
            rationale: rationale.to_string(),
            timestamp,
        });
        self.current = edge.target.clone();
        self.follow_actions(tree, timestamp);
        Ok(())
    }

    /// Removes the last answered decision and the actions that followed it.
    pub fn undo(&mut self) -> Result<(), CompassError> {
        let last = self
            .trail
            .iter()
            .rposition(|s| !s.is_automatic())
            .ok_or(CompassError::NothingToUndo)?;
        self.current = self.trail[last].node.clone();
        self.trail.truncate(last);
        Ok(())
    }

    pub fn export_record(
        &self,
        tree: &CompassTree,
        context: &str,
    ) -> Result<DecisionRecord, CompassError> {
        self.check_version(tree)?;
        let recommended =
            self.recommendation(tree)
                .ok_or_else(|| CompassError::NotAtDefinition {
                    current: self.current.clone(),
                })?;
        Ok(DecisionRecord {
            tree_version: self.tree_version.clone(),
            context: context.to_string(),
            recommended,
            family: recommended.family(),
            definition_node: self.current.clone(),
            trail: self.trail.clone(),
        })
    }

    fn check_version(&self, tree: &CompassTree) -> Result<(), CompassError> {
        if self.tree_version != tree.version() {
            return Err(CompassError::VersionMismatch {
                session: self.tree_version.clone(),
                tree: tree.version().to_string(),
            });
        }
        Ok(())
    }

    fn follow_actions(&mut self, tree: &CompassTree, timestamp: DateTime<Utc>) {
        while let Some(node) = tree.node(&self.current) {
            if node.kind != NodeKind::Action {
                break;
            }
            self.trail.push(TrailStep {
                node: node.id.clone(),
                answer: String::new(),
                rationale: String::new(),
                timestamp,
            });
            self.current = node.edges[0].target.clone();
        }
    }
}

/// Rebuilds the session a trail describes, checking every step against the tree.
pub fn replay(tree: &CompassTree, trail: &[TrailStep]) -> Result<CompassSession, CompassError> {
    let mut session = CompassSession {
        tree_version: tree.version().to_string(),
        current: tree.root().id.clone(),
        trail: Vec::with_capacity(trail.len()),
    };
    for (i, step) in trail.iter().enumerate() {
        if step.node != session.current {
            return Err(CompassError::InvalidTrail {
                step: i,
                reason: format!("expected node {}, found {}", session.current, step.node),
            });
        }
        let node = tree.node(&step.node).expect("current node is in the tree");
        let next = match node.kind {
            NodeKind::Definition => {
                return Err(CompassError::InvalidTrail {
                    step: i,
                    reason: format!("{} is a definition node", node.id),
                })
            }
            NodeKind::Action if !step.is_automatic() => {
                return Err(CompassError::InvalidTrail {
                    step: i,
                    reason: format!("action node {} takes no answer", node.id),
                })
            }
            NodeKind::Action => &node.edges[0].target,
            NodeKind::Decision => match node.edge(&step.answer) {
                Some(e) if !step.is_automatic() => &e.target,
                _ => {
                    return Err(CompassError::InvalidTrail {
                        step: i,
                        reason: format!("{:?} is not an answer of {}", step.answer, node.id),
                    })
                }
            },
        };
        session.current = next.clone();
        session.trail.push(step.clone());
    }
    if tree
        .node(&session.current)
        .is_some_and(|n| n.kind == NodeKind::Action)
    {
        return Err(CompassError::InvalidTrail {
            step: trail.len(),
            reason: format!("trail stops at action node {}", session.current),
        });
    }
    Ok(session)
}
