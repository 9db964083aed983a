use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::audit::FairnessDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// A question with labelled answers.
    Decision,
    /// A step the user has to carry out; followed automatically.
    Action,
    /// A leaf naming the recommended fairness definition.
    Definition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub label: String,
    pub target: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub prompt: String,
    #[serde(default)]
    pub tooltip: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<FairnessDefinition>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Node {
    pub fn choices(&self) -> Vec<&str> {
        self.edges.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn edge(&self, label: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.label == label)
    }
}

/// The serialized form of a tree. Unknown fields survive a round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub version: String,
    pub root: String,
    pub nodes: Vec<Node>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A structural problem found while loading a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyNodeId,
    DuplicateNode(String),
    MissingRoot(String),
    DanglingEdge {
        node: String,
        label: String,
        target: String,
    },
    Cycle(Vec<String>),
    ExtraRoot(String),
    UnreachableNode(String),
    UnreachableDefinition(FairnessDefinition),
    TooFewAnswers {
        node: String,
        count: usize,
    },
    EmptyAnswerLabel(String),
    DuplicateAnswer {
        node: String,
        label: String,
    },
    ActionEdgeCount {
        node: String,
        count: usize,
    },
    DefinitionWithEdges(String),
    DefinitionWithoutKind(String),
    UnexpectedDefinitionKind(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyNodeId => write!(f, "a node has an empty id"),
            Self::DuplicateNode(id) => write!(f, "node id {id:?} is used more than once"),
            Self::MissingRoot(id) => write!(f, "root {id:?} is not a node of the tree"),
            Self::DanglingEdge {
                node,
                label,
                target,
            } => write!(
                f,
                "edge {label:?} of node {node:?} points to missing node {target:?}"
            ),
            Self::Cycle(path) => write!(f, "cycle through {}", path.join(" -> ")),
            Self::ExtraRoot(id) => write!(
                f,
                "node {id:?} has no incoming edge but is not the root (multiple roots)"
            ),
            Self::UnreachableNode(id) => write!(f, "node {id:?} is unreachable from the root"),
            Self::UnreachableDefinition(d) => {
                write!(f, "no definition node for {d} is reachable from the root")
            }
            Self::TooFewAnswers { node, count } => write!(
                f,
                "decision node {node:?} has {count} answer(s), needs at least 2"
            ),
            Self::EmptyAnswerLabel(node) => {
                write!(f, "decision node {node:?} has an answer with an empty label")
            }
            Self::DuplicateAnswer { node, label } => {
                write!(f, "decision node {node:?} repeats answer {label:?}")
            }
            Self::ActionEdgeCount { node, count } => write!(
                f,
                "action node {node:?} has {count} outgoing edges, needs exactly 1"
            ),
            Self::DefinitionWithEdges(node) => {
                write!(f, "definition node {node:?} must not have outgoing edges")
            }
            Self::DefinitionWithoutKind(node) => {
                write!(f, "definition node {node:?} does not name a fairness definition")
            }
            Self::UnexpectedDefinitionKind(node) => write!(
                f,
                "node {node:?} names a fairness definition but is not a definition node"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("tree document is not valid JSON: {0}")]
    Parse(String),

    #[error("invalid tree: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A validated decision tree.
///
/// Acyclic, single-rooted, every node reachable, every leaf a definition node
/// and every fairness definition reachable.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "TreeDocument")]
pub struct CompassTree {
    doc: TreeDocument,
    index: HashMap<String, usize>,
}

impl Serialize for CompassTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.doc.serialize(s)
    }
}

impl TryFrom<TreeDocument> for CompassTree {
    type Error = TreeError;

    fn try_from(doc: TreeDocument) -> Result<Self, Self::Error> {
        let violations = validate(&doc);
        if !violations.is_empty() {
            return Err(TreeError::Invalid(violations));
        }
        let index = doc
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        Ok(Self { doc, index })
    }
}

/// Parses and validates a JSON tree document.
pub fn load_tree(document: &str) -> Result<CompassTree, TreeError> {
    let doc: TreeDocument =
        serde_json::from_str(document).map_err(|e| TreeError::Parse(e.to_string()))?;
    CompassTree::try_from(doc)
}

impl CompassTree {
    pub fn version(&self) -> &str {
        &self.doc.version
    }

    pub fn root(&self) -> &Node {
        self.node(&self.doc.root).expect("root is validated")
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|i| &self.doc.nodes[*i])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.doc.nodes
    }

    pub fn document(&self) -> &TreeDocument {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("tree documents always serialize")
    }

    /// Number of edges on the longest path from the root to a leaf.
    pub fn depth(&self) -> usize {
        fn longest(tree: &CompassTree, id: &str, memo: &mut HashMap<String, usize>) -> usize {
            if let Some(d) = memo.get(id) {
                return *d;
            }
            let node = tree.node(id).expect("edges are validated");
            let d = node
                .edges
                .iter()
                .map(|e| 1 + longest(tree, &e.target, memo))
                .max()
                .unwrap_or(0);
            memo.insert(id.to_string(), d);
            d
        }
        longest(self, &self.doc.root, &mut HashMap::new())
    }
}

fn validate(doc: &TreeDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, node) in doc.nodes.iter().enumerate() {
        if node.id.is_empty() {
            out.push(Violation::EmptyNodeId);
        }
        // edges resolve to the first node with a given id
        if index.contains_key(node.id.as_str()) {
            out.push(Violation::DuplicateNode(node.id.clone()));
        } else {
            index.insert(node.id.as_str(), i);
        }
    }

    for node in &doc.nodes {
        match node.kind {
            NodeKind::Decision => {
                if node.edges.len() < 2 {
                    out.push(Violation::TooFewAnswers {
                        node: node.id.clone(),
                        count: node.edges.len(),
                    });
                }
                let mut seen = BTreeSet::new();
                for e in &node.edges {
                    if e.label.is_empty() {
                        out.push(Violation::EmptyAnswerLabel(node.id.clone()));
                    } else if !seen.insert(e.label.as_str()) {
                        out.push(Violation::DuplicateAnswer {
                            node: node.id.clone(),
                            label: e.label.clone(),
                        });
                    }
                }
            }
            NodeKind::Action => {
                if node.edges.len() != 1 {
                    out.push(Violation::ActionEdgeCount {
                        node: node.id.clone(),
                        count: node.edges.len(),
                    });
                }
            }
            NodeKind::Definition => {
                if !node.edges.is_empty() {
                    out.push(Violation::DefinitionWithEdges(node.id.clone()));
                }
                if node.definition.is_none() {
                    out.push(Violation::DefinitionWithoutKind(node.id.clone()));
                }
            }
        }
        if node.kind != NodeKind::Definition && node.definition.is_some() {
            out.push(Violation::UnexpectedDefinitionKind(node.id.clone()));
        }
        for e in &node.edges {
            if !index.contains_key(e.target.as_str()) {
                out.push(Violation::DanglingEdge {
                    node: node.id.clone(),
                    label: e.label.clone(),
                    target: e.target.clone(),
                });
            }
        }
    }

    // adjacency over existing targets only
    let adjacency: Vec<Vec<usize>> = doc
        .nodes
        .iter()
        .map(|n| {
            n.edges
                .iter()
                .filter_map(|e| index.get(e.target.as_str()).copied())
                .collect()
        })
        .collect();

    out.extend(find_cycles(doc, &adjacency));

    let Some(&root) = index.get(doc.root.as_str()) else {
        out.push(Violation::MissingRoot(doc.root.clone()));
        return out;
    };

    let mut reachable = vec![false; doc.nodes.len()];
    let mut queue = VecDeque::from([root]);
    reachable[root] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !reachable[j] {
                reachable[j] = true;
                queue.push_back(j);
            }
        }
    }

    let mut indegree = vec![0usize; doc.nodes.len()];
    for targets in &adjacency {
        for &j in targets {
            indegree[j] += 1;
        }
    }
    for (i, node) in doc.nodes.iter().enumerate() {
        if i == root || reachable[i] {
            continue;
        }
        if indegree[i] == 0 {
            out.push(Violation::ExtraRoot(node.id.clone()));
        } else {
            out.push(Violation::UnreachableNode(node.id.clone()));
        }
    }

    let reached: BTreeSet<FairnessDefinition> = doc
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| reachable[*i] && n.kind == NodeKind::Definition)
        .filter_map(|(_, n)| n.definition)
        .collect();
    for d in FairnessDefinition::ALL {
        if !reached.contains(&d) {
            out.push(Violation::UnreachableDefinition(d));
        }
    }
    out
}

/// Depth-first search with three colours; every back edge yields one cycle.
fn find_cycles(doc: &TreeDocument, adjacency: &[Vec<usize>]) -> Vec<Violation> {
    #[derive(Clone, Copy, PartialEq)]
    enum Colour {
        White,
        Grey,
        Black,
    }
    let n = adjacency.len();
    let mut colour = vec![Colour::White; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if colour[start] != Colour::White {
            continue;
        }
        // (node, next edge position)
        let mut stack = vec![(start, 0usize)];
        colour[start] = Colour::Grey;
        while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
            if *pos < adjacency[node].len() {
                let next = adjacency[node][*pos];
                *pos += 1;
                match colour[next] {
                    Colour::White => {
                        colour[next] = Colour::Grey;
                        stack.push((next, 0));
                    }
                    Colour::Grey => {
                        let from = stack
                            .iter()
                            .position(|(v, _)| *v == next)
                            .expect("grey nodes are on the stack");
                        let mut path: Vec<String> = stack[from..]
                            .iter()
                            .map(|(v, _)| doc.nodes[*v].id.clone())
                            .collect();
                        path.push(doc.nodes[next].id.clone());
                        cycles.push(Violation::Cycle(path));
                    }
                    Colour::Black => {}
                }
            } else {
                colour[node] = Colour::Black;
                stack.pop();
            }
        }
    }
    cycles
}
