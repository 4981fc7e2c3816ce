//! Heterogeneous event graphs: trigger and argument nodes, with
//! trigger–argument edges inside an event and trigger–trigger edges
//! between the events of one scope.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingTable, Span};
use crate::promptgen::CandidateEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Trigger,
    Argument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    TriggerArgument,
    TriggerTrigger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub role: NodeRole,
    pub text: String,
    pub span: Option<Span>,
    /// Index into [`EventGraph::sentence_ids`].
    pub sentence: usize,
    pub embedding: Vec<f64>,
    pub encoded: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventGraph {
    pub scope_id: String,
    pub sentence_ids: Vec<String>,
    pub nodes: Vec<Node>,
    pub adjacency: Vec<BTreeSet<usize>>,
}

/// Builds the graph of one sentence.
pub fn build_graph(events: &[CandidateEvent], table: &EmbeddingTable, scope_id: &str) -> EventGraph {
    build_scope_graph(scope_id, &[(scope_id.to_owned(), events)], table)
}

/// Builds one graph over several sentences (document scope). Trigger–trigger
/// edges connect every pair of triggers in the scope.
pub fn build_scope_graph(
    scope_id: &str,
    sentences: &[(String, &[CandidateEvent])],
    table: &EmbeddingTable,
) -> EventGraph {
    let mut graph = EventGraph {
        scope_id: scope_id.to_owned(),
        sentence_ids: sentences.iter().map(|(id, _)| id.clone()).collect(),
        nodes: Vec::new(),
        adjacency: Vec::new(),
    };
    let mut index: HashMap<(NodeRole, String, Option<Span>, usize), usize> = HashMap::new();
    let mut intern = |graph: &mut EventGraph, role: NodeRole, text: &str, span: Option<Span>, sentence: usize| {
        *index.entry((role, text.to_owned(), span, sentence)).or_insert_with(|| {
            graph.nodes.push(Node {
                role,
                text: text.to_owned(),
                span,
                sentence,
                embedding: table.phrase_embedding(text),
                encoded: None,
            });
            graph.adjacency.push(BTreeSet::new());
            graph.nodes.len() - 1
        })
    };

    let mut triggers: Vec<usize> = Vec::new();
    for (sentence, (_, events)) in sentences.iter().enumerate() {
        for event in events.iter() {
            let t = intern(
                &mut graph,
                NodeRole::Trigger,
                &event.trigger_text,
                event.trigger_span,
                sentence,
            );
            if !triggers.contains(&t) {
                triggers.push(t);
            }
            for arg in &event.arguments {
                let a = intern(&mut graph, NodeRole::Argument, &arg.text, arg.span, sentence);
                graph.add_edge(t, a);
            }
        }
    }
    for (k, &a) in triggers.iter().enumerate() {
        for &b in &triggers[k + 1..] {
            graph.add_edge(a, b);
        }
    }
    graph
}

impl EventGraph {
    fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adjacency[a].insert(b);
            self.adjacency[b].insert(a);
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adjacency[i]
    }

    pub fn edge_kind(&self, i: usize, j: usize) -> Option<EdgeKind> {
        if !self.adjacency[i].contains(&j) {
            return None;
        }
        match (self.nodes[i].role, self.nodes[j].role) {
            (NodeRole::Trigger, NodeRole::Trigger) => Some(EdgeKind::TriggerTrigger),
            (NodeRole::Argument, NodeRole::Argument) => None,
            _ => Some(EdgeKind::TriggerArgument),
        }
    }

    /// Undirected edges as `(i, j, kind)` with `i < j`, in index order.
    pub fn edges(&self) -> Vec<(usize, usize, EdgeKind)> {
        let mut out = Vec::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs.range(i + 1..) {
                if let Some(kind) = self.edge_kind(i, j) {
                    out.push((i, j, kind));
                }
            }
        }
        out
    }

    /// Node indices with the given role, in node order.
    pub fn nodes_with_role(&self, role: NodeRole) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.role == role)
            .map(|(i, _)| i)
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.adjacency.len() != self.nodes.len() {
            return Err("adjacency length differs from node count".into());
        }
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if i == j {
                    return Err(format!("self-loop at {i}"));
                }
                if !self.adjacency[j].contains(&i) {
                    return Err(format!("asymmetric edge {i}->{j}"));
                }
                if self.nodes[i].role == NodeRole::Argument && self.nodes[j].role == NodeRole::Argument {
                    return Err(format!("argument-argument edge {i}-{j}"));
                }
            }
        }
        Ok(())
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump {
            scope_id: self.scope_id.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| DumpNode {
                    role: n.role,
                    text: n.text.clone(),
                    span: n.span,
                })
                .collect(),
            edges: self.edges(),
        }
    }
}

/// Debug view of a graph without embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub scope_id: String,
    pub nodes: Vec<DumpNode>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpNode {
    pub role: NodeRole,
    pub text: String,
    pub span: Option<Span>,
}
