//! Sentence and knowledge-graph data model.
//!
//! A [`KnowledgeGraph`] is the directed, unweighted graph an LLM builds for a
//! single sentence: nodes are phrases of the sentence, edges carry the
//! connecting words as a relation label. The serde layout of
//! `KnowledgeGraph` is the on-disk `kg.json` format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reconstruction::ErrorReport;

/// Reading task a sentence was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Task1,
    Task2WithQuestions,
    Task2WithoutQuestions,
    Task3,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::Task1,
        Task::Task2WithQuestions,
        Task::Task2WithoutQuestions,
        Task::Task3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Task1 => "task1",
            Task::Task2WithQuestions => "task2_with_questions",
            Task::Task2WithoutQuestions => "task2_without_questions",
            Task::Task3 => "task3",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("sentence {0}: text is empty")]
    EmptyText(String),
    #[error(
        "sentence {0}: control question / target words are only allowed on task2_with_questions"
    )]
    UnexpectedQuestion(String),
    #[error("graph {sentence_id}: duplicate node id {id}")]
    DuplicateNodeId { sentence_id: String, id: u32 },
    #[error("graph {sentence_id}: node {id} has an empty label")]
    EmptyLabel { sentence_id: String, id: u32 },
    #[error("graph {sentence_id}: node {id} has importance {value}, expected 0 or 1")]
    BadImportance {
        sentence_id: String,
        id: u32,
        value: u8,
    },
    #[error("graph {sentence_id}: edge ({src}, {dst}) references a missing node")]
    DanglingEdge {
        sentence_id: String,
        src: u32,
        dst: u32,
    },
    #[error("graph {sentence_id}: self-loop on node {id}")]
    SelfLoop { sentence_id: String, id: u32 },
}

/// One input sentence (a line of `sentences.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub task: Task,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_words: Option<Vec<String>>,
}

impl Sentence {
    pub fn new(sentence_id: impl Into<String>, task: Task, text: impl Into<String>) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            task,
            text: text.into(),
            control_question: None,
            target_words: None,
        }
    }

    pub fn with_question(mut self, question: impl Into<String>, targets: Vec<String>) -> Self {
        self.control_question = Some(question.into());
        self.target_words = Some(targets);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.text.trim().is_empty() {
            return Err(ModelError::EmptyText(self.sentence_id.clone()));
        }
        let has_question = self.control_question.is_some() || self.target_words.is_some();
        if has_question && self.task != Task::Task2WithQuestions {
            return Err(ModelError::UnexpectedQuestion(self.sentence_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    #[serde(rename = "type")]
    pub node_type: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<u8>,
}

impl Node {
    pub fn new(id: u32, node_type: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id,
            node_type: node_type.into(),
            label: label.into(),
            importance: None,
        }
    }

    pub fn is_important(&self) -> bool {
        self.importance == Some(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub relation: String,
}

impl Edge {
    pub fn new(src: u32, dst: u32, relation: impl Into<String>) -> Self {
        Self {
            src,
            dst,
            relation: relation.into(),
        }
    }
}

/// Outcome of one extraction trial, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ErrorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub from: String,
    pub to: String,
}

/// Edits made by graph repair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairLog {
    pub corrected: Vec<Correction>,
    pub deleted: Vec<String>,
    pub dropped_nodes: Vec<u32>,
    pub dropped_edges: Vec<(u32, u32)>,
    /// (old id, new id) for nodes renumbered after drops.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub renumbered: Vec<(u32, u32)>,
}

impl RepairLog {
    pub fn is_empty(&self) -> bool {
        self.corrected.is_empty()
            && self.deleted.is_empty()
            && self.dropped_nodes.is_empty()
            && self.dropped_edges.is_empty()
            && self.renumbered.is_empty()
    }

    pub(crate) fn absorb(&mut self, other: RepairLog) {
        self.corrected.extend(other.corrected);
        self.deleted.extend(other.deleted);
        self.dropped_nodes.extend(other.dropped_nodes);
        self.dropped_edges.extend(other.dropped_edges);
        self.renumbered.extend(other.renumbered);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingLog {
    pub provider_calls: u32,
    pub votes: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_ids: Vec<u32>,
}

/// Where a graph came from and what was done to it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub loop_time: u32,
    /// Zero-based index of the selected trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_repair_report: Option<ErrorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeling: Option<LabelingLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub sentence_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub provenance: Provenance,
    /// Reconstruction error of the selected trial, before repair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_report: Option<ErrorReport>,
}

impl KnowledgeGraph {
    pub fn new(sentence_id: impl Into<String>, nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            task: None,
            nodes,
            edges,
            provenance: Provenance::default(),
            error_report: None,
        }
    }

    /// Graph with nodes `1..=node_count` labeled `n1`, `n2`, ... and the given
    /// edges. Handy for structural computations where text is irrelevant.
    pub fn skeleton(node_count: u32, edges: &[(u32, u32)]) -> Self {
        let nodes = (1..=node_count)
            .map(|id| Node::new(id, "Entity", format!("n{id}")))
            .collect();
        let edges = edges
            .iter()
            .map(|&(src, dst)| Edge::new(src, dst, "rel"))
            .collect();
        Self::new("skeleton", nodes, edges)
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    /// True once every node carries an importance label.
    pub fn is_labeled(&self) -> bool {
        !self.nodes.is_empty() && self.nodes.iter().all(|n| n.importance.is_some())
    }

    pub fn clear_importance(&mut self) {
        for node in &mut self.nodes {
            node.importance = None;
        }
    }

    pub fn importance_map(&self) -> BTreeMap<u32, u8> {
        self.nodes
            .iter()
            .filter_map(|n| n.importance.map(|v| (n.id, v)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sentence_id = || self.sentence_id.clone();
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.id) {
                return Err(ModelError::DuplicateNodeId {
                    sentence_id: sentence_id(),
                    id: node.id,
                });
            }
            if node.label.trim().is_empty() {
                return Err(ModelError::EmptyLabel {
                    sentence_id: sentence_id(),
                    id: node.id,
                });
            }
            if let Some(value) = node.importance {
                if value > 1 {
                    return Err(ModelError::BadImportance {
                        sentence_id: sentence_id(),
                        id: node.id,
                        value,
                    });
                }
            }
        }
        for edge in &self.edges {
            if edge.src == edge.dst {
                return Err(ModelError::SelfLoop {
                    sentence_id: sentence_id(),
                    id: edge.src,
                });
            }
            if !seen.contains(&edge.src) || !seen.contains(&edge.dst) {
                return Err(ModelError::DanglingEdge {
                    sentence_id: sentence_id(),
                    src: edge.src,
                    dst: edge.dst,
                });
            }
        }
        Ok(())
    }
}
