//! How faithfully a graph reproduces its source sentence.
//!
//! Graph tokens are the tokens of every node label (in node order) followed by
//! the tokens of every edge relation (in edge order). They are aligned to the
//! sentence tokens in two passes:
//!
//! 1. exact matching, each graph token claiming the leftmost unclaimed
//!    identical sentence token;
//! 2. misspelling pairing between the leftovers: any pair at Levenshtein
//!    distance 1 or 2 is a candidate, candidates are taken greedily by
//!    ascending distance, then sentence position, then graph position.
//!
//! Sentence tokens left unclaimed are *omitted*, graph tokens left unpaired
//! are *extra*.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Correction, Edge, KnowledgeGraph, Node, RepairLog, Sentence};
use crate::text::{levenshtein, tokenize_spans, Token};

/// Maximum edit distance at which a graph token counts as a misspelling.
pub const MAX_MISSPELLING_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub omitted: u32,
    pub extra: u32,
    pub misspelled: u32,
    pub total: u32,
}

impl ErrorReport {
    pub fn new(omitted: u32, extra: u32, misspelled: u32) -> Self {
        Self {
            omitted,
            extra,
            misspelled,
            total: omitted + extra + misspelled,
        }
    }

    /// Ordering key used for trial selection.
    fn selection_key(&self) -> (u32, u32, u32) {
        (self.omitted, self.extra, self.misspelled)
    }
}

/// Mean of per-sentence reports, as used for corpus-level tables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanErrorReport {
    pub omitted: f64,
    pub extra: f64,
    pub misspelled: f64,
    pub total: f64,
    pub sentences: usize,
}

pub fn mean_error_report<'a>(
    reports: impl IntoIterator<Item = &'a ErrorReport>,
) -> MeanErrorReport {
    let mut sum = [0u64; 3];
    let mut n = 0usize;
    for r in reports {
        sum[0] += u64::from(r.omitted);
        sum[1] += u64::from(r.extra);
        sum[2] += u64::from(r.misspelled);
        n += 1;
    }
    if n == 0 {
        return MeanErrorReport::default();
    }
    let d = n as f64;
    let (o, e, m) = (sum[0] as f64 / d, sum[1] as f64 / d, sum[2] as f64 / d);
    MeanErrorReport {
        omitted: o,
        extra: e,
        misspelled: m,
        total: (sum[0] + sum[1] + sum[2]) as f64 / d,
        sentences: n,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrialError {
    #[error("trial set is empty")]
    Empty,
    #[error("trial set mixes sentences {0} and {1}")]
    MixedSentences(String, String),
}

/// Parsed extraction trials for one sentence, each with its error report.
#[derive(Debug, Clone)]
pub struct TrialSet {
    trials: Vec<(KnowledgeGraph, ErrorReport)>,
}

impl TrialSet {
    pub fn new(trials: Vec<(KnowledgeGraph, ErrorReport)>) -> Result<Self, TrialError> {
        let first = trials
            .first()
            .ok_or(TrialError::Empty)?
            .0
            .sentence_id
            .clone();
        if let Some((kg, _)) = trials.iter().find(|(kg, _)| kg.sentence_id != first) {
            return Err(TrialError::MixedSentences(first, kg.sentence_id.clone()));
        }
        Ok(Self { trials })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&(KnowledgeGraph, ErrorReport)> {
        self.trials.get(index)
    }

    pub fn reports(&self) -> impl Iterator<Item = &ErrorReport> {
        self.trials.iter().map(|(_, r)| r)
    }

    pub fn into_inner(self) -> Vec<(KnowledgeGraph, ErrorReport)> {
        self.trials
    }
}

/// Index of the trial with the fewest omitted words; ties go to fewer extra,
/// then fewer misspelled words, then the earliest trial.
pub fn select_best_trial(trials: &TrialSet) -> Result<usize, TrialError> {
    best_report_index(trials.reports()).ok_or(TrialError::Empty)
}

pub(crate) fn best_report_index<'a>(
    reports: impl IntoIterator<Item = &'a ErrorReport>,
) -> Option<usize> {
    reports
        .into_iter()
        .enumerate()
        .min_by_key(|(i, r)| (r.selection_key(), *i))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Node(usize),
    Edge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Matched(usize),
    Misspelled(usize),
    Extra,
}

struct GraphToken {
    slot: Slot,
    token: Token,
    status: Status,
}

struct Alignment {
    sentence: Vec<Token>,
    graph: Vec<GraphToken>,
    omitted: u32,
}

impl Alignment {
    fn report(&self) -> ErrorReport {
        let mut extra = 0;
        let mut misspelled = 0;
        for g in &self.graph {
            match g.status {
                Status::Extra => extra += 1,
                Status::Misspelled(_) => misspelled += 1,
                Status::Matched(_) => {}
            }
        }
        ErrorReport::new(self.omitted, extra, misspelled)
    }
}

fn align(kg: &KnowledgeGraph, sentence: &Sentence) -> Alignment {
    let sentence_tokens = tokenize_spans(&sentence.text);
    let mut graph: Vec<GraphToken> = Vec::new();
    for (i, node) in kg.nodes.iter().enumerate() {
        graph.extend(
            tokenize_spans(&node.label)
                .into_iter()
                .map(|token| GraphToken {
                    slot: Slot::Node(i),
                    token,
                    status: Status::Extra,
                }),
        );
    }
    for (i, edge) in kg.edges.iter().enumerate() {
        graph.extend(
            tokenize_spans(&edge.relation)
                .into_iter()
                .map(|token| GraphToken {
                    slot: Slot::Edge(i),
                    token,
                    status: Status::Extra,
                }),
        );
    }

    let mut claimed = vec![false; sentence_tokens.len()];
    for g in &mut graph {
        if let Some(si) = (0..sentence_tokens.len())
            .find(|&si| !claimed[si] && sentence_tokens[si].text == g.token.text)
        {
            claimed[si] = true;
            g.status = Status::Matched(si);
        }
    }

    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (si, s) in sentence_tokens.iter().enumerate() {
        if claimed[si] {
            continue;
        }
        for (gi, g) in graph.iter().enumerate() {
            if g.status != Status::Extra {
                continue;
            }
            let d = levenshtein(&s.text, &g.token.text);
            if (1..=MAX_MISSPELLING_DISTANCE).contains(&d) {
                candidates.push((d, si, gi));
            }
        }
    }
    candidates.sort_unstable();
    for (_, si, gi) in candidates {
        if !claimed[si] && graph[gi].status == Status::Extra {
            claimed[si] = true;
            graph[gi].status = Status::Misspelled(si);
        }
    }

    let omitted = claimed.iter().filter(|c| !**c).count() as u32;
    Alignment {
        sentence: sentence_tokens,
        graph,
        omitted,
    }
}

/// Counts omitted, extra and misspelled words of `kg` relative to `sentence`.
pub fn compute_error_report(kg: &KnowledgeGraph, sentence: &Sentence) -> ErrorReport {
    align(kg, sentence).report()
}

/// Deletes extra tokens and replaces misspelled tokens with their sentence
/// counterpart.
///
/// Nodes left without any token are dropped with their incident edges; edges
/// whose relation loses every token keep an empty relation. Node ids are then
/// compacted to `1..=n` in their original order. Edits are appended to
/// `provenance.repair`. A graph that needs no edits is returned unchanged,
/// which makes the operation idempotent.
pub fn repair_graph(kg: &KnowledgeGraph, sentence: &Sentence) -> KnowledgeGraph {
    let alignment = align(kg, sentence);
    let mut log = RepairLog::default();

    let mut node_tokens: Vec<Vec<String>> = vec![Vec::new(); kg.nodes.len()];
    let mut edge_tokens: Vec<Vec<String>> = vec![Vec::new(); kg.edges.len()];
    let mut node_changed = vec![false; kg.nodes.len()];
    let mut edge_changed = vec![false; kg.edges.len()];

    for g in &alignment.graph {
        let (tokens, changed) = match g.slot {
            Slot::Node(i) => (&mut node_tokens[i], &mut node_changed[i]),
            Slot::Edge(i) => (&mut edge_tokens[i], &mut edge_changed[i]),
        };
        match g.status {
            Status::Matched(_) => tokens.push(g.token.surface.clone()),
            Status::Misspelled(si) => {
                let replacement = alignment.sentence[si].surface.clone();
                log.corrected.push(Correction {
                    from: g.token.surface.clone(),
                    to: replacement.clone(),
                });
                tokens.push(replacement);
                *changed = true;
            }
            Status::Extra => {
                log.deleted.push(g.token.surface.clone());
                *changed = true;
            }
        }
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(kg.nodes.len());
    for (i, node) in kg.nodes.iter().enumerate() {
        if node_tokens[i].is_empty() {
            log.dropped_nodes.push(node.id);
            continue;
        }
        let mut node = node.clone();
        if node_changed[i] {
            node.label = node_tokens[i].join(" ");
        }
        nodes.push(node);
    }

    let mut edges: Vec<Edge> = Vec::with_capacity(kg.edges.len());
    for (i, edge) in kg.edges.iter().enumerate() {
        if log.dropped_nodes.contains(&edge.src) || log.dropped_nodes.contains(&edge.dst) {
            log.dropped_edges.push((edge.src, edge.dst));
            continue;
        }
        let mut edge = edge.clone();
        if edge_changed[i] {
            edge.relation = edge_tokens[i].join(" ");
        }
        edges.push(edge);
    }

    let remap: Vec<(u32, u32)> = nodes
        .iter()
        .zip(1u32..)
        .filter(|(n, new)| n.id != *new)
        .map(|(n, new)| (n.id, new))
        .collect();
    if !remap.is_empty() {
        let lookup = |id: u32| {
            remap
                .iter()
                .find(|(old, _)| *old == id)
                .map_or(id, |(_, new)| *new)
        };
        for edge in &mut edges {
            edge.src = lookup(edge.src);
            edge.dst = lookup(edge.dst);
        }
        for node in &mut nodes {
            node.id = lookup(node.id);
        }
        log.renumbered = remap;
    }

    if log.is_empty() {
        return kg.clone();
    }
    let mut repaired = kg.clone();
    repaired.nodes = nodes;
    repaired.edges = edges;
    match &mut repaired.provenance.repair {
        Some(existing) => existing.absorb(log),
        None => repaired.provenance.repair = Some(log),
    }
    repaired
}
