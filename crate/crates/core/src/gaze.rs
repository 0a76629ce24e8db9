//! Eye-fixation counts aggregated onto graph nodes and edges, and the
//! important vs. non-important node comparison per reader.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{KnowledgeGraph, Sentence};
use crate::text::{tokenize, tokenize_spans};

/// One line of `fixations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationRecord {
    pub subject_id: String,
    pub sentence_id: String,
    /// Zero-based index into the tokenized sentence.
    pub word_index: usize,
    pub word: String,
    pub n_fixations: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_duration_ms: Option<f64>,
}

/// A graph element a sentence token can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementRef {
    Node { id: u32 },
    Edge { src: u32, dst: u32 },
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Node { id } => write!(f, "node {id}"),
            ElementRef::Edge { src, dst } => write!(f, "edge {src}->{dst}"),
        }
    }
}

/// Which element, if any, claims each sentence token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenElementMap {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub assignments: Vec<Option<ElementRef>>,
}

impl TokenElementMap {
    pub fn element_of(&self, index: usize) -> Option<ElementRef> {
        self.assignments.get(index).copied().flatten()
    }

    pub fn tokens_of(&self, element: ElementRef) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == Some(element))
            .collect()
    }

    /// Elements that claimed at least one token, in sorted order.
    pub fn elements(&self) -> Vec<ElementRef> {
        let mut out: Vec<ElementRef> = self.assignments.iter().flatten().copied().collect();
        out.sort();
        out.dedup();
        out
    }
}

fn claim(
    phrase: &[String],
    element: ElementRef,
    sentence: &[String],
    assignments: &mut [Option<ElementRef>],
) {
    if phrase.is_empty() {
        return;
    }
    let contiguous = (0..sentence.len().saturating_sub(phrase.len() - 1)).find(|&start| {
        phrase
            .iter()
            .enumerate()
            .all(|(k, tok)| assignments[start + k].is_none() && &sentence[start + k] == tok)
    });
    match contiguous {
        Some(start) => {
            for slot in &mut assignments[start..start + phrase.len()] {
                *slot = Some(element);
            }
        }
        None => {
            // Phrase not present as a run: fall back to per-token matching.
            for tok in phrase {
                if let Some(i) =
                    (0..sentence.len()).find(|&i| assignments[i].is_none() && &sentence[i] == tok)
                {
                    assignments[i] = Some(element);
                }
            }
        }
    }
}

/// Assigns sentence tokens to graph elements. Node labels are placed first,
/// longest label first, each at its leftmost run of unclaimed tokens; edge
/// relations are then placed the same way over what is left.
pub fn build_token_map(kg: &KnowledgeGraph, sentence: &Sentence) -> TokenElementMap {
    let tokens = tokenize(&sentence.text);
    let mut assignments = vec![None; tokens.len()];

    let by_length = |items: Vec<(ElementRef, Vec<String>)>| {
        let mut items = items;
        // Stable sort keeps node/edge order among equal lengths.
        items.sort_by_key(|item| std::cmp::Reverse(item.1.len()));
        items
    };
    let node_phrases = by_length(
        kg.nodes
            .iter()
            .map(|n| (ElementRef::Node { id: n.id }, tokenize(&n.label)))
            .collect(),
    );
    let edge_phrases = by_length(
        kg.edges
            .iter()
            .map(|e| {
                (
                    ElementRef::Edge {
                        src: e.src,
                        dst: e.dst,
                    },
                    tokenize(&e.relation),
                )
            })
            .collect(),
    );
    for (element, phrase) in node_phrases.iter().chain(&edge_phrases) {
        claim(phrase, *element, &tokens, &mut assignments);
    }

    TokenElementMap {
        sentence_id: sentence.sentence_id.clone(),
        tokens,
        assignments,
    }
}

/// Fixation totals for one (subject, sentence).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementTotals {
    pub totals: BTreeMap<ElementRef, u64>,
    pub durations_ms: BTreeMap<ElementRef, f64>,
    pub unmapped: u64,
    /// Records whose `word_index` is outside the sentence.
    pub rejected: usize,
}

impl ElementTotals {
    pub fn total(&self, element: ElementRef) -> u64 {
        self.totals.get(&element).copied().unwrap_or(0)
    }

    pub fn grand_total(&self) -> u64 {
        self.totals.values().sum::<u64>() + self.unmapped
    }
}

/// Sums fixation counts per element. Every element that claimed a token gets
/// an entry, zero if nobody looked at it.
pub fn aggregate_fixations<'a>(
    records: impl IntoIterator<Item = &'a FixationRecord>,
    map: &TokenElementMap,
) -> ElementTotals {
    let mut out = ElementTotals {
        totals: map.elements().into_iter().map(|e| (e, 0)).collect(),
        ..Default::default()
    };
    for r in records {
        if r.word_index >= map.tokens.len() {
            log::warn!(
                "sentence {}: word_index {} out of range ({} tokens), record skipped",
                map.sentence_id,
                r.word_index,
                map.tokens.len()
            );
            out.rejected += 1;
            continue;
        }
        match map.element_of(r.word_index) {
            Some(e) => {
                *out.totals.entry(e).or_default() += u64::from(r.n_fixations);
                if let Some(ms) = r.total_duration_ms {
                    *out.durations_ms.entry(e).or_default() += ms;
                }
            }
            None => out.unmapped += u64::from(r.n_fixations),
        }
    }
    out
}

/// What one observation in the per-subject means stands for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// One observation per (sentence, node): the node's fixation total.
    #[default]
    PerNode,
    /// One observation per sentence and class: the mean total over that
    /// sentence's nodes of the class.
    PerSentence,
}

/// Mean and standard error of one class of observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n: usize,
    /// Absent when there are no observations.
    pub mean: Option<f64>,
    /// Sample standard deviation over `sqrt(n)`; absent when `n < 2`.
    pub se: Option<f64>,
}

impl ClassStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt() / (n as f64).sqrt()
        });
        Self {
            n,
            mean: Some(mean),
            se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStats {
    pub subject_id: String,
    pub mean_fixation_important: Option<f64>,
    pub mean_fixation_non_important: Option<f64>,
    pub se_important: Option<f64>,
    pub se_non_important: Option<f64>,
    pub n_important_observations: usize,
    pub n_non_important_observations: usize,
    /// Edges counted important when both endpoints are.
    pub edges_important: ClassStats,
    pub edges_non_important: ClassStats,
}

impl AlignmentStats {
    fn new(
        subject_id: &str,
        important: ClassStats,
        other: ClassStats,
        e_imp: ClassStats,
        e_other: ClassStats,
    ) -> Self {
        Self {
            subject_id: subject_id.to_string(),
            mean_fixation_important: important.mean,
            mean_fixation_non_important: other.mean,
            se_important: important.se,
            se_non_important: other.se,
            n_important_observations: important.n,
            n_non_important_observations: other.n,
            edges_important: e_imp,
            edges_non_important: e_other,
        }
    }

    /// Important minus non-important mean, when both are defined.
    pub fn difference(&self) -> Option<f64> {
        Some(self.mean_fixation_important? - self.mean_fixation_non_important?)
    }
}

/// Fixation totals of one labeled graph for one subject.
#[derive(Debug, Clone, Copy)]
pub struct SentenceObservation<'a> {
    pub graph: &'a KnowledgeGraph,
    pub totals: &'a ElementTotals,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GazeError {
    #[error("subject {0} has no fixation data on labeled graphs")]
    NoData(String),
    #[error("cohort summary needs at least 2 subjects with both classes observed, got {0}")]
    TooFewSubjects(usize),
}

/// Splits node fixation totals by importance and summarizes each class.
///
/// Only nodes that claimed at least one sentence token contribute, since
/// other nodes cannot receive fixations. Observations are sorted before
/// summation so the result does not depend on input order.
pub fn subject_importance_stats(
    subject_id: &str,
    sentences: &[SentenceObservation<'_>],
    mode: AggregationMode,
) -> Result<AlignmentStats, GazeError> {
    let mut important = Vec::new();
    let mut other = Vec::new();
    let mut edge_important = Vec::new();
    let mut edge_other = Vec::new();

    for obs in sentences {
        let mut imp_here = Vec::new();
        let mut other_here = Vec::new();
        for node in &obs.graph.nodes {
            let key = ElementRef::Node { id: node.id };
            let Some(&total) = obs.totals.totals.get(&key) else {
                continue;
            };
            match node.importance {
                Some(1) => imp_here.push(total as f64),
                Some(_) => other_here.push(total as f64),
                None => {}
            }
        }
        match mode {
            AggregationMode::PerNode => {
                important.extend(imp_here);
                other.extend(other_here);
            }
            AggregationMode::PerSentence => {
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                if !imp_here.is_empty() {
                    important.push(mean(&imp_here));
                }
                if !other_here.is_empty() {
                    other.push(mean(&other_here));
                }
            }
        }
        for edge in &obs.graph.edges {
            let key = ElementRef::Edge {
                src: edge.src,
                dst: edge.dst,
            };
            let Some(&total) = obs.totals.totals.get(&key) else {
                continue;
            };
            let endpoint = |id| obs.graph.node(id).and_then(|n| n.importance);
            match (endpoint(edge.src), endpoint(edge.dst)) {
                (Some(1), Some(1)) => edge_important.push(total as f64),
                (Some(_), Some(_)) => edge_other.push(total as f64),
                _ => {}
            }
        }
    }

    if important.is_empty() && other.is_empty() {
        return Err(GazeError::NoData(subject_id.to_string()));
    }
    for v in [
        &mut important,
        &mut other,
        &mut edge_important,
        &mut edge_other,
    ] {
        v.sort_by(f64::total_cmp);
    }
    Ok(AlignmentStats::new(
        subject_id,
        ClassStats::from_values(&important),
        ClassStats::from_values(&other),
        ClassStats::from_values(&edge_important),
        ClassStats::from_values(&edge_other),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub mean_difference: f64,
    /// Sample standard deviation of the per-subject differences.
    pub sd_of_difference: f64,
    pub per_subject_differences: BTreeMap<String, f64>,
}

/// Mean and sample standard deviation of per-subject important minus
/// non-important differences. Subjects missing either class are left out.
pub fn cohort_summary(stats: &[AlignmentStats]) -> Result<CohortSummary, GazeError> {
    let per_subject: BTreeMap<String, f64> = stats
        .iter()
        .filter_map(|s| Some((s.subject_id.clone(), s.difference()?)))
        .collect();
    let n = per_subject.len();
    if n < 2 {
        return Err(GazeError::TooFewSubjects(n));
    }
    let values: Vec<f64> = per_subject.values().copied().collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(CohortSummary {
        mean_difference: mean,
        sd_of_difference: var.sqrt(),
        per_subject_differences: per_subject,
    })
}

/// Checks that `word_index` is consistent with the tokenized sentence text.
pub fn word_matches(record: &FixationRecord, sentence: &Sentence) -> bool {
    tokenize_spans(&sentence.text)
        .get(record.word_index)
        .is_some_and(|t| tokenize(&record.word).first() == Some(&t.text))
}
