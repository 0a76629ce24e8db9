#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gazegraph::gaze::FixationRecord;
use gazegraph::llm::prompt::{format_node, serialize_kg_output};
use gazegraph::llm::{FixtureRecord, PromptKind};
use gazegraph::pipeline::io::{graph_path, write_json};
use gazegraph::pipeline::PipelineConfig;
use gazegraph::{Edge, KnowledgeGraph, Node, Sentence, Task};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).unwrap());
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

pub fn mock_config(out: &Path, sentences: &Path, fixtures: &Path) -> PipelineConfig {
    PipelineConfig {
        out: out.to_path_buf(),
        sentences: Some(sentences.to_path_buf()),
        fixtures: Some(fixtures.to_path_buf()),
        ..Default::default()
    }
}

/// A sentence whose every word is its own node, chained by edges with
/// empty relations.
pub fn word_chain(id: &str, task: Task, text: &str) -> (Sentence, KnowledgeGraph) {
    let words: Vec<&str> = text.split_whitespace().collect();
    let nodes = words
        .iter()
        .enumerate()
        .map(|(i, w)| Node::new(i as u32 + 1, "Entity", *w))
        .collect();
    let edges = (1..words.len() as u32)
        .map(|i| Edge::new(i, i + 1, ""))
        .collect();
    (
        Sentence::new(id, task, text),
        KnowledgeGraph::new(id, nodes, edges),
    )
}

/// Fixture records answering every extraction trial with `kg` and the
/// labeling call with `important`.
pub fn scripted(kg: &KnowledgeGraph, loop_time: u32, important: &[u32]) -> Vec<FixtureRecord> {
    let mut out: Vec<FixtureRecord> = (1..=loop_time)
        .map(|attempt| FixtureRecord {
            sentence_id: kg.sentence_id.clone(),
            prompt_kind: PromptKind::KgExtraction,
            attempt,
            raw_text: serialize_kg_output(kg),
        })
        .collect();
    let listed: Vec<String> = kg
        .nodes
        .iter()
        .filter(|n| important.contains(&n.id))
        .map(format_node)
        .collect();
    out.push(FixtureRecord {
        sentence_id: kg.sentence_id.clone(),
        prompt_kind: PromptKind::ImportanceExtraction,
        attempt: 1,
        raw_text: format!("<nodes>\n{}\n</nodes>", listed.join("\n")),
    });
    out
}

pub fn write_graph(dir: &Path, kg: &KnowledgeGraph) {
    write_json(&graph_path(dir, &kg.sentence_id), kg).unwrap();
}

/// Relative path to bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn fixation(subject: &str, sentence: &str, word_index: usize, n: u32) -> FixationRecord {
    FixationRecord {
        subject_id: subject.into(),
        sentence_id: sentence.into(),
        word_index,
        word: String::new(),
        n_fixations: n,
        total_duration_ms: None,
    }
}

/// Two subjects reading one five-word sentence whose first three words are
/// important nodes. Subject A puts {1, 2, 3} fixations on the important
/// nodes and {0, 1} on the others; subject B {2, 2, 2} and {1, 1}.
pub fn two_subject_fixture(dir: &Path) -> PipelineConfig {
    let (sentence, mut kg) = word_chain("g1", Task::Task1, "alpha beta gamma delta epsilon");
    for node in &mut kg.nodes {
        node.importance = Some(u8::from(node.id <= 3));
    }
    kg.task = Some(Task::Task1);
    let graphs = dir.join("graphs");
    write_graph(&graphs, &kg);
    let sentences = dir.join("sentences.jsonl");
    write_jsonl(&sentences, &[sentence]);
    let fixations = dir.join("fixations.jsonl");
    let counts = [("A", [1, 2, 3, 0, 1]), ("B", [2, 2, 2, 1, 1])];
    let rows: Vec<FixationRecord> = counts
        .iter()
        .flat_map(|(s, c)| {
            c.iter()
                .enumerate()
                .map(move |(i, &n)| fixation(s, "g1", i, n))
        })
        .collect();
    write_jsonl(&fixations, &rows);
    PipelineConfig {
        out: dir.to_path_buf(),
        sentences: Some(sentences),
        fixations: Some(fixations),
        ..Default::default()
    }
}
