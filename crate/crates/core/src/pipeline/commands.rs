use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, PipelineConfig};
use super::io::{
    graph_path, load_graphs, read_json, read_jsonl, write_atomic, write_json, IoError,
};
use super::manifest::{
    now_unix_ms, CommandTimes, RunManifest, SentenceEntry, SentenceStatus, MANIFEST_FILE,
};
use crate::eval::{roc_curve, write_roc_csv, ScoredLabel};
use crate::gaze::{
    aggregate_fixations, build_token_map, cohort_summary, subject_importance_stats, word_matches,
    AggregationMode, AlignmentStats, CohortSummary, ElementTotals, FixationRecord,
    SentenceObservation,
};
use crate::llm::{assign_importance, extract_kg};
use crate::metrics::{
    centrality, graph_statistics, top_fraction_selection, GraphStatistics, Metric, PageRankParams,
};
use crate::model::{KnowledgeGraph, Sentence};

pub const METRICS_FILE: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const ROC_DIR: &str = "roc";
pub const ROC_SUMMARY_FILE: &str = "roc_summary.json";
pub const FIXATIONS_FILE: &str = "fixations.json";
pub const FIXATIONS_CSV: &str = "fixations.csv";

/// Group name for graphs whose task is unknown.
pub const UNSPECIFIED_TASK: &str = "unspecified";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{} invalid record(s):\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Records(Vec<IoError>),
    #[error("duplicate sentence_id {sentence_id:?} at line {line}")]
    DuplicateSentence { sentence_id: String, line: usize },
    #[error("no graphs found in {0}")]
    NoGraphs(PathBuf),
    #[error("no labeled graphs found in {0}")]
    NoLabeledGraphs(PathBuf),
    #[error("graphs directory {0} does not exist")]
    MissingGraphsDir(PathBuf),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl From<Vec<IoError>> for PipelineError {
    fn from(errors: Vec<IoError>) -> Self {
        PipelineError::Records(errors)
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutcome {
    /// One line per sentence that failed.
    pub failures: Vec<String>,
    pub warnings: usize,
    pub written: Vec<PathBuf>,
}

impl CommandOutcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }
}

fn pool(config: &PipelineConfig) -> Result<rayon::ThreadPool, PipelineError> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(config.concurrency)
        .build()?)
}

/// Reads `sentences.jsonl`, rejecting schema errors and duplicate ids.
pub fn load_sentences(path: &Path) -> Result<Vec<Sentence>, PipelineError> {
    let records: Vec<(usize, Sentence)> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for (line, s) in &records {
        if !seen.insert(s.sentence_id.clone()) {
            return Err(PipelineError::DuplicateSentence {
                sentence_id: s.sentence_id.clone(),
                line: *line,
            });
        }
    }
    Ok(records.into_iter().map(|(_, s)| s).collect())
}

fn manifest_path(config: &PipelineConfig) -> PathBuf {
    config.out.join(MANIFEST_FILE)
}

fn finish_manifest(
    config: &PipelineConfig,
    mut manifest: RunManifest,
    command: &str,
    calls: usize,
    started: u64,
    outcome: &mut CommandOutcome,
) -> Result<(), PipelineError> {
    manifest.provider_calls.insert(command.to_string(), calls);
    manifest.timestamps.insert(
        command.to_string(),
        CommandTimes {
            started_unix_ms: started,
            finished_unix_ms: now_unix_ms(),
        },
    );
    outcome.failures = manifest
        .failed()
        .map(|e| match &e.status {
            SentenceStatus::Failed { stage, cause } => {
                format!("{} ({stage}): {cause}", e.sentence_id)
            }
            _ => unreachable!(),
        })
        .collect();
    let path = manifest_path(config);
    write_json(&path, &manifest)?;
    outcome.written.push(path);
    Ok(())
}

fn remove_if_present(path: &Path) -> Result<(), IoError> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(IoError::io(path, e)),
        _ => Ok(()),
    }
}

/// Extracts one repaired graph per sentence into the graphs directory.
/// Failures are isolated per sentence and recorded in the manifest.
pub fn cmd_extract(config: &PipelineConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let started = now_unix_ms();
    let sentences = load_sentences(config.sentences_path()?)?;
    let provider = config.build_provider()?;
    let settings = config.extraction_settings();
    let calls_before = provider.call_count();

    let results: Vec<Result<KnowledgeGraph, String>> = pool(config)?.install(|| {
        sentences
            .par_iter()
            .map(|s| {
                s.validate().map_err(|e| e.to_string())?;
                extract_kg(s, provider.as_ref(), &settings).map_err(|e| e.to_string())
            })
            .collect()
    });

    let dir = config.graphs_dir();
    fs::create_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
    let mut manifest = RunManifest::new(config.clone());
    let mut outcome = CommandOutcome::default();
    let mut claimed = BTreeMap::new();
    for (sentence, result) in sentences.iter().zip(results) {
        let path = graph_path(&dir, &sentence.sentence_id);
        let owner = claimed
            .entry(path.clone())
            .or_insert_with(|| sentence.sentence_id.clone())
            .clone();
        let owns_path = owner == sentence.sentence_id;
        let result = if owns_path {
            result
        } else {
            Err(format!("graph file name collides with sentence {owner:?}"))
        };
        let status = match result {
            Ok(kg) => {
                write_json(&path, &kg)?;
                outcome.written.push(path);
                SentenceStatus::Extracted
            }
            Err(cause) => {
                log::error!(
                    "sentence {}: extraction failed: {cause}",
                    sentence.sentence_id
                );
                if owns_path {
                    remove_if_present(&path)?;
                }
                SentenceStatus::Failed {
                    stage: "extract".into(),
                    cause,
                }
            }
        };
        manifest.sentences.push(SentenceEntry {
            sentence_id: sentence.sentence_id.clone(),
            task: sentence.task,
            status,
        });
    }
    let calls = provider.call_count() - calls_before;
    finish_manifest(config, manifest, "extract", calls, started, &mut outcome)?;
    Ok(outcome)
}

enum LabelResult {
    Labeled(KnowledgeGraph),
    Failed(KnowledgeGraph, String),
    Missing(String),
}

/// Labels every extracted graph, overwriting earlier labels. A graph whose
/// labeling fails is written back without importance.
pub fn cmd_label(config: &PipelineConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let started = now_unix_ms();
    let sentences = load_sentences(config.sentences_path()?)?;
    let dir = config.graphs_dir();
    if !dir.is_dir() {
        return Err(PipelineError::MissingGraphsDir(dir));
    }
    let provider = config.build_provider()?;
    let settings = config.labeling_settings();
    let calls_before = provider.call_count();

    let previous: Option<RunManifest> = {
        let path = manifest_path(config);
        path.exists().then(|| read_json(&path)).transpose()?
    };

    let results: Vec<Result<LabelResult, PipelineError>> = pool(config)?.install(|| {
        sentences
            .par_iter()
            .map(|s| {
                let path = graph_path(&dir, &s.sentence_id);
                if !path.exists() {
                    return Ok(LabelResult::Missing("no graph file".into()));
                }
                let kg: KnowledgeGraph = read_json(&path)?;
                if kg.sentence_id != s.sentence_id {
                    return Ok(LabelResult::Missing(format!(
                        "graph file belongs to sentence {:?}",
                        kg.sentence_id
                    )));
                }
                Ok(
                    match assign_importance(&kg, s, provider.as_ref(), &settings) {
                        Ok(labeled) => LabelResult::Labeled(labeled),
                        Err(e) => {
                            let mut cleared = kg;
                            cleared.clear_importance();
                            cleared.provenance.labeling = None;
                            LabelResult::Failed(cleared, e.to_string())
                        }
                    },
                )
            })
            .collect()
    });

    let mut manifest = RunManifest::new(config.clone());
    if let Some(prev) = &previous {
        manifest.provider_calls = prev.provider_calls.clone();
        manifest.timestamps = prev.timestamps.clone();
    }
    let mut outcome = CommandOutcome::default();
    for (sentence, result) in sentences.iter().zip(results) {
        let path = graph_path(&dir, &sentence.sentence_id);
        let failed = |cause: String| SentenceStatus::Failed {
            stage: "label".into(),
            cause,
        };
        let status = match result? {
            LabelResult::Labeled(kg) => {
                write_json(&path, &kg)?;
                outcome.written.push(path);
                SentenceStatus::Labeled
            }
            LabelResult::Failed(kg, cause) => {
                log::error!(
                    "sentence {}: labeling failed: {cause}",
                    sentence.sentence_id
                );
                write_json(&path, &kg)?;
                outcome.written.push(path);
                failed(cause)
            }
            LabelResult::Missing(cause) => {
                // Keep an earlier extraction failure as the recorded cause.
                let earlier = previous
                    .as_ref()
                    .and_then(|m| {
                        m.sentences
                            .iter()
                            .find(|e| e.sentence_id == sentence.sentence_id)
                    })
                    .map(|e| e.status.clone())
                    .filter(SentenceStatus::is_failed);
                earlier.unwrap_or_else(|| failed(cause))
            }
        };
        manifest.sentences.push(SentenceEntry {
            sentence_id: sentence.sentence_id.clone(),
            task: sentence.task,
            status,
        });
    }
    let calls = provider.call_count() - calls_before;
    finish_manifest(config, manifest, "label", calls, started, &mut outcome)?;
    Ok(outcome)
}

/// Graphs with the task each belongs to. A graph without a stored task
/// takes it from the sentences file when one is configured.
fn load_tasked_graphs(
    config: &PipelineConfig,
) -> Result<Vec<(String, PathBuf, KnowledgeGraph)>, PipelineError> {
    let dir = config.graphs_dir();
    if !dir.is_dir() {
        return Err(PipelineError::MissingGraphsDir(dir));
    }
    let graphs = load_graphs(&dir)?;
    if graphs.is_empty() {
        return Err(PipelineError::NoGraphs(dir));
    }
    let tasks: BTreeMap<String, String> = match &config.sentences {
        Some(p) => load_sentences(p)?
            .into_iter()
            .map(|s| (s.sentence_id, s.task.as_str().to_string()))
            .collect(),
        None => BTreeMap::new(),
    };
    Ok(graphs
        .into_iter()
        .map(|(path, kg)| {
            let task = kg
                .task
                .map(|t| t.as_str().to_string())
                .or_else(|| tasks.get(&kg.sentence_id).cloned())
                .unwrap_or_else(|| UNSPECIFIED_TASK.to_string());
            (task, path, kg)
        })
        .collect())
}

/// Task groups in canonical task order, unknown tasks last.
fn task_order(task: &str) -> (usize, String) {
    let rank = crate::model::Task::ALL
        .iter()
        .position(|t| t.as_str() == task)
        .unwrap_or(usize::MAX);
    (rank, task.to_string())
}

fn group_by_task<T>(items: impl IntoIterator<Item = (String, T)>) -> Vec<(String, Vec<T>)> {
    let mut groups: BTreeMap<(usize, String), Vec<T>> = BTreeMap::new();
    for (task, item) in items {
        groups.entry(task_order(&task)).or_default().push(item);
    }
    groups.into_iter().map(|((_, t), v)| (t, v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRow {
    pub sentence_id: String,
    pub task: String,
    pub statistics: GraphStatistics,
}

/// Per-task means of the per-graph statistics. Pattern percentages are over
/// weakly connected graphs and may sum past 100 since flags overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAggregate {
    pub task: String,
    pub total_graphs: usize,
    pub disconnected_graphs: usize,
    pub disconnection_pct: f64,
    pub avg_nodes: f64,
    pub avg_degree: f64,
    pub avg_path_length: f64,
    pub avg_clustering_coefficient: f64,
    pub avg_diameter: f64,
    pub avg_density: f64,
    pub avg_edges: f64,
    pub avg_graph_rank: f64,
    pub avg_triangles: f64,
    pub connected_graphs: usize,
    pub star_pct: Option<f64>,
    pub cycle_pct: Option<f64>,
    pub path_pct: Option<f64>,
    pub complete_pct: Option<f64>,
}

pub fn aggregate_task(task: &str, stats: &[&GraphStatistics]) -> TaskAggregate {
    let n = stats.len();
    let mean = |f: &dyn Fn(&GraphStatistics) -> f64| {
        if n == 0 {
            0.0
        } else {
            stats.iter().map(|s| f(s)).sum::<f64>() / n as f64
        }
    };
    let connected: Vec<&&GraphStatistics> =
        stats.iter().filter(|s| s.is_weakly_connected).collect();
    let pct = |f: fn(&GraphStatistics) -> bool| {
        (!connected.is_empty()).then(|| {
            100.0 * connected.iter().filter(|s| f(s)).count() as f64 / connected.len() as f64
        })
    };
    let disconnected = n - connected.len();
    TaskAggregate {
        task: task.to_string(),
        total_graphs: n,
        disconnected_graphs: disconnected,
        disconnection_pct: if n == 0 {
            0.0
        } else {
            100.0 * disconnected as f64 / n as f64
        },
        avg_nodes: mean(&|s| s.node_count as f64),
        avg_degree: mean(&|s| s.average_degree),
        avg_path_length: mean(&|s| s.average_path_length),
        avg_clustering_coefficient: mean(&|s| s.clustering_coefficient),
        avg_diameter: mean(&|s| s.diameter as f64),
        avg_density: mean(&|s| s.density),
        avg_edges: mean(&|s| s.edge_count as f64),
        avg_graph_rank: mean(&|s| s.adjacency_rank as f64),
        avg_triangles: mean(&|s| s.triangle_count as f64),
        connected_graphs: connected.len(),
        star_pct: pct(|s| s.pattern_flags.star),
        cycle_pct: pct(|s| s.pattern_flags.cycle),
        path_pct: pct(|s| s.pattern_flags.path),
        complete_pct: pct(|s| s.pattern_flags.complete),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub graph_rank_definition: String,
    pub pattern_pct_denominator: String,
    pub tasks: Vec<TaskAggregate>,
    pub graphs: Vec<GraphRow>,
}

pub fn cmd_metrics(config: &PipelineConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let graphs = load_tasked_graphs(config)?;
    let rows: Vec<GraphRow> = pool(config)?.install(|| {
        graphs
            .par_iter()
            .map(|(task, _, kg)| GraphRow {
                sentence_id: kg.sentence_id.clone(),
                task: task.clone(),
                statistics: graph_statistics(kg),
            })
            .collect()
    });
    let tasks = group_by_task(rows.iter().map(|r| (r.task.clone(), &r.statistics)))
        .into_iter()
        .map(|(task, stats)| aggregate_task(&task, &stats))
        .collect();
    let report = MetricsReport {
        graph_rank_definition: format!(
            "numerical rank of the directed adjacency matrix (pivot tolerance {:e})",
            crate::metrics::RANK_TOLERANCE
        ),
        pattern_pct_denominator: "weakly connected graphs".into(),
        tasks,
        graphs: rows,
    };

    let mut outcome = CommandOutcome::default();
    let json = config.out.join(METRICS_FILE);
    write_json(&json, &report)?;
    let csv_path = config.out.join(METRICS_CSV);
    write_atomic(&csv_path, &metrics_csv(&report.graphs))?;
    outcome.written.extend([json, csv_path]);
    Ok(outcome)
}

fn metrics_csv(rows: &[GraphRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "sentence_id",
        "task",
        "nodes",
        "edges",
        "weakly_connected",
        "average_degree",
        "average_path_length",
        "clustering_coefficient",
        "diameter",
        "density",
        "triangles",
        "adjacency_rank",
        "star",
        "cycle",
        "path",
        "complete",
    ];
    w.write_record(header).expect("in-memory write");
    for r in rows {
        let s = &r.statistics;
        let f = &s.pattern_flags;
        w.write_record([
            r.sentence_id.clone(),
            r.task.clone(),
            s.node_count.to_string(),
            s.edge_count.to_string(),
            s.is_weakly_connected.to_string(),
            s.average_degree.to_string(),
            s.average_path_length.to_string(),
            s.clustering_coefficient.to_string(),
            s.diameter.to_string(),
            s.density.to_string(),
            s.triangle_count.to_string(),
            s.adjacency_rank.to_string(),
            f.star.to_string(),
            f.cycle.to_string(),
            f.path.to_string(),
            f.complete.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRoc {
    pub metric: Metric,
    /// Pooled over every node of the task's labeled graphs.
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Mean of per-graph AUCs over graphs having both classes.
    pub per_graph_mean_auc: Option<f64>,
    pub per_graph_defined: usize,
}

/// Top-fraction predictions scored against the labels, pooled per task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
}

impl SelectionStats {
    fn finish(mut self) -> Self {
        let (tp, fp, fneg, tn) = (
            self.true_positive as f64,
            self.false_positive as f64,
            self.false_negative as f64,
            self.true_negative as f64,
        );
        let ratio = |a: f64, b: f64| (b > 0.0).then(|| a / b);
        self.precision = ratio(tp, tp + fp);
        self.recall = ratio(tp, tp + fneg);
        self.accuracy = ratio(tp + tn, tp + fp + fneg + tn);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRoc {
    pub task: String,
    pub graphs: usize,
    pub nodes: usize,
    pub positives: usize,
    pub negatives: usize,
    pub metrics: Vec<MetricRoc>,
    pub selection: SelectionStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub pagerank: PageRankParams,
    pub selection_metric: Metric,
    pub top_fraction: f64,
    pub unlabeled_graphs_skipped: usize,
    pub tasks: Vec<TaskRoc>,
}

fn task_roc(
    task: &str,
    graphs: &[&KnowledgeGraph],
    config: &PipelineConfig,
    roc_dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<TaskRoc, PipelineError> {
    let labels: Vec<BTreeMap<u32, u8>> = graphs.iter().map(|g| g.importance_map()).collect();
    let nodes: usize = labels.iter().map(BTreeMap::len).sum();
    let positives: usize = labels
        .iter()
        .map(|m| m.values().filter(|&&v| v == 1).count())
        .sum();

    let mut metrics = Vec::new();
    let mut selection = SelectionStats::default();
    for metric in Metric::ALL {
        let scored: Vec<Vec<ScoredLabel>> = graphs
            .iter()
            .zip(&labels)
            .map(|(g, l)| {
                let scores = centrality(g, metric);
                if metric == config.metric {
                    let picked = top_fraction_selection(&scores, config.top_fraction);
                    for (&id, &label) in l {
                        match (picked.contains(id), label == 1) {
                            (true, true) => selection.true_positive += 1,
                            (true, false) => selection.false_positive += 1,
                            (false, true) => selection.false_negative += 1,
                            (false, false) => selection.true_negative += 1,
                        }
                    }
                }
                l.iter()
                    .map(|(id, &label)| {
                        ScoredLabel::new(label == 1, scores.get(*id).unwrap_or(0.0))
                    })
                    .collect()
            })
            .collect();
        let per_graph: Vec<f64> = scored
            .iter()
            .filter_map(|p| roc_curve(p).ok().map(|c| c.auc))
            .collect();
        let pooled: Vec<ScoredLabel> = scored.into_iter().flatten().collect();
        let mut entry = MetricRoc {
            metric,
            auc: None,
            undefined: None,
            csv: None,
            per_graph_mean_auc: (!per_graph.is_empty())
                .then(|| per_graph.iter().sum::<f64>() / per_graph.len() as f64),
            per_graph_defined: per_graph.len(),
        };
        match roc_curve(&pooled) {
            Ok(curve) => {
                let name = format!("{task}_{metric}.csv");
                let path = roc_dir.join(&name);
                let mut buf = Vec::new();
                write_roc_csv(&curve, &mut buf).expect("in-memory write");
                write_atomic(&path, &buf)?;
                written.push(path);
                entry.auc = Some(curve.auc);
                entry.csv = Some(format!("{ROC_DIR}/{name}"));
            }
            Err(e) => {
                log::warn!("task {task}, {metric}: {e}");
                entry.undefined = Some(e.to_string());
            }
        }
        metrics.push(entry);
    }
    Ok(TaskRoc {
        task: task.to_string(),
        graphs: graphs.len(),
        nodes,
        positives,
        negatives: nodes - positives,
        metrics,
        selection: selection.finish(),
    })
}

/// Pooled per-task ROC curves for all four centralities against the
/// importance labels.
pub fn cmd_roc(config: &PipelineConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let graphs = load_tasked_graphs(config)?;
    let total = graphs.len();
    let labeled: Vec<(String, KnowledgeGraph)> = graphs
        .into_iter()
        .filter(|(_, _, kg)| kg.is_labeled())
        .map(|(t, _, kg)| (t, kg))
        .collect();
    if labeled.is_empty() {
        return Err(PipelineError::NoLabeledGraphs(config.graphs_dir()));
    }
    let skipped = total - labeled.len();
    if skipped > 0 {
        log::warn!("{skipped} unlabeled graph(s) skipped");
    }

    let roc_dir = config.out.join(ROC_DIR);
    if roc_dir.is_dir() {
        for entry in fs::read_dir(&roc_dir).map_err(|e| IoError::io(&roc_dir, e))? {
            let path = entry.map_err(|e| IoError::io(&roc_dir, e))?.path();
            if path.extension().is_some_and(|x| x == "csv") {
                remove_if_present(&path)?;
            }
        }
    }
    let mut outcome = CommandOutcome {
        warnings: skipped,
        ..Default::default()
    };
    let mut tasks = Vec::new();
    for (task, group) in group_by_task(labeled.iter().map(|(t, kg)| (t.clone(), kg))) {
        tasks.push(task_roc(
            &task,
            &group,
            config,
            &roc_dir,
            &mut outcome.written,
        )?);
    }
    let summary = RocSummary {
        pagerank: PageRankParams::default(),
        selection_metric: config.metric,
        top_fraction: config.top_fraction,
        unlabeled_graphs_skipped: skipped,
        tasks,
    };
    let path = config.out.join(ROC_SUMMARY_FILE);
    write_json(&path, &summary)?;
    outcome.written.push(path);
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationReport {
    pub aggregation: AggregationMode,
    pub records: usize,
    /// Records whose word index lies outside the sentence.
    pub rejected_out_of_range: usize,
    /// Records for sentences without a labeled graph.
    pub unmatched_records: usize,
    /// Records whose `word` differs from the token at `word_index`.
    pub word_mismatches: usize,
    pub subjects: Vec<AlignmentStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subjects_without_data: Vec<String>,
    pub cohort: Option<CohortSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort_undefined: Option<String>,
}

/// Per-subject fixation statistics on important vs. other nodes, plus the
/// cohort summary of their differences.
pub fn cmd_fixations(config: &PipelineConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let sentences: BTreeMap<String, Sentence> = load_sentences(config.sentences_path()?)?
        .into_iter()
        .map(|s| (s.sentence_id.clone(), s))
        .collect();
    let records: Vec<(usize, FixationRecord)> = read_jsonl(config.fixations_path()?)?;
    let graphs: BTreeMap<String, KnowledgeGraph> = load_tasked_graphs(config)?
        .into_iter()
        .filter(|(_, _, kg)| kg.is_labeled())
        .map(|(_, _, kg)| (kg.sentence_id.clone(), kg))
        .collect();

    let mut by_subject: BTreeMap<&str, BTreeMap<&str, Vec<&FixationRecord>>> = BTreeMap::new();
    let mut unmatched = 0;
    let mut mismatches = 0;
    for (line, r) in &records {
        let (Some(sentence), true) = (
            sentences.get(&r.sentence_id),
            graphs.contains_key(&r.sentence_id),
        ) else {
            log::warn!(
                "fixations line {line}: no labeled graph for sentence {:?}",
                r.sentence_id
            );
            unmatched += 1;
            continue;
        };
        if !r.word.is_empty()
            && r.word_index < crate::text::tokenize(&sentence.text).len()
            && !word_matches(r, sentence)
        {
            log::warn!(
                "fixations line {line}: word {:?} does not match token {}",
                r.word,
                r.word_index
            );
            mismatches += 1;
        }
        by_subject
            .entry(&r.subject_id)
            .or_default()
            .entry(&r.sentence_id)
            .or_default()
            .push(r);
    }

    let maps: BTreeMap<&str, _> = graphs
        .iter()
        .filter_map(|(id, kg)| Some((id.as_str(), build_token_map(kg, sentences.get(id)?))))
        .collect();
    let per_subject: Vec<(String, Result<AlignmentStats, String>, usize)> =
        pool(config)?.install(|| {
            by_subject
                .par_iter()
                .map(|(subject, per_sentence)| {
                    let totals: Vec<(&KnowledgeGraph, ElementTotals)> = per_sentence
                        .iter()
                        .map(|(sid, recs)| {
                            (
                                &graphs[*sid],
                                aggregate_fixations(recs.iter().copied(), &maps[sid]),
                            )
                        })
                        .collect();
                    let rejected = totals.iter().map(|(_, t)| t.rejected).sum();
                    let obs: Vec<SentenceObservation<'_>> = totals
                        .iter()
                        .map(|(graph, totals)| SentenceObservation { graph, totals })
                        .collect();
                    let stats = subject_importance_stats(subject, &obs, config.aggregation)
                        .map_err(|e| e.to_string());
                    (subject.to_string(), stats, rejected)
                })
                .collect()
        });

    let mut subjects = Vec::new();
    let mut without = Vec::new();
    let mut rejected = 0;
    for (subject, stats, r) in per_subject {
        rejected += r;
        match stats {
            Ok(s) => subjects.push(s),
            Err(cause) => {
                log::warn!("{cause}");
                without.push(subject);
            }
        }
    }
    let (cohort, cohort_undefined) = match cohort_summary(&subjects) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = FixationReport {
        aggregation: config.aggregation,
        records: records.len(),
        rejected_out_of_range: rejected,
        unmatched_records: unmatched,
        word_mismatches: mismatches,
        subjects,
        subjects_without_data: without,
        cohort,
        cohort_undefined,
    };

    let mut outcome = CommandOutcome {
        warnings: rejected + unmatched + mismatches,
        ..Default::default()
    };
    let json = config.out.join(FIXATIONS_FILE);
    write_json(&json, &report)?;
    let csv_path = config.out.join(FIXATIONS_CSV);
    write_atomic(&csv_path, &fixations_csv(&report.subjects))?;
    outcome.written.extend([json, csv_path]);
    Ok(outcome)
}

fn fixations_csv(stats: &[AlignmentStats]) -> Vec<u8> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["subject", "category", "n", "mean", "se"])
        .expect("in-memory write");
    for s in stats {
        for (category, n, mean, se) in [
            (
                "important",
                s.n_important_observations,
                s.mean_fixation_important,
                s.se_important,
            ),
            (
                "non_important",
                s.n_non_important_observations,
                s.mean_fixation_non_important,
                s.se_non_important,
            ),
        ] {
            w.write_record([
                s.subject_id.clone(),
                category.into(),
                n.to_string(),
                opt(mean),
                opt(se),
            ])
            .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_and_edge_aggregate() {
        let tri = graph_statistics(&KnowledgeGraph::skeleton(3, &[(1, 2), (2, 3), (3, 1)]));
        let pair = graph_statistics(&KnowledgeGraph::skeleton(2, &[(1, 2)]));
        let agg = aggregate_task("task1", &[&tri, &pair]);
        assert_eq!(agg.disconnection_pct, 0.0);
        assert_eq!(agg.avg_nodes, 2.5);
        assert_eq!(agg.avg_edges, 2.0);
        assert_eq!(agg.cycle_pct, Some(50.0));
        assert_eq!(agg.path_pct, Some(50.0));
    }

    #[test]
    fn disconnected_graphs_leave_pattern_denominator() {
        let pair = graph_statistics(&KnowledgeGraph::skeleton(2, &[(1, 2)]));
        let split = graph_statistics(&KnowledgeGraph::skeleton(3, &[(1, 2)]));
        let agg = aggregate_task("task3", &[&pair, &split]);
        assert_eq!((agg.disconnected_graphs, agg.disconnection_pct), (1, 50.0));
        assert_eq!(agg.path_pct, Some(100.0));
        let none = aggregate_task("task3", &[&split]);
        assert_eq!(none.star_pct, None);
    }

    #[test]
    fn tasks_ordered_canonically() {
        let groups = group_by_task(vec![
            ("task3".to_string(), 1),
            (UNSPECIFIED_TASK.to_string(), 2),
            ("task1".to_string(), 3),
        ]);
        let names: Vec<&str> = groups.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, vec!["task1", "task3", UNSPECIFIED_TASK]);
    }

    #[test]
    fn selection_ratios() {
        let s = SelectionStats {
            true_positive: 2,
            false_positive: 1,
            false_negative: 2,
            true_negative: 5,
            ..Default::default()
        }
        .finish();
        assert_eq!(s.precision, Some(2.0 / 3.0));
        assert_eq!(s.recall, Some(0.5));
        assert_eq!(s.accuracy, Some(0.7));
    }
}
