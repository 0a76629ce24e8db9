use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::model::Task;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SentenceStatus {
    Pending,
    Extracted,
    Labeled,
    Failed { stage: String, cause: String },
}

impl SentenceStatus {
    pub fn is_failed(&self) -> bool {
        matches!(self, SentenceStatus::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEntry {
    pub sentence_id: String,
    pub task: Task,
    #[serde(flatten)]
    pub status: SentenceStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandTimes {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

/// `<out>/manifest.json`: one entry per input sentence in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub sentences: Vec<SentenceEntry>,
    /// Provider calls made by each command's latest run.
    pub provider_calls: BTreeMap<String, usize>,
    pub timestamps: BTreeMap<String, CommandTimes>,
}

impl RunManifest {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            config,
            sentences: Vec::new(),
            provider_calls: BTreeMap::new(),
            timestamps: BTreeMap::new(),
        }
    }

    pub fn entry_mut(&mut self, sentence_id: &str) -> Option<&mut SentenceEntry> {
        self.sentences
            .iter_mut()
            .find(|e| e.sentence_id == sentence_id)
    }

    pub fn failed(&self) -> impl Iterator<Item = &SentenceEntry> {
        self.sentences.iter().filter(|e| e.status.is_failed())
    }

    pub fn count(&self, pred: impl Fn(&SentenceStatus) -> bool) -> usize {
        self.sentences.iter().filter(|e| pred(&e.status)).count()
    }

    /// Copy with timestamps removed, for comparing runs.
    pub fn without_timestamps(&self) -> Self {
        Self {
            timestamps: BTreeMap::new(),
            ..self.clone()
        }
    }
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_serializes_flat() {
        let e = SentenceEntry {
            sentence_id: "s1".into(),
            task: Task::Task1,
            status: SentenceStatus::Failed {
                stage: "extract".into(),
                cause: "boom".into(),
            },
        };
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["status"], "failed");
        assert_eq!(v["stage"], "extract");
        let back: SentenceEntry = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }
}
