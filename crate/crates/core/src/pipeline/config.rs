use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::AggregationMode;
use crate::llm::{
    ExtractionSettings, FixtureError, GenerationSettings, HttpProvider, LabelingSettings,
    LlmProvider, MockProvider, ProviderError, DEFAULT_LABEL_RETRIES, DEFAULT_LOOP_TIME,
};
use crate::metrics::Metric;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Self::Mock),
            "http" => Ok(Self::Http),
            other => Err(format!("unknown provider {other:?}, expected mock or http")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("loop_time must be at least 1")]
    LoopTime,
    #[error("top_fraction must be in (0, 1], got {0}")]
    TopFraction(f64),
    #[error("concurrency must be at least 1")]
    Concurrency,
    #[error("vote count must be odd and at least 1, got {0}")]
    Votes(u32),
    #[error("the mock provider needs a fixtures file")]
    MissingFixtures,
    #[error("the http provider needs an endpoint")]
    MissingEndpoint,
    #[error("{0} is required for this command")]
    MissingPath(&'static str),
    #[error(transparent)]
    Fixtures(#[from] FixtureError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Everything a command needs. Serialized into the run manifest as a
/// snapshot; the API key is never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub loop_time: u32,
    pub temperature: f64,
    pub top_fraction: f64,
    /// Centrality used for top-fraction selection.
    pub metric: Metric,
    pub concurrency: usize,
    pub votes: u32,
    pub label_retries: u32,
    pub aggregation: AggregationMode,
    pub sentences: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub fixations: Option<PathBuf>,
    pub graphs_dir: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let generation = GenerationSettings::default();
        Self {
            provider: ProviderKind::Mock,
            endpoint: None,
            model: generation.model_name,
            loop_time: DEFAULT_LOOP_TIME,
            temperature: generation.temperature,
            top_fraction: 0.5,
            metric: Metric::Pagerank,
            concurrency: 4,
            votes: 1,
            label_retries: DEFAULT_LABEL_RETRIES,
            aggregation: AggregationMode::PerNode,
            sentences: None,
            fixtures: None,
            fixations: None,
            graphs_dir: None,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.loop_time < 1 {
            return Err(ConfigError::LoopTime);
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(ConfigError::TopFraction(self.top_fraction));
        }
        if self.concurrency < 1 {
            return Err(ConfigError::Concurrency);
        }
        if self.votes == 0 || self.votes.is_multiple_of(2) {
            return Err(ConfigError::Votes(self.votes));
        }
        Ok(())
    }

    /// Defaults to `<out>/graphs`.
    pub fn graphs_dir(&self) -> PathBuf {
        self.graphs_dir
            .clone()
            .unwrap_or_else(|| self.out.join("graphs"))
    }

    pub fn sentences_path(&self) -> Result<&PathBuf, ConfigError> {
        self.sentences
            .as_ref()
            .ok_or(ConfigError::MissingPath("--sentences"))
    }

    pub fn fixations_path(&self) -> Result<&PathBuf, ConfigError> {
        self.fixations
            .as_ref()
            .ok_or(ConfigError::MissingPath("--fixations"))
    }

    pub fn generation(&self) -> GenerationSettings {
        GenerationSettings {
            model_name: self.model.clone(),
            temperature: self.temperature,
        }
    }

    pub fn extraction_settings(&self) -> ExtractionSettings {
        ExtractionSettings {
            loop_time: self.loop_time,
            generation: self.generation(),
        }
    }

    pub fn labeling_settings(&self) -> LabelingSettings {
        LabelingSettings {
            retries: self.label_retries,
            votes: self.votes,
            generation: self.generation(),
        }
    }

    /// Mock mode loads the fixture file; http mode reads the key from the
    /// environment.
    pub fn build_provider(&self) -> Result<Box<dyn LlmProvider>, ConfigError> {
        match self.provider {
            ProviderKind::Mock => {
                let path = self.fixtures.as_ref().ok_or(ConfigError::MissingFixtures)?;
                Ok(Box::new(MockProvider::from_jsonl(path)?))
            }
            ProviderKind::Http => {
                let endpoint = self.endpoint.as_ref().ok_or(ConfigError::MissingEndpoint)?;
                Ok(Box::new(HttpProvider::from_env(endpoint.clone())?))
            }
        }
    }
}
