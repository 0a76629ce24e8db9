//! Prompting, provider access and answer parsing for graph extraction and
//! importance labeling.

pub mod orchestrate;
pub mod parse;
pub mod prompt;
pub mod provider;

pub use orchestrate::{
    assign_importance, extract_kg, ExtractionError, ExtractionSettings, LabelingError,
    LabelingSettings, DEFAULT_LABEL_RETRIES, DEFAULT_LOOP_TIME,
};
pub use parse::{parse_importance_output, parse_kg_output, ImportanceLabels, ParseError};
pub use prompt::{render_prompt1, render_prompt2, GenerationSettings, PromptKind, PromptRequest};
pub use provider::{
    CallContext, CallRecord, FixtureError, FixtureRecord, HttpProvider, LlmProvider, MockProvider,
    ProviderError, ProviderResponse, API_KEY_ENV,
};
