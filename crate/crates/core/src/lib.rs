//! Knowledge graphs extracted from sentences by a language model, scored
//! against the source text, ranked by graph centrality and compared with
//! reader eye fixations.

pub mod eval;
pub mod gaze;
pub mod llm;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod reconstruction;
pub mod text;

pub use model::{Edge, KnowledgeGraph, Node, Sentence, Task};
pub use reconstruction::ErrorReport;
