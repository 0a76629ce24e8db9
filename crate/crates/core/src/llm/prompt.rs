//! Prompt templates for graph extraction and importance labeling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{KnowledgeGraph, Node, Sentence};

/// Graph-extraction prompt. `{sentence}` is substituted.
pub const KG_EXTRACTION_TEMPLATE: &str = r#"Your task is to build a structured and accurate knowledge graph that captures the semantic meaning of the sentence.
Let's think step by step.
First, identify all minimal semantic units of the main entity, including articles like "the" and possessive pronouns like "his" in the node phrase.
Then, all the words in the original sentence except the node contents become the relations (edges).
Last, format the output into the format below:
<nodes>
(node_number, {"type": the_type_of_label, "label": node_content}),
</nodes>
<edges>
(starting_node_number, ending_node_number, {"relation": phrase_content}),
</edges>
The node number should start from 1.
Now you have to process this sentence: {sentence}"#;

/// Importance-labeling prompt. `{sentence}`, `{nodes}` and `{target_words}`
/// are substituted.
pub const IMPORTANCE_TEMPLATE: &str = r#"Your task is to extract the important nodes from the given knowledge graph.
Let's think step by step.
You should determine which nodes are important based on the provided target words and the nodes' relevance to the core message of the sentence.
Use this approach to identify the important nodes based on the following inputs:
1. Input 1: the sentence: {sentence}
2. Input 2: nodes in the knowledge graph for the sentence: {nodes}
3. Input 3: the target word: {target_words}
Ensure that the output follows the format below:
<nodes>
(node_number, {"type": the_type_of_label, "label": node_content}),
</nodes>"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    KgExtraction,
    ImportanceExtraction,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::KgExtraction => "kg_extraction",
            PromptKind::ImportanceExtraction => "importance_extraction",
        }
    }
}

/// Model name and sampling temperature sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub model_name: String,
    pub temperature: f64,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            model_name: "gpt-4o".to_string(),
            temperature: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptRequest {
    pub prompt_kind: PromptKind,
    pub rendered_text: String,
    pub model_name: String,
    pub temperature: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("graph {0} has no nodes to label")]
    EmptyGraph(String),
}

pub fn render_prompt1(sentence: &Sentence, settings: &GenerationSettings) -> PromptRequest {
    PromptRequest {
        prompt_kind: PromptKind::KgExtraction,
        rendered_text: KG_EXTRACTION_TEMPLATE.replace("{sentence}", &sentence.text),
        model_name: settings.model_name.clone(),
        temperature: settings.temperature,
    }
}

pub fn render_prompt2(
    sentence: &Sentence,
    kg: &KnowledgeGraph,
    settings: &GenerationSettings,
) -> Result<PromptRequest, PromptError> {
    if kg.nodes.is_empty() {
        return Err(PromptError::EmptyGraph(kg.sentence_id.clone()));
    }
    // Substitute one slot at a time, left to right, so text inserted for an
    // earlier slot is never mistaken for a later placeholder.
    let (head, rest) = IMPORTANCE_TEMPLATE
        .split_once("{sentence}")
        .expect("template slot");
    let (mid, rest) = rest.split_once("{nodes}").expect("template slot");
    let (mid2, tail) = rest.split_once("{target_words}").expect("template slot");
    let rendered_text = [
        head,
        &sentence.text,
        mid,
        &serialize_nodes(&kg.nodes),
        mid2,
        &render_target_words(sentence),
        tail,
    ]
    .concat();
    Ok(PromptRequest {
        prompt_kind: PromptKind::ImportanceExtraction,
        rendered_text,
        model_name: settings.model_name.clone(),
        temperature: settings.temperature,
    })
}

/// Target words joined by ", ", followed by the control question when there
/// is one; `none` when the sentence carries neither.
fn render_target_words(sentence: &Sentence) -> String {
    let targets = sentence
        .target_words
        .as_ref()
        .filter(|t| !t.is_empty())
        .map(|t| t.join(", "));
    let question = sentence
        .control_question
        .as_deref()
        .filter(|q| !q.trim().is_empty());
    match (targets, question) {
        (Some(t), Some(q)) => format!("{t} (control question: {q})"),
        (Some(t), None) => t,
        (None, Some(q)) => format!("none (control question: {q})"),
        (None, None) => "none".to_string(),
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

pub fn format_node(node: &Node) -> String {
    format!(
        "({}, {{\"type\": {}, \"label\": {}}}),",
        node.id,
        quote(&node.node_type),
        quote(&node.label)
    )
}

/// Nodes in the tuple format the prompts ask for, one per line.
pub fn serialize_nodes(nodes: &[Node]) -> String {
    nodes.iter().map(format_node).collect::<Vec<_>>().join("\n")
}

/// A graph in the `<nodes>`/`<edges>` block format the extraction prompt asks
/// the model to produce.
pub fn serialize_kg_output(kg: &KnowledgeGraph) -> String {
    let mut out = String::from("<nodes>\n");
    for node in &kg.nodes {
        out.push_str(&format_node(node));
        out.push('\n');
    }
    out.push_str("</nodes>\n<edges>\n");
    for edge in &kg.edges {
        out.push_str(&format!(
            "({}, {}, {{\"relation\": {}}}),\n",
            edge.src,
            edge.dst,
            quote(&edge.relation)
        ));
    }
    out.push_str("</edges>\n");
    out
}

/// An importance answer listing the given nodes.
pub fn serialize_importance_output(nodes: &[&Node]) -> String {
    let mut out = String::from("<nodes>\n");
    for node in nodes {
        out.push_str(&format_node(node));
        out.push('\n');
    }
    out.push_str("</nodes>\n");
    out
}
