//! Graph extraction with trial selection and repair, then importance labeling.

use std::collections::BTreeMap;

use thiserror::Error;

use super::parse::{parse_importance_output, parse_kg_output};
use super::prompt::{render_prompt1, render_prompt2, GenerationSettings};
use super::provider::{CallContext, LlmProvider};
use crate::model::{KnowledgeGraph, LabelingLog, Sentence, TrialOutcome};
use crate::reconstruction::{compute_error_report, repair_graph, select_best_trial, TrialSet};

pub const DEFAULT_LOOP_TIME: u32 = 3;
pub const DEFAULT_LABEL_RETRIES: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionSettings {
    pub loop_time: u32,
    pub generation: GenerationSettings,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            loop_time: DEFAULT_LOOP_TIME,
            generation: GenerationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingSettings {
    /// Extra attempts allowed per vote after a failed call or parse.
    pub retries: u32,
    /// Number of labeled answers combined by majority; must be odd.
    pub votes: u32,
    pub generation: GenerationSettings,
}

impl Default for LabelingSettings {
    fn default() -> Self {
        Self {
            retries: DEFAULT_LABEL_RETRIES,
            votes: 1,
            generation: GenerationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExtractionError {
    #[error("loop_time must be at least 1")]
    InvalidLoopTime,
    #[error("sentence {sentence_id}: all {} trials failed ({})", causes.len(), causes.join("; "))]
    AllTrialsFailed {
        sentence_id: String,
        causes: Vec<String>,
        /// Raw text of every trial that got a response.
        raw_responses: Vec<String>,
    },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabelingError {
    #[error("vote count must be odd and at least 1, got {0}")]
    InvalidVotes(u32),
    #[error("sentence {sentence_id}: {cause}")]
    Prompt { sentence_id: String, cause: String },
    #[error("sentence {sentence_id}: labeling failed after {attempts} attempts ({})", causes.join("; "))]
    Failed {
        sentence_id: String,
        attempts: u32,
        causes: Vec<String>,
    },
}

/// Queries the provider `loop_time` times, keeps the trial with the fewest
/// omitted words and repairs it against the sentence.
///
/// A trial whose call or parse fails ranks below every parsed trial.
pub fn extract_kg(
    sentence: &Sentence,
    provider: &dyn LlmProvider,
    settings: &ExtractionSettings,
) -> Result<KnowledgeGraph, ExtractionError> {
    if settings.loop_time == 0 {
        return Err(ExtractionError::InvalidLoopTime);
    }
    let request = render_prompt1(sentence, &settings.generation);
    let mut outcomes = Vec::with_capacity(settings.loop_time as usize);
    let mut parsed = Vec::new();
    let mut parsed_attempts = Vec::new();
    let mut causes = Vec::new();
    let mut raw_responses = Vec::new();

    for attempt in 1..=settings.loop_time {
        let ctx = CallContext {
            sentence_id: &sentence.sentence_id,
            attempt,
        };
        let result = provider
            .complete(&request, ctx)
            .map_err(|e| e.to_string())
            .and_then(|resp| {
                raw_responses.push(resp.raw_text.clone());
                parse_kg_output(&resp.raw_text, &sentence.sentence_id).map_err(|e| e.to_string())
            });
        match result {
            Ok(kg) => {
                let report = compute_error_report(&kg, sentence);
                outcomes.push(TrialOutcome {
                    attempt,
                    report: Some(report),
                    failure: None,
                });
                parsed.push((kg, report));
                parsed_attempts.push(attempt);
            }
            Err(cause) => {
                log::warn!("sentence {} trial {attempt}: {cause}", sentence.sentence_id);
                causes.push(format!("trial {attempt}: {cause}"));
                outcomes.push(TrialOutcome {
                    attempt,
                    report: None,
                    failure: Some(cause),
                });
            }
        }
    }

    let trials = TrialSet::new(parsed).map_err(|_| ExtractionError::AllTrialsFailed {
        sentence_id: sentence.sentence_id.clone(),
        causes,
        raw_responses,
    })?;
    let best = select_best_trial(&trials).expect("non-empty trial set");
    let chosen_attempt = parsed_attempts[best];
    let (chosen, report) = trials.into_inner().swap_remove(best);

    let mut kg = repair_graph(&chosen, sentence);
    kg.task = Some(sentence.task);
    kg.error_report = Some(report);
    kg.provenance.loop_time = settings.loop_time;
    kg.provenance.chosen_trial = Some((chosen_attempt - 1) as usize);
    kg.provenance.trials = outcomes;
    kg.provenance.post_repair_report = Some(compute_error_report(&kg, sentence));
    kg.provenance.model = Some(settings.generation.model_name.clone());
    kg.provenance.temperature = Some(settings.generation.temperature);
    Ok(kg)
}

/// Asks the provider which nodes matter and writes 0/1 importance onto every
/// node. With several votes a node is important when a strict majority of
/// answers list it.
pub fn assign_importance(
    kg: &KnowledgeGraph,
    sentence: &Sentence,
    provider: &dyn LlmProvider,
    settings: &LabelingSettings,
) -> Result<KnowledgeGraph, LabelingError> {
    if settings.votes == 0 || settings.votes.is_multiple_of(2) {
        return Err(LabelingError::InvalidVotes(settings.votes));
    }
    let mut unlabeled = kg.clone();
    unlabeled.clear_importance();
    let request = render_prompt2(sentence, &unlabeled, &settings.generation).map_err(|e| {
        LabelingError::Prompt {
            sentence_id: sentence.sentence_id.clone(),
            cause: e.to_string(),
        }
    })?;

    let mut attempt = 0u32;
    let mut causes = Vec::new();
    let mut tally: BTreeMap<u32, u32> = unlabeled.nodes.iter().map(|n| (n.id, 0)).collect();
    let mut unknown_ids = Vec::new();

    for _vote in 0..settings.votes {
        let mut answered = false;
        for _try in 0..=settings.retries {
            attempt += 1;
            let ctx = CallContext {
                sentence_id: &sentence.sentence_id,
                attempt,
            };
            let labels = provider
                .complete(&request, ctx)
                .map_err(|e| e.to_string())
                .and_then(|resp| {
                    parse_importance_output(&resp.raw_text, &unlabeled).map_err(|e| e.to_string())
                });
            match labels {
                Ok(labels) => {
                    for (id, v) in labels.labels {
                        *tally.entry(id).or_default() += u32::from(v);
                    }
                    for id in labels.unknown_ids {
                        if !unknown_ids.contains(&id) {
                            unknown_ids.push(id);
                        }
                    }
                    answered = true;
                    break;
                }
                Err(cause) => {
                    log::warn!(
                        "sentence {} labeling attempt {attempt}: {cause}",
                        sentence.sentence_id
                    );
                    causes.push(format!("attempt {attempt}: {cause}"));
                }
            }
        }
        if !answered {
            return Err(LabelingError::Failed {
                sentence_id: sentence.sentence_id.clone(),
                attempts: attempt,
                causes,
            });
        }
    }

    let majority = settings.votes / 2 + 1;
    for node in &mut unlabeled.nodes {
        node.importance = Some(u8::from(tally[&node.id] >= majority));
    }
    unlabeled.provenance.labeling = Some(LabelingLog {
        provider_calls: attempt,
        votes: settings.votes,
        unknown_ids,
    });
    Ok(unlabeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompt::PromptKind;
    use crate::llm::provider::MockProvider;
    use crate::model::{Node, Task};
    use crate::reconstruction::ErrorReport;

    const SENTENCE: &str = "Reynolds signed with Metro-Goldwyn-Mayer in 1950.";

    fn sentence() -> Sentence {
        Sentence::new("s1", Task::Task1, SENTENCE)
    }

    fn nodes(labels: &[&str]) -> String {
        labels
            .iter()
            .zip(1..)
            .map(|(l, i)| format!("({i}, {{\"type\": \"Entity\", \"label\": \"{l}\"}}),\n"))
            .collect()
    }

    fn output(labels: &[&str], edges: &[(u32, u32, &str)]) -> String {
        let edges: String = edges
            .iter()
            .map(|(a, b, r)| format!("({a}, {b}, {{\"relation\": \"{r}\"}}),\n"))
            .collect();
        format!(
            "<nodes>\n{}</nodes>\n<edges>\n{edges}</edges>",
            nodes(labels)
        )
    }

    /// Trials with omitted counts 2, 0, 1.
    fn scripted() -> MockProvider {
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::KgExtraction,
            1,
            output(
                &["Reynolds", "Metro-Goldwyn-Mayer", "1950"],
                &[(1, 2, "signed")],
            ),
        );
        mock.insert(
            "s1",
            PromptKind::KgExtraction,
            2,
            output(
                &["Reynolds", "Metro-Goldwyn-Mayer", "1950", "Hollywood"],
                &[(1, 2, "signd with"), (2, 3, "in")],
            ),
        );
        mock.insert(
            "s1",
            PromptKind::KgExtraction,
            3,
            output(
                &["Reynolds", "Metro-Goldwyn-Mayer", "1950"],
                &[(1, 2, "signed with")],
            ),
        );
        mock
    }

    #[test]
    fn picks_min_omitted_trial_and_repairs_it() {
        let mock = scripted();
        let kg = extract_kg(&sentence(), &mock, &ExtractionSettings::default()).unwrap();
        assert_eq!(mock.call_count(), 3);
        assert_eq!(kg.provenance.chosen_trial, Some(1));
        let reports: Vec<u32> = kg
            .provenance
            .trials
            .iter()
            .map(|t| t.report.unwrap().omitted)
            .collect();
        assert_eq!(reports, vec![2, 0, 1]);
        assert_eq!(kg.error_report, Some(ErrorReport::new(0, 1, 1)));
        assert_eq!(
            kg.provenance.post_repair_report,
            Some(ErrorReport::new(0, 0, 0))
        );
        assert_eq!(kg.nodes.len(), 3, "Hollywood dropped");
        assert_eq!(kg.edges[0].relation, "signed with");
    }

    #[test]
    fn single_trial() {
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::KgExtraction,
            1,
            output(&["Reynolds", "Mayer"], &[(1, 2, "signed")]),
        );
        let settings = ExtractionSettings {
            loop_time: 1,
            ..Default::default()
        };
        let kg = extract_kg(&sentence(), &mock, &settings).unwrap();
        assert_eq!(
            kg.nodes.len(),
            1,
            "Mayer is neither a token nor within distance 2"
        );
        assert_eq!(kg.provenance.post_repair_report.unwrap().extra, 0);
    }

    #[test]
    fn unparseable_trials_rank_last() {
        let mut mock = MockProvider::new();
        mock.insert("s1", PromptKind::KgExtraction, 1, "garbage");
        mock.insert(
            "s1",
            PromptKind::KgExtraction,
            3,
            output(&["Reynolds"], &[]),
        );
        let kg = extract_kg(&sentence(), &mock, &ExtractionSettings::default()).unwrap();
        assert_eq!(kg.provenance.chosen_trial, Some(2));
        assert!(kg.provenance.trials[0].failure.is_some());
        assert!(kg.provenance.trials[1]
            .failure
            .as_deref()
            .unwrap()
            .contains("no fixture"));
    }

    #[test]
    fn all_trials_malformed() {
        let mut mock = MockProvider::new();
        for attempt in 1..=3 {
            mock.insert(
                "s1",
                PromptKind::KgExtraction,
                attempt,
                "<nodes>(1, oops)</nodes><edges></edges>",
            );
        }
        match extract_kg(&sentence(), &mock, &ExtractionSettings::default()) {
            Err(ExtractionError::AllTrialsFailed {
                causes,
                raw_responses,
                ..
            }) => {
                assert_eq!(causes.len(), 3);
                assert_eq!(raw_responses.len(), 3);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_loop_time_rejected() {
        let settings = ExtractionSettings {
            loop_time: 0,
            ..Default::default()
        };
        assert_eq!(
            extract_kg(&sentence(), &MockProvider::new(), &settings),
            Err(ExtractionError::InvalidLoopTime)
        );
    }

    fn movie_graph() -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new(
            "s1",
            vec![
                Node::new(1, "Person", "Reynolds"),
                Node::new(2, "Organization", "Metro-Goldwyn-Mayer"),
                Node::new(3, "Date", "1950"),
            ],
            vec![],
        );
        kg.edges.push(crate::model::Edge::new(1, 2, "signed with"));
        kg
    }

    #[test]
    fn labels_job_related_nodes() {
        let s = Sentence::new("s1", Task::Task2WithQuestions, SENTENCE).with_question(
            "Does this sentence contain information about a job?",
            vec!["job".into()],
        );
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            1,
            "<nodes>\n(1, {\"type\": \"Person\", \"label\": \"Reynolds\"}),\n(2, {\"type\": \"Organization\", \"label\": \"Metro-Goldwyn-Mayer\"}),\n</nodes>",
        );
        let kg = assign_importance(&movie_graph(), &s, &mock, &LabelingSettings::default()).unwrap();
        assert_eq!(
            kg.importance_map(),
            BTreeMap::from([(1, 1), (2, 1), (3, 0)])
        );
        assert!(kg.is_labeled());
    }

    #[test]
    fn empty_listing_labels_everything_zero() {
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            1,
            "<nodes>\n</nodes>",
        );
        let kg = assign_importance(
            &movie_graph(),
            &sentence(),
            &mock,
            &LabelingSettings::default(),
        )
        .unwrap();
        assert!(kg.nodes.iter().all(|n| n.importance == Some(0)));
    }

    #[test]
    fn single_node_graph() {
        let kg = KnowledgeGraph::new("s1", vec![Node::new(1, "Person", "Reynolds")], vec![]);
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            1,
            "<nodes>(1, {type: Person, label: Reynolds})</nodes>",
        );
        let kg = assign_importance(&kg, &sentence(), &mock, &LabelingSettings::default()).unwrap();
        assert_eq!(kg.importance_map(), BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn retries_then_succeeds() {
        let mut mock = MockProvider::new();
        mock.insert("s1", PromptKind::ImportanceExtraction, 1, "I think node 1.");
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            3,
            "<nodes>(3)</nodes>",
        );
        let kg = assign_importance(
            &movie_graph(),
            &sentence(),
            &mock,
            &LabelingSettings::default(),
        )
        .unwrap();
        assert_eq!(
            kg.importance_map(),
            BTreeMap::from([(1, 0), (2, 0), (3, 1)])
        );
        assert_eq!(kg.provenance.labeling.as_ref().unwrap().provider_calls, 3);
    }

    #[test]
    fn gives_up_after_retry_budget() {
        let mock = MockProvider::new();
        let err = assign_importance(
            &movie_graph(),
            &sentence(),
            &mock,
            &LabelingSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LabelingError::Failed { attempts: 3, .. }));
        assert_eq!(mock.call_count(), 3);
    }

    #[test]
    fn majority_vote() {
        let mut mock = MockProvider::new();
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            1,
            "<nodes>(1),(2)</nodes>",
        );
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            2,
            "<nodes>(1)</nodes>",
        );
        mock.insert(
            "s1",
            PromptKind::ImportanceExtraction,
            3,
            "<nodes>(2),(3)</nodes>",
        );
        let settings = LabelingSettings {
            votes: 3,
            ..Default::default()
        };
        let kg = assign_importance(&movie_graph(), &sentence(), &mock, &settings).unwrap();
        assert_eq!(
            kg.importance_map(),
            BTreeMap::from([(1, 1), (2, 1), (3, 0)])
        );
        let even = LabelingSettings {
            votes: 2,
            ..Default::default()
        };
        assert_eq!(
            assign_importance(&movie_graph(), &sentence(), &mock, &even),
            Err(LabelingError::InvalidVotes(2))
        );
    }
}
