//! Extraction and labeling against scripted answers from the fixture corpus.

use std::path::Path;

use gazegraph::llm::{
    assign_importance, extract_kg, ExtractionSettings, LabelingSettings, LlmProvider, MockProvider,
};
use gazegraph::pipeline::load_sentences;

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let provider =
        MockProvider::from_jsonl(fixtures.join("llm_fixtures.jsonl")).expect("fixture file");
    let sentences = load_sentences(&fixtures.join("sentences.jsonl")).expect("sentence file");

    for sentence in sentences.iter().take(4) {
        let kg = match extract_kg(sentence, &provider, &ExtractionSettings::default()) {
            Ok(kg) => kg,
            Err(e) => {
                println!("{}: extraction failed: {e}", sentence.sentence_id);
                continue;
            }
        };
        let trials: Vec<String> = kg
            .provenance
            .trials
            .iter()
            .map(|t| match t.report {
                Some(r) => format!("{}/{}/{}", r.omitted, r.extra, r.misspelled),
                None => "unparsed".into(),
            })
            .collect();
        println!(
            "{}: trials [{}] -> chose {:?}, after repair {:?}",
            sentence.sentence_id,
            trials.join(", "),
            kg.provenance.chosen_trial,
            kg.provenance.post_repair_report
        );
        match assign_importance(&kg, sentence, &provider, &LabelingSettings::default()) {
            Ok(labeled) => {
                for n in &labeled.nodes {
                    println!(
                        "  {:>2} {:<24} important={}",
                        n.id,
                        n.label,
                        n.is_important()
                    );
                }
            }
            Err(e) => println!("  labeling failed: {e}"),
        }
    }
    println!("provider calls: {}", provider.call_count());
}
