//! Maps fixations onto graph elements and compares important vs. other nodes.

use gazegraph::gaze::{
    aggregate_fixations, build_token_map, cohort_summary, subject_importance_stats,
    AggregationMode, FixationRecord, SentenceObservation,
};
use gazegraph::{Edge, KnowledgeGraph, Node, Sentence, Task};

fn record(subject: &str, word_index: usize, word: &str, n: u32) -> FixationRecord {
    FixationRecord {
        subject_id: subject.into(),
        sentence_id: "s1".into(),
        word_index,
        word: word.into(),
        n_fixations: n,
        total_duration_ms: None,
    }
}

fn main() {
    let sentence = Sentence::new("s1", Task::Task1, "Reynolds signed with MGM in 1950");
    let mut kg = KnowledgeGraph::new(
        "s1",
        vec![
            Node::new(1, "Person", "Reynolds"),
            Node::new(2, "Organization", "MGM"),
            Node::new(3, "Date", "1950"),
        ],
        vec![Edge::new(1, 2, "signed with"), Edge::new(2, 3, "in")],
    );
    for (node, important) in kg.nodes.iter_mut().zip([1, 1, 0]) {
        node.importance = Some(important);
    }

    let map = build_token_map(&kg, &sentence);
    for (i, tok) in map.tokens.iter().enumerate() {
        println!("{i} {tok:<10} -> {:?}", map.element_of(i));
    }

    let words = ["Reynolds", "signed", "with", "MGM", "in", "1950"];
    let mut per_subject = Vec::new();
    for (subject, counts) in [("A", [3, 1, 0, 2, 0, 1]), ("B", [2, 1, 1, 3, 0, 0])] {
        let records: Vec<FixationRecord> = words
            .iter()
            .zip(counts)
            .enumerate()
            .map(|(i, (w, n))| record(subject, i, w, n))
            .collect();
        let totals = aggregate_fixations(&records, &map);
        let obs = [SentenceObservation {
            graph: &kg,
            totals: &totals,
        }];
        let stats = subject_importance_stats(subject, &obs, AggregationMode::PerNode)
            .expect("labeled nodes");
        println!(
            "{subject}: important {:?} other {:?} difference {:?}",
            stats.mean_fixation_important,
            stats.mean_fixation_non_important,
            stats.difference()
        );
        per_subject.push(stats);
    }
    let cohort = cohort_summary(&per_subject).expect("two subjects");
    println!(
        "cohort: mean {:.3} sd {:.3}",
        cohort.mean_difference, cohort.sd_of_difference
    );
}
