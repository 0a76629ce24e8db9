//! Renders both prompts for a sentence and parses a hand-written answer.

use gazegraph::llm::{
    parse_importance_output, parse_kg_output, render_prompt1, render_prompt2, GenerationSettings,
};
use gazegraph::{Sentence, Task};

fn main() {
    let settings = GenerationSettings::default();
    let sentence = Sentence::new(
        "s1",
        Task::Task2WithQuestions,
        "Reynolds signed with MGM in 1950",
    )
    .with_question("Who signed with MGM?", vec!["Reynolds".into()]);

    let p1 = render_prompt1(&sentence, &settings);
    println!(
        "--- extraction prompt ({}, t={}) ---",
        p1.model_name, p1.temperature
    );
    println!("{}", p1.rendered_text);

    let answer = r#"<nodes>
(1, {"type": "Person", "label": "Reynolds"}),
(2, {"type": "Organization", "label": "MGM"}),
(3, {"type": "Date", "label": "1950"}),
</nodes>
<edges>
(1, 2, {"relation": "signed with"}),
(2, 3, {"relation": "in"}),
</edges>"#;
    let kg = parse_kg_output(answer, "s1").expect("well-formed answer");
    println!("parsed {} nodes, {} edges", kg.nodes.len(), kg.edges.len());

    let p2 = render_prompt2(&sentence, &kg, &settings).expect("graph is valid");
    println!("--- labeling prompt ---");
    println!("{}", p2.rendered_text);

    // The labeling answer lists only the important nodes.
    let labeled = r#"<nodes>
(1, {"type": "Person", "label": "Reynolds"}),
</nodes>"#;
    let labels = parse_importance_output(labeled, &kg).expect("well-formed labels");
    println!("labels: {labels:?}");
}
