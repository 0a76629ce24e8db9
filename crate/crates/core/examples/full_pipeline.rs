//! Every pipeline command over the fixture corpus, into a temporary
//! directory (or the directory given as the first argument).

use std::path::{Path, PathBuf};

use gazegraph::pipeline::{
    cmd_extract, cmd_fixations, cmd_label, cmd_metrics, cmd_report, cmd_roc, CommandOutcome,
    PipelineConfig, PipelineError,
};

type Step = fn(&PipelineConfig) -> Result<CommandOutcome, PipelineError>;

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gazegraph-example"));
    let config = PipelineConfig {
        sentences: Some(fixtures.join("sentences.jsonl")),
        fixtures: Some(fixtures.join("llm_fixtures.jsonl")),
        fixations: Some(fixtures.join("fixations.jsonl")),
        out: out.clone(),
        ..Default::default()
    };

    let steps: [(&str, Step); 5] = [
        ("extract", cmd_extract),
        ("label", cmd_label),
        ("metrics", cmd_metrics),
        ("roc", cmd_roc),
        ("fixations", cmd_fixations),
    ];
    for (name, step) in steps {
        let outcome = step(&config).unwrap_or_else(|e| panic!("{name}: {e}"));
        println!(
            "{name:<10} wrote {:>2} file(s), {} failure(s), {} warning(s)",
            outcome.written.len(),
            outcome.failures.len(),
            outcome.warnings
        );
    }
    println!("outputs in {}\n", out.display());
    print!("{}", cmd_report(&config).expect("report"));
}
