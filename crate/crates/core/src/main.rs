use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gazegraph::gaze::AggregationMode;
use gazegraph::metrics::Metric;
use gazegraph::pipeline::{
    cmd_extract, cmd_fixations, cmd_label, cmd_metrics, cmd_report, cmd_roc, CommandOutcome,
    PipelineConfig, PipelineError, ProviderKind,
};

#[derive(Parser)]
#[command(
    name = "gazegraph",
    version,
    about = "Sentence knowledge graphs, centrality and eye-fixation alignment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and repair one graph per sentence.
    Extract(Flags),
    /// Label node importance on extracted graphs.
    Label(Flags),
    /// Per-graph and per-task graph statistics.
    Metrics(Flags),
    /// ROC curves and AUC of each centrality against the labels.
    Roc(Flags),
    /// Fixation counts on important vs. other nodes per subject.
    Fixations(Flags),
    /// Computed values beside the reference numbers.
    Report(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    sentences: Option<PathBuf>,
    /// Defaults to <out>/graphs.
    #[arg(long)]
    graphs_dir: Option<PathBuf>,
    #[arg(long)]
    fixations: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// mock or http.
    #[arg(long, default_value = "mock")]
    provider: ProviderKind,
    /// Chat-completions URL for the http provider; the key is read from GAZEGRAPH_API_KEY.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// JSONL of scripted responses for the mock provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    loop_time: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_fraction: Option<f64>,
    /// Centrality used for top-fraction selection.
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Odd number of labeling answers combined by majority.
    #[arg(long)]
    votes: Option<u32>,
    /// Average fixations per node (default) or per sentence.
    #[arg(long, value_parser = parse_aggregation)]
    aggregation: Option<AggregationMode>,
}

fn parse_aggregation(s: &str) -> Result<AggregationMode, String> {
    match s {
        "per-node" | "per_node" => Ok(AggregationMode::PerNode),
        "per-sentence" | "per_sentence" => Ok(AggregationMode::PerSentence),
        other => Err(format!(
            "unknown aggregation {other:?}, expected per-node or per-sentence"
        )),
    }
}

impl Flags {
    fn config(self) -> PipelineConfig {
        let d = PipelineConfig::default();
        PipelineConfig {
            provider: self.provider,
            endpoint: self.endpoint,
            model: self.model.unwrap_or(d.model),
            loop_time: self.loop_time.unwrap_or(d.loop_time),
            temperature: self.temperature.unwrap_or(d.temperature),
            top_fraction: self.top_fraction.unwrap_or(d.top_fraction),
            metric: self.metric.unwrap_or(d.metric),
            concurrency: self.concurrency.unwrap_or(d.concurrency),
            votes: self.votes.unwrap_or(d.votes),
            label_retries: d.label_retries,
            aggregation: self.aggregation.unwrap_or(d.aggregation),
            sentences: self.sentences,
            fixtures: self.fixtures,
            fixations: self.fixations,
            graphs_dir: self.graphs_dir,
            out: self.out,
        }
    }
}

fn finish(name: &str, result: Result<CommandOutcome, PipelineError>) -> ExitCode {
    match result {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("failed: {f}");
            }
            if outcome.warnings > 0 {
                eprintln!("{name}: {} warning(s)", outcome.warnings);
            }
            eprintln!("{name}: wrote {} file(s)", outcome.written.len());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Extract(f) => finish("extract", cmd_extract(&f.config())),
        Command::Label(f) => finish("label", cmd_label(&f.config())),
        Command::Metrics(f) => finish("metrics", cmd_metrics(&f.config())),
        Command::Roc(f) => finish("roc", cmd_roc(&f.config())),
        Command::Fixations(f) => finish("fixations", cmd_fixations(&f.config())),
        Command::Report(f) => match cmd_report(&f.config()) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("report: {e}");
                ExitCode::from(2)
            }
        },
    }
}
