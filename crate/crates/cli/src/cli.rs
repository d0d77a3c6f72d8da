//! Command-line surface.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "metaharvest",
    version,
    about = "Schema-driven dataset metadata harvester"
)]
pub struct Cli {
    /// Log verbosity; repeat for more detail (also honours RUST_LOG).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect or export the built-in metadata schemas.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
    /// Harvest every source of a corpus manifest into metadata records.
    Harvest(HarvestArgs),
    /// Score harvested records against ground-truth annotations.
    Evaluate(EvaluateArgs),
    /// Build link matrices (embedding similarity or temporal overlap).
    Link(LinkArgs),
}

#[derive(Debug, Subcommand)]
pub enum SchemaAction {
    /// List the built-in schema identifiers.
    List,
    /// Print (or write) a built-in schema file.
    Export {
        /// Schema id: lter-life or croissant.
        id: String,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmChoice {
    /// Deterministic offline models; no network, no credentials.
    Mock,
    /// HTTP endpoint configured via METAHARVEST_LLM_* environment variables.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalLlmChoice {
    /// No gateway: deterministic metrics only.
    None,
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageChoice {
    Raw,
    Postprocessed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    /// Report only values stated in the source.
    Strict,
    /// Allow clearly implied best guesses.
    BestGuess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricsChoice {
    /// ROUGE-L only (no gateway needed).
    Rouge,
    /// LLM-judged faithfulness and response relevancy only.
    Llm,
    /// Everything.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindChoice {
    Similarity,
    Temporal,
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// Corpus manifest (JSON).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Schema id or schema file path; defaults to the manifest's schema_id.
    #[arg(long)]
    pub schema: Option<String>,
    #[arg(long, value_enum, default_value_t = LlmChoice::Mock)]
    pub llm: LlmChoice,
    /// Stop after this stage.
    #[arg(long, value_enum, default_value_t = StageChoice::Postprocessed)]
    pub stage: StageChoice,
    #[arg(long, value_enum, default_value_t = PolicyChoice::Strict)]
    pub policy: PolicyChoice,
    /// Concurrent per-dataset harvests.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Output/store directory.
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
    /// Fetch timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Page text cap in characters.
    #[arg(long, default_value_t = 200_000)]
    pub text_cap: usize,
    /// User-Agent header for page fetches.
    #[arg(long)]
    pub user_agent: Option<String>,
    /// Override the chat model name (live gateway).
    #[arg(long)]
    pub model: Option<String>,
    /// Override the embedding model name (live gateway).
    #[arg(long)]
    pub embed_model: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of record files.
    #[arg(long)]
    pub records: PathBuf,
    /// Directory of annotation files (one JSON object per dataset).
    #[arg(long)]
    pub annotations: PathBuf,
    /// Schema id or schema file path.
    #[arg(long)]
    pub schema: String,
    /// Corpus manifest, for provider names and (with LLM metrics) documents.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Store directory holding the page cache (needed by LLM metrics).
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricsChoice::Rouge)]
    pub metrics: MetricsChoice,
    #[arg(long, value_enum, default_value_t = EvalLlmChoice::None)]
    pub llm: EvalLlmChoice,
    /// Record stage to score.
    #[arg(long, value_enum, default_value_t = StageChoice::Postprocessed)]
    pub stage: StageChoice,
    /// Print an aggregate block grouped by this key.
    #[arg(long)]
    pub group_by: Option<String>,
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Directory of record files.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindChoice,
    /// Schema id or schema file path (validates the linked field).
    #[arg(long)]
    pub schema: Option<String>,
    /// Field to link on; defaults to Description (similarity) or
    /// Temporal coverage (temporal).
    #[arg(long)]
    pub field: Option<String>,
    /// Date substituted for "Present" during temporal normalization
    /// (YYYY-MM-DD); defaults to the run date.
    #[arg(long)]
    pub present_date: Option<String>,
    #[arg(long, value_enum, default_value_t = LlmChoice::Mock)]
    pub llm: LlmChoice,
    #[arg(long, value_enum, default_value_t = StageChoice::Postprocessed)]
    pub stage: StageChoice,
    /// Store directory for response caching; defaults to --out.
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
}
