//! `lowres-kit`: file-in, file-out front end to the toolkit.
//!
//! Exit status is 0 on success, 1 when input or configuration fails
//! validation, 2 on any other failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowres_core::gazetteer::SurfaceVote;
use lowres_core::pipeline::{Recipe, Schema};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "lowres-kit",
    version,
    about = "Low-resource language incident pipeline toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select in-domain sentences by TF-IDF similarity under a genre mix.
    Select(SelectArgs),
    /// Train a misalignment classifier and split parallel pairs.
    FilterParallel(FilterArgs),
    /// Realign document-paired segments by length.
    Realign(RealignArgs),
    /// Add synthetic pairs with swapped entities.
    AugmentEntities(AugmentArgs),
    /// Mask (or restore) do-not-translate tokens.
    Dnt(DntArgs),
    /// Pick phrases for native-informant translation.
    NiPhrases(NiArgs),
    /// Tag a corpus from a gazetteer and write CoNLL.
    Tag(TagArgs),
    /// Link entity mentions to a knowledge base.
    Link(LinkArgs),
    /// Detect situation frames with keywords.
    Sf(SfArgs),
    /// Pick uncertain spans (or sentences) for annotation.
    Al(AlArgs),
    /// Rule-based phonemic transcription with backoff.
    Ipa(IpaArgs),
    /// Run an end-to-end recipe from a TOML config.
    Run(RunArgs),
    /// Check an output file against its schema.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SelectArgs {
    /// JSON-lines corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// `term<TAB>frequency` file; without it sentences are ranked by their
    /// top TF-IDF weights.
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    budget: usize,
    /// e.g. `NW=0.5,SN=0.3,WL=0.2`; defaults to the corpus mix.
    #[arg(long)]
    genre_ratio: Option<String>,
    /// TSV `doc_id seg_id score text`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// `src<TAB>tgt` pairs.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Pairs judged parallel.
    #[arg(long)]
    out: PathBuf,
    /// Pairs judged misaligned.
    #[arg(long)]
    removed: Option<PathBuf>,
    /// Use a saved model instead of training.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    save_model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    swap_rate: f64,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Args)]
struct RealignArgs {
    /// JSON lines `{doc_id, src: [..], tgt: [..]}`.
    #[arg(long)]
    input: PathBuf,
    /// `src<TAB>tgt` pairs; beads with an empty side are dropped.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    penalty_insert_delete: f64,
    #[arg(long, default_value_t = 1.5)]
    penalty_merge: f64,
    #[arg(long, default_value_t = 6.8)]
    variance: f64,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// `src<TAB>tgt` entity pairs.
    #[arg(long)]
    entity_lexicon: PathBuf,
    #[arg(long, default_value_t = 1)]
    n_copies: usize,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DntArgs {
    /// One sentence per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Masks as JSON lines: written when masking, read when restoring.
    #[arg(long)]
    slots: PathBuf,
    /// Put the original tokens back into translated text.
    #[arg(long)]
    restore: bool,
}

#[derive(Args)]
struct NiArgs {
    /// JSON-lines monolingual corpus.
    #[arg(long)]
    monolingual: PathBuf,
    /// `src<TAB>tgt` pairs whose source side counts as known.
    #[arg(long)]
    bilingual: PathBuf,
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    #[arg(long, default_value_t = 100)]
    top_n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Vote {
    Majority,
    FirstSeen,
}

impl From<Vote> for SurfaceVote {
    fn from(v: Vote) -> Self {
        match v {
            Vote::Majority => SurfaceVote::Majority,
            Vote::FirstSeen => SurfaceVote::FirstSeen,
        }
    }
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// `surface<TAB>TYPE[<TAB>kb_id]`.
    #[arg(long)]
    gazetteer: PathBuf,
    /// Words never tagged or marked unknown, one per line.
    #[arg(long)]
    negatives: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 2)]
    min_edit_dist: usize,
    #[arg(long)]
    no_edit_propagate: bool,
    #[arg(long)]
    no_doc_propagate: bool,
    #[arg(long, value_enum, default_value_t = Vote::Majority)]
    vote: Vote,
    /// Leave capitalized untagged tokens as `O`.
    #[arg(long)]
    no_unknown: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LinkArgs {
    /// Tagged CoNLL; each sentence is one segment.
    #[arg(long)]
    input: PathBuf,
    /// Document id for the mentions; defaults to the input file stem.
    #[arg(long)]
    doc_id: Option<String>,
    #[arg(long)]
    kb: PathBuf,
    /// Translation lexicon, in priority order; repeatable.
    #[arg(long)]
    lexicon: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 3)]
    k_per_token: usize,
    /// Repeatable or comma-separated.
    #[arg(long, value_delimiter = ',')]
    incident_country: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    neighbors: Vec<String>,
    #[arg(long, default_value_t = 50_000)]
    population_floor: u64,
    #[arg(long)]
    nil_margin: Option<f64>,
    /// Forbid GPE/LOC cross-links.
    #[arg(long)]
    strict_types: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SfArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Ready keyword list; otherwise keywords are induced.
    #[arg(long)]
    keywords: Option<PathBuf>,
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    affinity: Option<PathBuf>,
    #[arg(long)]
    neighbors: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Places come from gazetteer matches.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long)]
    urgency: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    th1: f64,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 2)]
    top_t: usize,
    /// Also keep at most min(k_cap, sentences) types per document.
    #[arg(long)]
    topk: bool,
    #[arg(long, default_value_t = 3)]
    k_cap: usize,
    /// A number of sentences or `inf`.
    #[arg(long, default_value = "1")]
    location_window: String,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AlArgs {
    /// Tagger marginals as JSON lines; selects spans.
    #[arg(long, conflicts_with = "corpus")]
    marginals: Option<PathBuf>,
    /// Without a tagger: rank sentences of this corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 3)]
    max_span_len: usize,
    #[arg(long, default_value_t = 1)]
    max_per_sentence: usize,
    #[arg(long)]
    genre_ratio: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IpaArgs {
    /// Tables tried in order: shipped ids (`eng-Latn`, `sin-Sinh`) or CSV paths.
    #[arg(long)]
    chain: String,
    /// Re-romanize with this table (`roman` or a CSV path).
    #[arg(long)]
    roman: Option<String>,
    /// One sentence per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipeArg {
    NerData,
    Edl,
    MtData,
    Sf,
}

impl From<RecipeArg> for Recipe {
    fn from(r: RecipeArg) -> Self {
        match r {
            RecipeArg::NerData => Recipe::NerData,
            RecipeArg::Edl => Recipe::Edl,
            RecipeArg::MtData => Recipe::MtData,
            RecipeArg::Sf => Recipe::Sf,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Defaults to the config's `recipe`.
    #[arg(value_enum)]
    recipe: Option<RecipeArg>,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads; overrides LOWRES_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Conll,
    EdlTsv,
    FramesJsonl,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Conll => Schema::Conll,
            SchemaArg::EdlTsv => Schema::EdlTsv,
            SchemaArg::FramesJsonl => Schema::FramesJsonl,
        }
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    schema: SchemaArg,
    path: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stdout)
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            })
        }
    }
}
