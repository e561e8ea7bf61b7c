//! `braillekit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod commands;
mod config;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Marks an error as caused by the invocation rather than the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "braillekit",
    about = "Braille ASCII toolkit",
    disable_version_flag = true
)]
pub struct Cli {
    /// TOML configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for eval, augment and train (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the version and the checksums of the tables in effect.
    #[arg(long, short = 'V')]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Convert between Braille ASCII and Unicode Braille patterns.
    Codec(CodecArgs),
    /// Check a JSONL corpus of parallel examples.
    Validate { input: PathBuf },
    /// Flip Braille dots at random.
    Perturb(PerturbArgs),
    /// Split Braille into knowledge-base fragments.
    Tokenize(LangText),
    /// Insert word boundaries into Braille.
    Wordseg(LangText),
    /// Query a knowledge base.
    Kb {
        #[command(subcommand)]
        query: KbQuery,
    },
    /// Extend an embedding table with Braille tokens and initialize them.
    InitEmbed(InitEmbedArgs),
    /// Augment a corpus.
    Augment(AugmentArgs),
    /// Transcribe text or math to Braille ASCII.
    Transcribe(TranscribeArgs),
    /// Render instruction records from a corpus and a template.
    Render(RenderArgs),
    /// Score hypotheses against references.
    Eval(EvalArgs),
    /// Compare embedding initializations on the toy model.
    Train(TrainArgs),
    /// Normalize, validate and deduplicate a corpus.
    Ingest { input: PathBuf },
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "direction")]
pub struct CodecDirection {
    #[arg(long)]
    pub to_unicode: bool,
    #[arg(long)]
    pub to_ascii: bool,
}

#[derive(Args)]
pub struct CodecArgs {
    #[command(flatten)]
    pub direction: CodecDirection,
    /// Text to convert; standard input when omitted.
    pub text: Option<String>,
}

#[derive(Args)]
pub struct PerturbArgs {
    /// Braille ASCII; standard input lines when omitted.
    pub text: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct LangText {
    pub text: String,
    #[arg(long, default_value = "zh")]
    pub language: String,
}

#[derive(Subcommand)]
pub enum KbQuery {
    /// Counterparts of a fragment, most frequent first.
    Lookup {
        fragment: String,
        #[arg(long, default_value = "zh")]
        language: String,
    },
    /// Fragments for a counterpart.
    Inverse {
        counterpart: String,
        #[arg(long, default_value = "zh")]
        language: String,
    },
    /// Entry counts of every loaded table.
    Stats,
    /// Draw a same-attribute replacement.
    Sample {
        #[arg(long)]
        attribute: String,
        #[arg(long, default_value = "")]
        exclude: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
pub struct InitEmbedArgs {
    /// Base path of the input table (`<base>.json` and `<base>.bin`).
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Base path for the extended table.
    #[arg(long)]
    pub save: PathBuf,
    /// Fragments to add, one per line; every KB fragment when omitted.
    #[arg(long)]
    pub fragments: Option<PathBuf>,
    #[arg(long, default_value = "bkft")]
    pub init: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct AugmentArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "syntax-tree")]
    pub strategy: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub min_sim: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Restrict syntax-tree replacement to these attributes.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report and skip examples that cannot be augmented instead of failing.
    #[arg(long)]
    pub keep_going: bool,
}

#[derive(Args)]
pub struct TranscribeArgs {
    pub text: String,
    #[arg(long, default_value = "zh")]
    pub language: String,
    /// Space-separated syllables, one per Chinese character.
    #[arg(long)]
    pub pinyin: Option<String>,
}

#[derive(Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    /// Template file, or a template name looked up in the configured templates directory.
    #[arg(long)]
    pub template: String,
    #[arg(long, default_value = "braille-to-text")]
    pub direction: String,
    #[arg(long, default_value = "braille-to-text")]
    pub task: String,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long)]
    pub tokenize: Option<String>,
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Plain edit distance for TER.
    #[arg(long)]
    pub no_ter_shifts: bool,
}

#[derive(Args)]
pub struct TrainArgs {
    /// JSONL toy pairs replacing the synthetic Chinese training corpus.
    #[arg(long)]
    pub corpus_zh: Option<PathBuf>,
    /// JSONL toy pairs replacing the synthetic English training corpus.
    #[arg(long)]
    pub corpus_en: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "bkft,random")]
    pub init: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub target: Option<f64>,
    /// Seed of the synthetic task.
    #[arg(long, default_value_t = 2024)]
    pub task_seed: u64,
    /// Use a shuffled, uninformative knowledge base.
    #[arg(long)]
    pub shuffled_kb: bool,
    /// Write the experiment report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the synthetic corpora as JSONL into this directory and exit.
    #[arg(long)]
    pub dump_corpora: Option<PathBuf>,
}

fn error_name(e: &anyhow::Error) -> Option<String> {
    use braillekit::{augment, bkft, braille, dataset, kb, metrics, toy};
    e.chain().find_map(|c| {
        let dbg = if let Some(x) = c.downcast_ref::<braille::BrailleError>() {
            format!("{x:?}")
        } else if let Some(x) = c.downcast_ref::<kb::KbError>() {
            format!("{x:?}")
        } else if let Some(x) = c.downcast_ref::<dataset::DatasetError>() {
            format!("{x:?}")
        } else if let Some(x) = c.downcast_ref::<bkft::BkftError>() {
            x.reason_code().to_string()
        } else if let Some(x) = c.downcast_ref::<augment::AugmentError>() {
            format!("{x:?}")
        } else if let Some(x) = c.downcast_ref::<metrics::MetricError>() {
            format!("{x:?}")
        } else {
            format!("{:?}", c.downcast_ref::<toy::ToyError>()?)
        };
        dbg.split(|ch: char| !ch.is_alphanumeric())
            .next()
            .map(String::from)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let usage = e.downcast_ref::<UsageError>().is_some();
            let mut stderr = std::io::stderr().lock();
            let _ = match error_name(&e) {
                Some(name) => writeln!(stderr, "error: {name}: {e:#}"),
                None => writeln!(stderr, "error: {e:#}"),
            };
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
