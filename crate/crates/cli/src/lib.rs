//! `bugsift` command line: each subcommand runs one pipeline stage and writes fixed-name
//! artifacts under the output directory. Exit status is 0 on success, 1 on usage errors and
//! 2 on data errors.

mod artifacts;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use artifacts::{model_name, BUILD, COUNTS, EMBEDDING, FUNCTIONS, MANIFEST, TOKENS, VOCAB};
pub use config::{Experiment, ExperimentConfig};

/// Bad invocation or configuration; maps to exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum ModelChoice {
    /// Extra-trees on bag-of-words counts.
    BowEt,
    /// Convolutional text model over pre-trained embeddings.
    W2vCnn,
    /// Convolutional features fed to extra-trees.
    CnnEt,
    /// Random forest on build features.
    BuildRf,
    /// Tree ensemble on build features plus bag-of-words counts.
    Combined,
}

impl ModelChoice {
    pub const ALL: [ModelChoice; 5] =
        [ModelChoice::BowEt, ModelChoice::W2vCnn, ModelChoice::CnnEt, ModelChoice::BuildRf, ModelChoice::Combined];

    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::BowEt => "bow-et",
            ModelChoice::W2vCnn => "w2v-cnn",
            ModelChoice::CnnEt => "cnn-et",
            ModelChoice::BuildRf => "build-rf",
            ModelChoice::Combined => "combined",
        }
    }

    fn needs_tokens(self) -> bool {
        self != ModelChoice::BuildRf
    }

    fn needs_build(self) -> bool {
        matches!(self, ModelChoice::BuildRf | ModelChoice::Combined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Valid,
    Test,
}

impl From<SplitArg> for bugsift::pipeline::Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Self::Train,
            SplitArg::Valid => Self::Valid,
            SplitArg::Test => Self::Test,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bugsift", version, about = "Function-level vulnerability detection for C/C++")]
pub struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split corpus files into functions and write token sequences and line spans.
    Lex,
    /// Parse `.tir` files and write 116-dimensional build feature vectors.
    FeaturizeIr,
    /// Build the token vocabulary.
    Vocab,
    /// Train skip-gram token embeddings.
    Embed,
    /// Label, deduplicate and split functions into a manifest.
    Dataset,
    /// Train one model on the training split.
    Train {
        #[arg(long, value_enum)]
        model_kind: ModelChoice,
    },
    /// Score a split and write ROC/PR curves and the AUC summary.
    Evaluate {
        #[arg(long, value_enum)]
        model_kind: ModelChoice,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Rank functions by predicted bug likelihood.
    Rank {
        #[arg(long, value_enum)]
        model_kind: ModelChoice,
        /// Restrict to one manifest split.
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
    },
}

/// Parse `args` (including the program name), run the command and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        // Fails only if a pool already exists (repeated in-process runs); keep that one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let exp = Experiment::load(cli.config.as_deref(), cli.seed, cli.out.as_deref())?;
    match &cli.command {
        Command::Lex => commands::lex(&exp),
        Command::FeaturizeIr => commands::featurize_ir(&exp),
        Command::Vocab => commands::vocab(&exp),
        Command::Embed => commands::embed(&exp),
        Command::Dataset => commands::dataset(&exp),
        Command::Train { model_kind } => commands::train(&exp, *model_kind),
        Command::Evaluate { model_kind, split } => commands::evaluate(&exp, *model_kind, (*split).into()),
        Command::Rank { model_kind, split } => commands::rank(&exp, *model_kind, split.map(Into::into)),
    }
}
