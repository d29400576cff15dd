//! Command-line driver: ingest → train-lm → annotate → analyze → report.
//!
//! Every stage reads and writes files in the configured output directory:
//!
//! | stage      | writes                                                   |
//! |------------|----------------------------------------------------------|
//! | `ingest`   | `words.tsv`, `ingest_report.json`                        |
//! | `train-lm` | `model.json`                                             |
//! | `annotate` | `annotation.tsv`                                         |
//! | `analyze`  | `delta_loglik.json`, `delta_loglik.csv`, `residuals.csv`, `design_<class>.tsv` |
//! | `report`   | summary on stdout                                        |
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 a computation
//! that could not be carried out on valid input.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use wrapup::corpus::{Measure, Modality};
use wrapup::predictors::{ContextScope, KGrid, PositionSelect, ResponseTransform};
use wrapup::surprisal::Punctuation;

pub mod commands;
pub mod config;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "wrapup",
    version,
    about = "Clause-final reading-time analysis with INF^(k) predictors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
#[command(rename_all = "kebab-case")]
pub enum Command {
    /// Read raw reading times and write the subject-averaged word table
    Ingest,
    /// Train the Kneser-Ney model on `lm_train`
    TrainLm,
    /// Write per-word log-frequency and surprisal columns
    Annotate,
    /// Sweep ΔLogLik over the k grid and compute residual diagnostics
    Analyze,
    /// Summarize the analysis outputs
    Report,
}

/// Flags that override keys of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// spr | eye-tracking
    #[arg(long, global = true)]
    pub modality: Option<Modality>,
    /// Self-paced reading table
    #[arg(long, global = true)]
    pub spr: Option<PathBuf>,
    /// Eye-tracking text table
    #[arg(long, global = true)]
    pub text: Option<PathBuf>,
    /// Eye-tracking fixation table
    #[arg(long, global = true)]
    pub fixations: Option<PathBuf>,
    /// Language-model training text, one sentence per line
    #[arg(long, global = true)]
    pub lm_train: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lm_order: Option<usize>,
    #[arg(long, global = true)]
    pub lm_min_count: Option<u64>,
    /// Subword surprisal file (JSON lines); repeatable
    #[arg(long = "import", global = true)]
    pub imported: Vec<PathBuf>,
    /// Annotation column to analyze, e.g. `kn5` or `gpt2`
    #[arg(long, global = true)]
    pub surprisal: Option<String>,
    /// include | exclude
    #[arg(long, global = true)]
    pub punctuation: Option<Punctuation>,
    /// Comma-separated exponents, e.g. `0,0.5,1,2`
    #[arg(long, global = true)]
    pub k_grid: Option<KGrid>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// log | raw
    #[arg(long, global = true)]
    pub response: Option<ResponseTransform>,
    /// rt | go-past
    #[arg(long, global = true)]
    pub measure: Option<Measure>,
    /// clause-final | medial | both
    #[arg(long, global = true)]
    pub position: Option<PositionSelect>,
    /// sentence-so-far | whole-sentence | include-target
    #[arg(long, global = true)]
    pub scope: Option<ContextScope>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

/// An error with the exit-code class it maps to.
#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub validation: bool,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            validation: true,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.validation {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<wrapup::Error> for Failure {
    fn from(e: wrapup::Error) -> Self {
        Self {
            validation: e.is_validation(),
            message: e.to_string(),
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure>;
}

impl<T> Context<T> for wrapup::Result<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{what}: {}", f.message);
            f
        })
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

impl Overrides {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let o = self.clone();
        let path = |p: Option<PathBuf>, slot: &mut Option<PathBuf>| {
            if let Some(p) = p {
                *slot = Some(absolute(p));
            }
        };
        path(o.spr, &mut cfg.spr);
        path(o.text, &mut cfg.text);
        path(o.fixations, &mut cfg.fixations);
        path(o.lm_train, &mut cfg.lm_train);
        if let Some(out) = o.out {
            cfg.output_dir = absolute(out);
        }
        if !o.imported.is_empty() {
            cfg.imported = o.imported.into_iter().map(absolute).collect();
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field {
                    cfg.$field = v;
                })*
            };
        }
        set!(
            dataset,
            lm_order,
            lm_min_count,
            punctuation,
            k_grid,
            folds,
            seed,
            response,
            measure,
            position,
            scope
        );
        if o.modality.is_some() {
            cfg.modality = o.modality;
        }
        if o.surprisal.is_some() {
            cfg.surprisal = o.surprisal;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one subcommand.
pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.overrides.resolve()?;
    if let Some(jobs) = cli.overrides.jobs {
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    std::fs::create_dir_all(cfg.out_dir())
        .map_err(|e| Failure::validation(format!("{}: {e}", cfg.out_dir().display())))?;
    log::info!("{:?} with config {}", cli.command, &cfg.hash()[..12]);
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::TrainLm => commands::train_lm(&cfg),
        Command::Annotate => commands::annotate(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Report => commands::report(&cfg, &mut std::io::stdout().lock()),
    }
}

pub(crate) fn display(p: &Path) -> String {
    p.display().to_string()
}
