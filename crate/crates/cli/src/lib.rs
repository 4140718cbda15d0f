//! Command-line front end. [`run`] does all the work and returns what the
//! binary should print, so that commands can be tested in process.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmts::{RefinementKind, Strategy};

pub use error::CliError;
pub use report::{load_report, reverify, RunReport};

#[derive(Debug, Parser)]
#[command(name = "nmts", version, about = "Modal and NMTS refinement checker")]
pub struct Cli {
    /// Print the report as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print failure traces, witness words and member models.
    #[arg(long, global = true)]
    pub explain: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Modal,
    Nmts,
}

impl From<KindArg> for RefinementKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Modal => RefinementKind::Modal,
            KindArg::Nmts => RefinementKind::Nmts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Subset,
    Exhaustive,
}

impl From<StrategyArg> for Strategy {
    fn from(strategy: StrategyArg) -> Self {
        match strategy {
            StrategyArg::Subset => Strategy::Subset,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
        }
    }
}

#[derive(Debug, Args)]
pub struct Bounds {
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 3)]
    pub max_states: usize,
    /// Skip the NMTS precondition of NMTS refinement.
    #[arg(long)]
    pub allow_non_nmts: bool,
}

/// Model arguments are file paths or bundled model ids such as `fig6.T`.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model and classify it.
    Check { model: String },
    /// Decide whether LEFT refines RIGHT.
    Refine {
        left: String,
        right: String,
        #[arg(long, value_enum, default_value = "modal")]
        kind: KindArg,
        #[arg(long)]
        allow_non_nmts: bool,
        /// Check this relation file instead of computing one.
        #[arg(long)]
        relation: Option<String>,
    },
    /// List the implementations of a model up to bisimilarity.
    Impls {
        model: String,
        #[arg(long, value_enum, default_value = "modal")]
        kind: KindArg,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Look for an implementation of LEFT that is not one of RIGHT.
    Thorough {
        left: String,
        right: String,
        #[arg(long, value_enum, default_value = "modal")]
        kind: KindArg,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Implementations accepted by modal refinement but not by NMTS refinement.
    Gap {
        model: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Decide strong bisimilarity of two LTS.
    Bisim { left: String, right: String },
    /// Print a model in GraphViz format.
    ExportDot { model: String },
    /// Run the assertions of a corpus manifest.
    Corpus {
        /// Defaults to the bundled corpus.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run the randomized property suite.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iterations: u64,
        #[arg(long, default_value_t = 4)]
        max_states: usize,
        #[arg(long, default_value_t = 2)]
        alphabet_size: usize,
        #[arg(long, default_value_t = 3)]
        impl_bound: usize,
    },
}

/// What the binary prints and returns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match commands::execute(&cli.command, cli.explain) {
        Ok((report, text)) => Output {
            code: report.exit_code,
            stdout: if cli.json { report::to_json(&report) } else { text },
            stderr: String::new(),
        },
        Err(e) => Output {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}
