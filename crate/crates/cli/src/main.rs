mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use peba::sim::PolicyMode;
use peba::writer::WriterMode;

use config::ClassifierMode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, paths or configuration; exit code 2.
    Usage(String),
    /// Failure while running; exit code 3.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "peba", version, about = "Persona-driven crowd simulation and behavior alignment")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Single seed; overrides --seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Decision policy.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<PolicyMode>,
}

fn parse_mode(s: &str) -> Result<PolicyMode, String> {
    s.parse().map_err(|e: peba::Error| e.to_string())
}

fn parse_writer(s: &str) -> Result<WriterMode, String> {
    s.parse().map_err(|e: peba::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and label it.
    Simulate {
        #[arg(long, default_value = "school")]
        layout: String,
        #[arg(long, default_value = "base")]
        personas: String,
        /// Directive assignment in explicit mode.
        #[arg(long, default_value = "quota")]
        directives: String,
        #[arg(long, value_enum, default_value_t = ClassifierMode::Rule)]
        classifier: ClassifierMode,
    },
    /// Align a persona pool to the target distribution.
    Optimize {
        #[arg(long, default_value = "school")]
        layout: String,
        #[arg(long, default_value = "base")]
        personas: String,
        #[arg(long, value_parser = parse_writer)]
        writer: Option<WriterMode>,
        #[arg(long, value_enum, default_value_t = ClassifierMode::Rule)]
        classifier: ClassifierMode,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Run seeds on parallel threads.
        #[arg(long)]
        parallel: bool,
    },
    /// Score a trained pool on another layout against a baseline and a retrained pool.
    Transfer {
        #[arg(long)]
        trained: String,
        #[arg(long)]
        baseline: String,
        /// Use this pool for the Retrained row instead of optimizing the baseline.
        #[arg(long)]
        retrained: Option<String>,
        #[arg(long, default_value = "office")]
        layout: String,
        #[arg(long, value_parser = parse_writer)]
        writer: Option<WriterMode>,
        #[arg(long, value_enum, default_value_t = ClassifierMode::Rule)]
        classifier: ClassifierMode,
    },
    /// Label a trajectory log.
    Classify {
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long, value_enum, default_value_t = ClassifierMode::Rule)]
        classifier: ClassifierMode,
    },
    /// Score predicted labels against gold labels.
    EvalClassifier {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Top n-grams of persona text per behavior label.
    Tfidf {
        #[arg(long)]
        personas: String,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = peba::tfidf::DEFAULT_TOP_K)]
        top_k: usize,
    },
    /// Token usage and dollar cost of optimizer histories.
    CostReport {
        #[arg(long, required = true, num_args = 1..)]
        history: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
