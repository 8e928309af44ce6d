use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdgscope_cli::synth::{write_fixture, SynthOptions};
use sdgscope_cli::{run_pipeline, run_stage, CliError, Overrides, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "sdgscope", version, about = "Scientometric analysis of SDG research corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML)
    #[arg(short, long, value_name = "FILE")]
    config: PathBuf,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus
    Ingest(StageArgs),
    /// Select the topical core and expand it by direct citation
    Delineate(StageArgs),
    /// Yearly output, growth and actor tables
    Indicators(StageArgs),
    /// Keyword co-occurrence network and clusters
    Cooccur(StageArgs),
    /// Keyword burst detection
    Burst(StageArgs),
    /// Assign publications to SDGs
    Classify(StageArgs),
    /// SDG co-citation and co-classification networks
    Interlink(StageArgs),
    /// Collate the bundle into report.json
    Report(StageArgs),
    /// Run every stage in order
    Run(StageArgs),
    /// Write a synthetic corpus with glossary, totals and config
    Synth {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        records: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn execute(args: &StageArgs, stage: Option<Stage>) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(&args.config)?;
    config.apply(&args.overrides);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    pool.install(|| match stage {
        Some(stage) => run_stage(&config, stage),
        None => run_pipeline(&config),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => execute(a, Some(Stage::Ingest)),
        Command::Delineate(a) => execute(a, Some(Stage::Delineate)),
        Command::Indicators(a) => execute(a, Some(Stage::Indicators)),
        Command::Cooccur(a) => execute(a, Some(Stage::Cooccur)),
        Command::Burst(a) => execute(a, Some(Stage::Burst)),
        Command::Classify(a) => execute(a, Some(Stage::Classify)),
        Command::Interlink(a) => execute(a, Some(Stage::Interlink)),
        Command::Report(a) => execute(a, Some(Stage::Report)),
        Command::Run(a) => execute(a, None),
        Command::Synth { out, records, seed } => write_fixture(
            out,
            SynthOptions {
                records: *records,
                seed: *seed,
            },
        )
        .map(|_| ())
        .map_err(|e| CliError::stage(Stage::Ingest, format!("{}: {e}", out.display()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdgscope: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
