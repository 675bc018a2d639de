//! `rlmine`: load a graph, embed it, train the value network, mine rules and
//! evaluate them. Every phase reads and writes artifacts in the output
//! directory, so phases can be rerun individually.

mod config;
mod manifest;
mod phases;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use config::{Overrides, RunConfig, OUTPUT_DIR_ENV};
use phases::{MissingPrerequisite, Phase, Pipeline};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_MISSING: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rlmine", version, about = "Value-guided closed-path rule mining")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Heads mined concurrently.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Per-head mining budget in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Comma-separated head predicates.
    #[arg(long, global = true, value_delimiter = ',')]
    predicates: Option<Vec<String>>,
    /// Maximum rule body length.
    #[arg(long, global = true)]
    length: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    quiet: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Read the triples and split off held-out facts.
    Load,
    /// Train the TransE embedding.
    Embed,
    /// Sample curriculum seed rules.
    Seeds,
    /// Train the value network.
    TrainAgent,
    /// Mine rules for every head.
    Mine,
    /// Apply the mined rules to the train graph.
    Predict,
    /// Predictive power and link-prediction metrics on held-out facts.
    Evaluate,
    /// Rule tables, reward series and precision curve.
    Report,
    /// All phases in order.
    Run,
}

impl Command {
    fn phases(self) -> Vec<Phase> {
        match self {
            Command::Load => vec![Phase::Load],
            Command::Embed => vec![Phase::Embed],
            Command::Seeds => vec![Phase::Seeds],
            Command::TrainAgent => vec![Phase::TrainAgent],
            Command::Mine => vec![Phase::Mine],
            Command::Predict => vec![Phase::Predict],
            Command::Evaluate => vec![Phase::Evaluate],
            Command::Report => vec![Phase::Report],
            Command::Run => Phase::ALL.to_vec(),
        }
    }
}

fn init_logging(verbose: u8, quiet: u8) {
    let level = match 2 + i16::from(verbose) - i16::from(quiet) {
        i16::MIN..=0 => log::LevelFilter::Error,
        1 => log::LevelFilter::Warn,
        2 => log::LevelFilter::Info,
        3 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RLMINE_LOG")
        .format(|buf, rec| writeln!(buf, "{} {}", rec.level(), rec.args()))
        .init();
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let overrides = Overrides {
        seed: cli.seed,
        jobs: cli.jobs,
        time_limit: cli.time_limit,
        predicates: cli.predicates.clone(),
        length: cli.length,
    };
    let env_output = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let cfg = RunConfig::load(cli.config.as_deref())?.resolve(&overrides, env_output);
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.quiet);

    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.print_config {
        let mut out = std::io::stdout().lock();
        // a closed pipe (`| head`) is not an error worth reporting
        let _ = write!(out, "{}\n{}", cfg.to_toml(), config::paper_reference());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand given; see `rlmine --help`");
        return ExitCode::from(EXIT_CONFIG);
    };

    let pipeline = Pipeline::new(cfg);
    for phase in command.phases() {
        if let Err(e) = pipeline.run(phase) {
            eprintln!("error: phase {}: {e:#}", phase.name());
            let code = if e.downcast_ref::<MissingPrerequisite>().is_some() {
                EXIT_MISSING
            } else {
                EXIT_FAILURE
            };
            return ExitCode::from(code);
        }
    }
    ExitCode::SUCCESS
}
