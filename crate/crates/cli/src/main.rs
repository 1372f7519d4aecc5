use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use legis_cli::{synthesize, CliError, Command, ProviderMode, RunConfig, Runner};

#[derive(Parser)]
#[command(name = "legis", version, about = "Transportation bill filtering, modelling and attribution")]
struct Args {
    #[command(subcommand)]
    action: Action,
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderMode>,
    /// Sets every named seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Refuse any network access.
    #[arg(long, global = true)]
    offline: bool,
}

#[derive(Subcommand)]
enum Action {
    /// Load and validate the input tables.
    Ingest,
    /// Translate, extract keywords and run the three selection stages.
    Filter,
    /// Build participation records, the feature matrix and descriptive statistics.
    Features,
    /// Cross-validate, fit and evaluate every model in the grid.
    Train,
    /// TreeSHAP values, importance, correlation and dependence tables.
    Explain,
    /// Consolidated run manifest.
    Report,
    /// Every command in order.
    All,
    /// Write a synthetic corpus to the configured input paths.
    Synth,
}

fn load_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(mode) = args.provider {
        cfg.provider.mode = mode;
    }
    if let Some(seed) = args.seed {
        cfg.seeds = legis_cli::config::Seeds::all(seed);
    }
    if let Some(out) = &args.output {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    if let Action::Synth = args.action {
        let labels = synthesize(&cfg)?;
        log::info!("synthetic corpus written; labels at {}", labels.display());
        return Ok(());
    }
    let output = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut runner = Runner::new(cfg, output, args.offline)?;
    let command = match args.action {
        Action::Ingest => Command::Ingest,
        Action::Filter => Command::Filter,
        Action::Features => Command::Features,
        Action::Train => Command::Train,
        Action::Explain => Command::Explain,
        Action::Report => Command::Report,
        Action::All => return runner.run_all().map(|_| ()),
        Action::Synth => unreachable!(),
    };
    runner.run(command).map(|_| ())
}

fn action_name(a: &Action) -> &'static str {
    match a {
        Action::Ingest => "ingest",
        Action::Filter => "filter",
        Action::Features => "features",
        Action::Train => "train",
        Action::Explain => "explain",
        Action::Report => "report",
        Action::All => "all",
        Action::Synth => "synth",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = e.record(action_name(&args.action));
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::from(record.exit_code as u8)
        }
    }
}
