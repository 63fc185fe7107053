use bornflea::harness::{run, validate_config, ConfigError, ExperimentConfig, ExperimentKind};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "bornflea", version, about = "Born-rule emergence experiments: two-state and double-well flea models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// δ-averaged two-state model against the Born mixture.
    TwostateBorn(RunArgs),
    /// Monte Carlo over fleas on the discretized double well.
    DoublewellBorn(RunArgs),
    /// Frequency-averaged coherent oscillator against its orbit average.
    Prop1Oscillator(RunArgs),
    /// Total-variation distance of (ωt mod 2π) to uniform.
    Equidistribution(RunArgs),
    /// Numeric tunnelling gap against the closed-form asymptotic.
    SplittingCheck(RunArgs),
    /// Parse and check a config, printing it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; overrides the config and defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let raw = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    validate_config(&raw).map_err(|e| {
        match &e {
            ConfigError::Syntax { .. } => eprintln!("error: {}: {e}", path.display()),
            ConfigError::Invalid(_) => eprintln!("error: {} has {e}", path.display()),
        }
        ExitCode::from(EXIT_CONFIG)
    })
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<(), ExitCode> {
    let mut cfg = load(&args.config)?;
    if cfg.experiment != kind {
        eprintln!("error: {} configures {}, not {kind}", args.config.display(), cfg.experiment);
        return Err(ExitCode::from(EXIT_CONFIG));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return Err(ExitCode::from(EXIT_CONFIG));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| {
            eprintln!("error: cannot start {n} worker threads: {e}");
            ExitCode::from(EXIT_RUNTIME)
        })?;
    }
    let table = run(&cfg).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_NUMERIC)
    })?;
    let out = args.out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
    let written = match &out {
        Some(path) => File::create(path).and_then(|f| table.write_csv(BufWriter::new(f))),
        None => table.write_csv(std::io::stdout().lock()),
    };
    written.map_err(|e| {
        let target = out.map_or("stdout".to_string(), |p| p.display().to_string());
        eprintln!("error: cannot write {target}: {e}");
        ExitCode::from(EXIT_RUNTIME)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TwostateBorn(a) => execute(ExperimentKind::TwostateBorn, a),
        Command::DoublewellBorn(a) => execute(ExperimentKind::DoublewellBorn, a),
        Command::Prop1Oscillator(a) => execute(ExperimentKind::Prop1Oscillator, a),
        Command::Equidistribution(a) => execute(ExperimentKind::Equidistribution, a),
        Command::SplittingCheck(a) => execute(ExperimentKind::SplittingCheck, a),
        Command::Validate { config } => load(&config).map(|cfg| {
            let text = serde_json::to_string_pretty(&cfg).expect("configs serialize");
            let mut stdout = std::io::stdout().lock();
            // a closed stdout is not a config problem
            let _ = writeln!(stdout, "{text}");
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
