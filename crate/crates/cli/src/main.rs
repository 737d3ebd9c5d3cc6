use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shapeopt_cli::{check_derivative, compare, preset, run, CliError, ExperimentConfig, PRESETS};

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Shape optimization with restricted gradient and Newton methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(Source),
    /// Run several experiments on the same problem and align their histories.
    Compare {
        /// Preset names or TOML files.
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long, default_value = "out/compare")]
        out: PathBuf,
    },
    /// Finite-difference check of the shape derivative on random fields.
    Check {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 20)]
        fields: usize,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Disk refinement level.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(level) = self.level {
            cfg.problem.level = level;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(k) = self.snapshot_every {
            cfg.output.snapshot_every = k;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn load_input(input: &str) -> Result<ExperimentConfig, CliError> {
    if PRESETS.contains(&input) {
        preset(input)
    } else {
        ExperimentConfig::from_toml(&std::fs::read_to_string(input)?)
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(source) => {
            let summary = run(&source.load()?)?;
            print!("{}", summary.to_text());
            Ok(summary.exit_code())
        }
        Command::Compare { inputs, out } => {
            let configs = inputs.iter().map(|s| load_input(s)).collect::<Result<Vec<_>, _>>()?;
            compare(&configs, &out)?;
            println!("wrote {}", out.join("comparison.csv").display());
            Ok(0)
        }
        Command::Check { source, fields } => {
            let orders = check_derivative(&source.load()?, fields)?;
            for (i, q) in orders.iter().enumerate() {
                println!("field {i}: order {q:.3}");
            }
            let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
            println!("minimum order {worst:.3}");
            Ok(0)
        }
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHAPEOPT_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
