use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use uqdc_core::harness::{emit_tables, run_experiment, verify, ExperimentConfig};
use uqdc_core::Error;

const EXIT_CRITERIA_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "uqdc", version, about = "Data-consistent inversion experiments with surrogate maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Base seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicate seeds; tables report mean and std.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config and write its tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the acceptance checks for ode, pde, singular, oracles or all.
    Verify {
        #[arg(long)]
        experiment: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(r) = self.replicates {
            config.replicates = r;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_config() => EXIT_CONFIG,
        Error::Io { .. } => EXIT_CONFIG,
        Error::Stage { source, .. } => exit_code(source),
        _ => EXIT_NUMERICAL,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("UQDC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("UQDC_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, Error> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, overrides } => {
            let mut config = ExperimentConfig::load(&config)?;
            overrides.apply(&mut config);
            config.validate()?;
            let report = run_experiment(&config)?;
            let files = emit_tables(&report, &config.output_dir)?;
            for f in files {
                println!("{}", f.display());
            }
            eprintln!("{} finished in {:.1} s", config.experiment.name(), report.timing.total_seconds);
            Ok(0)
        }
        Command::Verify { experiment, overrides } => {
            let (criteria, reports) = verify(&experiment, |c| {
                let out = c.output_dir.clone();
                overrides.apply(c);
                if overrides.out.is_some() {
                    c.output_dir = c.output_dir.join(out.file_name().unwrap_or_default());
                }
            })?;
            if overrides.out.is_some() {
                for r in &reports {
                    emit_tables(r, &r.config.output_dir)?;
                }
            }
            for c in &criteria {
                println!("{c}");
            }
            let failed = criteria.iter().filter(|c| !c.passed).count();
            println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
            Ok(if failed == 0 { 0 } else { EXIT_CRITERIA_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
