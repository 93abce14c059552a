use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skorokhod::Orientation;
use skorokhod_cli::{cmd_calibrate, cmd_compare, cmd_example, cmd_verify, CliError, Console, Overrides, RuleName};

/// Barrier solutions of the Skorokhod embedding problem for atomic laws.
#[derive(Parser)]
#[command(name = "skorokhod", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Target total-variation residual [default: 1e-10 or the instance option]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Monte Carlo paths [default: 1000000 or the instance option]
    #[arg(long = "mc-paths", global = true)]
    mc_paths: Option<u64>,
    /// Monte Carlo seed [default: 42 or the instance option]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Priority {
    Max,
    Min,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the Perkins barrier of an instance
    Calibrate {
        instance: PathBuf,
        /// Output file for the calibration JSON [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Running extremum optimised first
        #[arg(long, value_enum, default_value = "max")]
        priority: Priority,
    },
    /// Reproduce the three-atom example for one value of alpha
    Example {
        #[arg(long)]
        alpha: f64,
        /// Directory for the instance, calibration, SVG and CSV artifacts
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Compare stopping rules on one instance
    Compare {
        instance: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "perkins,ay")]
        rules: Vec<RuleName>,
        /// JSON file `{"rules": [...]}` with Hobson-Pedersen, Root or Rost rules
        #[arg(long)]
        params: Option<PathBuf>,
        /// Output file for the report JSON [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a rule or calibration file against an instance
    Verify { instance: PathBuf, rule: PathBuf },
}

fn run(cli: Cli, console: &mut Console) -> Result<(), CliError> {
    let overrides = Overrides {
        tol: cli.global.tol,
        mc_paths: cli.global.mc_paths,
        seed: cli.global.seed,
    };
    match cli.command {
        Command::Calibrate {
            instance,
            out,
            priority,
        } => {
            let orientation = match priority {
                Priority::Max => Orientation::MaxPriority,
                Priority::Min => Orientation::MinPriority,
            };
            cmd_calibrate(&instance, orientation, out.as_deref(), &overrides, console).map(drop)
        }
        Command::Example { alpha, out_dir } => cmd_example(alpha, out_dir.as_deref(), &overrides, console).map(drop),
        Command::Compare {
            instance,
            rules,
            params,
            out,
        } => cmd_compare(
            &instance,
            &rules,
            params.as_deref(),
            out.as_deref(),
            &overrides,
            console,
        )
        .map(drop),
        Command::Verify { instance, rule } => cmd_verify(&instance, &rule, &overrides, console).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let (mut out, mut err) = (io::stdout().lock(), io::stderr());
    let mut console = Console {
        out: &mut out,
        err: &mut err,
    };
    match run(cli, &mut console) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
