use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ibfsi_core::app::{self, Scenario, ScenarioConfig};
use ibfsi_core::stepper::Stepper;
use ibfsi_core::Error;

#[derive(Parser)]
#[command(
    name = "ibfsi",
    about = "Immersed finite element simulator for fluids interacting with compressible solids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write diagnostics.csv plus VTK snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and build its meshes without stepping.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the version.
    Version,
}

/// One line on stderr: `error kind=<Kind> step=<n|-> message="<text>"`.
fn error_line(error: &Error) -> String {
    let step = match error {
        Error::Step { step, .. } => step.to_string(),
        _ => "-".into(),
    };
    format!(
        "error kind={} step={} message={:?}",
        error.kind(),
        step,
        error.to_string()
    )
}

fn fail(error: &Error) -> ExitCode {
    eprintln!("{}", error_line(error));
    ExitCode::FAILURE
}

fn run(config: &Path, out: Option<&Path>) -> ExitCode {
    let cfg = match ScenarioConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match app::run(&cfg, out) {
        Ok(output) => {
            let dir = out.unwrap_or(&cfg.output_dir);
            println!(
                "ok steps={} t={} wall={:.2}s out={}",
                output.reports.len(),
                output.final_state.t,
                output.wall_seconds,
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(failure) => fail(&failure.error),
    }
}

fn validate(config: &Path) -> ExitCode {
    let checked = ScenarioConfig::load(config).and_then(|cfg| {
        let sc = Scenario::build(&cfg)?;
        Stepper::new(sc.spaces.clone(), sc.step_config.clone(), sc.material)?;
        Ok((cfg, sc))
    });
    match checked {
        Ok((cfg, sc)) => {
            let sizes = sc.spaces.sizes();
            println!(
                "ok scenario={:?} steps={} dofs={} (u {}, p {}, w {}, lambda {})",
                cfg.scenario,
                cfg.n_steps(),
                sizes.iter().sum::<usize>(),
                sizes[0],
                sizes[1],
                sizes[2],
                sizes[3]
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    // clap prints usage and exits with status 2 on unknown flags
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => run(&config, out.as_deref()),
        Command::Validate { config } => validate(&config),
        Command::Version => {
            println!("ibfsi {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
