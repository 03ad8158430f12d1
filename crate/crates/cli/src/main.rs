//! Batch front end: reads a structured config, runs the named experiment,
//! writes a deterministic JSON report plus CSV tables, and exits 0 only when
//! every assertion passed.
//!
//! Exit codes: 0 all checks pass; 1 some check failed; 2 validation or
//! configuration error; 3 numeric error; 64 usage error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::RunContext;
use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "validation error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric error: {msg}"),
        }
    }
}

impl From<ultrafunctions::Error> for CliError {
    fn from(e: ultrafunctions::Error) -> Self {
        use ultrafunctions::Error as E;
        fn classify(e: &ultrafunctions::Error) -> bool {
            // true when the error is a configuration/validation problem
            match e {
                E::Domain(_)
                | E::Validation(_)
                | E::Resolution { .. }
                | E::SpaceMismatch
                | E::NotAMember { .. }
                | E::Capability(_) => true,
                E::NonFinite { .. }
                | E::DegenerateSpace { .. }
                | E::DependentPoints(_)
                | E::NotPositive { .. }
                | E::DivergentPairing { .. }
                | E::IdentityViolation { .. } => false,
                E::Chain { source, .. } => classify(source),
            }
        }
        if classify(&e) {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ultrafun",
    version,
    about = "Run function-space experiments from a config file and write deterministic reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for any randomized sampling in the checks.
    #[arg(long, default_value_t = 600_613)]
    seed: u64,
    /// Multiplies every default tolerance.
    #[arg(long = "tol-scale", default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named generator set into a space and report its diagnostics.
    BuildSpace {
        #[command(flatten)]
        common: CommonArgs,
        /// Generator set name from the config.
        #[arg(long)]
        name: String,
    },
    /// Build a point frame and verify its identities.
    Frame {
        #[command(flatten)]
        common: CommonArgs,
        /// Frame name from the config.
        #[arg(long)]
        name: String,
    },
    /// Canonically extend a functional into a space.
    Extend {
        #[command(flatten)]
        common: CommonArgs,
        /// Generator set name for the target space.
        #[arg(long)]
        space: String,
        /// Functional name from the config.
        #[arg(long)]
        functional: String,
    },
    /// Extend an operator and optionally apply it to a named input.
    Operate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        space: String,
        #[arg(long)]
        operator: String,
        #[arg(long)]
        input: Option<String>,
    },
    /// Close a generator set under the transform and verify the transform
    /// identities and frame correspondences.
    FourierCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Generator set name to close and check.
        #[arg(long)]
        space: String,
    },
    /// Run a refinement chain and report stabilization.
    Refine {
        #[command(flatten)]
        common: CommonArgs,
        /// Chain name from the config.
        #[arg(long)]
        chain: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Numeric(_) => ExitCode::from(3),
            }
        }
    }
}

type Runner<'a> = Box<dyn Fn(&RunContext) -> Result<commands::Report, CliError> + 'a>;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, runner): (&CommonArgs, Runner) = match &cli.command {
        Command::BuildSpace { common, name } => {
            let name = name.clone();
            (
                common,
                Box::new(move |ctx| commands::build_space_cmd(ctx, &name)),
            )
        }
        Command::Frame { common, name } => {
            let name = name.clone();
            (common, Box::new(move |ctx| commands::frame_cmd(ctx, &name)))
        }
        Command::Extend {
            common,
            space,
            functional,
        } => {
            let (space, functional) = (space.clone(), functional.clone());
            (
                common,
                Box::new(move |ctx| commands::extend_cmd(ctx, &space, &functional)),
            )
        }
        Command::Operate {
            common,
            space,
            operator,
            input,
        } => {
            let (space, operator, input) = (space.clone(), operator.clone(), input.clone());
            (
                common,
                Box::new(move |ctx| {
                    commands::operate_cmd(ctx, &space, &operator, input.as_deref())
                }),
            )
        }
        Command::FourierCheck { common, space } => {
            let space = space.clone();
            (
                common,
                Box::new(move |ctx| commands::fourier_check_cmd(ctx, &space)),
            )
        }
        Command::Refine { common, chain } => {
            let chain = chain.clone();
            (
                common,
                Box::new(move |ctx| commands::refine_cmd(ctx, &chain)),
            )
        }
    };

    let config = ExperimentConfig::load(&common.config)?;
    if !(common.tol_scale > 0.0 && common.tol_scale.is_finite()) {
        return Err(CliError::Config(format!(
            "tol-scale must be positive and finite, got {}",
            common.tol_scale
        )));
    }
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let ctx = RunContext {
        config: &config,
        out_dir,
        seed: common.seed,
        tol_scale: common.tol_scale * config.tolerance_scale,
    };
    let report = runner(&ctx)?;
    for check in &report.checks {
        println!(
            "{}: {} (residual {:.3e}, tolerance {:.3e})",
            check.check,
            if check.pass { "pass" } else { "FAIL" },
            check.residual,
            check.tolerance
        );
    }
    println!(
        "report written to {}",
        ctx.out_dir.join("report.json").display()
    );
    Ok(report.pass)
}
