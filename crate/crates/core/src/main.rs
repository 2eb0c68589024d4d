use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fourier_lab::cli::{self, Outcome, Overrides, RunConfig};
use fourier_lab::LabError;

#[derive(Parser)]
#[command(name = "fourier-lab", version, about = "Quarter-involution laboratory on a truncated Hermite basis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check K^2 = parity, K^4 = 1 and related identities for the configured operator.
    Verify(Common),
    /// Commutator, uncertainty, kernel-bias and translation scans.
    Explore(Common),
    /// Two states with identical position and momentum weights.
    Pauli {
        /// Relative phase of the psi_2 component, in (0, pi).
        #[arg(long)]
        phi: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Dump the reconstructed kernel over the window.
    Kernel(Common),
    /// Generate or validate regrouping plan files.
    Plan {
        #[command(subcommand)]
        action: PlanAction,
    },
}

#[derive(Subcommand)]
enum PlanAction {
    Generate {
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    Validate { file: PathBuf },
}

#[derive(Args)]
struct Common {
    /// JSON run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `fourier`, `identity`, `random` or a plan JSON file.
    #[arg(long)]
    plan: Option<String>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
}

impl From<Common> for Overrides {
    fn from(c: Common) -> Self {
        Overrides {
            config: c.config,
            dim: c.dim,
            quad_order: c.quad_order,
            seed: c.seed,
            plan: c.plan,
            window: c.window,
            out: c.out,
            tol: c.tol,
        }
    }
}

fn run(command: Command) -> Result<Outcome, LabError> {
    let config = |c: Common| RunConfig::resolve(&c.into());
    match command {
        Command::Verify(c) => cli::cmd_verify(&config(c)?),
        Command::Explore(c) => cli::cmd_explore(&config(c)?),
        Command::Pauli { phi, common } => cli::cmd_pauli(phi, &config(common)?),
        Command::Kernel(c) => cli::cmd_kernel(&config(c)?),
        Command::Plan { action } => match action {
            PlanAction::Generate { dim, seed, out } => cli::cmd_plan_generate(dim, seed, &out).map(|(o, _)| o),
            PlanAction::Validate { file } => cli::cmd_plan_validate(&file),
        },
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::error_status(&e))
        }
    }
}
