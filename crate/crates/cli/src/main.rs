//! `stratwave`: run the solver pipeline from a JSON configuration.
//!
//! Exit codes: 0 success, 1 a mathematical condition failed, 2 usage or
//! configuration error, 3 numerical failure.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stratwave::config::RunConfig;
use stratwave::SolverError;

#[derive(Parser)]
#[command(name = "stratwave", version, about = "Steady stratified capillary-gravity water waves")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Admissibility conditions and the laminar background
    Check(Common),
    /// Laminar flow with the prescribed depth
    Laminar(Common),
    /// Dispersion constant, critical wavelength and kernel mode
    Dispersion(Common),
    /// Continue the bifurcating branch in both directions
    Branch(Common),
    /// Velocity, pressure and density fields of one branch point
    Reconstruct(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    config: PathBuf,
    #[arg(long)]
    lambda_hat: Option<f64>,
    #[arg(long)]
    nq: Option<usize>,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    ds: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// output directory (overrides the config)
    #[arg(long, env = "STRATWAVE_OUT")]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), SolverError> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| SolverError::Config(format!("{}: {e}", self.config.display())))?;
        let mut c = RunConfig::from_json(&text)?;
        if let Some(v) = self.lambda_hat {
            c.dispersion.lambda_hat = v;
        }
        if let Some(v) = self.nq {
            c.branch.nq = v;
        }
        if let Some(v) = self.np {
            c.branch.np = v;
        }
        if let Some(v) = self.ds {
            c.branch.ds = v;
        }
        if let Some(v) = self.steps {
            c.branch.steps = v;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        c.validate()?;
        let out = c.out.clone().unwrap_or_else(|| PathBuf::from("stratwave-out"));
        std::fs::create_dir_all(&out).map_err(|e| SolverError::Config(format!("{}: {e}", out.display())))?;
        Ok((c, out))
    }
}

type Command = fn(&RunConfig, &Path) -> Result<commands::Report, SolverError>;

fn exit_code(e: &SolverError) -> u8 {
    use stratwave::ProfileError as P;
    match e {
        SolverError::Config(_) => 2,
        SolverError::Profile(P::NegativeRadicand { .. } | P::Res2Violated { .. }) => 1,
        SolverError::Profile(_) => 2,
        SolverError::Condition { .. } => 1,
        SolverError::Numerical(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Command) = match &cli.cmd {
        Cmd::Check(c) => (c, commands::check),
        Cmd::Laminar(c) => (c, commands::laminar),
        Cmd::Dispersion(c) => (c, commands::dispersion),
        Cmd::Branch(c) => (c, commands::branch),
        Cmd::Reconstruct(c) => (c, commands::reconstruct),
    };
    let result = common.load().and_then(|(cfg, out)| run(&cfg, &out));
    match result {
        Ok(r) => {
            print!("{}", r.summary);
            if let Some(msg) = &r.failure {
                eprintln!("condition failed: {msg}");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
