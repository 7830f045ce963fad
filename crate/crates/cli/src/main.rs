mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{emit, Format, RunManifest, Tolerances};

/// Numerical checks of PPW-type eigenvalue ratio bounds for Dirichlet
/// Schrödinger operators on balls and planar domains.
#[derive(Debug, Parser, Serialize)]
#[command(name = "ppw", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub out: Format,

    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Eigenvalue tolerance (default: $PPW_DEFAULT_TOL, else 1e-10).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Seed of the randomized sweep.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DomainArgs {
    /// Mask file (`nx ny h cx cy` header, then rows of 0/1).
    #[arg(long, conflicts_with = "shape")]
    pub mask: Option<PathBuf>,

    /// Analytic shape, e.g. `disk:r=1`, `square:s=1`, `ellipse:a=1,b=0.6`.
    #[arg(long)]
    pub shape: Option<String>,

    /// Grid spacing for `--shape`.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum What {
    Potential,
    Eigenfunction,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// The Euclidean bound j²_{n/2,1}/j²_{n/2−1,1}.
    Constant {
        #[arg(long)]
        dim: usize,
    },
    /// One radial eigenpair on a ball.
    SolveBall {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value = "zero")]
        potential: String,
        #[arg(long, default_value_t = 0)]
        sector: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Gaussian weight: none, plus or minus.
        #[arg(long, default_value = "none")]
        weight: String,
    },
    /// Lowest Dirichlet eigenvalues on a planar grid domain.
    SolveDomain {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value = "zero")]
        potential: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Also solve at h/2 and extrapolate.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Spherical rearrangement of a potential or of the ground state.
    Rearrange {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value = "zero")]
        potential: String,
        #[arg(long, value_enum)]
        what: What,
        /// Comparison potential; with `--what eigenfunction` the rearranged
        /// ground state is compared with that of the matching ball.
        #[arg(long)]
        comparison: Option<String>,
    },
    /// Riccati quantities of the two lowest radial eigenfunctions.
    Diagnostics {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value = "zero")]
        potential: String,
        /// Values of y at which to examine T(·, y).
        #[arg(long, value_delimiter = ',')]
        y: Vec<f64>,
    },
    /// λ₂(Ω, V) ≤ λ₂(S₁, Ṽ) for a planar domain.
    Verify {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        potential: String,
        #[arg(long)]
        comparison: String,
    },
    /// λ₂/λ₁ over a range of ball radii.
    Scan {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        potential: String,
        #[arg(long)]
        rmin: f64,
        #[arg(long)]
        rmax: f64,
        #[arg(long)]
        steps: usize,
    },
    /// λ₂ − (1 + 2/n)λ₁ for V = r^{2−ε}.
    Sharpness {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        rmin: f64,
        #[arg(long)]
        rmax: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Eigenvalues for the densities e^{±r²}: a ball, a list of radii, or a
    /// domain with its comparison disk.
    Gaussian {
        #[arg(long)]
        sign: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Randomized sweep of the ratio-shift inequality.
    Sweep {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn default_tol() -> Result<f64, String> {
    match std::env::var("PPW_DEFAULT_TOL") {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && *t < 1.0)
            .ok_or_else(|| format!("PPW_DEFAULT_TOL must be a number in (0, 1), got `{s}`")),
        Err(_) => Ok(ppw_core::radial::DEFAULT_TOL),
    }
}

fn run(cli: &Cli, argv: Vec<String>) -> Result<bool, String> {
    let start = Instant::now();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let tol = match cli.tol {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(format!("--tol must be positive, got {t}")),
        None => default_tol()?,
    };
    let outcome = commands::dispatch(&cli.command, tol, cli.seed).map_err(|e| e.to_string())?;
    let passed = outcome.checks.iter().all(|c| c.passed || !c.asserted);
    let manifest = RunManifest {
        command_line: argv,
        parameters: serde_json::to_value(cli).map_err(|e| e.to_string())?,
        version: env!("CARGO_PKG_VERSION").into(),
        tolerances: Tolerances { eigen: tol, slack: outcome.slack },
        wall_time_s: start.elapsed().as_secs_f64(),
        checks: outcome.checks,
        passed,
    };
    emit(cli.out, cli.output.as_deref(), &manifest, outcome.result, outcome.table)
        .map_err(|e| e.to_string())?;
    Ok(passed)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli, argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ppw: one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ppw: {e}");
            ExitCode::from(1)
        }
    }
}
