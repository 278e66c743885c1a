//! `kslab`: batch driver for the spectral laboratory.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical failure
//! (a diagnostic file is written), 3 invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use ks_cli::commands::{self, RunError};
use ks_cli::config::{self, Command, Format, Overrides};

#[derive(Parser)]
#[command(
    name = "kslab",
    version,
    about = "Spectral laboratory for the linearized Keller-Segel operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Key=value configuration file; CLI flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rescaled inverse-temperature β (b = βν²).
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Single stationary-state scale ν.
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Log-spaced ν sweep "a:b:count".
    #[arg(long = "nu-grid", global = true)]
    nu_grid: Option<String>,
    /// Highest mode index n.
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
    /// Inner/outer interface parameter ζ₀ ∈ (0, 0.5].
    #[arg(long, global = true)]
    zeta0: Option<f64>,
    /// Base node count for the direct discretization.
    #[arg(long = "grid-points", global = true)]
    grid_points: Option<usize>,
    /// RNG seed for randomized diagnostics.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format where a choice exists: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Direct and matched eigenvalues with scaled residuals, per (ν, n).
    EigenTable,
    /// Matching diagnostics: ᾱ_n roots, gluing constants, residuals.
    Match,
    /// Iterated kernels T_j and glued eigenfunctions φ_n on the inner grid.
    Profiles,
    /// Spectral stability under the default admissible perturbation.
    Perturb,
    /// Non-radial coercivity quotient statistics.
    Coercivity,
    /// Run the full invariant suite; nonzero exit on any failure.
    Validate,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    let command = match cli.command {
        Cmd::EigenTable => Command::EigenTable,
        Cmd::Match => Command::Match,
        Cmd::Profiles => Command::Profiles,
        Cmd::Perturb => Command::Perturb,
        Cmd::Coercivity => Command::Coercivity,
        Cmd::Validate => Command::Validate,
    };

    let file_overrides = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match config::parse_config_file(&text) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            },
            Err(e) => {
                eprintln!("invalid configuration: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => Overrides::default(),
    };

    let format = match cli.format.as_deref() {
        None => None,
        Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        Some(other) => {
            eprintln!("invalid configuration: format '{other}' (expected csv or json)");
            return ExitCode::from(1);
        }
    };
    let nu_list = match (cli.nu, &cli.nu_grid) {
        (Some(_), Some(_)) => {
            eprintln!("invalid configuration: --nu and --nu-grid are mutually exclusive");
            return ExitCode::from(1);
        }
        (Some(nu), None) => Some(vec![nu]),
        (None, Some(spec)) => match config::parse_nu_grid(spec) {
            Ok(list) => Some(list),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
        },
        (None, None) => None,
    };
    let flag_overrides = Overrides {
        beta: cli.beta,
        nu_list,
        n_max: cli.n_max,
        zeta0: cli.zeta0,
        grid_points: cli.grid_points,
        output: cli.output,
        seed: cli.seed,
        format,
    };

    let cfg = match flag_overrides.layered_over(file_overrides).resolve(command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Numerics(e)) => {
            let diag_path = cfg
                .output
                .as_ref()
                .map(|p| p.with_extension("diag.json"))
                .unwrap_or_else(|| PathBuf::from("kslab-diagnostic.json"));
            let diag = serde_json::json!({
                "error": e.to_string(),
                "beta": cfg.beta,
                "nu_list": cfg.nu_list,
                "n_max": cfg.n_max,
                "zeta0": cfg.zeta0,
                "seed": cfg.seed,
            });
            let _ = std::fs::write(
                &diag_path,
                serde_json::to_string_pretty(&diag).expect("json") + "\n",
            );
            eprintln!("numerical failure: {e} (diagnostics in {})", diag_path.display());
            ExitCode::from(2)
        }
        Err(RunError::Io(e)) => {
            eprintln!("i/o failure: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Invariant(failed)) => {
            eprintln!("invariant violations:");
            for line in failed {
                eprintln!("  {line}");
            }
            ExitCode::from(3)
        }
    }
}
