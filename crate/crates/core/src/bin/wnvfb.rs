use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wnvfb::cli_io::{self, parse_config, RunConfig};

/// Seasonal nonlocal-diffusion free-boundary epidemic toolkit: eigenvalue
/// computations, periodic solvers, front simulation and spreading-vs-
/// vanishing classification.
#[derive(Parser)]
#[command(name = "wnvfb", version, about)]
struct Cli {
    /// TOML configuration file
    #[arg(long, short, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// output directory
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,

    /// override [numerics].periods
    #[arg(long, global = true)]
    periods: Option<usize>,

    /// override [numerics].dx
    #[arg(long, global = true)]
    dx: Option<f64>,

    /// override [numerics].snapshot_every
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// principal eigenvalue of the spatial-independent periodic system
    Eigen,
    /// nonlocal-operator and interval eigenvalues over a list of lengths
    #[command(name = "lamP")]
    LamP,
    /// periodic solutions (fixed interval and spatial-independent)
    Periodic,
    /// free-boundary simulation with trace output
    Simulate,
    /// spreading/vanishing classification (static, then dynamic if needed)
    Classify,
    /// phase-diagram sweep over delta, b1, mu, h0
    Sweep,
    /// zero contour of the principal eigenvalue in the (delta, b1) plane
    Contour,
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    if let Some(p) = cli.periods {
        cfg.numerics.periods = p;
    }
    if let Some(dx) = cli.dx {
        cfg.numerics.dx = dx;
    }
    if let Some(se) = cli.snapshot_every {
        cfg.numerics.snapshot_every = se;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> wnvfb::error::Result<()> {
        let text = std::fs::read_to_string(&cli.config)?;
        let mut cfg = parse_config(&text)?;
        apply_overrides(&mut cfg, &cli);
        let cmd = match cli.command {
            Cmd::Eigen => cli_io::Command::Eigen,
            Cmd::LamP => cli_io::Command::LamP,
            Cmd::Periodic => cli_io::Command::Periodic,
            Cmd::Simulate => cli_io::Command::Simulate,
            Cmd::Classify => cli_io::Command::Classify,
            Cmd::Sweep => cli_io::Command::Sweep,
            Cmd::Contour => cli_io::Command::Contour,
        };
        let files = cli_io::run(cmd, &cfg, &cli.out)?;
        for f in files {
            println!("{}", f.display());
        }
        Ok(())
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
