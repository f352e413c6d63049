//! `capwave` — scenario-driven entry point for the capillary water-wave
//! toolkit. One subcommand per scenario kind; every run writes its
//! artifacts plus a manifest into the output directory.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical divergence, 4 IO.

use capwave_cli::scenarios::{self, CommonArgs};
use capwave_core::error::{CoreError, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "capwave",
    version,
    about = "Pseudo-spectral experiments for the finite-depth capillary water-wave system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full capillary evolution with conservation monitors.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::evolve::EvolveConfig,
    },
    /// Amplitude sweep of the fixed-point vs Taylor-2 DNO discrepancy.
    DnoConvergence {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::dno_convergence::DnoConvergenceConfig,
    },
    /// Linear dispersive decay of one dyadic band.
    DecayProbe {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::decay_probe::DecayProbeConfig,
    },
    /// Weighted-norm diagnostics of a probe profile.
    NormMonitor {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::norm_monitor::NormMonitorConfig,
    },
    /// Normal-form symbol support and size-constant audit.
    SymbolAudit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::symbol_audit::SymbolAuditConfig,
    },
    /// Space-resonance loci of the cubic interaction classes.
    ResonanceMap {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::resonance_map::ResonanceMapConfig,
    },
    /// Toy quadratic Schrödinger resonance-dichotomy run.
    ToySchrodinger {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cfg: scenarios::toy_schrodinger::ToySchrodingerConfig,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { common, cfg } => scenarios::evolve::run(&common, &cfg),
        Command::DnoConvergence { common, cfg } => scenarios::dno_convergence::run(&common, &cfg),
        Command::DecayProbe { common, cfg } => scenarios::decay_probe::run(&common, &cfg),
        Command::NormMonitor { common, cfg } => scenarios::norm_monitor::run(&common, &cfg),
        Command::SymbolAudit { common, cfg } => scenarios::symbol_audit::run(&common, &cfg),
        Command::ResonanceMap { common, cfg } => scenarios::resonance_map::run(&common, &cfg),
        Command::ToySchrodinger { common, cfg } => scenarios::toy_schrodinger::run(&common, &cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CoreError::Validation(_) => 2,
                CoreError::Divergence(_) => 3,
                CoreError::Io(_) => 4,
            }
        }
    };
    std::process::exit(code);
}
