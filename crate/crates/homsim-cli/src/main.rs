//! `homsim`: scans, symmetry maps, fits, and phase retrieval for the
//! two-photon interference simulator.

use clap::{Parser, Subcommand};

use homsim_cli::commands::{
    delay_scan_cmd, fit_cmd, multimode_cmd, phase_scan_cmd, retrieve_cmd, DelayScanArgs, FitArgs,
    MultimodeArgs, PhaseScanArgs, RetrieveArgs,
};

#[derive(Parser)]
#[command(
    name = "homsim",
    version,
    about = "Simulate and analyze momentum-entangled photon pairs in a Hong-Ou-Mandel interferometer"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coincidence counts against the path-length difference
    DelayScan(DelayScanArgs),
    /// Coincidence counts against the mask phase at zero delay
    PhaseScan(PhaseScanArgs),
    /// Normalized coincidence rate for every momentum pair of a mask
    Multimode(MultimodeArgs),
    /// Fit a recorded scan and report visibility and parameters
    Fit(FitArgs),
    /// Invert a normalized coincidence rate to the engineered phase
    Retrieve(RetrieveArgs),
}

fn main() {
    // Keep the exit-code contract: 1 for any validation problem (including
    // malformed command lines, which clap would exit 2 for), 2 only for fit
    // non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("homsim: error[E_VALIDATE]: {e}");
            std::process::exit(1);
        }
        Err(e) => {
            // --help and --version land here.
            print!("{e}");
            std::process::exit(0);
        }
    };
    let result = match &cli.command {
        Cmd::DelayScan(args) => delay_scan_cmd(args),
        Cmd::PhaseScan(args) => phase_scan_cmd(args),
        Cmd::Multimode(args) => multimode_cmd(args),
        Cmd::Fit(args) => fit_cmd(args),
        Cmd::Retrieve(args) => retrieve_cmd(args),
    };
    if let Err(e) = result {
        eprintln!("homsim: error[{}]: {}", e.tag, e.message);
        std::process::exit(e.exit_code);
    }
}
