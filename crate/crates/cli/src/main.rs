//! `specreg` command-line front end.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Output};
use config::Flags;

/// Qualification of spectral regularization methods.
///
/// Exit codes: 0 success, 1 requested certification failed, 2 input error,
/// 3 estimate not stabilized or numerical failure.
#[derive(Debug, Parser)]
#[command(name = "specreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate s_rho, classify the qualification level of --order.
    Classify(Flags),
    /// Tabulate s_rho at the --lambda points.
    Srho(Flags),
    /// Bracket the classical qualification order mu_0.
    Classical(Flags),
    /// Mathé-Pereverzev condition for --order; with `--require weak`, the
    /// companion bound sup_{lambda >= sqrt(alpha)} |r_alpha| <= rho.
    MpCheck(Flags),
    /// Build (h, rho*) for a monotone filter and certify the bound.
    Construct(Flags),
    /// Convergence study of ||r_alpha x_dagger|| on a spectral model.
    Converge(Flags),
}

fn emit(out: &Output, flags_out: Option<&std::path::Path>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Input(e.to_string());
    let mut stdout = std::io::stdout().lock();
    match flags_out {
        Some(p) => {
            std::fs::write(p, &out.body).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            if let Some(side) = &out.side {
                stdout.write_all(side.as_bytes()).map_err(io)?;
            }
        }
        None => stdout.write_all(out.body.as_bytes()).map_err(io)?,
    }
    stdout.flush().map_err(io)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (flags, f): (&Flags, fn(&config::RunConfig) -> Result<Output, CliError>) = match &cli.command {
        Command::Classify(a) => (a, commands::cmd_classify),
        Command::Srho(a) => (a, commands::cmd_srho),
        Command::Classical(a) => (a, commands::cmd_classical),
        Command::MpCheck(a) => (a, commands::cmd_mp_check),
        Command::Construct(a) => (a, commands::cmd_construct),
        Command::Converge(a) => (a, commands::cmd_converge),
    };
    let cfg = flags.resolve()?;
    let out = f(&cfg)?;
    emit(&out, cfg.out.as_deref())?;
    Ok(out.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("specreg: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
