use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crestfield::{run, Command};

#[derive(Parser)]
#[command(
    name = "crestfield",
    version,
    about = "Crest-factor energies and eigenvalue Dirichlet solutions on box grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Field dump (CSV) to use instead of the problem's own field source.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the solver seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energies and crest factors of a field.
    Evaluate(Common),
    /// Constructs a solution and writes it with |H| per node.
    Solve(Common),
    /// Classifies a field as crest minimiser and as PDE solution.
    Verify(Common),
    /// E_p over a geometric exponent ladder.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Evaluate(a) => (Command::Evaluate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    let code = run(
        cmd,
        &args.problem,
        args.field.as_deref(),
        &args.out,
        args.seed,
    );
    ExitCode::from(code as u8)
}
