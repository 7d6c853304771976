use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use nlsgeom_cli::{run, Subcommand};

#[derive(Parser)]
#[command(
    name = "nlsgeom",
    version,
    about = "Geometry experiments for the focusing NLS equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Evolve initial data and report charge drift.
    Evolve(Common),
    /// Pfaffian scan of a restricted symplectic form.
    Scan(Common),
    /// Collective-coordinate dynamics with a PDE comparison.
    Effective(Common),
    /// Evaluate the charges on stored or generated initial data.
    Charges(Common),
    /// Run the acceptance criteria.
    Selftest {
        config: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, config, out) = match cli.command {
        Command::Evolve(c) => (Subcommand::Evolve, Some(c.config), c.output_dir),
        Command::Scan(c) => (Subcommand::Scan, Some(c.config), c.output_dir),
        Command::Effective(c) => (Subcommand::Effective, Some(c.config), c.output_dir),
        Command::Charges(c) => (Subcommand::Charges, Some(c.config), c.output_dir),
        Command::Selftest { config, output_dir } => (Subcommand::Selftest, config, output_dir),
    };
    let code = run(cmd, config.as_deref(), out.as_deref());
    ExitCode::from(code as u8)
}
