use clap::Parser;
use relufw_cli::{execute, Cli};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    execute(&cli.command)?;
    Ok(())
}
