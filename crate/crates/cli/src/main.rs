use clap::Parser;

fn main() -> anyhow::Result<()> {
    let cli = twinshift_cli::Cli::parse();
    twinshift_cli::run(&cli)
}
