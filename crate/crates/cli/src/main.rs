use clap::Parser;
use tcdkit_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = tcdkit_cli::run(&cli) {
        eprintln!("tcdkit: {e}");
        std::process::exit(e.exit_code());
    }
}
