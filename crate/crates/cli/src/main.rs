use clap::Parser;
use starcore_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("starcore: {e}");
        std::process::exit(e.exit_code());
    }
}
