use clap::Parser;

use dualvr::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("dualvr: {e}");
        std::process::exit(e.exit_code());
    }
}
