use clap::Parser;
use whitney_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("whitney: {e}");
        std::process::exit(e.exit_code());
    }
}
