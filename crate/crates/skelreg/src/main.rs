use clap::Parser;
use skelreg::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(&cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
