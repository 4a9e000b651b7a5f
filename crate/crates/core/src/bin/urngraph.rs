use clap::Parser;
use urngraph::cli::{self, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    std::process::exit(cli::run(&cfg));
}
