use clap::Parser;
use ipslab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
