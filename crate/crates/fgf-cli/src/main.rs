//! Command-line interface for the fgf toolkit.

use clap::Parser;

#[derive(Parser)]
#[command(name = "fgf", version, about = "Fractional Gaussian differential form toolkit")]
struct Args {}

fn main() {
    let _args = Args::parse();
    eprintln!("no subcommand given; run with --help");
    std::process::exit(2);
}
