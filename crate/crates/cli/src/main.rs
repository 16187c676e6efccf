use clap::Parser;
use fiszkit_cli::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    if let Err(e) = run(&cfg) {
        eprintln!("fiszkit: {}", e.message);
        std::process::exit(e.code);
    }
}
