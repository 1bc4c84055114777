//! Run a JSON experiment config through the library entry point used by the `gjlog` binary.
//!
//! `cargo run --example run_experiment -- crates/core/examples/configs/check_legendre.json`

use gjlog::cli::{execute, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/check_legendre.json").into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let outcome = execute(&cfg)?;
    outcome.write_body(std::io::stdout())?;
    eprint!("{}", outcome.summary);
    std::process::exit(outcome.exit_code());
}
