//! Runs a TOML config (default: the reference cone run) and prints the report.
//!
//!     cargo run --example run_config -- configs/pull_through.toml

use std::path::PathBuf;

use lightcone::config::ExperimentConfig;
use lightcone::runner;

fn main() -> lightcone::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/theorem21.toml")
        });
    let cfg = ExperimentConfig::load(&path)?;
    let out = std::env::temp_dir()
        .join("lightcone-example")
        .join(cfg.experiment.name());
    let manifest = runner::run(&cfg, &out)?;
    print!("{}", manifest.report());
    println!("outputs in {}", out.display());
    Ok(())
}
