//! Sweeps the cone speed through multiples of k on the reference config.

use lightcone::config::{Axis, ExperimentConfig};
use lightcone::runner::{self, Lab};

fn main() -> lightcone::Result<()> {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/theorem21.toml");
    let cfg = ExperimentConfig::load(&path)?;
    let k = Lab::new(&cfg)?.k;
    let values: Vec<f64> = [0.5, 1.0, 1.5, 2.0, 3.0].iter().map(|m| m * k).collect();
    let out = std::env::temp_dir().join("lightcone-sweep");
    let manifest = runner::sweep(&cfg, Axis::C, &values, &out)?;
    for e in &manifest.experiments {
        let c = e.summary["config"]["frame"]["c"]
            .as_f64()
            .unwrap_or(f64::NAN);
        println!(
            "c/k = {:.1}: [{}] slope {}",
            c / k,
            e.verdict,
            e.summary["headline"]
        );
    }
    println!("table: {}", out.join("sweep.csv").display());
    Ok(())
}
