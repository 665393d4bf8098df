//! Leakage out of the cone <x> >= ct + a: state curves and exact operator
//! norms for cone speeds below and above k.

use lightcone::experiments::{dichotomy_scan, ConeSetup, NormMode};
use lightcone::fit::geomspace;
use lightcone::funcalc::{exact_k, EnergyFilter};
use lightcone::grid::{gaussian_packet, GridSpec};
use lightcone::hamiltonian::HamiltonianOp;
use lightcone::propagator::{Propagator, PropagatorConfig};
use lightcone::smooth::SpectralCutoff;

fn main() -> lightcone::Result<()> {
    let grid = GridSpec::line(80.0, 512)?;
    let op = HamiltonianOp::free(grid)?;
    let g = SpectralCutoff::new(-1.0, 0.5, 0.5)?;
    let filter = EnergyFilter::new(&op, |l| g.eval(l))?;
    let k = exact_k(&g, &op)?;
    let prop = Propagator::new(
        op,
        PropagatorConfig {
            dt: 0.05,
            ..Default::default()
        },
    )?;
    let setup = ConeSetup {
        prop: &prop,
        filter: &filter,
        k,
        window: (g.lower, g.upper),
        seed: 1,
    };

    let phi = gaussian_packet(&grid, [0.0, 0.0], [0.5, 0.0], 1.0)?;
    let times = geomspace(5.0, 40.0, 7);
    println!("k = {k:.4}");
    for row in dichotomy_scan(
        &setup,
        &phi,
        &[0.5 * k, 1.5 * k, 3.0 * k],
        2.25,
        2.0,
        &times,
        (5.0, 40.0),
        NormMode::ExactColumns,
    )? {
        let slope = row.norm_fit.map_or(f64::NAN, |f| f.exponent);
        println!(
            "c = {:.3} (c/k = {:.1}): terminal leakage {:.2e}, norm slope {slope:.2}",
            row.c,
            row.c / k,
            row.terminal_state_leakage
        );
    }
    Ok(())
}
