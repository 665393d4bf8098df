//! Integrated Heisenberg derivative of a cone observable along a run; the
//! ledger is written as CSV to stdout.

use lightcone::grid::{gaussian_packet, GridSpec};
use lightcone::hamiltonian::HamiltonianOp;
use lightcone::observables::{basic_equality_run, ConeFrame};
use lightcone::propagator::{Propagator, PropagatorConfig};
use lightcone::smooth::FFunction;

fn main() -> lightcone::Result<()> {
    let grid = GridSpec::line(80.0, 512)?;
    let frame = ConeFrame {
        v: 1.2,
        c: 2.0,
        a: 3.0,
        b: 1.0,
        s: 8.0,
        k_ref: 1.0,
    };
    let f = FFunction::new(frame.span())?;
    let psi = gaussian_packet(&grid, [0.0, 0.0], [2.0, 0.0], 1.0)?;
    for dt in [0.04, 0.02, 0.01] {
        let prop = Propagator::new(
            HamiltonianOp::free(grid)?,
            PropagatorConfig {
                dt,
                ..Default::default()
            },
        )?;
        let ledger = basic_equality_run(&psi, &prop, &f, &frame, 8.0)?;
        eprintln!("dt = {dt}: max residual {:.3e}", ledger.max_residual());
        if dt == 0.01 {
            ledger.write_csv(std::io::stdout().lock())?;
        }
    }
    Ok(())
}
