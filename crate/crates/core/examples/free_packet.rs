//! Split-step evolution of a free Gaussian against the closed form, plus the
//! drift of norm and energy.

use lightcone::grid::{gaussian_packet, GridSpec};
use lightcone::hamiltonian::HamiltonianOp;
use lightcone::propagator::{exact_free_gaussian, Propagator, PropagatorConfig};

fn main() -> lightcone::Result<()> {
    let grid = GridSpec::line(80.0, 512)?;
    let op = HamiltonianOp::free(grid)?;
    let prop = Propagator::new(
        op,
        PropagatorConfig {
            dt: 0.01,
            ..Default::default()
        },
    )?;
    let psi = gaussian_packet(&grid, [-10.0, 0.0], [0.9, 0.0], 1.0)?;

    let e0 = prop.op.energy(&psi, None)?;
    for t in [1.0, 5.0, 10.0] {
        let num = prop.propagate(&psi, 0.0, t)?;
        let exact = exact_free_gaussian(&grid, [-10.0, 0.0], [0.9, 0.0], 1.0, t);
        println!(
            "t = {t:>4}: L2 error {:.2e}, norm drift {:.2e}, energy drift {:.2e}",
            num.distance(&exact)?,
            (num.norm() - 1.0).abs(),
            (prop.op.energy(&num, None)? - e0).abs()
        );
    }
    Ok(())
}
