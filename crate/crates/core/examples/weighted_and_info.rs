//! Two variants of the cone bound: a polynomial weight instead of an inner
//! region, and the spread of a Heisenberg-evolved local operator.

use lightcone::experiments::{
    info_bound_experiment, weighted_estimate_experiment, ConeSetup, InfoOrdering, NormMode,
};
use lightcone::fit::{fit_decay, geomspace};
use lightcone::funcalc::{exact_k, EnergyFilter};
use lightcone::grid::GridSpec;
use lightcone::hamiltonian::HamiltonianOp;
use lightcone::propagator::{Propagator, PropagatorConfig};
use lightcone::smooth::SpectralCutoff;

fn main() -> lightcone::Result<()> {
    let op = HamiltonianOp::free(GridSpec::line(80.0, 512)?)?;
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

    let times = geomspace(5.0, 40.0, 7);
    for alpha in [1.0, 2.0] {
        let curve =
            weighted_estimate_experiment(&setup, alpha, 0.1, 1.5, &times, NormMode::ExactColumns)?;
        println!(
            "weight <x>^-{alpha}: slope {:.2}",
            curve.fit((5.0, 40.0), -alpha, 0.3)?.exponent
        );
    }

    let rho = geomspace(6.3, 63.0, 10);
    for ordering in [InfoOrdering::CutoffAfterMask, InfoOrdering::MaskAfterCutoff] {
        let (r, v) = info_bound_experiment(
            &setup,
            3.0,
            2.0,
            1.5,
            2.0,
            &rho,
            ordering,
            NormMode::ExactColumns,
        )?;
        println!(
            "{ordering:?}: slope in rho {:.2}",
            fit_decay(&r, &v, (6.3, 63.0), -2.0, 0.0)?.exponent
        );
    }
    Ok(())
}
