//! A decaying potential W_t: the asymptotic cutoff g+(H) by doubling horizons,
//! the pull-through residual, and density of g+ ranges.

use lightcone::funcalc::EnergyFilter;
use lightcone::grid::{gaussian_packet, GridSpec};
use lightcone::hamiltonian::{HamiltonianOp, TimeDepForm, TimeDepPotentialSpec};
use lightcone::observables::{
    asymptotic_cutoff_apply, g_plus_density_check, pull_through_residual,
};
use lightcone::propagator::{Propagator, PropagatorConfig};
use lightcone::smooth::SpectralCutoff;

fn main() -> lightcone::Result<()> {
    let grid = GridSpec::line(160.0, 512)?;
    let w = TimeDepPotentialSpec::gaussian(1.0, 3.0, 2.0, TimeDepForm::Dilated);
    let op = HamiltonianOp::free(grid)?.with_time_dep(w);
    let prop = Propagator::new(
        op,
        PropagatorConfig {
            dt: 0.05,
            ..Default::default()
        },
    )?;
    let g = SpectralCutoff::new(-2.0, 0.5, 0.2)?;
    let filter = EnergyFilter::new(&prop.op, |l| g.eval(l))?;
    let psi = gaussian_packet(&grid, [0.0, 0.0], [0.0, 0.0], 1.0)?;

    let gp = asymptotic_cutoff_apply(&filter, &prop, &psi, 4.0, 512.0, 0.0)?;
    for (t, d) in &gp.cauchy {
        println!("|g_2T psi - g_T psi| at T = {t:>5}: {d:.3e}");
    }
    let gplus = gp.psi.expect("state kept");
    let pt = pull_through_residual(&filter, &prop, &psi, &gplus, &[4.0, 8.0, 16.0, 32.0, 64.0])?;
    println!(
        "pull-through residual slope {:.2}",
        pt.fit.map_or(f64::NAN, |f| f.slope)
    );

    let windows = [(-1.0, 0.5), (-1.0, 1.5), (-1.0, 3.0), (-1.0, 6.0)];
    let filters = windows
        .iter()
        .map(|&(lo, hi)| {
            let g = SpectralCutoff::new(lo, hi, 0.25)?;
            EnergyFilter::new(&prop.op, |l| g.eval(l))
        })
        .collect::<lightcone::Result<Vec<_>>>()?;
    for (w, d) in windows
        .iter()
        .zip(g_plus_density_check(&filters, &prop, &psi, 4.0, 64.0, 0.0)?)
    {
        println!("window {w:?}: |g+ psi - psi| = {d:.3e}");
    }
    Ok(())
}
