//! g(H)ψ three ways: eigendecomposition, contour integral over an
//! almost-analytic extension, and the matrix-free filter.

use lightcone::funcalc::{hs_apply, spectral_apply, EnergyFilter, HsQuadrature, ResolventMethod};
use lightcone::grid::{gaussian_packet, GridSpec};
use lightcone::hamiltonian::{HamiltonianOp, PotentialSpec};
use lightcone::smooth::SpectralCutoff;

fn main() -> lightcone::Result<()> {
    let op = HamiltonianOp::new(
        GridSpec::line(8.0, 32)?,
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 1.0,
        },
    )?;
    let g = SpectralCutoff::new(-1.0, 1.0, 0.25)?;
    let psi = gaussian_packet(&op.grid, [0.5, 0.0], [0.3, 0.0], 1.0)?;

    let dense = op.dense(None)?;
    println!("spectrum: {:.3?}", &dense.spectrum()[..6]);
    let exact = spectral_apply(|l| g.eval(l), &dense, &psi)?;

    let quad = HsQuadrature::default();
    let hs = hs_apply(&g, &op, &psi, &quad, ResolventMethod::Dense)?;
    let iter = hs_apply(
        &g,
        &op,
        &psi,
        &quad,
        ResolventMethod::Iterative {
            tol: 1e-12,
            max_iter: 500,
        },
    )?;
    println!(
        "contour, dense solves:     {:.2e} ({} nodes)",
        hs.psi.distance(&exact)?,
        hs.nodes
    );
    println!(
        "contour, iterative solves: {:.2e} (worst residual {:.1e})",
        iter.psi.distance(&exact)?,
        iter.max_residual
    );

    let filter = EnergyFilter::new(&op, |l| g.eval(l))?;
    println!(
        "filter:                    {:.2e}",
        filter.apply(&psi)?.distance(&exact)?
    );
    println!("|g(H)ψ| = {:.6}", exact.norm());
    Ok(())
}
