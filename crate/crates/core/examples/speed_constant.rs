//! The speed constant k = ‖|p| g(H)‖: exact for the free particle, dense for a
//! well, power iteration on a large grid, and the sharp-window extrapolation.

use lightcone::funcalc::{compute_k, exact_k, extrapolate_k};
use lightcone::grid::GridSpec;
use lightcone::hamiltonian::{kato_diagnostic, HamiltonianOp, PotentialSpec};
use lightcone::smooth::SpectralCutoff;

fn main() -> lightcone::Result<()> {
    let g = SpectralCutoff::new(0.0, 0.5, 0.05)?;

    let free = HamiltonianOp::free(GridSpec::line(320.0, 4096)?)?;
    println!("free, width 0.05: k = {:.6}", exact_k(&g, &free)?);
    let ext = extrapolate_k(0.0, 0.5, &[0.1, 0.175, 0.25], g.beta(), &free, 20_000, 1)?;
    println!(
        "k(width) = {:?} -> sharp window {:.5}",
        ext.values, ext.extrapolated
    );

    // a well needs a window reaching below zero to see its bound states
    let well = HamiltonianOp::new(
        GridSpec::line(16.0, 128)?,
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 1.0,
        },
    )?;
    let g = SpectralCutoff::new(-3.0, 0.5, 0.1)?;
    let dense = exact_k(&g, &well)?;
    let power = compute_k(&g, &well, 10_000, 1)?;
    let kato = kato_diagnostic(&well, 200, 1)?;
    let bound = (2.0 * (g.upper + kato.b) / (1.0 - kato.a)).sqrt();
    println!(
        "well: dense {dense:.6}, power iteration {:.6} ({} iterations)",
        power.k, power.iterations
    );
    println!(
        "relative bound a = {:.3}, b = {:.3}: k <= {bound:.4}",
        kato.a, kato.b
    );
    Ok(())
}
