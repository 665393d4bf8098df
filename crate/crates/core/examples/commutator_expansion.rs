//! Remainders of the commutator expansion of [f(x_s), g(H)] in powers of 1/s.

use lightcone::fit::{fit_decay, geomspace};
use lightcone::funcalc::commutator_expansion;
use lightcone::grid::GridSpec;
use lightcone::hamiltonian::{HamiltonianOp, PotentialSpec};
use lightcone::smooth::{SpectralCutoff, Tanh};

fn main() -> lightcone::Result<()> {
    let op = HamiltonianOp::new(
        GridSpec::line(8.0, 32)?,
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 1.0,
        },
    )?;
    let g = SpectralCutoff::new(-1.0, 1.0, 0.25)?;
    let gm = op.dense(None)?.function(|l| g.eval(l));
    let scales = geomspace(4.0, 64.0, 6);
    for n in 1..=3 {
        let norms = scales
            .iter()
            .map(|&s| {
                Ok(
                    commutator_expansion(&gm, &op.grid, &Tanh { scale: 4.0 }, 0.0, s, n)?
                        .remainder_norm,
                )
            })
            .collect::<lightcone::Result<Vec<f64>>>()?;
        let fit = fit_decay(&scales, &norms, (4.0, 64.0), -(n as f64), 0.3)?;
        println!(
            "order {n}: remainder ~ s^{:.2}  [{}]",
            fit.exponent, fit.verdict
        );
    }
    Ok(())
}
