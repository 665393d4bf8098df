//! The invariant battery behind `lightcone check`: unitarity, oracle
//! equivalence and commutator-remainder slopes at desk scale.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::{fit_decay, geomspace, Verdict};
use crate::funcalc::{
    commutator_expansion, hs_apply, spectral_apply, HsQuadrature, ResolventMethod,
};
use crate::grid::{gaussian_packet, GridSpec, WaveFunction};
use crate::hamiltonian::{HamiltonianOp, PotentialSpec};
use crate::propagator::{exact_free_gaussian, Propagator, PropagatorConfig};
use crate::smooth::{SpectralCutoff, Tanh};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// True when `value` must not exceed `threshold`.
    pub upper_bound: bool,
    pub verdict: Verdict,
}

impl CheckLine {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            threshold,
            upper_bound: true,
            verdict: Verdict::from_bool(value <= threshold),
        }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rel = if self.upper_bound { "<=" } else { ">=" };
        write!(
            f,
            "[{}] {}: {:.3e} {rel} {:.3e}",
            self.verdict, self.name, self.value, self.threshold
        )
    }
}

/// Norm and relative energy drift after `steps` Strang steps.
pub fn conservation(
    op: HamiltonianOp,
    psi: &WaveFunction,
    dt: f64,
    steps: usize,
) -> Result<(f64, f64)> {
    let prop = Propagator::new(
        op,
        PropagatorConfig {
            dt,
            ..Default::default()
        },
    )?;
    let mut psi_t = psi.clone();
    for i in 0..steps {
        psi_t = prop.step(&psi_t, i as f64 * dt)?;
    }
    let e0 = prop.op.energy(psi, None)?;
    let e1 = prop.op.energy(&psi_t, None)?;
    Ok(((psi_t.norm() - psi.norm()).abs(), ((e1 - e0) / e0).abs()))
}

/// L² distance between the split-step evolution and the closed-form free Gaussian.
pub fn free_gaussian_error(grid: GridSpec, dt: f64, t: f64) -> Result<f64> {
    let (center, momentum, sigma) = ([0.0, 0.0], [0.9, 0.0], 1.0);
    let prop = Propagator::new(
        HamiltonianOp::free(grid)?,
        PropagatorConfig {
            dt,
            ..Default::default()
        },
    )?;
    let psi = gaussian_packet(&grid, center, momentum, sigma)?;
    let num = prop.propagate(&psi, 0.0, t)?;
    num.distance(&exact_free_gaussian(&grid, center, momentum, sigma, t))
}

/// Contour-integral cutoff against the eigendecomposition, on a 32-node well.
pub fn hs_error(seed: u64) -> Result<f64> {
    let op = small_well()?;
    let dense = op.dense(None)?;
    let g = SpectralCutoff::new(-1.0, 1.0, 0.25)?;
    let psi = WaveFunction::from_values(op.grid, crate::norm::random_vector(op.grid.len(), seed))?
        .normalized();
    let exact = spectral_apply(|l| g.eval(l), &dense, &psi)?;
    hs_apply(
        &g,
        &op,
        &psi,
        &HsQuadrature::default(),
        ResolventMethod::Dense,
    )?
    .psi
    .distance(&exact)
}

/// Log-log slope of the order-`n` commutator remainder against the scale, `s ∈ [4, 64]`.
pub fn remainder_slopes(orders: &[usize]) -> Result<Vec<f64>> {
    let op = small_well()?;
    let g = SpectralCutoff::new(-1.0, 1.0, 0.25)?;
    let gm = op.dense(None)?.function(|l| g.eval(l));
    let scales = geomspace(4.0, 64.0, 6);
    orders
        .iter()
        .map(|&n| {
            let norms = scales
                .iter()
                .map(|&s| {
                    Ok(
                        commutator_expansion(&gm, &op.grid, &Tanh { scale: 4.0 }, 0.0, s, n)?
                            .remainder_norm,
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(fit_decay(&scales, &norms, (4.0, 64.0), -(n as f64), 0.3)?.exponent)
        })
        .collect()
}

fn small_well() -> Result<HamiltonianOp> {
    HamiltonianOp::new(
        GridSpec::line(8.0, 32)?,
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 1.0,
        },
    )
}

/// Runs every check; each line carries its own verdict.
pub fn run_battery(seed: u64) -> Result<Vec<CheckLine>> {
    let grid = GridSpec::line(80.0, 512)?;
    let packet = gaussian_packet(&grid, [-20.0, 0.0], [0.5, 0.0], 2.0)?;
    let (norm_free, energy_free) = conservation(HamiltonianOp::free(grid)?, &packet, 0.01, 10_000)?;
    let well = HamiltonianOp::new(
        grid,
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 1.0,
        },
    )?;
    let (norm_well, energy_well) = conservation(well, &packet, 0.01, 10_000)?;
    let mut lines = vec![
        CheckLine::at_most("unitarity, free, 1e4 steps", norm_free, 1e-10),
        CheckLine::at_most("energy drift, free, 1e4 steps", energy_free, 1e-8),
        CheckLine::at_most("unitarity, gaussian well, 1e4 steps", norm_well, 1e-10),
        CheckLine::at_most(
            "free evolution vs closed form, T=10",
            free_gaussian_error(grid, 0.01, 10.0)?,
            1e-6,
        ),
        CheckLine::at_most(
            "contour integral vs eigendecomposition",
            hs_error(seed)?,
            1e-6,
        ),
    ];
    // the well energy drifts at O(dt²); report it against a loose bound
    lines.push(CheckLine::at_most(
        "energy drift, gaussian well, 1e4 steps",
        energy_well,
        1e-3,
    ));
    for (n, slope) in [1, 2, 3].into_iter().zip(remainder_slopes(&[1, 2, 3])?) {
        lines.push(CheckLine::at_most(
            &format!("commutator remainder slope, order {n}"),
            slope,
            -(n as f64) + 0.3,
        ));
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let lines = run_battery(3).unwrap();
        for l in &lines {
            assert_eq!(l.verdict, Verdict::Pass, "{l}");
        }
        assert!(lines[0].to_string().starts_with("[pass]"));
    }
}
