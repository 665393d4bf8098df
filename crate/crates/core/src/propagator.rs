//! Strang-split Fourier propagator for `H_t = ½p² + V + W_t`.
//!
//! One step over `[t, t+h]` is `P K P` with `P = exp(-i (V + W(t+h/2)) h/2)` and
//! `K = exp(-i ½|k|² h)`. Backward evolution applies the adjoint factors in
//! reverse, so `propagate(propagate(ψ, a, b), b, a) = ψ` to rounding.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, WaveFunction};
use crate::hamiltonian::HamiltonianOp;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Wrap-around monitor threshold on the mass near the periodic seam.
    #[serde(default = "default_boundary")]
    pub boundary_threshold: f64,
}

fn default_dt() -> f64 {
    0.01
}

fn default_stride() -> usize {
    1
}

fn default_boundary() -> f64 {
    1e-8
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            dt: 0.01,
            record_stride: 1,
            boundary_threshold: 1e-8,
        }
    }
}

const GUARD_EVERY: usize = 256;

#[derive(Clone, Debug)]
pub struct Propagator {
    pub op: HamiltonianOp,
    pub config: PropagatorConfig,
}

/// Output of [`Propagator::evolve`].
#[derive(Clone, Debug, Default)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// `|‖ψ_t‖ - ‖ψ_0‖|` at each record.
    pub norm_drift: Vec<f64>,
    pub boundary_mass: Vec<f64>,
    /// Requested functionals at each record.
    pub functionals: Vec<Vec<f64>>,
    pub snapshots: Vec<WaveFunction>,
    pub boundary_exceeded: bool,
    pub final_state: Option<WaveFunction>,
}

impl EvolutionRecord {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Width, in nodes, of the seam band watched by the boundary monitor.
pub fn seam_width(grid: &GridSpec) -> usize {
    (grid.points / 32).max(2)
}

impl Propagator {
    pub fn new(op: HamiltonianOp, config: PropagatorConfig) -> Result<Self> {
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(Error::Invalid(format!(
                "time step must be positive, got {}",
                config.dt
            )));
        }
        if config.record_stride == 0 {
            return Err(Error::Invalid("record stride must be at least 1".into()));
        }
        Ok(Propagator { op, config })
    }

    pub fn grid(&self) -> GridSpec {
        self.op.grid
    }

    fn kinetic_phase(&self, h: f64) -> Vec<Complex64> {
        self.op
            .kinetic_symbol()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -k * h))
            .collect()
    }

    fn potential_phase(&self, t_mid: f64, h: f64) -> Vec<Complex64> {
        let t = self.op.time_dep.map(|_| t_mid);
        self.op
            .total_potential(t)
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -v * h))
            .collect()
    }

    /// One Strang step from `t` to `t + h` (`h` may be negative only through
    /// [`Propagator::propagate`], which inverts the forward step exactly).
    pub fn step(&self, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
        let mut v = psi.values.clone();
        let h = self.config.dt;
        let p = self.potential_phase(t + 0.5 * h, 0.5 * h);
        let k = self.kinetic_phase(h);
        mul(&mut v, &p);
        self.op.fourier.multiply(&mut v, &k);
        mul(&mut v, &p);
        let out = WaveFunction {
            grid: psi.grid,
            values: v,
        };
        if !out.is_finite() {
            return Err(Error::NonFinite(t + h));
        }
        Ok(out)
    }

    /// Number of steps and step length used between two times.
    pub fn steps_between(&self, t0: f64, t1: f64) -> (usize, f64) {
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return (0, 0.0);
        }
        let n = ((span / self.config.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }

    /// `U(t1, t0) ψ` for either time order.
    pub fn propagate(&self, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
        if psi.grid != self.op.grid {
            return Err(Error::GridMismatch);
        }
        let mut v = psi.values.clone();
        self.propagate_in_place(&mut v, t0, t1)?;
        Ok(WaveFunction {
            grid: psi.grid,
            values: v,
        })
    }

    pub fn propagate_in_place(&self, v: &mut [Complex64], t0: f64, t1: f64) -> Result<()> {
        let (n, h) = self.steps_between(t0, t1);
        if n == 0 {
            return Ok(());
        }
        let forward = t1 > t0;
        if self.op.is_free() {
            // the scheme is exact for V = W = 0; all steps collapse into one multiplier
            let k = self.kinetic_phase(t1 - t0);
            self.op.fourier.multiply(v, &k);
            return check_finite(v, t1);
        }
        let sign = if forward { 1.0 } else { -1.0 };
        let k = self.kinetic_phase(sign * h);
        if self.op.time_dep.is_none() {
            let half = self.potential_phase(0.0, sign * 0.5 * h);
            let full: Vec<Complex64> = half.iter().map(|z| z * z).collect();
            mul(v, &half);
            for i in 0..n {
                self.op.fourier.multiply(v, &k);
                mul(v, if i + 1 == n { &half } else { &full });
                if (i + 1) % GUARD_EVERY == 0 {
                    check_finite(v, t0 + sign * (i + 1) as f64 * h)?;
                }
            }
            return check_finite(v, t1);
        }
        for i in 0..n {
            // backward steps undo the forward step over the same subinterval
            let t_mid = if forward {
                t0 + (i as f64 + 0.5) * h
            } else {
                t0 - (i as f64 + 0.5) * h
            };
            let p = self.potential_phase(t_mid, sign * 0.5 * h);
            mul(v, &p);
            self.op.fourier.multiply(v, &k);
            mul(v, &p);
            if (i + 1) % GUARD_EVERY == 0 {
                check_finite(v, t_mid)?;
            }
        }
        check_finite(v, t1)
    }

    /// Evolve from 0 to `t_final`, recording every `record_stride` steps.
    ///
    /// `observe` is evaluated on each recorded state; snapshots are kept when
    /// `keep_snapshots` is set.
    pub fn evolve<F>(
        &self,
        psi0: &WaveFunction,
        t_final: f64,
        keep_snapshots: bool,
        observe: F,
    ) -> Result<EvolutionRecord>
    where
        F: Fn(f64, &WaveFunction) -> Vec<f64>,
    {
        self.evolve_between(psi0, 0.0, t_final, keep_snapshots, observe)
    }

    pub fn evolve_between<F>(
        &self,
        psi0: &WaveFunction,
        t0: f64,
        t_final: f64,
        keep_snapshots: bool,
        observe: F,
    ) -> Result<EvolutionRecord>
    where
        F: Fn(f64, &WaveFunction) -> Vec<f64>,
    {
        if psi0.grid != self.op.grid {
            return Err(Error::GridMismatch);
        }
        let (n, h) = self.steps_between(t0, t_final);
        let n0 = psi0.norm();
        let width = seam_width(&psi0.grid);
        let mut rec = EvolutionRecord::default();
        let push = |rec: &mut EvolutionRecord, t: f64, psi: &WaveFunction| {
            rec.times.push(t);
            rec.norm_drift.push((psi.norm() - n0).abs());
            let bm = psi.boundary_mass(width);
            if bm > self.config.boundary_threshold * n0 * n0 {
                rec.boundary_exceeded = true;
            }
            rec.boundary_mass.push(bm);
            rec.functionals.push(observe(t, psi));
            if keep_snapshots {
                rec.snapshots.push(psi.clone());
            }
        };
        let mut psi = psi0.clone();
        push(&mut rec, t0, &psi);
        let stride = self.config.record_stride;
        let mut i = 0;
        while i < n {
            let m = stride.min(n - i);
            let ta = t0 + i as f64 * h;
            let tb = t0 + (i + m) as f64 * h;
            psi = self.chunk(&psi, ta, tb, m)?;
            i += m;
            push(&mut rec, if i == n { t_final } else { tb }, &psi);
        }
        rec.final_state = Some(psi);
        Ok(rec)
    }

    fn chunk(&self, psi: &WaveFunction, ta: f64, tb: f64, steps: usize) -> Result<WaveFunction> {
        // same step length as the enclosing run
        let mut v = psi.values.clone();
        let sub = Propagator {
            op: self.op.clone(),
            config: PropagatorConfig {
                dt: (tb - ta) / steps as f64,
                ..self.config
            },
        };
        sub.propagate_in_place(&mut v, ta, tb)?;
        Ok(WaveFunction {
            grid: psi.grid,
            values: v,
        })
    }

    /// `e^{iHt} B e^{-iHt} ψ` for time-independent `H`.
    pub fn heisenberg_conjugate<B>(&self, b: B, psi: &WaveFunction, t: f64) -> Result<WaveFunction>
    where
        B: Fn(&WaveFunction) -> Result<WaveFunction>,
    {
        let forward = self.propagate(psi, 0.0, t)?;
        let applied = b(&forward)?;
        self.propagate(&applied, t, 0.0)
    }
}

fn mul(v: &mut [Complex64], p: &[Complex64]) {
    for (z, q) in v.iter_mut().zip(p) {
        *z *= q;
    }
}

fn check_finite(v: &[Complex64], t: f64) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(t))
    }
}

/// Closed-form free evolution of the Gaussian packet of
/// [`crate::grid::gaussian_packet`], sampled on the grid and normalized there.
pub fn exact_free_gaussian(
    grid: &GridSpec,
    center: [f64; 2],
    momentum: [f64; 2],
    sigma: f64,
    t: f64,
) -> WaveFunction {
    // ψ(x,t) ∝ Π_a (σ²+it/2)^{-1/2} exp(-(x-x0-p0 t)²/(4(σ²+it/2)) + i p0 (x - p0 t/2))
    let s = Complex64::new(sigma * sigma, 0.5 * t);
    let psi = WaveFunction::from_fn(*grid, |x| {
        let mut z = Complex64::new(0.0, 0.0);
        let mut pre = Complex64::new(1.0, 0.0);
        for a in 0..grid.dim {
            let d = x[a] - center[a] - momentum[a] * t;
            z += -Complex64::new(d * d, 0.0) / (4.0 * s)
                + Complex64::new(0.0, momentum[a] * (x[a] - 0.5 * momentum[a] * t));
            pre /= s.sqrt();
        }
        pre * z.exp()
    });
    psi.normalized()
}

/// Snapshot layout (little endian): magic `b"LCWF"`, `u32` dims, `u32` N,
/// `f64` L, `f64` t, then `N^dims` pairs of `f64` (re, im) in row-major order.
pub fn write_snapshot<W: Write>(mut w: W, psi: &WaveFunction, t: f64) -> Result<()> {
    w.write_all(b"LCWF")?;
    w.write_all(&(psi.grid.dim as u32).to_le_bytes())?;
    w.write_all(&(psi.grid.points as u32).to_le_bytes())?;
    w.write_all(&psi.grid.extent.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for z in &psi.values {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(WaveFunction, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"LCWF" {
        return Err(Error::Invalid("not a wavefunction snapshot".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let points = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let extent = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let grid = GridSpec::new(dim, extent, points)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        values.push(Complex64::new(re, f64::from_le_bytes(b8)));
    }
    Ok((WaveFunction { grid, values }, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian_packet;
    use crate::hamiltonian::{PotentialSpec, TimeDepForm, TimeDepPotentialSpec};
    use nalgebra::DMatrix;

    fn dense_evolution(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
        let e = nalgebra::SymmetricEigen::new(h.clone());
        let q = e.eigenvectors.map(|v| Complex64::new(v, 0.0));
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
        &q * d * q.transpose()
    }

    fn apply(m: &DMatrix<Complex64>, psi: &WaveFunction) -> WaveFunction {
        let v = m * nalgebra::DVector::from_column_slice(&psi.values);
        WaveFunction {
            grid: psi.grid,
            values: v.iter().copied().collect(),
        }
    }

    fn well_prop(n: usize, dt: f64) -> Propagator {
        let g = GridSpec::line(8.0, n).unwrap();
        let op = HamiltonianOp::new(
            g,
            PotentialSpec::GaussianWell {
                depth: 2.0,
                width: 1.0,
            },
        )
        .unwrap();
        Propagator::new(
            op,
            PropagatorConfig {
                dt,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn plane_wave_phase() {
        let g = GridSpec::line(8.0, 32).unwrap();
        let k0 = g.wavenumbers()[2];
        let prop = Propagator::new(
            HamiltonianOp::free(g).unwrap(),
            PropagatorConfig {
                dt: 0.1,
                ..Default::default()
            },
        )
        .unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x[0]));
        let out = prop.step(&psi, 0.0).unwrap();
        let phase = Complex64::from_polar(1.0, -0.5 * k0 * k0 * 0.1);
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - b * phase).norm() < 1e-13);
        }
    }

    #[test]
    fn steps_are_unitary() {
        let prop = well_prop(64, 0.05);
        let mut psi = gaussian_packet(&prop.grid(), [1.0, 0.0], [1.0, 0.0], 0.7).unwrap();
        for i in 0..50 {
            let next = prop.step(&psi, i as f64 * 0.05).unwrap();
            assert!((next.norm() - psi.norm()).abs() < 1e-14);
            psi = next;
        }
    }

    #[test]
    fn second_order_against_exponential() {
        let prop = well_prop(16, 0.1);
        let psi = gaussian_packet(&prop.grid(), [0.5, 0.0], [0.5, 0.0], 1.0).unwrap();
        let t = 2.0;
        let exact = apply(
            &dense_evolution(&prop.op.dense(None).unwrap().matrix, t),
            &psi,
        );
        let mut errs = vec![];
        for dt in [0.1, 0.05, 0.025] {
            let p = Propagator {
                config: PropagatorConfig { dt, ..prop.config },
                ..prop.clone()
            };
            errs.push(p.propagate(&psi, 0.0, t).unwrap().distance(&exact).unwrap());
        }
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((3.5..4.5).contains(&r), "ratio {r} from {errs:?}");
        }
    }

    #[test]
    fn second_order_time_dependent() {
        let g = GridSpec::line(8.0, 16).unwrap();
        let w = TimeDepPotentialSpec::gaussian(1.5, 1.0, 2.0, TimeDepForm::Factorized);
        let op = HamiltonianOp::new(
            g,
            PotentialSpec::GaussianWell {
                depth: 1.0,
                width: 1.5,
            },
        )
        .unwrap()
        .with_time_dep(w);
        let psi = gaussian_packet(&g, [0.5, 0.0], [0.5, 0.0], 1.0).unwrap();
        let t = 2.0;
        // product of exact exponentials of H(t_mid) over tiny steps
        let fine = 4000;
        let h = t / fine as f64;
        let mut reference = psi.clone();
        for i in 0..fine {
            let m = op.dense(Some((i as f64 + 0.5) * h)).unwrap().matrix;
            reference = apply(&dense_evolution(&m, h), &reference);
        }
        let mut errs = vec![];
        for dt in [0.1, 0.05, 0.025] {
            let p = Propagator::new(
                op.clone(),
                PropagatorConfig {
                    dt,
                    ..Default::default()
                },
            )
            .unwrap();
            errs.push(
                p.propagate(&psi, 0.0, t)
                    .unwrap()
                    .distance(&reference)
                    .unwrap(),
            );
        }
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((3.5..4.5).contains(&r), "ratio {r} from {errs:?}");
        }
    }

    #[test]
    fn free_gaussian_oracle() {
        let g = GridSpec::line(80.0, 512).unwrap();
        let prop =
            Propagator::new(HamiltonianOp::free(g).unwrap(), PropagatorConfig::default()).unwrap();
        let (x0, p0, s) = (-5.0, 1.0, 1.0);
        let psi0 = gaussian_packet(&g, [x0, 0.0], [p0, 0.0], s).unwrap();
        assert!(
            exact_free_gaussian(&g, [x0, 0.0], [p0, 0.0], s, 0.0)
                .distance(&psi0)
                .unwrap()
                < 1e-12
        );
        let rec = prop
            .evolve(&psi0, 10.0, false, |_, psi| {
                let m: f64 = psi
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, z)| g.position(i)[0] * z.norm_sqr())
                    .sum::<f64>()
                    * g.cell();
                let m2: f64 = psi
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, z)| g.position(i)[0].powi(2) * z.norm_sqr())
                    .sum::<f64>()
                    * g.cell();
                vec![m, m2]
            })
            .unwrap();
        let last = rec.final_state.as_ref().unwrap();
        let exact = exact_free_gaussian(&g, [x0, 0.0], [p0, 0.0], s, 10.0);
        assert!(last.distance(&exact).unwrap() <= 1e-6);
        for (t, f) in rec.times.iter().zip(&rec.functionals) {
            let centre = x0 + p0 * t;
            assert!((f[0] - centre).abs() < g.spacing());
            // <x²> = centre² + σ² + t²/(4σ²)
            let var = s * s + t * t / (4.0 * s * s);
            assert!((f[1] - centre * centre - var).abs() < 1e-6, "t={t}");
        }
        assert!(!rec.boundary_exceeded);
    }

    #[test]
    fn record_at_zero_time() {
        let prop = well_prop(32, 0.1);
        let psi = gaussian_packet(&prop.grid(), [0.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        let rec = prop.evolve(&psi, 0.0, true, |_, _| vec![]).unwrap();
        assert_eq!(rec.times, vec![0.0]);
        assert_eq!(rec.snapshots, vec![psi]);
    }

    #[test]
    fn time_reversal_by_conjugation() {
        let prop = well_prop(64, 0.01);
        let psi = gaussian_packet(&prop.grid(), [1.0, 0.0], [0.8, 0.0], 0.7).unwrap();
        let forward = prop.propagate(&psi, 0.0, 3.0).unwrap();
        let back = prop.propagate(&forward.conj(), 0.0, 3.0).unwrap();
        assert!(back.distance(&psi.conj()).unwrap() < 1e-8);
        // and backward stepping inverts forward stepping exactly
        let undo = prop.propagate(&forward, 3.0, 0.0).unwrap();
        assert!(undo.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn backward_inverts_time_dependent_steps() {
        let g = GridSpec::line(8.0, 32).unwrap();
        let op = HamiltonianOp::free(g)
            .unwrap()
            .with_time_dep(TimeDepPotentialSpec::gaussian(
                1.0,
                1.0,
                2.0,
                TimeDepForm::Dilated,
            ));
        let prop = Propagator::new(
            op,
            PropagatorConfig {
                dt: 0.05,
                ..Default::default()
            },
        )
        .unwrap();
        let psi = gaussian_packet(&g, [0.0, 0.0], [1.0, 0.0], 1.0).unwrap();
        let there = prop.propagate(&psi, 0.3, 4.3).unwrap();
        assert!(
            prop.propagate(&there, 4.3, 0.3)
                .unwrap()
                .distance(&psi)
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn heisenberg_conjugation() {
        let prop = well_prop(64, 0.01);
        let g = prop.grid();
        let psi = gaussian_packet(&g, [1.0, 0.0], [0.8, 0.0], 0.7).unwrap();
        let id = prop
            .heisenberg_conjugate(|p| Ok(p.clone()), &psi, 2.0)
            .unwrap();
        assert!(id.distance(&psi).unwrap() < 1e-12);
        let weight: Vec<f64> = crate::grid::japanese_bracket(&g).values;
        let b = |p: &WaveFunction| Ok(p.weighted(&weight));
        assert!(
            prop.heisenberg_conjugate(b, &psi, 0.0)
                .unwrap()
                .distance(&psi.weighted(&weight))
                .unwrap()
                < 1e-15
        );
        let t = 2.0;
        let lhs = psi
            .inner(&prop.heisenberg_conjugate(b, &psi, t).unwrap())
            .unwrap();
        let moved = prop.propagate(&psi, 0.0, t).unwrap();
        let rhs = moved.inner(&moved.weighted(&weight)).unwrap();
        assert!((lhs - rhs).norm() < 1e-8);
    }

    #[test]
    fn conservation() {
        let prop = well_prop(128, 0.01);
        let psi = gaussian_packet(&prop.grid(), [1.0, 0.0], [0.8, 0.0], 0.8).unwrap();
        let e0 = prop.op.energy(&psi, None).unwrap();
        let rec = prop
            .evolve(&psi, 5.0, true, |_, p| {
                vec![prop.op.energy(p, None).unwrap()]
            })
            .unwrap();
        assert!(rec.max_norm_drift() < 1e-12);
        // Strang conserves a modified energy; the drift is O(dt²) and does not grow
        for f in &rec.functionals {
            assert!((f[0] - e0).abs() <= 1e-4 * e0.abs());
        }
        let dense = prop.op.dense(None).unwrap();
        let cut = crate::smooth::SpectralCutoff::new(-1.0, 1.0, 0.25).unwrap();
        let filter = crate::funcalc::EnergyFilter::from_dense(&dense, |l| cut.eval(l));
        let a = filter
            .apply(&prop.propagate(&psi, 0.0, 5.0).unwrap())
            .unwrap();
        let b = prop
            .propagate(&filter.apply(&psi).unwrap(), 0.0, 5.0)
            .unwrap();
        // the split-step propagator commutes with g(H) up to its O(dt²) error
        assert!(a.distance(&b).unwrap() < 1e-4);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = GridSpec::new(2, 5.0, 8).unwrap();
        let psi = gaussian_packet(&g, [0.3, -0.2], [1.0, 0.5], 0.6).unwrap();
        let mut buf = vec![];
        write_snapshot(&mut buf, &psi, 2.5).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 8 + 16 * 64);
        let (back, t) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(t, 2.5);
        assert_eq!(back, psi);
        assert!(read_snapshot(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn nan_guard() {
        let g = GridSpec::line(8.0, 16).unwrap();
        let prop =
            Propagator::new(HamiltonianOp::free(g).unwrap(), PropagatorConfig::default()).unwrap();
        let mut psi = WaveFunction::zeros(g);
        psi.values[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            prop.propagate(&psi, 0.0, 1.0),
            Err(Error::NonFinite(_))
        ));
        assert!(Propagator::new(
            HamiltonianOp::free(g).unwrap(),
            PropagatorConfig {
                dt: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
