//! `H = ½p² + V(x)` and the time-dependent part `W_t`, matrix-free and dense.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::fourier::Fourier;
use crate::grid::{GridSpec, WaveFunction};

/// Bounded potential presets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum PotentialSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `-depth exp(-|x|²/(2 width²))`
    GaussianWell {
        depth: f64,
        width: f64,
    },
    /// `-charge / sqrt(|x|² + eps²)`
    SoftCoulomb {
        charge: f64,
        eps: f64,
    },
    /// `height exp(-|x|²/(2 width²))`
    Barrier {
        height: f64,
        width: f64,
    },
}

impl PotentialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Constant { .. } => "constant",
            PotentialSpec::GaussianWell { .. } => "gaussian_well",
            PotentialSpec::SoftCoulomb { .. } => "soft_coulomb",
            PotentialSpec::Barrier { .. } => "barrier",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialSpec::Zero)
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.derivative(x, [0, 0])
    }

    /// `∂^α V` for `|α| <= 2`.
    pub fn derivative(&self, x: [f64; 2], alpha: [usize; 2]) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { value } => {
                if alpha == [0, 0] {
                    value
                } else {
                    0.0
                }
            }
            PotentialSpec::GaussianWell { depth, width } => {
                -depth * gaussian_derivative(x, width, alpha)
            }
            PotentialSpec::Barrier { height, width } => {
                height * gaussian_derivative(x, width, alpha)
            }
            PotentialSpec::SoftCoulomb { charge, eps } => {
                let q = x[0] * x[0] + x[1] * x[1] + eps * eps;
                let f = -charge;
                match alpha {
                    [0, 0] => f / q.sqrt(),
                    [1, 0] => -f * x[0] * q.powf(-1.5),
                    [0, 1] => -f * x[1] * q.powf(-1.5),
                    [2, 0] => f * (3.0 * x[0] * x[0] * q.powf(-2.5) - q.powf(-1.5)),
                    [0, 2] => f * (3.0 * x[1] * x[1] * q.powf(-2.5) - q.powf(-1.5)),
                    [1, 1] => f * 3.0 * x[0] * x[1] * q.powf(-2.5),
                    _ => panic!("derivative order above 2"),
                }
            }
        }
    }

    /// `sup |V|` over the continuum (attained at the origin or everywhere).
    pub fn sup_norm(&self) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { value } => value.abs(),
            PotentialSpec::GaussianWell { depth, .. } => depth.abs(),
            PotentialSpec::Barrier { height, .. } => height.abs(),
            PotentialSpec::SoftCoulomb { charge, eps } => (charge / eps).abs(),
        }
    }
}

/// `∂^α exp(-|x|²/(2w²))`, `|α| <= 2`.
fn gaussian_derivative(x: [f64; 2], w: f64, alpha: [usize; 2]) -> f64 {
    let w2 = w * w;
    let g = (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * w2)).exp();
    match alpha {
        [0, 0] => g,
        [1, 0] => -x[0] / w2 * g,
        [0, 1] => -x[1] / w2 * g,
        [2, 0] => (x[0] * x[0] / (w2 * w2) - 1.0 / w2) * g,
        [0, 2] => (x[1] * x[1] / (w2 * w2) - 1.0 / w2) * g,
        [1, 1] => x[0] * x[1] / (w2 * w2) * g,
        _ => panic!("derivative order above 2"),
    }
}

/// How the spatial profile of `W_t` depends on time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeDepForm {
    /// `W(x,t) = <t>^{-μ} w(x)`
    #[default]
    Factorized,
    /// `W(x,t) = <t>^{-μ} w(x/<t>)`, so `∂^α W = O(<t>^{-μ-|α|})`.
    Dilated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDepPotentialSpec {
    /// Spatial profile `w`; any bounded preset.
    pub profile: PotentialSpec,
    pub mu: f64,
    #[serde(default)]
    pub form: TimeDepForm,
}

pub fn japanese_time(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

impl TimeDepPotentialSpec {
    pub fn gaussian(amplitude: f64, width: f64, mu: f64, form: TimeDepForm) -> Self {
        TimeDepPotentialSpec {
            profile: PotentialSpec::Barrier {
                height: amplitude,
                width,
            },
            mu,
            form,
        }
    }

    pub fn value(&self, x: [f64; 2], t: f64) -> f64 {
        self.derivative(x, t, [0, 0])
    }

    /// `∂^α_x W(x,t)`.
    pub fn derivative(&self, x: [f64; 2], t: f64, alpha: [usize; 2]) -> f64 {
        let tb = japanese_time(t);
        let amp = tb.powf(-self.mu);
        match self.form {
            TimeDepForm::Factorized => amp * self.profile.derivative(x, alpha),
            TimeDepForm::Dilated => {
                let order = (alpha[0] + alpha[1]) as i32;
                amp * tb.powi(-order) * self.profile.derivative([x[0] / tb, x[1] / tb], alpha)
            }
        }
    }

    /// Exponent of `sup_x |∂^α W_t|` in `<t>` predicted by the form.
    pub fn predicted_exponent(&self, order: usize) -> f64 {
        match self.form {
            TimeDepForm::Factorized => -self.mu,
            TimeDepForm::Dilated => -self.mu - order as f64,
        }
    }

    pub fn sample(&self, grid: &GridSpec, t: f64) -> Vec<f64> {
        grid.sample(|x| self.value(x, t))
    }

    pub fn sup_norm(&self, grid: &GridSpec, t: f64) -> f64 {
        self.sample(grid, t).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The matrix-free operator.
#[derive(Clone, Debug)]
pub struct HamiltonianOp {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub time_dep: Option<TimeDepPotentialSpec>,
    pub fourier: Fourier,
    kinetic: Vec<f64>,
    v: Vec<f64>,
}

impl HamiltonianOp {
    pub fn new(grid: GridSpec, potential: PotentialSpec) -> Result<Self> {
        grid.validate()?;
        let fourier = Fourier::new(&grid);
        let kinetic = fourier.kinetic();
        let v = grid.sample(|x| potential.value(x));
        Ok(HamiltonianOp {
            grid,
            potential,
            time_dep: None,
            fourier,
            kinetic,
            v,
        })
    }

    pub fn free(grid: GridSpec) -> Result<Self> {
        Self::new(grid, PotentialSpec::Zero)
    }

    pub fn with_time_dep(mut self, w: TimeDepPotentialSpec) -> Self {
        self.time_dep = Some(w);
        self
    }

    /// The time-independent part alone.
    pub fn stationary(&self) -> Self {
        HamiltonianOp {
            time_dep: None,
            ..self.clone()
        }
    }

    pub fn kinetic_symbol(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.v
    }

    pub fn is_free(&self) -> bool {
        self.potential.is_zero() && self.time_dep.is_none()
    }

    /// `V + W_t` at every node.
    pub fn total_potential(&self, t: Option<f64>) -> Vec<f64> {
        match (self.time_dep, t) {
            (Some(w), Some(t)) => {
                let wt = w.sample(&self.grid, t);
                self.v.iter().zip(&wt).map(|(a, b)| a + b).collect()
            }
            _ => self.v.clone(),
        }
    }

    /// `(½p² + V + W_t) ψ`.
    pub fn apply(&self, psi: &WaveFunction, t: Option<f64>) -> Result<WaveFunction> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if self.time_dep.is_some() != t.is_some() {
            return Err(Error::TimeArgument);
        }
        let mut out = psi.values.clone();
        self.fourier.multiply_real(&mut out, &self.kinetic);
        let pot = self.total_potential(t);
        for ((o, z), v) in out.iter_mut().zip(&psi.values).zip(&pot) {
            *o += z * v;
        }
        Ok(WaveFunction {
            grid: self.grid,
            values: out,
        })
    }

    /// `<ψ, H ψ>` (real part).
    pub fn energy(&self, psi: &WaveFunction, t: Option<f64>) -> Result<f64> {
        Ok(psi.inner(&self.apply(psi, t)?)?.re)
    }

    pub fn dense(&self, t: Option<f64>) -> Result<DenseHamiltonian> {
        dense_oracle(self, t)
    }
}

/// `apply_h` in free-function form.
pub fn apply_h(op: &HamiltonianOp, psi: &WaveFunction, t: Option<f64>) -> Result<WaveFunction> {
    op.apply(psi, t)
}

/// Dense real-symmetric matrix of the same discrete operator, with a lazily
/// computed eigendecomposition.
#[derive(Debug)]
pub struct DenseHamiltonian {
    pub grid: GridSpec,
    pub matrix: DMatrix<f64>,
    eigen: OnceLock<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl Clone for DenseHamiltonian {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        DenseHamiltonian {
            grid: self.grid,
            matrix: self.matrix.clone(),
            eigen,
        }
    }
}

pub const DENSE_CAP: usize = 4096;

/// Kinetic matrix on one axis: `K_jl = (1/N) Σ_m (k_m²/2) cos(k_m (x_j - x_l))`.
fn kinetic_1d(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.points;
    let k = grid.wavenumbers();
    let dx = grid.spacing();
    // the matrix is circulant; compute its first column once
    let col: Vec<f64> = (0..n)
        .map(|d| {
            let r = d as f64 * dx;
            k.iter()
                .map(|&km| 0.5 * km * km * (km * r).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |j, l| col[(j + n - l) % n])
}

pub fn dense_oracle(op: &HamiltonianOp, t: Option<f64>) -> Result<DenseHamiltonian> {
    let size = op.grid.len();
    if size > DENSE_CAP {
        return Err(Error::SizeCap(size));
    }
    if op.time_dep.is_some() != t.is_some() {
        return Err(Error::TimeArgument);
    }
    let k1 = kinetic_1d(&op.grid);
    let mut m = if op.grid.dim == 1 {
        k1
    } else {
        let n = op.grid.points;
        let id = DMatrix::<f64>::identity(n, n);
        k1.kronecker(&id) + id.kronecker(&k1)
    };
    for (i, v) in op.total_potential(t).iter().enumerate() {
        m[(i, i)] += v;
    }
    Ok(DenseHamiltonian {
        grid: op.grid,
        matrix: m,
        eigen: OnceLock::new(),
    })
}

impl DenseHamiltonian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigen(&self) -> &SymmetricEigen<f64, nalgebra::Dyn> {
        self.eigen
            .get_or_init(|| SymmetricEigen::new(self.matrix.clone()))
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.eigen().eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    pub fn matvec(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.size();
        let values = (0..n)
            .map(|i| (0..n).map(|j| psi.values[j] * self.matrix[(i, j)]).sum())
            .collect();
        Ok(WaveFunction {
            grid: self.grid,
            values,
        })
    }

    /// `max |M - M^T|`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// `F(H)` as a dense real matrix for a real function `F` of the energy.
    pub fn function<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let e = self.eigen();
        let q = &e.eigenvectors;
        let d: Vec<f64> = e.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = q.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[j];
        }
        scaled * q.transpose()
    }

    pub fn complex(&self) -> DMatrix<Complex64> {
        self.matrix.map(|v| Complex64::new(v, 0.0))
    }
}

/// Relative-bound fit `‖Vu‖ <= a ‖½Δu‖ + b ‖u‖`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KatoFit {
    /// Lexicographically minimal envelope: smallest `a`, then smallest `b`.
    pub a: f64,
    pub b: f64,
    /// Nonnegative least-squares fit of `‖Vu‖ ≈ a‖½Δu‖ + b‖u‖`, for reference.
    pub lsq_a: f64,
    pub lsq_b: f64,
    pub samples: usize,
}

/// Random band-limited test functions, half of them localized by a Gaussian window.
pub fn band_limited_samples(grid: &GridSpec, count: usize, seed: u64) -> Vec<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fourier = Fourier::new(grid);
    let pmax = grid.momentum_cutoff();
    (0..count)
        .map(|i| {
            let band = pmax * rng.gen_range(0.05..0.5);
            let mut coeffs: Vec<Complex64> = (0..grid.len())
                .map(|idx| {
                    let k = fourier.mode(idx);
                    if (k[0] * k[0] + k[1] * k[1]).sqrt() <= band {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            fourier.inverse(&mut coeffs);
            let mut u = WaveFunction {
                grid: *grid,
                values: coeffs,
            };
            if i % 2 == 1 {
                let width = grid.extent * rng.gen_range(0.02..0.3);
                let c = [
                    rng.gen_range(-0.5..0.5) * grid.extent,
                    rng.gen_range(-0.5..0.5) * grid.extent,
                ];
                let dim = grid.dim;
                let win = grid.sample(|x| {
                    let mut r2 = (x[0] - c[0]).powi(2);
                    if dim == 2 {
                        r2 += (x[1] - c[1]).powi(2);
                    }
                    (-r2 / (2.0 * width * width)).exp()
                });
                u = u.weighted(&win);
            }
            u.normalized()
        })
        .collect()
}

pub fn kato_diagnostic(op: &HamiltonianOp, samples: usize, seed: u64) -> Result<KatoFit> {
    if samples == 0 {
        return Err(Error::FitInfeasible("no samples".into()));
    }
    let stat = op.stationary();
    let mut rows = Vec::with_capacity(samples);
    for u in band_limited_samples(&op.grid, samples, seed) {
        let nu = u.norm();
        let vu = u.weighted(stat.potential_values()).norm();
        let mut lap = u.values.clone();
        op.fourier.multiply_real(&mut lap, stat.kinetic_symbol());
        let nl = WaveFunction {
            grid: op.grid,
            values: lap,
        }
        .norm();
        rows.push((nl, nu, vu));
    }
    // The constraint set {a, b >= 0 : a A_i + b B_i >= C_i} always contains a = 0,
    // so the lexicographic minimum is a = 0 and b = max C_i / B_i.
    let b = rows.iter().map(|&(_, nu, vu)| vu / nu).fold(0.0, f64::max);
    let (lsq_a, lsq_b) = nnls2(&rows);
    let fit = KatoFit {
        a: 0.0,
        b,
        lsq_a,
        lsq_b,
        samples,
    };
    if fit.a >= 1.0 {
        return Err(Error::FitInfeasible(format!(
            "relative bound a={} >= 1",
            fit.a
        )));
    }
    Ok(fit)
}

/// Two-variable nonnegative least squares `C ≈ a A + b B`.
fn nnls2(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let (mut saa, mut sab, mut sbb, mut sac, mut sbc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, c) in rows {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sac += a * c;
        sbc += b * c;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() > 1e-300 {
        let a = (sac * sbb - sbc * sab) / det;
        let b = (saa * sbc - sab * sac) / det;
        if a >= 0.0 && b >= 0.0 {
            return (a, b);
        }
    }
    let cost = |a: f64, b: f64| {
        rows.iter()
            .map(|&(x, y, c)| (a * x + b * y - c).powi(2))
            .sum::<f64>()
    };
    let only_a = if saa > 0.0 { (sac / saa).max(0.0) } else { 0.0 };
    let only_b = if sbb > 0.0 { (sbc / sbb).max(0.0) } else { 0.0 };
    if cost(only_a, 0.0) < cost(0.0, only_b) {
        (only_a, 0.0)
    } else {
        (0.0, only_b)
    }
}

/// Slopes of `sup_x |∂^α W_t|` against `<t>` for each `|α| <= 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub orders: Vec<usize>,
    pub slopes: Vec<Option<LinearFit>>,
    pub predicted: Vec<f64>,
    pub sup_norms: Vec<Vec<f64>>,
}

impl DecayReport {
    pub fn within(&self, tol: f64) -> bool {
        self.slopes
            .iter()
            .zip(&self.predicted)
            .all(|(s, p)| match s {
                Some(fit) => (fit.slope - p).abs() <= tol,
                None => true,
            })
    }
}

pub fn wt_decay_check(
    spec: &TimeDepPotentialSpec,
    grid: &GridSpec,
    t_samples: &[f64],
) -> Result<DecayReport> {
    if !(spec.mu > 0.0) {
        return Err(Error::Invalid(format!(
            "decay exponent must be positive, got {}",
            spec.mu
        )));
    }
    let alphas: Vec<(usize, Vec<[usize; 2]>)> = if grid.dim == 1 {
        vec![(0, vec![[0, 0]]), (1, vec![[1, 0]]), (2, vec![[2, 0]])]
    } else {
        vec![
            (0, vec![[0, 0]]),
            (1, vec![[1, 0], [0, 1]]),
            (2, vec![[2, 0], [1, 1], [0, 2]]),
        ]
    };
    let mut report = DecayReport {
        orders: vec![],
        slopes: vec![],
        predicted: vec![],
        sup_norms: vec![],
    };
    let logt: Vec<f64> = t_samples.iter().map(|&t| japanese_time(t).ln()).collect();
    for (order, list) in alphas {
        let sups: Vec<f64> = t_samples
            .iter()
            .map(|&t| {
                list.iter()
                    .map(|&al| {
                        grid.sample(|x| spec.derivative(x, t, al))
                            .iter()
                            .fold(0.0f64, |m, v| m.max(v.abs()))
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let usable: Vec<(f64, f64)> = logt
            .iter()
            .zip(&sups)
            .filter(|(_, &s)| s > 0.0)
            .map(|(&l, &s)| (l, s.ln()))
            .collect();
        let fit = if usable.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
            Some(linear_fit(&x, &y))
        } else {
            None
        };
        report.orders.push(order);
        report.slopes.push(fit);
        report.predicted.push(spec.predicted_exponent(order));
        report.sup_norms.push(sups);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::random_vector;

    fn random_state(grid: GridSpec, seed: u64) -> WaveFunction {
        WaveFunction {
            grid,
            values: random_vector(grid.len(), seed),
        }
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let g = GridSpec::line(8.0, 32).unwrap();
        let op = HamiltonianOp::free(g).unwrap();
        let k0 = g.wavenumbers()[3];
        let psi = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x[0]));
        let h = op.apply(&psi, None).unwrap();
        for (a, b) in h.values.iter().zip(&psi.values) {
            assert!((a - b * (0.5 * k0 * k0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts() {
        let g = GridSpec::line(8.0, 32).unwrap();
        let psi = random_state(g, 3);
        let h0 = HamiltonianOp::free(g).unwrap().apply(&psi, None).unwrap();
        let h1 = HamiltonianOp::new(g, PotentialSpec::Constant { value: 0.7 })
            .unwrap()
            .apply(&psi, None)
            .unwrap();
        for ((a, b), z) in h1.values.iter().zip(&h0.values).zip(&psi.values) {
            assert!((a - b - 0.7 * z).norm() < 1e-13);
        }
    }

    #[test]
    fn dense_matches_matrix_free() {
        for (dim, n) in [(1, 16), (2, 8)] {
            let g = GridSpec::new(dim, 6.0, n).unwrap();
            let op = HamiltonianOp::new(
                g,
                PotentialSpec::GaussianWell {
                    depth: 2.0,
                    width: 1.3,
                },
            )
            .unwrap();
            let d = op.dense(None).unwrap();
            let psi = random_state(g, 11);
            let a = op.apply(&psi, None).unwrap();
            let b = d.matvec(&psi).unwrap();
            assert!(a.sub(&b).unwrap().values.iter().all(|z| z.norm() < 1e-10));
            assert!(d.hermiticity_residual() <= 1e-12);
        }
    }

    #[test]
    fn self_adjoint_on_random_pairs() {
        let g = GridSpec::line(10.0, 64).unwrap();
        let op = HamiltonianOp::new(
            g,
            PotentialSpec::SoftCoulomb {
                charge: 1.0,
                eps: 0.5,
            },
        )
        .unwrap();
        for seed in 0..5 {
            let phi = random_state(g, seed);
            let psi = random_state(g, seed + 100);
            let l = phi.inner(&op.apply(&psi, None).unwrap()).unwrap();
            let r = op.apply(&phi, None).unwrap().inner(&psi).unwrap();
            assert!((l - r).norm() < 1e-10);
        }
    }

    #[test]
    fn free_spectrum_is_mode_energies() {
        let g = GridSpec::line(5.0, 16).unwrap();
        let d = HamiltonianOp::free(g).unwrap().dense(None).unwrap();
        let mut expected: Vec<f64> = g.wavenumbers().iter().map(|k| 0.5 * k * k).collect();
        expected.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in d.spectrum().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
        // zero and Nyquist are simple, the rest come in pairs
        assert!(expected[1] > expected[0] && expected[1] == expected[2]);
        assert!(expected[15] > expected[14]);
    }

    #[test]
    fn spectrum_bounds() {
        let g = GridSpec::line(6.0, 32).unwrap();
        let spec = PotentialSpec::GaussianWell {
            depth: 3.0,
            width: 1.0,
        };
        let d = HamiltonianOp::new(g, spec).unwrap().dense(None).unwrap();
        let ev = d.spectrum();
        assert!(ev[0] >= -spec.sup_norm() - 1e-12);
        let pmax = g.momentum_cutoff();
        assert!(*ev.last().unwrap() <= 0.5 * pmax * pmax + spec.sup_norm() + 1e-10);
    }

    #[test]
    fn size_cap_and_time_argument() {
        let g = GridSpec::line(6.0, 8192).unwrap();
        assert!(matches!(
            dense_oracle(&HamiltonianOp::free(g).unwrap(), None),
            Err(Error::SizeCap(8192))
        ));
        let g = GridSpec::line(6.0, 16).unwrap();
        let op = HamiltonianOp::free(g)
            .unwrap()
            .with_time_dep(TimeDepPotentialSpec::gaussian(
                1.0,
                1.0,
                2.0,
                TimeDepForm::Factorized,
            ));
        let psi = random_state(g, 1);
        assert!(matches!(op.apply(&psi, None), Err(Error::TimeArgument)));
        assert!(op.apply(&psi, Some(1.0)).is_ok());
        assert!(matches!(
            HamiltonianOp::free(g).unwrap().apply(&psi, Some(1.0)),
            Err(Error::TimeArgument)
        ));
    }

    #[test]
    fn kato_examples() {
        let g = GridSpec::line(20.0, 256).unwrap();
        let zero = kato_diagnostic(&HamiltonianOp::free(g).unwrap(), 200, 1).unwrap();
        assert_eq!((zero.a, zero.b), (0.0, 0.0));
        let c = kato_diagnostic(
            &HamiltonianOp::new(g, PotentialSpec::Constant { value: -1.7 }).unwrap(),
            200,
            1,
        )
        .unwrap();
        assert_eq!(c.a, 0.0);
        assert!((c.b - 1.7).abs() < 0.05 * 1.7);
        let w = kato_diagnostic(
            &HamiltonianOp::new(
                g,
                PotentialSpec::GaussianWell {
                    depth: 5.0,
                    width: 1.0,
                },
            )
            .unwrap(),
            200,
            1,
        )
        .unwrap();
        assert_eq!(w.a, 0.0);
        assert!(w.b <= 5.0 && w.b > 0.0);
        assert!(w.lsq_a >= 0.0 && w.lsq_b >= 0.0);
    }

    #[test]
    fn factorized_decay_slopes() {
        let g = GridSpec::line(20.0, 256).unwrap();
        let ts: Vec<f64> = (0..8).map(|i| 4.0 * 2f64.powi(i)).collect();
        let spec = TimeDepPotentialSpec::gaussian(1.0, 1.5, 2.0, TimeDepForm::Factorized);
        let rep = wt_decay_check(&spec, &g, &ts).unwrap();
        assert!(rep.within(0.05));
        let s0 = rep.slopes[0].as_ref().unwrap().slope;
        assert!((s0 + 2.0).abs() < 0.05);
        for s in &rep.slopes {
            assert!((s.as_ref().unwrap().slope - s0).abs() < 1e-6);
        }
        let zero = TimeDepPotentialSpec::gaussian(0.0, 1.5, 2.0, TimeDepForm::Factorized);
        let rep = wt_decay_check(&zero, &g, &ts).unwrap();
        assert!(rep.sup_norms.iter().flatten().all(|&v| v == 0.0));
        assert!(wt_decay_check(&TimeDepPotentialSpec { mu: 0.0, ..spec }, &g, &ts).is_err());
    }

    #[test]
    fn dilated_decay_slopes() {
        // the dilated profile needs room to spread: <t> w-width must stay on the grid
        let g = GridSpec::line(400.0, 4096).unwrap();
        let ts: Vec<f64> = (0..6).map(|i| 4.0 * 2f64.powi(i)).collect();
        let spec = TimeDepPotentialSpec::gaussian(1.0, 1.0, 2.0, TimeDepForm::Dilated);
        let rep = wt_decay_check(&spec, &g, &ts).unwrap();
        for (s, p) in rep.slopes.iter().zip(&rep.predicted) {
            assert!((s.as_ref().unwrap().slope - p).abs() < 0.05);
        }
    }

    #[test]
    fn potential_derivatives_match_differences() {
        let h = 1e-5;
        for spec in [
            PotentialSpec::GaussianWell {
                depth: 2.0,
                width: 1.3,
            },
            PotentialSpec::SoftCoulomb {
                charge: 1.5,
                eps: 0.7,
            },
            PotentialSpec::Barrier {
                height: 0.8,
                width: 0.9,
            },
        ] {
            let x = [0.4, -0.9];
            let fd_x = (spec.value([x[0] + h, x[1]]) - spec.value([x[0] - h, x[1]])) / (2.0 * h);
            assert!((fd_x - spec.derivative(x, [1, 0])).abs() < 1e-8);
            let fd_xx = (spec.derivative([x[0] + h, x[1]], [1, 0])
                - spec.derivative([x[0] - h, x[1]], [1, 0]))
                / (2.0 * h);
            assert!((fd_xx - spec.derivative(x, [2, 0])).abs() < 1e-7);
            let fd_xy = (spec.derivative([x[0], x[1] + h], [1, 0])
                - spec.derivative([x[0], x[1] - h], [1, 0]))
                / (2.0 * h);
            assert!((fd_xy - spec.derivative(x, [1, 1])).abs() < 1e-7);
        }
    }
}
