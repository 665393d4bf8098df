//! Functional calculus: `g(H)` by spectral decomposition and by the
//! Helffer–Sjöstrand integral, the speed constant `k = ‖|p| g(H)‖`, and the
//! commutator expansion of `[f(x_s), g(H)]` in powers of `1/s`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::fourier::Fourier;
use crate::grid::{japanese_bracket, GridSpec, WaveFunction};
use crate::hamiltonian::{DenseHamiltonian, HamiltonianOp, TimeDepPotentialSpec};
use crate::norm::{largest_singular_real, power_norm, LinearMap, NormEstimate, PowerOptions};
use crate::smooth::{MollifiedStep, Smooth, SpectralCutoff};
use crate::taylor::factorial;

/// `Σ g(λ_i) <e_i, ψ> e_i`.
pub fn spectral_apply<F: Fn(f64) -> f64>(
    g: F,
    dense: &DenseHamiltonian,
    psi: &WaveFunction,
) -> Result<WaveFunction> {
    if psi.grid != dense.grid {
        return Err(Error::GridMismatch);
    }
    let e = dense.eigen();
    let q = &e.eigenvectors;
    let v = DVector::from_column_slice(&psi.values);
    let qc = q.map(|x| Complex64::new(x, 0.0));
    let mut c = qc.transpose() * v;
    for (ci, &l) in c.iter_mut().zip(e.eigenvalues.iter()) {
        *ci *= g(l);
    }
    let out = qc * c;
    Ok(WaveFunction {
        grid: psi.grid,
        values: out.iter().copied().collect(),
    })
}

/// Applies a fixed real function of `H` to fields.
#[derive(Clone, Debug)]
pub enum EnergyFilter {
    /// Diagonal in Fourier space (free `H`): the symbol on every mode.
    Fourier { op: HamiltonianOp, symbol: Vec<f64> },
    /// Dense real matrix `F(H)`.
    Dense {
        grid: GridSpec,
        matrix: DMatrix<f64>,
    },
}

impl EnergyFilter {
    /// Exact `g(H)` for the time-independent part of `op`.
    ///
    /// Free operators use the Fourier symbol; anything else goes through the
    /// dense eigendecomposition and so is bounded by the dense size cap.
    pub fn new<F: Fn(f64) -> f64>(op: &HamiltonianOp, g: F) -> Result<Self> {
        let stat = op.stationary();
        if stat.potential.is_zero() {
            let symbol = stat.kinetic_symbol().iter().map(|&k| g(k)).collect();
            Ok(EnergyFilter::Fourier { op: stat, symbol })
        } else {
            let dense = stat.dense(None)?;
            Ok(EnergyFilter::Dense {
                grid: op.grid,
                matrix: dense.function(g),
            })
        }
    }

    pub fn from_dense<F: Fn(f64) -> f64>(dense: &DenseHamiltonian, g: F) -> Self {
        EnergyFilter::Dense {
            grid: dense.grid,
            matrix: dense.function(g),
        }
    }

    pub fn apply_values(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            EnergyFilter::Fourier { op, symbol } => {
                let mut out = v.to_vec();
                op.fourier.multiply_real(&mut out, symbol);
                out
            }
            EnergyFilter::Dense { matrix, .. } => {
                let re = DVector::from_iterator(v.len(), v.iter().map(|z| z.re));
                let im = DVector::from_iterator(v.len(), v.iter().map(|z| z.im));
                let (a, b) = (matrix * re, matrix * im);
                a.iter()
                    .zip(b.iter())
                    .map(|(&x, &y)| Complex64::new(x, y))
                    .collect()
            }
        }
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        let grid = match self {
            EnergyFilter::Fourier { op, .. } => op.grid,
            EnergyFilter::Dense { grid, .. } => *grid,
        };
        if psi.grid != grid {
            return Err(Error::GridMismatch);
        }
        Ok(WaveFunction {
            grid,
            values: self.apply_values(&psi.values),
        })
    }
}

/// Quadrature settings for the Helffer–Sjöstrand integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsQuadrature {
    /// Order `n`: the extension keeps derivatives up to `n + 1`.
    pub order: usize,
    /// Midpoint cells along `Re z` across the support.
    pub cells_re: usize,
    /// Midpoint cells along `Im z` across `[-Y0, Y0]` (made even, so `Im z = 0` is never sampled).
    pub cells_im: usize,
}

impl Default for HsQuadrature {
    fn default() -> Self {
        HsQuadrature {
            order: 2,
            cells_re: 512,
            cells_im: 256,
        }
    }
}

impl HsQuadrature {
    /// Same rule with both spacings halved.
    pub fn refined(&self) -> Self {
        HsQuadrature {
            order: self.order,
            cells_re: 2 * self.cells_re,
            cells_im: 2 * self.cells_im,
        }
    }
}

/// `f̃(x+iy) = τ(y/Y0) Σ_{k<=n+1} f^{(k)}(x) (iy)^k / k!` on a midpoint grid,
/// stored as the nodes `z` and the weights `-(1/π) ∂̄f̃(z) dx dy`.
pub struct AlmostAnalyticExtension {
    pub order: usize,
    pub support: (f64, f64),
    pub height: f64,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    /// Number of `Re z` columns; nodes are stored column by column.
    pub columns: usize,
}

impl AlmostAnalyticExtension {
    /// `height` is the half-height `Y0` of the rectangle; `τ` switches the
    /// extension off at `|Im z| = Y0`.
    pub fn new(
        f: &dyn Smooth,
        support: (f64, f64),
        height: f64,
        quad: &HsQuadrature,
    ) -> Result<Self> {
        let (a, b) = support;
        if !(b > a) {
            return Err(Error::Invalid("empty support".into()));
        }
        if !(height > 0.0) {
            return Err(Error::Invalid(format!(
                "extension height must be positive, got {height}"
            )));
        }
        let n = quad.order;
        let y0 = height;
        let mx = quad.cells_re.max(1);
        let my = quad.cells_im.max(2).div_ceil(2) * 2;
        let hx = (b - a) / mx as f64;
        let hy = 2.0 * y0 / my as f64;
        let tau = Tau::new()?;
        let mut nodes = Vec::with_capacity(mx * my);
        let mut weights = Vec::with_capacity(mx * my);
        for i in 0..mx {
            let x = a + (i as f64 + 0.5) * hx;
            let d = f.jet(x, n + 2).derivatives();
            for j in 0..my {
                let y = -y0 + (j as f64 + 0.5) * hy;
                let w = dbar_extension(&d, n, x, y, y0, &tau);
                nodes.push(Complex64::new(x, y));
                weights.push(w * (-hx * hy / std::f64::consts::PI));
            }
        }
        Ok(AlmostAnalyticExtension {
            order: n,
            support,
            height: y0,
            nodes,
            weights,
            columns: mx,
        })
    }

    /// Value of `∂̄f̃` at a point, for inspecting the extension.
    pub fn dbar(f: &dyn Smooth, order: usize, height: f64, z: Complex64) -> Result<Complex64> {
        let d = f.jet(z.re, order + 2).derivatives();
        Ok(dbar_extension(&d, order, z.re, z.im, height, &Tau::new()?))
    }

    /// Quadrature of `-(1/π) ∫ ∂̄f̃(z) / (z - λ)`, i.e. the scalar identity `f(λ)`.
    pub fn scalar(&self, lambda: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w / (z - lambda))
            .sum::<Complex64>()
            .re
    }
}

/// Half-height of the quadrature rectangle for a cutoff: its transition width.
///
/// Every `Y0 > 0` gives an exact representation; the extension's Taylor terms
/// grow like `(y/δ)^k`, so rectangles much taller than `δ` lose all accuracy
/// to cancellation.
pub fn extension_height(g: &SpectralCutoff) -> f64 {
    g.width.min(g.upper - g.lower)
}

/// `τ(s) = S(2(1 - |s|))`: one for `|s| <= 1/2`, zero for `|s| >= 1`.
struct Tau(MollifiedStep);

impl Tau {
    fn new() -> Result<Self> {
        Ok(Tau(MollifiedStep::new(1.0)?))
    }

    fn value_and_slope(&self, s: f64) -> (f64, f64) {
        let j = self.0.jet(2.0 * (1.0 - s.abs()), 1);
        (j.value(), -2.0 * s.signum() * j.derivative(1))
    }
}

fn dbar_extension(d: &[f64], n: usize, _x: f64, y: f64, y0: f64, tau: &Tau) -> Complex64 {
    let iy = Complex64::new(0.0, y);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for (k, dk) in d.iter().enumerate().take(n + 2) {
        sum += pow * (dk / factorial(k));
        pow *= iy;
    }
    // here pow = (iy)^{n+2}; ∂̄ of the sum telescopes to f^{(n+2)} (iy)^{n+1} / (2 (n+1)!)
    let top = d[n + 2] * (iy.powu((n + 1) as u32)) / (2.0 * factorial(n + 1));
    let (t, ts) = tau.value_and_slope(y / y0);
    top * t + sum * Complex64::new(0.0, 0.5 * ts / y0)
}

/// How resolvents `(z - H)^{-1}ψ` are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ResolventMethod {
    /// Dense LU at oracle scale.
    Dense,
    /// Preconditioned BiCGSTAB, matrix-free.
    Iterative { tol: f64, max_iter: usize },
}

#[derive(Clone, Debug)]
pub struct HsResult {
    pub psi: WaveFunction,
    pub nodes: usize,
    /// Largest relative residual `‖(z-H)r - ψ‖/‖ψ‖` over the nodes.
    pub max_residual: f64,
}

/// `g(H)ψ = -(1/π) ∫ ∂̄g̃(z) (z-H)^{-1} ψ dx dy` by tensor midpoint quadrature.
///
/// Node contributions are summed per `Re z` column in parallel and the column
/// sums are reduced in a fixed order, so the result is deterministic.
pub fn hs_apply(
    g: &SpectralCutoff,
    op: &HamiltonianOp,
    psi: &WaveFunction,
    quad: &HsQuadrature,
    method: ResolventMethod,
) -> Result<HsResult> {
    if psi.grid != op.grid {
        return Err(Error::GridMismatch);
    }
    let ext = AlmostAnalyticExtension::new(g, g.support(), extension_height(g), quad)?;
    let stat = op.stationary();
    let dense = match method {
        ResolventMethod::Dense => Some(stat.dense(None)?.complex()),
        ResolventMethod::Iterative { .. } => None,
    };
    let len = psi.values.len();
    let per_col = ext.nodes.len() / ext.columns;
    let rhs = DVector::from_column_slice(&psi.values);
    let psi_norm = rhs.norm();
    let columns: Vec<(Vec<Complex64>, f64)> = (0..ext.columns)
        .into_par_iter()
        .map(|c| -> Result<(Vec<Complex64>, f64)> {
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            let mut worst = 0.0f64;
            for idx in c * per_col..(c + 1) * per_col {
                let z = ext.nodes[idx];
                let w = ext.weights[idx];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let r = match (&dense, method) {
                    (Some(h), _) => {
                        let mut a = -h.clone();
                        for i in 0..len {
                            a[(i, i)] += z;
                        }
                        let sol = a.clone().lu().solve(&rhs).ok_or(Error::Resolvent(z))?;
                        let res = (&a * &sol - &rhs).norm() / psi_norm.max(f64::MIN_POSITIVE);
                        worst = worst.max(res);
                        sol.iter().copied().collect::<Vec<_>>()
                    }
                    (None, ResolventMethod::Iterative { tol, max_iter }) => {
                        let (sol, res) = bicgstab_resolvent(&stat, z, &psi.values, tol, max_iter);
                        worst = worst.max(res);
                        sol
                    }
                    _ => unreachable!(),
                };
                for (a, x) in acc.iter_mut().zip(&r) {
                    *a += w * x;
                }
            }
            Ok((acc, worst))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut worst = 0.0f64;
    for (col, res) in &columns {
        for (o, v) in out.iter_mut().zip(col) {
            *o += v;
        }
        worst = worst.max(*res);
    }
    Ok(HsResult {
        psi: WaveFunction {
            grid: psi.grid,
            values: out,
        },
        nodes: ext.nodes.len(),
        max_residual: worst,
    })
}

/// BiCGSTAB for `(z - H) x = b`, right-preconditioned by the Fourier-diagonal
/// `(z - ½|k|² - mean V)^{-1}`. Returns the solution and its relative residual.
fn bicgstab_resolvent(
    op: &HamiltonianOp,
    z: Complex64,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> (Vec<Complex64>, f64) {
    let n = b.len();
    let vbar = op.potential_values().iter().sum::<f64>() / n as f64;
    let pre: Vec<Complex64> = op
        .kinetic_symbol()
        .iter()
        .map(|&k| 1.0 / (z - k - vbar))
        .collect();
    let precond = |v: &[Complex64]| {
        let mut o = v.to_vec();
        op.fourier.multiply(&mut o, &pre);
        o
    };
    let apply = |v: &[Complex64]| {
        let mut o = v.to_vec();
        op.fourier.multiply_real(&mut o, op.kinetic_symbol());
        o.iter()
            .zip(v)
            .zip(op.potential_values())
            .map(|((hk, x), pv)| z * x - hk - pv * x)
            .collect::<Vec<_>>()
    };
    let dot = |a: &[Complex64], c: &[Complex64]| {
        a.iter()
            .zip(c)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
    };
    let nrm = |a: &[Complex64]| a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let bn = nrm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    );
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond(&p);
        v = apply(&ph);
        alpha = rho / dot(&r0, &v);
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if nrm(&s) / bn < tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            break;
        }
        let sh = precond(&s);
        let t = apply(&sh);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if nrm(&r) / bn < tol {
            break;
        }
    }
    let res: Vec<Complex64> = apply(&x).iter().zip(b).map(|(a, c)| a - c).collect();
    let rel = nrm(&res) / bn;
    (x, rel)
}

/// `|p| F(H)` as a matrix-free map, for power iteration on `F p² F`.
struct MomentumCutoff<'a> {
    filter: &'a EnergyFilter,
    op: &'a HamiltonianOp,
    abs_p: Vec<f64>,
}

impl LinearMap for MomentumCutoff<'_> {
    fn domain_len(&self) -> usize {
        self.op.grid.len()
    }

    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = self.filter.apply_values(x);
        self.op.fourier.multiply_real(&mut y, &self.abs_p);
        Ok(y)
    }

    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = y.to_vec();
        self.op.fourier.multiply_real(&mut x, &self.abs_p);
        Ok(self.filter.apply_values(&x))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpeedConstant {
    pub k: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `k = ‖|p| g(H)‖` by power iteration on `g(H) p² g(H)`.
///
/// Converged when successive estimates differ by less than `1e-10`
/// (relative); otherwise the best estimate is returned with `converged = false`.
pub fn compute_k(
    g: &SpectralCutoff,
    op: &HamiltonianOp,
    max_iter: usize,
    seed: u64,
) -> Result<SpeedConstant> {
    let filter = EnergyFilter::new(op, |l| g.eval(l))?;
    compute_k_with(&filter, op, max_iter, seed)
}

pub fn compute_k_with(
    filter: &EnergyFilter,
    op: &HamiltonianOp,
    max_iter: usize,
    seed: u64,
) -> Result<SpeedConstant> {
    let abs_p = op.fourier.symbol(|k| (k[0] * k[0] + k[1] * k[1]).sqrt());
    let map = MomentumCutoff { filter, op, abs_p };
    let NormEstimate {
        value,
        iterations,
        converged,
    } = power_norm(
        &map,
        &PowerOptions {
            max_iter,
            rel_tol: 1e-10,
            seed,
        },
    )?;
    Ok(SpeedConstant {
        k: value,
        iterations,
        converged,
    })
}

/// Exact `k = ‖p g(H)‖` for small grids, independent of power iteration:
/// `max |κ| g(κ²/2)` over the mode lattice when `V = 0`, otherwise
/// `sqrt(λ_max(g p² g))` from dense matrices.
pub fn exact_k(g: &SpectralCutoff, op: &HamiltonianOp) -> Result<f64> {
    if op.is_free() {
        let fourier = Fourier::new(&op.grid);
        let mut best = 0.0f64;
        for i in 0..op.grid.len() {
            let kv = fourier.mode(i);
            let k2 = kv[0] * kv[0] + kv[1] * kv[1];
            best = best.max(k2.sqrt() * g.eval(0.5 * k2).abs());
        }
        return Ok(best);
    }
    let dense = crate::hamiltonian::dense_oracle(op, None)?;
    let gm = dense.function(|l| g.eval(l));
    let free = crate::hamiltonian::dense_oracle(&HamiltonianOp::free(op.grid)?, None)?;
    let m = &gm * (&free.matrix * 2.0) * &gm;
    let ev = nalgebra::SymmetricEigen::new(m).eigenvalues;
    Ok(ev.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt())
}

/// `k(δ)` over several transition widths and the quadratic extrapolation to `δ = 0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KExtrapolation {
    pub widths: Vec<f64>,
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    pub extrapolated: f64,
}

pub fn extrapolate_k(
    lower: f64,
    upper: f64,
    widths: &[f64],
    beta: f64,
    op: &HamiltonianOp,
    max_iter: usize,
    seed: u64,
) -> Result<KExtrapolation> {
    let mut values = vec![];
    let mut converged = vec![];
    for &d in widths {
        let g = SpectralCutoff::with_beta(lower, upper, d, beta)?;
        let k = compute_k(&g, op, max_iter, seed)?;
        values.push(k.k);
        converged.push(k.converged);
    }
    let extrapolated = polyfit_at_zero(widths, &values);
    Ok(KExtrapolation {
        widths: widths.to_vec(),
        values,
        converged,
        extrapolated,
    })
}

/// Value at zero of the least-squares polynomial of degree `min(2, n-1)`.
fn polyfit_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let deg = (x.len().saturating_sub(1)).min(2);
    let a = DMatrix::from_fn(x.len(), deg + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = (a.transpose() * &a)
        .lu()
        .solve(&(a.transpose() * b))
        .expect("distinct widths");
    sol[0]
}

/// Terms of `[f(x_s), g(H)] = Σ_{k=1}^{n-1} s^{-k}/k! B_k f^{(k)}(x_s) + R`,
/// `B_k = ad^k_{<x>} g(H)`, `x_s = (<x> - a)/s`.
#[derive(Clone, Debug)]
pub struct CommutatorExpansion {
    pub order: usize,
    pub scale: f64,
    pub offset: f64,
    /// `B_1 .. B_{n-1}`.
    pub coefficients: Vec<DMatrix<f64>>,
    pub commutator: DMatrix<f64>,
    pub remainder: DMatrix<f64>,
    pub commutator_norm: f64,
    pub remainder_norm: f64,
    /// Norm of `[g(H), f(x_s)] - Σ ...`, the opposite commutator order.
    pub remainder_opposite_norm: f64,
}

pub fn commutator_expansion(
    gm: &DMatrix<f64>,
    grid: &GridSpec,
    f: &dyn Smooth,
    offset: f64,
    scale: f64,
    order: usize,
) -> Result<CommutatorExpansion> {
    if order == 0 {
        return Err(Error::Invalid("expansion order must be at least 1".into()));
    }
    let br = japanese_bracket(grid).values;
    let n = br.len();
    if gm.nrows() != n {
        return Err(Error::GridMismatch);
    }
    let xs: Vec<f64> = br.iter().map(|b| (b - offset) / scale).collect();
    let derivs: Vec<Vec<f64>> = xs.iter().map(|&x| f.jet(x, order).derivatives()).collect();
    let coefficients: Vec<DMatrix<f64>> = (1..order)
        .map(|k| DMatrix::from_fn(n, n, |i, j| (br[i] - br[j]).powi(k as i32) * gm[(i, j)]))
        .collect();
    // [f(x_s), G]_ij = (f_i - f_j) G_ij
    let commutator = DMatrix::from_fn(n, n, |i, j| (derivs[i][0] - derivs[j][0]) * gm[(i, j)]);
    let mut series = DMatrix::<f64>::zeros(n, n);
    for (k, bk) in coefficients.iter().enumerate() {
        let k = k + 1;
        let c = scale.powi(-(k as i32)) / factorial(k);
        for j in 0..n {
            let fk = derivs[j][k];
            for i in 0..n {
                series[(i, j)] += c * bk[(i, j)] * fk;
            }
        }
    }
    let remainder = &commutator - &series;
    let opposite = -&commutator - &series;
    Ok(CommutatorExpansion {
        order,
        scale,
        offset,
        commutator_norm: largest_singular_real(&commutator),
        remainder_norm: largest_singular_real(&remainder),
        remainder_opposite_norm: largest_singular_real(&opposite),
        coefficients,
        commutator,
        remainder,
    })
}

/// `B_1` assembled from the resolvent integral `-(1/π) ∫ ∂̄g̃ R(z) [<x>, H] R(z)`.
pub fn b1_by_quadrature(
    g: &SpectralCutoff,
    dense: &DenseHamiltonian,
    quad: &HsQuadrature,
) -> Result<DMatrix<f64>> {
    let ext = AlmostAnalyticExtension::new(g, g.support(), extension_height(g), quad)?;
    let br = japanese_bracket(&dense.grid).values;
    let n = br.len();
    let h = dense.complex();
    let c1 = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new((br[i] - br[j]) * dense.matrix[(i, j)], 0.0)
    });
    let per_col = ext.nodes.len() / ext.columns;
    let parts: Vec<DMatrix<Complex64>> = (0..ext.columns)
        .into_par_iter()
        .map(|c| -> Result<DMatrix<Complex64>> {
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for idx in c * per_col..(c + 1) * per_col {
                let z = ext.nodes[idx];
                let mut a = -h.clone();
                for i in 0..n {
                    a[(i, i)] += z;
                }
                let r = a.try_inverse().ok_or(Error::Resolvent(z))?;
                acc += (&r * &c1 * &r) * ext.weights[idx];
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    for p in parts {
        total += p;
    }
    Ok(total.map(|z| z.re))
}

/// `‖[g(H), W_r]‖` for a range of `r`, with the log-log slope against `r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorDecay {
    pub r: Vec<f64>,
    pub norms: Vec<f64>,
    /// `2 ‖g‖_∞ ‖W_r‖_∞` at each `r`.
    pub obvious_bound: Vec<f64>,
    pub fit: Option<LinearFit>,
    pub note: String,
}

pub fn g_w_commutator_norm(
    gm: &DMatrix<f64>,
    grid: &GridSpec,
    w: &TimeDepPotentialSpec,
    r_samples: &[f64],
) -> Result<CommutatorDecay> {
    let n = grid.len();
    if gm.nrows() != n {
        return Err(Error::GridMismatch);
    }
    let g_sup = 1.0;
    let mut norms = vec![];
    let mut bound = vec![];
    for &r in r_samples {
        let wr = w.sample(grid, r);
        let c = DMatrix::from_fn(n, n, |i, j| gm[(i, j)] * (wr[j] - wr[i]));
        norms.push(largest_singular_real(&c));
        bound.push(2.0 * g_sup * wr.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let usable: Vec<(f64, f64)> = r_samples
        .iter()
        .zip(&norms)
        .filter(|(r, v)| **r > 0.0 && **v > 1e-14)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let fit = if usable.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        Some(linear_fit(&x, &y))
    } else {
        None
    };
    let note = match w.form {
        crate::hamiltonian::TimeDepForm::Factorized => format!(
            "factorized W_r = <r>^-mu w(x): the commutator carries exactly the <r>^-mu factor, so the slope is -mu = {}; \
             the extra r^-1 needs spatial-derivative decay, which this form does not have",
            -w.mu
        ),
        crate::hamiltonian::TimeDepForm::Dilated => format!(
            "dilated W_r = <r>^-mu w(x/<r>): derivative decay gives an expected slope of -mu-1 = {}",
            -w.mu - 1.0
        ),
    };
    Ok(CommutatorDecay {
        r: r_samples.to_vec(),
        norms,
        obvious_bound: bound,
        fit,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gaussian_packet;
    use crate::hamiltonian::PotentialSpec;
    use crate::norm::random_vector;

    fn well(n: usize) -> HamiltonianOp {
        let g = GridSpec::line(8.0, n).unwrap();
        HamiltonianOp::new(
            g,
            PotentialSpec::GaussianWell {
                depth: 2.0,
                width: 1.0,
            },
        )
        .unwrap()
    }

    fn random_state(grid: GridSpec, seed: u64) -> WaveFunction {
        WaveFunction {
            grid,
            values: random_vector(grid.len(), seed),
        }
        .normalized()
    }

    fn eigen_cutoff(op: &HamiltonianOp) -> (DenseHamiltonian, SpectralCutoff) {
        (
            op.dense(None).unwrap(),
            SpectralCutoff::new(-1.0, 1.0, 0.25).unwrap(),
        )
    }

    #[test]
    fn spectral_calculus_laws() {
        let op = well(32);
        let (dense, g) = eigen_cutoff(&op);
        let psi = random_state(op.grid, 1);
        let ev = dense.spectrum();
        let all = SpectralCutoff::new(ev[0] - 1.0, ev[ev.len() - 1] + 1.0, 0.25).unwrap();
        let same = spectral_apply(|l| all.eval(l), &dense, &psi).unwrap();
        assert!(same.distance(&psi).unwrap() < 1e-12);
        let g2 = SpectralCutoff::new(-0.5, 3.0, 0.4).unwrap();
        let twice = spectral_apply(
            |l| g.eval(l),
            &dense,
            &spectral_apply(|l| g2.eval(l), &dense, &psi).unwrap(),
        )
        .unwrap();
        let product = spectral_apply(|l| g.eval(l) * g2.eval(l), &dense, &psi).unwrap();
        assert!(twice.distance(&product).unwrap() < 1e-10);
        let gm = dense.function(|l| g.eval(l));
        assert!((&gm - gm.transpose()).amax() < 1e-12);
        assert!(largest_singular_real(&gm) <= 1.0 + 1e-12);
    }

    #[test]
    fn plane_wave_is_scaled() {
        let grid = GridSpec::line(8.0, 32).unwrap();
        let op = HamiltonianOp::free(grid).unwrap();
        let dense = op.dense(None).unwrap();
        let g = SpectralCutoff::new(0.0, 2.0, 0.5).unwrap();
        for m in [1usize, 3, 5] {
            let k0 = grid.wavenumbers()[m];
            let psi = WaveFunction::from_fn(grid, |x| Complex64::from_polar(1.0, k0 * x[0]));
            let out = spectral_apply(|l| g.eval(l), &dense, &psi).unwrap();
            let mut expect = psi.clone();
            expect.scale(g.eval(0.5 * k0 * k0));
            assert!(out.distance(&expect).unwrap() < 1e-10);
            // the Fourier route must agree
            let f = EnergyFilter::new(&op, |l| g.eval(l)).unwrap();
            assert!(f.apply(&psi).unwrap().distance(&expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hs_matches_spectral() {
        let op = well(32);
        let (dense, g) = eigen_cutoff(&op);
        let psi = random_state(op.grid, 5);
        let exact = spectral_apply(|l| g.eval(l), &dense, &psi).unwrap();
        let coarse = HsQuadrature {
            cells_re: 128,
            cells_im: 64,
            ..Default::default()
        };
        let e1 = hs_apply(&g, &op, &psi, &coarse, ResolventMethod::Dense)
            .unwrap()
            .psi
            .distance(&exact)
            .unwrap();
        let e2 = hs_apply(&g, &op, &psi, &coarse.refined(), ResolventMethod::Dense)
            .unwrap()
            .psi
            .distance(&exact)
            .unwrap();
        assert!(e1 / e2 >= 4.0, "e1={e1} e2={e2}");
        let reference = hs_apply(
            &g,
            &op,
            &psi,
            &HsQuadrature::default(),
            ResolventMethod::Dense,
        )
        .unwrap();
        assert!(reference.psi.distance(&exact).unwrap() <= 1e-6);
        assert!(reference.max_residual < 1e-10);
    }

    #[test]
    fn hs_iterative_agrees_with_dense() {
        let op = well(32);
        let (_, g) = eigen_cutoff(&op);
        let psi = random_state(op.grid, 8);
        let q = HsQuadrature {
            cells_re: 64,
            cells_im: 32,
            ..Default::default()
        };
        let a = hs_apply(&g, &op, &psi, &q, ResolventMethod::Dense).unwrap();
        let b = hs_apply(
            &g,
            &op,
            &psi,
            &q,
            ResolventMethod::Iterative {
                tol: 1e-12,
                max_iter: 500,
            },
        )
        .unwrap();
        assert!(b.max_residual < 1e-10);
        assert!(a.psi.distance(&b.psi).unwrap() < 1e-8);
    }

    #[test]
    fn cutoff_below_spectrum_annihilates() {
        let op = well(32);
        let ev = op.dense(None).unwrap().spectrum();
        let g = SpectralCutoff::new(ev[0] - 3.0, ev[0] - 0.5, 0.5).unwrap();
        let psi = random_state(op.grid, 2);
        let hs = hs_apply(
            &g,
            &op,
            &psi,
            &HsQuadrature::default(),
            ResolventMethod::Dense,
        )
        .unwrap();
        assert!(hs.psi.norm() <= 1e-8);
    }

    #[test]
    fn scalar_identity_reproduces_cutoff() {
        let g = SpectralCutoff::new(-1.0, 1.0, 0.25).unwrap();
        let ext = AlmostAnalyticExtension::new(
            &g,
            g.support(),
            extension_height(&g),
            &HsQuadrature::default(),
        )
        .unwrap();
        for l in [-0.9, -0.7, 0.0, 0.3, 0.85] {
            // nodes sit at Im z = ±hy/2; stay off the Re grid lines
            assert!(
                (ext.scalar(l + 1e-3) - g.eval(l + 1e-3)).abs() < 1e-5,
                "λ={l}"
            );
        }
    }

    #[test]
    fn dbar_vanishes_to_order() {
        let g = SpectralCutoff::new(-1.0, 1.0, 0.25).unwrap();
        let h = extension_height(&g);
        for n in [1usize, 2, 3] {
            let z1 = AlmostAnalyticExtension::dbar(&g, n, h, Complex64::new(-0.8, 1e-3))
                .unwrap()
                .norm();
            let z2 = AlmostAnalyticExtension::dbar(&g, n, h, Complex64::new(-0.8, 2e-3))
                .unwrap()
                .norm();
            let slope = (z2 / z1).log2();
            assert!((slope - (n + 1) as f64).abs() < 1e-6, "n={n} slope={slope}");
        }
    }

    #[test]
    fn k_free_particle() {
        let grid = GridSpec::line(80.0, 512).unwrap();
        let op = HamiltonianOp::free(grid).unwrap();
        let g = SpectralCutoff::new(0.0, 0.5, 0.05).unwrap();
        let k = compute_k(&g, &op, 10_000, 7).unwrap();
        let oracle = exact_k(&g, &op).unwrap();
        assert!(
            (k.k - oracle).abs() < 1e-8 * oracle,
            "k={} oracle={oracle}",
            k.k
        );
        assert!(k.k < 1.0 && k.k > 0.9);
    }

    #[test]
    fn k_dense_oracle_and_kato_bound() {
        let op = well(64);
        let g = SpectralCutoff::new(-2.0, 0.5, 0.1).unwrap();
        let k = compute_k(&g, &op, 10_000, 3).unwrap();
        let oracle = exact_k(&g, &op).unwrap();
        assert!((k.k - oracle).abs() < 1e-6 * oracle);
        let kato = crate::hamiltonian::kato_diagnostic(&op, 200, 1).unwrap();
        assert!(k.k <= (2.0 * (g.upper + kato.b) / (1.0 - kato.a)).sqrt());
    }

    #[test]
    fn k_monotone_in_window() {
        let op = well(64);
        let mut last = 0.0;
        for upper in [0.0, 0.5, 1.0, 2.0] {
            let g = SpectralCutoff::new(-2.5, upper, 0.1).unwrap();
            let k = exact_k(&g, &op).unwrap();
            assert!(k >= last - 1e-12);
            last = k;
        }
    }

    #[test]
    fn k_extrapolates_to_sharp_window() {
        let grid = GridSpec::line(320.0, 4096).unwrap();
        let op = HamiltonianOp::free(grid).unwrap();
        let ex = extrapolate_k(0.0, 0.5, &[0.1, 0.175, 0.25], 1.0, &op, 10_000, 1).unwrap();
        assert!((ex.extrapolated - 1.0).abs() < 0.01, "{ex:?}");
    }

    fn commutator_setup() -> (GridSpec, DMatrix<f64>) {
        let op = well(32);
        let (dense, g) = eigen_cutoff(&op);
        (op.grid, dense.function(|l| g.eval(l)))
    }

    #[test]
    fn constant_f_commutes() {
        let (grid, gm) = commutator_setup();
        let ce =
            commutator_expansion(&gm, &grid, &crate::smooth::Constant(0.3), 0.0, 4.0, 3).unwrap();
        assert_eq!(ce.commutator_norm, 0.0);
        assert!(ce.remainder_norm == 0.0);
    }

    #[test]
    fn b1_is_antisymmetric_and_matches_quadrature() {
        let (grid, gm) = commutator_setup();
        let ce = commutator_expansion(&gm, &grid, &crate::smooth::Tanh { scale: 1.0 }, 0.0, 4.0, 2)
            .unwrap();
        let b1 = &ce.coefficients[0];
        assert!((b1 + b1.transpose()).amax() < 1e-12);
        let op = well(32);
        let (dense, g) = eigen_cutoff(&op);
        let q = b1_by_quadrature(
            &g,
            &dense,
            &HsQuadrature {
                cells_re: 256,
                cells_im: 128,
                ..Default::default()
            },
        )
        .unwrap();
        // ad_<x> g(H) = -(1/π)∫ ∂̄g̃ R [<x>, H] R, and B_1 = [<x>, g(H)]
        assert!((&q - b1).amax() < 1e-4, "{}", (&q - b1).amax());
    }

    #[test]
    fn remainder_slopes() {
        let (grid, gm) = commutator_setup();
        let scales = crate::fit::geomspace(4.0, 64.0, 6);
        for n in 1..=3usize {
            let norms: Vec<f64> = scales
                .iter()
                .map(|&s| {
                    commutator_expansion(&gm, &grid, &crate::smooth::Tanh { scale: 4.0 }, 0.0, s, n)
                        .unwrap()
                        .remainder_norm
                })
                .collect();
            let fit =
                crate::fit::fit_decay(&scales, &norms, (4.0, 64.0), -(n as f64), 0.3).unwrap();
            assert!(
                fit.exponent <= -(n as f64) + 0.3,
                "n={n} slope={}",
                fit.exponent
            );
        }
    }

    #[test]
    fn gw_commutator() {
        let (grid, gm) = commutator_setup();
        let rs = crate::fit::geomspace(4.0, 64.0, 6);
        let w = crate::hamiltonian::TimeDepPotentialSpec::gaussian(
            1.0,
            1.0,
            2.0,
            crate::hamiltonian::TimeDepForm::Factorized,
        );
        let rep = g_w_commutator_norm(&gm, &grid, &w, &rs).unwrap();
        let slope = rep.fit.as_ref().unwrap().slope;
        // against r, not <r>: tiny curvature at r = 4
        assert!((slope + 2.0).abs() < 0.05, "slope={slope}");
        assert!(rep
            .norms
            .iter()
            .zip(&rep.obvious_bound)
            .all(|(n, b)| n <= b));
        let flat = crate::hamiltonian::TimeDepPotentialSpec {
            profile: PotentialSpec::Constant { value: 1.0 },
            ..w
        };
        let rep = g_w_commutator_norm(&gm, &grid, &flat, &rs).unwrap();
        assert!(rep.norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn packet_filter_fourier_vs_dense() {
        let grid = GridSpec::line(16.0, 64).unwrap();
        let op = HamiltonianOp::free(grid).unwrap();
        let g = SpectralCutoff::new(0.0, 0.5, 0.1).unwrap();
        let psi = gaussian_packet(&grid, [0.0, 0.0], [0.6, 0.0], 1.5).unwrap();
        let a = EnergyFilter::new(&op, |l| g.eval(l))
            .unwrap()
            .apply(&psi)
            .unwrap();
        let b = EnergyFilter::from_dense(&op.dense(None).unwrap(), |l| g.eval(l))
            .apply(&psi)
            .unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12);
    }
}
