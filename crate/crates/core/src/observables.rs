//! Propagation observables `Φ = f(x_ts)`, their Heisenberg derivatives and the
//! basic-equality ledger, plus the asymptotic cutoff `g₊(H)` for
//! time-dependent dynamics.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::funcalc::EnergyFilter;
use crate::grid::{japanese_bracket, GridSpec, SpatialWeight, WaveFunction};
use crate::propagator::Propagator;
use crate::smooth::{FFunction, Smooth};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFrame {
    /// Observable drift speed.
    pub v: f64,
    /// Cone speed.
    pub c: f64,
    /// Cone offset.
    pub a: f64,
    /// Initial localization radius.
    pub b: f64,
    /// Adiabatic scale.
    pub s: f64,
    /// Speed constant of the run.
    pub k_ref: f64,
}

impl ConeFrame {
    /// Violated invariants `0 < b < a`, `c > v > k_ref`, `s >= 1`, as messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = vec![];
        if !(self.b > 0.0 && self.b < self.a) {
            out.push(format!("b<a required (b={}, a={})", self.b, self.a));
        }
        if !(self.c > self.v) {
            out.push(format!("c>v required (c={}, v={})", self.c, self.v));
        }
        if !(self.v > self.k_ref) {
            out.push(format!("v>k required (v={}, k={})", self.v, self.k_ref));
        }
        if !(self.s >= 1.0) {
            out.push(format!("s>=1 required (s={})", self.s));
        }
        out
    }

    /// `c - v`, the width of the transition of `f`.
    pub fn span(&self) -> f64 {
        self.c - self.v
    }

    /// `x_ts` at one value of `<x>`.
    pub fn coordinate(&self, bracket: f64, t: f64) -> f64 {
        (bracket - self.a - self.v * t) / self.s
    }
}

/// `x_ts = s^{-1}(<x> - a - v t)` at every node.
pub fn frame_field(grid: &GridSpec, frame: &ConeFrame, t: f64) -> SpatialWeight {
    japanese_bracket(grid).map(|b| frame.coordinate(b, t))
}

/// `<ψ, f(x_ts) ψ>`.
pub fn phi_expectation(psi: &WaveFunction, f: &dyn Smooth, frame: &ConeFrame, t: f64) -> f64 {
    let x = frame_field(&psi.grid, frame, t);
    psi.values
        .iter()
        .zip(&x.values)
        .map(|(z, &y)| f.value(y) * z.norm_sqr())
        .sum::<f64>()
        * psi.grid.cell()
}

/// `γ ψ = ½ (p·∇<x> + ∇<x>·p) ψ` with `∇<x> = x/<x>`.
pub fn gamma_apply(psi: &WaveFunction) -> WaveFunction {
    let grid = psi.grid;
    let fourier = crate::fourier::Fourier::new(&grid);
    gamma_apply_with(psi, &fourier)
}

pub fn gamma_apply_with(psi: &WaveFunction, fourier: &crate::fourier::Fourier) -> WaveFunction {
    let grid = psi.grid;
    let br = japanese_bracket(&grid).values;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for axis in 0..grid.dim {
        let w: Vec<f64> = (0..grid.len())
            .map(|i| grid.position(i)[axis] / br[i])
            .collect();
        let wpsi: Vec<Complex64> = psi.values.iter().zip(&w).map(|(z, c)| z * c).collect();
        let p_w = fourier.momentum(&wpsi, axis);
        let p_psi = fourier.momentum(&psi.values, axis);
        for i in 0..out.len() {
            out[i] += 0.5 * (p_w[i] + w[i] * p_psi[i]);
        }
    }
    WaveFunction { grid, values: out }
}

/// `<ψ, s^{-1} u(x_ts) (γ - v) u(x_ts) ψ>`.
pub fn heisenberg_derivative(psi: &WaveFunction, f: &FFunction, frame: &ConeFrame, t: f64) -> f64 {
    let fourier = crate::fourier::Fourier::new(&psi.grid);
    heisenberg_derivative_with(psi, f, frame, t, &fourier)
}

pub fn heisenberg_derivative_with(
    psi: &WaveFunction,
    f: &FFunction,
    frame: &ConeFrame,
    t: f64,
    fourier: &crate::fourier::Fourier,
) -> f64 {
    let x = frame_field(&psi.grid, frame, t);
    let u: Vec<f64> = x.values.iter().map(|&y| f.u(y)).collect();
    let phi = psi.weighted(&u);
    let g = gamma_apply_with(&phi, fourier);
    let cell = psi.grid.cell();
    let mut acc = 0.0;
    for (a, (b, c)) in phi.values.iter().zip(g.values.iter().zip(&phi.values)) {
        acc += (a.conj() * (b - frame.v * c)).re;
    }
    acc * cell / frame.s
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BasicEqualityLedger {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub residual: Vec<f64>,
}

impl BasicEqualityLedger {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// CSV with columns `t, phi, dphi_integrand, cum_integral, residual`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.times.len())
            .map(|i| {
                vec![
                    self.times[i],
                    self.phi[i],
                    self.dphi[i],
                    self.cumulative[i],
                    self.residual[i],
                ]
            })
            .collect();
        crate::io::write_rows(
            w,
            &["t", "phi", "dphi_integrand", "cum_integral", "residual"],
            &rows,
        )
    }
}

/// `<Φ_t>_t - ∫_0^t <DΦ_r>_r dr - <Φ_0>_0` along a run, trapezoid in time at
/// the propagator's record stride.
pub fn basic_equality_run(
    psi0: &WaveFunction,
    prop: &Propagator,
    f: &FFunction,
    frame: &ConeFrame,
    t_final: f64,
) -> Result<BasicEqualityLedger> {
    let fourier = prop.op.fourier.clone();
    let rec = prop.evolve(psi0, t_final, false, |t, psi| {
        vec![
            phi_expectation(psi, f, frame, t),
            heisenberg_derivative_with(psi, f, frame, t, &fourier),
        ]
    })?;
    let mut ledger = BasicEqualityLedger::default();
    let mut cum = 0.0;
    for (i, (&t, vals)) in rec.times.iter().zip(&rec.functionals).enumerate() {
        if i > 0 {
            let dt = t - rec.times[i - 1];
            cum += 0.5 * dt * (vals[1] + rec.functionals[i - 1][1]);
        }
        ledger.times.push(t);
        ledger.phi.push(vals[0]);
        ledger.dphi.push(vals[1]);
        ledger.cumulative.push(cum);
        ledger.residual.push(vals[0] - cum - rec.functionals[0][0]);
    }
    Ok(ledger)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VelocityBoundReport {
    pub scales: Vec<f64>,
    /// `‖p u(x_ts) g(H)ψ‖`.
    pub lhs: Vec<f64>,
    /// `k ‖u(x_ts) g(H)ψ‖`.
    pub k_term: Vec<f64>,
    /// `s^{-1} ‖ũ_1(x_ts) g(H)ψ‖` with `ũ_1² = u² + Σ s^{-j} (u^{(j)})²`.
    pub tilde_term: Vec<f64>,
    /// Smallest power of two `C` with `lhs <= k_term + sqrt(C) tilde_term` at every scale.
    pub constant: f64,
    /// `(rhs - lhs) / rhs` at the recorded constant.
    pub margins: Vec<f64>,
}

/// Evaluates both sides of the velocity bound on `g(H)ψ` across scales `s`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_bound_check(
    psi: &WaveFunction,
    filter: &EnergyFilter,
    k: f64,
    f: &FFunction,
    frame: &ConeFrame,
    t: f64,
    scales: &[f64],
    order: usize,
) -> Result<VelocityBoundReport> {
    let gpsi = filter.apply(psi)?;
    let fourier = crate::fourier::Fourier::new(&psi.grid);
    let mut rep = VelocityBoundReport {
        scales: scales.to_vec(),
        lhs: vec![],
        k_term: vec![],
        tilde_term: vec![],
        constant: 1.0,
        margins: vec![],
    };
    for &s in scales {
        let fr = ConeFrame { s, ..*frame };
        let x = frame_field(&psi.grid, &fr, t);
        let jets: Vec<Vec<f64>> = x
            .values
            .iter()
            .map(|&y| f.u_jet(y, order.max(1)).derivatives())
            .collect();
        let u: Vec<f64> = jets.iter().map(|j| j[0]).collect();
        let ug = gpsi.weighted(&u);
        let mut lhs2 = 0.0;
        for axis in 0..psi.grid.dim {
            let pu = fourier.momentum(&ug.values, axis);
            lhs2 += pu.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi.grid.cell();
        }
        let tilde: Vec<f64> = jets
            .iter()
            .map(|j| {
                let mut v = j[0] * j[0];
                for (kk, d) in j.iter().enumerate().take(order).skip(1) {
                    v += s.powi(-(kk as i32)) * d * d;
                }
                v.sqrt()
            })
            .collect();
        rep.lhs.push(lhs2.sqrt());
        rep.k_term.push(k * ug.norm());
        rep.tilde_term.push(gpsi.weighted(&tilde).norm() / s);
    }
    let mut c = 1.0f64;
    loop {
        let ok = (0..scales.len())
            .all(|i| rep.lhs[i] <= rep.k_term[i] + c.sqrt() * rep.tilde_term[i] + 1e-15);
        if ok || c > 1e12 {
            break;
        }
        c *= 2.0;
    }
    rep.constant = c;
    rep.margins = (0..scales.len())
        .map(|i| {
            let rhs = rep.k_term[i] + c.sqrt() * rep.tilde_term[i];
            if rhs > 0.0 {
                (rhs - rep.lhs[i]) / rhs
            } else {
                0.0
            }
        })
        .collect();
    Ok(rep)
}

/// Result of the doubling-`T` construction of `g₊(H)ψ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticCutoff {
    #[serde(skip)]
    pub psi: Option<WaveFunction>,
    /// Largest `T` used.
    pub horizon: f64,
    /// `(T, ‖g_{2T}ψ - g_Tψ‖)`.
    pub cauchy: Vec<(f64, f64)>,
    /// Geometric tail bound from the last difference and the rate `T^{-μ}`.
    pub tail_estimate: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// `g_T(H)ψ = U_T^{-1} g(H) U_T ψ` for `T = t0, 2t0, ...` until successive
/// values differ by less than `tol` or `T` reaches `t_cap`.
pub fn asymptotic_cutoff_apply(
    filter: &EnergyFilter,
    prop: &Propagator,
    psi: &WaveFunction,
    t0: f64,
    t_cap: f64,
    tol: f64,
) -> Result<AsymptoticCutoff> {
    let mut warnings = vec![];
    let mu = prop.op.time_dep.map(|w| w.mu).unwrap_or(f64::INFINITY);
    if mu <= 1.0 {
        warnings.push(format!(
            "mu={mu} <= 1: the limit exists but the t^-mu tail is not integrable"
        ));
    }
    let gt = |u_t: &WaveFunction, t: f64| -> Result<WaveFunction> {
        prop.propagate(&filter.apply(u_t)?, t, 0.0)
    };
    let mut t = t0;
    let mut u = prop.propagate(psi, 0.0, t)?;
    let mut current = gt(&u, t)?;
    let mut cauchy = vec![];
    let mut converged = false;
    while 2.0 * t <= t_cap * (1.0 + 1e-12) {
        u = prop.propagate(&u, t, 2.0 * t)?;
        let next = gt(&u, 2.0 * t)?;
        let d = next.distance(&current)?;
        cauchy.push((t, d));
        current = next;
        t *= 2.0;
        if d < tol {
            converged = true;
            break;
        }
    }
    let last = cauchy.last().map(|c| c.1).unwrap_or(0.0);
    let r = if mu.is_finite() { 2f64.powf(-mu) } else { 0.0 };
    let tail_estimate = if r < 1.0 {
        last * r / (1.0 - r)
    } else {
        f64::INFINITY
    };
    if !converged {
        warnings.push(format!(
            "not converged at T={t}: last difference {last:.3e}"
        ));
    }
    Ok(AsymptoticCutoff {
        psi: Some(current),
        horizon: t,
        cauchy,
        tail_estimate,
        converged,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PullThrough {
    pub times: Vec<f64>,
    /// `‖U_t g₊ψ - g(H) U_t ψ‖`.
    pub residual: Vec<f64>,
    pub fit: Option<LinearFit>,
    /// `max_t residual(t) t^μ`.
    pub envelope: f64,
}

pub fn pull_through_residual(
    filter: &EnergyFilter,
    prop: &Propagator,
    psi: &WaveFunction,
    g_plus_psi: &WaveFunction,
    t_samples: &[f64],
) -> Result<PullThrough> {
    let mut times = t_samples.to_vec();
    times.sort_by(|a, b| a.total_cmp(b));
    let mu = prop.op.time_dep.map(|w| w.mu).unwrap_or(0.0);
    let mut a = g_plus_psi.clone();
    let mut b = psi.clone();
    let mut t = 0.0;
    let mut residual = vec![];
    for &tt in &times {
        a = prop.propagate(&a, t, tt)?;
        b = prop.propagate(&b, t, tt)?;
        t = tt;
        residual.push(a.distance(&filter.apply(&b)?)?);
    }
    let usable: Vec<(f64, f64)> = times
        .iter()
        .zip(&residual)
        .filter(|(t, r)| **t > 0.0 && **r > 1e-14)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    let fit = if usable.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        Some(linear_fit(&x, &y))
    } else {
        None
    };
    let envelope = times
        .iter()
        .zip(&residual)
        .map(|(t, r)| r * t.powf(mu))
        .fold(0.0, f64::max);
    Ok(PullThrough {
        times,
        residual,
        fit,
        envelope,
    })
}

/// `‖g_{n,+}ψ - ψ‖` for a sequence of nested windows.
pub fn g_plus_density_check(
    filters: &[EnergyFilter],
    prop: &Propagator,
    psi: &WaveFunction,
    t0: f64,
    t_cap: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    filters
        .iter()
        .map(|flt| {
            let gp = asymptotic_cutoff_apply(flt, prop, psi, t0, t_cap, tol)?;
            gp.psi.expect("state kept").distance(psi)
        })
        .collect()
}

/// Check `f ∈ 𝓕` on `samples` points: `f(0)=0`, `f(c-v)=1`, `f' >= 0`, `∫f' = 1`.
pub fn f_family_laws(f: &FFunction, samples: usize) -> Result<()> {
    let w = f.span;
    if f.f(0.0) != 0.0 || (f.f(w) - 1.0).abs() > 1e-15 {
        return Err(Error::Invalid("endpoint values".into()));
    }
    let h = w / samples as f64;
    let mut integral = 0.0;
    for i in 0..=samples {
        let x = i as f64 * h;
        let d = f.f_prime(x);
        if d < 0.0 {
            return Err(Error::Invalid(format!("f' < 0 at {x}")));
        }
        integral += if i == 0 || i == samples { 0.5 } else { 1.0 } * d * h;
    }
    if (integral - 1.0).abs() > 1e-6 {
        return Err(Error::Invalid(format!("∫f' = {integral}")));
    }
    Ok(())
}
