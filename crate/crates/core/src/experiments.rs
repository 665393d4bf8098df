//! End-to-end checks of the propagation bounds: leakage curves, operator-norm
//! curves and their decay fits.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit};
use crate::funcalc::EnergyFilter;
use crate::grid::{japanese_bracket, probability_outside, GridSpec, WaveFunction};
use crate::norm::{
    largest_singular, power_norm, restricted_norm, sampled_sup, LinearMap, PowerOptions,
};
use crate::propagator::Propagator;

/// The energy cutoff placed in front of the evolution.
#[derive(Clone, Copy)]
pub enum Cutoff<'a> {
    /// `g(H)`.
    Static(&'a EnergyFilter),
    /// `g_T(H) = U_T^{-1} g(H) U_T` at a fixed horizon, the finite-`T` stand-in for `g₊(H)`.
    Asymptotic {
        filter: &'a EnergyFilter,
        horizon: f64,
    },
}

impl Cutoff<'_> {
    /// Both variants are self-adjoint, so this is also the adjoint action.
    pub fn apply(&self, prop: &Propagator, v: &[Complex64]) -> Result<Vec<Complex64>> {
        match *self {
            Cutoff::Static(f) => Ok(f.apply_values(v)),
            Cutoff::Asymptotic { filter, horizon } => {
                let mut w = v.to_vec();
                prop.propagate_in_place(&mut w, 0.0, horizon)?;
                let mut g = filter.apply_values(&w);
                prop.propagate_in_place(&mut g, horizon, 0.0)?;
                Ok(g)
            }
        }
    }
}

/// `outer ∘ U(t,0) ∘ cutoff ∘ weight`, or with `weight` and `cutoff` swapped.
pub struct ConeMap<'a> {
    pub prop: &'a Propagator,
    pub cutoff: Cutoff<'a>,
    /// Trailing real weight (an indicator or `<x>^{-α}`).
    pub weight: Vec<f64>,
    /// Leading indicator.
    pub outer: Vec<bool>,
    /// Evolution end time; negative values give `e^{+iH|t|}` for static `H`.
    pub t: f64,
    /// Apply the weight after the cutoff (`cutoff` acts first).
    pub weight_after_cutoff: bool,
}

impl ConeMap<'_> {
    fn weigh(&self, v: &mut [Complex64]) {
        for (z, w) in v.iter_mut().zip(&self.weight) {
            *z *= w;
        }
    }
}

impl LinearMap for ConeMap<'_> {
    fn domain_len(&self) -> usize {
        self.weight.len()
    }

    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut v = x.to_vec();
        if self.weight_after_cutoff {
            v = self.cutoff.apply(self.prop, &v)?;
            self.weigh(&mut v);
        } else {
            self.weigh(&mut v);
            v = self.cutoff.apply(self.prop, &v)?;
        }
        self.prop.propagate_in_place(&mut v, 0.0, self.t)?;
        for (z, &m) in v.iter_mut().zip(&self.outer) {
            if !m {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        Ok(v)
    }

    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut v: Vec<Complex64> = y
            .iter()
            .zip(&self.outer)
            .map(|(&z, &m)| if m { z } else { Complex64::new(0.0, 0.0) })
            .collect();
        self.prop.propagate_in_place(&mut v, self.t, 0.0)?;
        if self.weight_after_cutoff {
            self.weigh(&mut v);
            v = self.cutoff.apply(self.prop, &v)?;
        } else {
            v = self.cutoff.apply(self.prop, &v)?;
            self.weigh(&mut v);
        }
        Ok(v)
    }
}

pub fn outer_mask(grid: &GridSpec, rho: f64) -> Vec<bool> {
    japanese_bracket(grid)
        .values
        .iter()
        .map(|&b| b >= rho)
        .collect()
}

pub fn inner_weight(grid: &GridSpec, b: f64) -> Vec<f64> {
    japanese_bracket(grid)
        .values
        .iter()
        .map(|&x| if x <= b { 1.0 } else { 0.0 })
        .collect()
}

/// How operator norms are estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NormMode {
    /// Power iteration on `M*M`.
    Power { max_iter: usize, rel_tol: f64 },
    /// Exact singular value of `M` restricted to the support of the trailing
    /// weight (all columns when the weight has full support).
    ExactColumns,
    /// `max ‖Mφ‖` over random `φ` (a lower bound, cheap for sweeps).
    Sampled { count: usize },
}

impl Default for NormMode {
    fn default() -> Self {
        NormMode::Power {
            max_iter: 200,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct LeakageCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Set where the estimate did not converge or a monitor fired.
    pub flagged: Vec<bool>,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub window: (f64, f64),
}

impl LeakageCurve {
    pub fn fit(&self, window: (f64, f64), target: f64, tol: f64) -> Result<DecayFit> {
        fit_decay(&self.times, &self.values, window, target, tol)
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap_or(&f64::NAN)
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }

    /// Slopes over successive windows, to see whether decay steepens at later
    /// times. Windows with too few points are skipped.
    pub fn slope_profile(&self, windows: &[(f64, f64)]) -> Vec<((f64, f64), f64)> {
        windows
            .iter()
            .filter_map(|&w| self.fit(w, 0.0, 0.0).ok().map(|f| (w, f.exponent)))
            .collect()
    }
}

/// True when each slope is at most the previous one plus `slack`.
pub fn steepening(profile: &[((f64, f64), f64)], slack: f64) -> bool {
    profile.windows(2).all(|p| p[1].1 <= p[0].1 + slack)
}

/// Common inputs of the cone experiments.
pub struct ConeSetup<'a> {
    pub prop: &'a Propagator,
    pub filter: &'a EnergyFilter,
    pub k: f64,
    pub window: (f64, f64),
    pub seed: u64,
}

impl ConeSetup<'_> {
    fn curve(&self, c: f64, a: f64, b: f64) -> LeakageCurve {
        LeakageCurve {
            c,
            a,
            b,
            k: self.k,
            window: self.window,
            ..Default::default()
        }
    }

    fn norm(&self, map: &ConeMap, mode: NormMode) -> Result<(f64, bool)> {
        match mode {
            NormMode::Power { max_iter, rel_tol } => {
                let e = power_norm(
                    map,
                    &PowerOptions {
                        max_iter,
                        rel_tol,
                        seed: self.seed,
                    },
                )?;
                Ok((e.value, !e.converged))
            }
            NormMode::ExactColumns => {
                let cols: Vec<usize> = map
                    .weight
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(i, _)| i)
                    .collect();
                Ok((restricted_norm(map, &cols)?, false))
            }
            NormMode::Sampled { count } => Ok((sampled_sup(map, count, self.seed)?, false)),
        }
    }
}

/// `ψ₀ = normalize(g(H) χ_b^- φ)`.
pub fn prepared_state(filter: &EnergyFilter, phi: &WaveFunction, b: f64) -> Result<WaveFunction> {
    let w = phi.weighted(&inner_weight(&phi.grid, b));
    let mut g = filter.apply(&w)?;
    if g.normalize() == 0.0 {
        return Err(Error::Invalid("g(H) χ_b φ vanishes".into()));
    }
    Ok(g)
}

/// `sqrt(P(<x> >= ct + a))` along `ψ_t = e^{-iHt} ψ₀`.
///
/// A boundary-monitor hit ends the curve at that time.
pub fn state_leakage_curve(
    setup: &ConeSetup,
    psi0: &WaveFunction,
    c: f64,
    a: f64,
    b: f64,
    times: &[f64],
) -> Result<LeakageCurve> {
    let mut curve = setup.curve(c, a, b);
    let prop = setup.prop;
    let width = crate::propagator::seam_width(&psi0.grid);
    let mut psi = psi0.clone();
    let mut t = 0.0;
    for &tt in times {
        psi = prop.propagate(&psi, t, tt)?;
        t = tt;
        if psi.boundary_mass(width) > prop.config.boundary_threshold {
            curve.flagged.push(true);
            curve.times.push(tt);
            curve
                .values
                .push(probability_outside(&psi, c * tt + a).sqrt());
            break;
        }
        curve.times.push(tt);
        curve
            .values
            .push(probability_outside(&psi, c * tt + a).sqrt());
        curve.flagged.push(false);
    }
    Ok(curve)
}

/// `‖χ_{A^+_{ct+a}} U_t G χ_{A^-_b}‖` with `G = g(H)` or `g₊(H)`.
pub fn operator_norm_curve(
    setup: &ConeSetup,
    cutoff: Cutoff,
    c: f64,
    a: f64,
    b: f64,
    times: &[f64],
    mode: NormMode,
) -> Result<LeakageCurve> {
    let grid = setup.prop.grid();
    let weight = inner_weight(&grid, b);
    let mut curve = setup.curve(c, a, b);
    if mode == NormMode::ExactColumns {
        return exact_column_curve(setup, cutoff, &weight, times, |t| c * t + a, curve);
    }
    let results: Vec<(f64, bool)> = times
        .par_iter()
        .map(|&t| {
            let map = ConeMap {
                prop: setup.prop,
                cutoff,
                weight: weight.clone(),
                outer: outer_mask(&grid, c * t + a),
                t,
                weight_after_cutoff: false,
            };
            setup.norm(&map, mode)
        })
        .collect::<Result<_>>()?;
    for (&t, (v, f)) in times.iter().zip(results) {
        curve.times.push(t);
        curve.values.push(v);
        curve.flagged.push(f);
    }
    Ok(curve)
}

/// Exact norms for all times at once: the columns `G w e_j` are evolved
/// forward through the sorted times and masked at each.
fn exact_column_curve<R: Fn(f64) -> f64>(
    setup: &ConeSetup,
    cutoff: Cutoff,
    weight: &[f64],
    times: &[f64],
    radius: R,
    mut curve: LeakageCurve,
) -> Result<LeakageCurve> {
    let grid = setup.prop.grid();
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let per_col = evolved_columns(setup.prop, cutoff, weight, &sorted)?;
    for (ti, &t) in sorted.iter().enumerate() {
        curve.times.push(t);
        curve
            .values
            .push(masked_norm(&per_col, ti, &outer_mask(&grid, radius(t))));
        curve.flagged.push(false);
    }
    Ok(curve)
}

/// `U(t_i, 0) G w e_j` for every `j` in the support of `w` and every `t_i`
/// (monotone in one direction from 0), indexed `[column][time]`.
fn evolved_columns(
    prop: &Propagator,
    cutoff: Cutoff,
    weight: &[f64],
    times: &[f64],
) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let cols: Vec<usize> = weight
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, _)| i)
        .collect();
    let len = weight.len();
    cols.par_iter()
        .map(|&j| -> Result<Vec<Vec<Complex64>>> {
            let mut e = vec![Complex64::new(0.0, 0.0); len];
            e[j] = Complex64::new(weight[j], 0.0);
            let mut v = cutoff.apply(prop, &e)?;
            let mut t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for &tt in times {
                prop.propagate_in_place(&mut v, t, tt)?;
                t = tt;
                out.push(v.clone());
            }
            Ok(out)
        })
        .collect()
}

fn masked_norm(per_col: &[Vec<Vec<Complex64>>], ti: usize, mask: &[bool]) -> f64 {
    let rows: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect();
    let m = nalgebra::DMatrix::from_fn(rows.len(), per_col.len(), |r, c| per_col[c][ti][rows[r]]);
    largest_singular(&m)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub c: f64,
    pub terminal_state_leakage: f64,
    pub state_curve: LeakageCurve,
    pub norm_curve: LeakageCurve,
    pub norm_fit: Option<DecayFit>,
}

/// Per cone speed: the state-leakage terminal value and the operator-norm slope.
#[allow(clippy::too_many_arguments)]
pub fn dichotomy_scan(
    setup: &ConeSetup,
    phi: &WaveFunction,
    c_values: &[f64],
    a: f64,
    b: f64,
    times: &[f64],
    fit_window: (f64, f64),
    mode: NormMode,
) -> Result<Vec<DichotomyRow>> {
    let psi0 = prepared_state(setup.filter, phi, b)?;
    c_values
        .iter()
        .map(|&c| {
            let state_curve = state_leakage_curve(setup, &psi0, c, a, b, times)?;
            let norm_curve =
                operator_norm_curve(setup, Cutoff::Static(setup.filter), c, a, b, times, mode)?;
            let norm_fit = norm_curve.fit(fit_window, 0.0, 0.0).ok();
            Ok(DichotomyRow {
                c,
                terminal_state_leakage: state_curve.terminal(),
                state_curve,
                norm_curve,
                norm_fit,
            })
        })
        .collect()
}

/// Which product the information bound is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InfoOrdering {
    /// `α_t(g(H) χ_b^-)`: the product controlled by the time-reversed cone estimate.
    #[default]
    CutoffAfterMask,
    /// `α_t(χ_b^- g(H))`: the sharp mask acts last and reintroduces unbounded momenta.
    MaskAfterCutoff,
}

/// `‖χ_{A^+_ρ} α_t(B)‖` over `ρ`, with `B` per [`InfoOrdering`].
///
/// The right factor `e^{-iHt}` of `α_t` is unitary and dropped.
#[allow(clippy::too_many_arguments)]
pub fn info_bound_experiment(
    setup: &ConeSetup,
    a: f64,
    b: f64,
    c: f64,
    t: f64,
    rhos: &[f64],
    ordering: InfoOrdering,
    mode: NormMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    for &r in rhos {
        if r <= a + c * t {
            return Err(Error::Invalid(format!(
                "rho={r} must exceed a + ct = {}",
                a + c * t
            )));
        }
    }
    let grid = setup.prop.grid();
    let weight = inner_weight(&grid, b);
    let weight_after_cutoff = ordering == InfoOrdering::MaskAfterCutoff;
    let mode = if weight_after_cutoff && mode == NormMode::ExactColumns {
        // columns are not localized in this ordering
        NormMode::default()
    } else {
        mode
    };
    if mode == NormMode::ExactColumns {
        let cols = evolved_columns(setup.prop, Cutoff::Static(setup.filter), &weight, &[-t])?;
        let values = rhos
            .iter()
            .map(|&rho| masked_norm(&cols, 0, &outer_mask(&grid, rho)))
            .collect();
        return Ok((rhos.to_vec(), values));
    }
    let values: Vec<f64> = rhos
        .par_iter()
        .map(|&rho| {
            let map = ConeMap {
                prop: setup.prop,
                cutoff: Cutoff::Static(setup.filter),
                weight: weight.clone(),
                outer: outer_mask(&grid, rho),
                t: -t,
                weight_after_cutoff,
            };
            setup.norm(&map, mode).map(|(v, _)| v)
        })
        .collect::<Result<_>>()?;
    Ok((rhos.to_vec(), values))
}

/// `‖χ_{A^+_{(c+ε)t}} e^{-iHt} g(H) <x>^{-α}‖` over `t`.
pub fn weighted_estimate_experiment(
    setup: &ConeSetup,
    alpha: f64,
    eps: f64,
    c: f64,
    times: &[f64],
    mode: NormMode,
) -> Result<LeakageCurve> {
    let grid = setup.prop.grid();
    let weight: Vec<f64> = japanese_bracket(&grid)
        .values
        .iter()
        .map(|b| b.powf(-alpha))
        .collect();
    let mut curve = setup.curve(c + eps, 0.0, f64::INFINITY);
    if mode == NormMode::ExactColumns {
        return exact_column_curve(
            setup,
            Cutoff::Static(setup.filter),
            &weight,
            times,
            |t| (c + eps) * t,
            curve,
        );
    }
    let results: Vec<(f64, bool)> = times
        .par_iter()
        .map(|&t| {
            let map = ConeMap {
                prop: setup.prop,
                cutoff: Cutoff::Static(setup.filter),
                weight: weight.clone(),
                outer: outer_mask(&grid, (c + eps) * t),
                t,
                weight_after_cutoff: false,
            };
            setup.norm(&map, mode)
        })
        .collect::<Result<_>>()?;
    for (&t, (v, f)) in times.iter().zip(results) {
        curve.times.push(t);
        curve.values.push(v);
        curve.flagged.push(f);
    }
    Ok(curve)
}

/// `‖χ_{A^+_{ct+a}} U_t g₊(H) χ_{A^-_b}‖` with `g₊` at a fixed horizon.
#[allow(clippy::too_many_arguments)]
pub fn td_theorem_experiment(
    setup: &ConeSetup,
    horizon: f64,
    c: f64,
    a: f64,
    b: f64,
    times: &[f64],
    mode: NormMode,
) -> Result<LeakageCurve> {
    operator_norm_curve(
        setup,
        Cutoff::Asymptotic {
            filter: setup.filter,
            horizon,
        },
        c,
        a,
        b,
        times,
        mode,
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeReversal {
    pub forward: LeakageCurve,
    /// Leakage along `e^{+iHt} ψ₀`.
    pub backward: LeakageCurve,
    /// Forward leakage of `conj(ψ₀)`.
    pub conjugated: LeakageCurve,
    /// `max |backward - conjugated|`.
    pub deviation: f64,
}

pub fn time_reversal_experiment(
    setup: &ConeSetup,
    psi0: &WaveFunction,
    c: f64,
    a: f64,
    times: &[f64],
) -> Result<TimeReversal> {
    if setup.prop.op.time_dep.is_some() {
        return Err(Error::Invalid(
            "time reversal needs a time-independent H".into(),
        ));
    }
    let forward = state_leakage_curve(setup, psi0, c, a, 0.0, times)?;
    let neg: Vec<f64> = times.iter().map(|t| -t).collect();
    let mut backward = setup.curve(c, a, 0.0);
    let mut psi = psi0.clone();
    let mut t = 0.0;
    for (&tt, &orig) in neg.iter().zip(times) {
        psi = setup.prop.propagate(&psi, t, tt)?;
        t = tt;
        backward.times.push(orig);
        backward
            .values
            .push(probability_outside(&psi, c * orig + a).sqrt());
        backward.flagged.push(false);
    }
    let conjugated = state_leakage_curve(setup, &psi0.conj(), c, a, 0.0, times)?;
    let deviation = backward
        .values
        .iter()
        .zip(&conjugated.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(TimeReversal {
        forward,
        backward,
        conjugated,
        deviation,
    })
}
