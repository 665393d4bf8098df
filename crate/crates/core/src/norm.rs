//! Operator-norm estimation for matrix-free maps on grid fields.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A linear map between field spaces given by its action and adjoint action.
pub trait LinearMap: Sync {
    fn domain_len(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>>;
    fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            max_iter: 200,
            rel_tol: 1e-6,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn random_vector(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// `‖M‖` by power iteration on `M*M`, stopping when successive estimates agree
/// to `rel_tol` or after `max_iter` iterations (then `converged = false`).
///
/// Norms are in the plain vector 2-norm; masks and unitary steps are
/// insensitive to the grid cell factor, so this equals the L² operator norm.
pub fn power_norm<M: LinearMap + ?Sized>(map: &M, opts: &PowerOptions) -> Result<NormEstimate> {
    let mut x = random_vector(map.domain_len(), opts.seed);
    let n0 = l2(&x);
    x.iter_mut().for_each(|z| *z /= n0);
    let mut prev = 0.0;
    for it in 1..=opts.max_iter {
        let y = map.apply(&x)?;
        let est = l2(&y);
        if est == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let mut z = map.adjoint(&y)?;
        let nz = l2(&z);
        if nz == 0.0 {
            return Ok(NormEstimate {
                value: est,
                iterations: it,
                converged: true,
            });
        }
        z.iter_mut().for_each(|c| *c /= nz);
        x = z;
        if it > 1 && (est - prev).abs() <= opts.rel_tol * est {
            return Ok(NormEstimate {
                value: est,
                iterations: it,
                converged: true,
            });
        }
        prev = est;
    }
    let y = map.apply(&x)?;
    Ok(NormEstimate {
        value: l2(&y),
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Exact norm of `M` restricted to the coordinate subspace spanned by `columns`,
/// via the singular values of the assembled `rows × columns` matrix.
pub fn restricted_norm<M: LinearMap + ?Sized>(map: &M, columns: &[usize]) -> Result<f64> {
    use rayon::prelude::*;
    let len = map.domain_len();
    let cols: Vec<Vec<Complex64>> = columns
        .par_iter()
        .map(|&c| {
            let mut e = vec![Complex64::new(0.0, 0.0); len];
            e[c] = Complex64::new(1.0, 0.0);
            map.apply(&e)
        })
        .collect::<Result<_>>()?;
    if cols.is_empty() {
        return Ok(0.0);
    }
    let rows = cols[0].len();
    let m = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    Ok(largest_singular(&m))
}

pub fn largest_singular(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // the Gram matrix of the smaller side keeps the SVD cheap for tall matrices
    let gram = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let ev = nalgebra::SymmetricEigen::new(gram).eigenvalues;
    ev.iter().fold(0.0f64, |a, &b| a.max(b)).max(0.0).sqrt()
}

pub fn largest_singular_real(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

/// Sampled-supremum mode: `max ‖Mφ‖/‖φ‖` over `count` random `φ` (a lower bound).
pub fn sampled_sup<M: LinearMap + ?Sized>(map: &M, count: usize, seed: u64) -> Result<f64> {
    let mut best = 0.0f64;
    for i in 0..count {
        let x = random_vector(map.domain_len(), seed.wrapping_add(i as u64));
        let y = map.apply(&x)?;
        best = best.max(l2(&y) / l2(&x));
    }
    Ok(best)
}
