//! FFT plumbing for 1D and 2D periodic grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Planned transforms for one grid plus its wavenumber tables.
#[derive(Clone)]
pub struct Fourier {
    pub grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fourier {
            grid: *grid,
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
            k: grid.wavenumbers(),
        }
    }

    /// Wavenumber vector of mode `idx` (second component zero in 1D).
    pub fn mode(&self, idx: usize) -> [f64; 2] {
        let n = self.grid.points;
        if self.grid.dim == 1 {
            [self.k[idx], 0.0]
        } else {
            [self.k[idx / n], self.k[idx % n]]
        }
    }

    /// A real function of the wavevector sampled on every mode.
    pub fn symbol<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.grid.len()).map(|i| f(self.mode(i))).collect()
    }

    /// `|k|^2 / 2` on every mode.
    pub fn kinetic(&self) -> Vec<f64> {
        self.symbol(|k| 0.5 * (k[0] * k[0] + k[1] * k[1]))
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N^dim` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points;
        if self.grid.dim == 1 {
            plan.process(data);
            return;
        }
        // rows are contiguous
        plan.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Apply a complex Fourier multiplier in place.
    pub fn multiply(&self, data: &mut [Complex64], symbol: &[Complex64]) {
        self.forward(data);
        for (z, s) in data.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(data);
    }

    /// Apply a real Fourier multiplier in place.
    pub fn multiply_real(&self, data: &mut [Complex64], symbol: &[f64]) {
        self.forward(data);
        for (z, s) in data.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(data);
    }

    /// `p_axis u = -i d/dx_axis u` spectrally. The Nyquist mode is dropped so the
    /// result of a real field stays real.
    pub fn momentum(&self, data: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.grid.points;
        let mut out = data.to_vec();
        self.forward(&mut out);
        for (idx, z) in out.iter_mut().enumerate() {
            let m = match (self.grid.dim, axis) {
                (1, _) => idx,
                (_, 0) => idx / n,
                _ => idx % n,
            };
            let k = if m == n / 2 { 0.0 } else { self.k[m] };
            *z *= k;
        }
        self.inverse(&mut out);
        out
    }
}
