//! Periodic uniform grids, wavefunctions, spatial weights and regions.
//!
//! Fields are stored row-major: in 2D the node `(i, j)` lives at `i * n + j`,
//! with `i` indexing the first axis. Node coordinates are `x_j = -L + j dx`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    /// Half-width `L` of each axis.
    pub extent: f64,
    /// Points `N` per axis.
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        let g = GridSpec {
            dim,
            extent,
            points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn line(extent: f64, points: usize) -> Result<Self> {
        Self::new(1, extent, points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= 8, got {}",
                self.points
            )));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {}",
                self.extent
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn momentum_cutoff(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Total node count `N^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `dx^dim`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.points)
            .map(|j| -self.extent + j as f64 * dx)
            .collect()
    }

    /// Angular wavenumbers along one axis, in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = std::f64::consts::PI / self.extent;
        (0..n)
            .map(|m| {
                if m < n / 2 {
                    m as f64 * dk
                } else {
                    (m - n) as f64 * dk
                }
            })
            .collect()
    }

    /// Position of node `idx` (second component is zero in 1D).
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let dx = self.spacing();
        if self.dim == 1 {
            [-self.extent + idx as f64 * dx, 0.0]
        } else {
            let (i, j) = (idx / self.points, idx % self.points);
            [-self.extent + i as f64 * dx, -self.extent + j as f64 * dx]
        }
    }

    /// `|x|^2` at every node.
    pub fn radius_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let [a, b] = self.position(idx);
                a * a + b * b
            })
            .collect()
    }

    /// Evaluate a function of position at every node.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|idx| f(self.position(idx))).collect()
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn zeros(grid: GridSpec) -> Self {
        WaveFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> Complex64>(grid: GridSpec, f: F) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        WaveFunction { grid, values }
    }

    /// Unit mass at a single node (a grid "delta").
    pub fn node(grid: GridSpec, idx: usize) -> Self {
        let mut w = Self::zeros(grid);
        w.values[idx] = Complex64::new(1.0 / grid.cell().sqrt(), 0.0);
        w
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell())
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n);
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.values {
            *z *= s;
        }
    }

    pub fn conj(&self) -> Self {
        WaveFunction {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn sub(&self, other: &WaveFunction) -> Result<Self> {
        self.check(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(WaveFunction {
            grid: self.grid,
            values,
        })
    }

    pub fn add(&self, other: &WaveFunction) -> Result<Self> {
        self.check(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(WaveFunction {
            grid: self.grid,
            values,
        })
    }

    /// `self - other` in norm.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Pointwise multiplication by a real field.
    pub fn weighted(&self, w: &[f64]) -> Self {
        let values = self.values.iter().zip(w).map(|(z, &c)| z * c).collect();
        WaveFunction {
            grid: self.grid,
            values,
        }
    }

    pub fn check(&self, other: &WaveFunction) -> Result<()> {
        if self.grid == other.grid && self.values.len() == other.values.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Mass within `width` nodes of the periodic seam (a wrap-around monitor).
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let n = self.grid.points;
        let near = |i: usize| i < width || i >= n - width;
        let cell = self.grid.cell();
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                if self.grid.dim == 1 {
                    near(*idx)
                } else {
                    near(idx / n) || near(idx % n)
                }
            })
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * cell
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialWeight {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SpatialWeight {
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        SpatialWeight {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(psi.weighted(&self.values))
    }
}

/// `<x> = sqrt(1 + |x|^2)` at every node.
pub fn japanese_bracket(grid: &GridSpec) -> SpatialWeight {
    let values = grid
        .radius_sq()
        .into_iter()
        .map(|r2| (1.0 + r2).sqrt())
        .collect();
    SpatialWeight {
        grid: *grid,
        values,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    /// `<x> >= rho`
    Outer,
    /// `<x> <= rho`
    Inner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub radius: f64,
    pub mask: Vec<bool>,
}

impl Region {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Nodes satisfying the closed condition `±<x> >= ±rho`.
///
/// Both kinds include the level set `<x> = rho`, so the two masks cover the
/// grid and overlap only there.
pub fn region_indicator(grid: &GridSpec, kind: RegionKind, rho: f64) -> Region {
    let br = japanese_bracket(grid);
    let mask = br
        .values
        .iter()
        .map(|&b| match kind {
            RegionKind::Outer => b >= rho,
            RegionKind::Inner => b <= rho,
        })
        .collect();
    Region {
        kind,
        radius: rho,
        mask,
    }
}

pub fn mask_apply(psi: &WaveFunction, region: &Region) -> Result<WaveFunction> {
    if region.mask.len() != psi.values.len() {
        return Err(Error::GridMismatch);
    }
    let values = psi
        .values
        .iter()
        .zip(&region.mask)
        .map(|(&z, &m)| if m { z } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(WaveFunction {
        grid: psi.grid,
        values,
    })
}

/// Mass of `psi` in the outer region `<x> >= rho`.
pub fn probability_outside(psi: &WaveFunction, rho: f64) -> f64 {
    let br = japanese_bracket(&psi.grid);
    let cell = psi.grid.cell();
    psi.values
        .iter()
        .zip(&br.values)
        .filter(|(_, &b)| b >= rho)
        .map(|(z, _)| z.norm_sqr())
        .sum::<f64>()
        * cell
}

/// Normalized Gaussian `exp(-|x-x0|^2/(4 sigma^2) + i p0.x)`.
///
/// Rejects packets whose continuum mass beyond the grid edge exceeds 1e-12.
pub fn gaussian_packet(
    grid: &GridSpec,
    center: [f64; 2],
    momentum: [f64; 2],
    sigma: f64,
) -> Result<WaveFunction> {
    if !(sigma > 0.0) {
        return Err(Error::Invalid(format!(
            "packet width must be positive, got {sigma}"
        )));
    }
    // |psi|^2 has standard deviation sigma per axis; tail mass per side is erfc(d/(sqrt2 sigma))/2.
    let mut outside = 0.0;
    for c in center.iter().take(grid.dim) {
        for d in [grid.extent - c, grid.extent + c] {
            outside += 0.5 * erfc(d / (std::f64::consts::SQRT_2 * sigma));
        }
    }
    if outside > 1e-12 {
        return Err(Error::PacketTooWide(outside));
    }
    let psi = WaveFunction::from_fn(*grid, |x| {
        let mut e = 0.0;
        let mut ph = 0.0;
        for a in 0..grid.dim {
            let d = x[a] - center[a];
            e -= d * d / (4.0 * sigma * sigma);
            ph += momentum[a] * x[a];
        }
        Complex64::from_polar(e.exp(), ph)
    });
    Ok(psi.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GridSpec {
        GridSpec::line(20.0, 256).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::line(10.0, 12).is_err());
        assert!(GridSpec::line(10.0, 4).is_err());
        assert!(GridSpec::new(3, 10.0, 16).is_err());
        assert!(GridSpec::line(-1.0, 16).is_err());
    }

    #[test]
    fn bracket_values() {
        let g = GridSpec::line(4.0, 8).unwrap();
        let br = japanese_bracket(&g);
        // node 4 is x = 0, node 5 is x = 1
        assert_eq!(g.position(4)[0], 0.0);
        assert_eq!(br.values[4], 1.0);
        assert!((br.values[5] - 2f64.sqrt()).abs() < 1e-15);
        let g2 = GridSpec::new(2, 8.0, 16).unwrap();
        // x = (3, 4): i = 11 (x0 = 3), j = 12 (x1 = 4)
        let idx = 11 * 16 + 12;
        assert_eq!(g2.position(idx), [3.0, 4.0]);
        assert!((japanese_bracket(&g2).values[idx] - 26f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn region_examples() {
        let g = line();
        assert_eq!(
            region_indicator(&g, RegionKind::Outer, 0.0).count(),
            g.len()
        );
        assert_eq!(
            region_indicator(&g, RegionKind::Outer, 2.0 * g.extent).count(),
            0
        );
        // dx = 0.5: nodes with |x| <= sqrt(1.25), i.e. x in {-1, -0.5, 0, 0.5, 1}
        let g = GridSpec::line(4.0, 16).unwrap();
        let inner = region_indicator(&g, RegionKind::Inner, 1.5);
        let xs: Vec<f64> = inner.indices().iter().map(|&i| g.position(i)[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn masks_partition_mass() {
        let g = line();
        let psi = gaussian_packet(&g, [1.0, 0.0], [0.5, 0.0], 1.5).unwrap();
        for rho in [1.05, 1.7, 3.3, 6.0] {
            let out = mask_apply(&psi, &region_indicator(&g, RegionKind::Outer, rho)).unwrap();
            let inn = mask_apply(&psi, &region_indicator(&g, RegionKind::Inner, rho)).unwrap();
            // no node sits exactly on these level sets
            assert!((out.norm_sq() + inn.norm_sq() - psi.norm_sq()).abs() < 1e-14);
            let twice = mask_apply(&out, &region_indicator(&g, RegionKind::Outer, rho)).unwrap();
            assert_eq!(twice, out);
        }
        let all = mask_apply(&psi, &region_indicator(&g, RegionKind::Outer, 0.0)).unwrap();
        assert_eq!(all, psi);
    }

    #[test]
    fn outside_probability_of_gaussian() {
        let g = GridSpec::line(32.0, 1024).unwrap();
        let psi = gaussian_packet(&g, [0.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        assert!((probability_outside(&psi, 0.0) - 1.0).abs() < 1e-12);
        assert!(probability_outside(&psi, 320.0) < 1e-12);
        // |x| >= 2 is <x> >= sqrt(5), and x = ±2 are nodes. |ψ|² is the unit normal
        // density φ, so the node sum is erfc(√2) plus the Euler–Maclaurin endpoint
        // terms h/2 φ(2) - h²/12 φ'(2) on each side.
        let p = probability_outside(&psi, 5f64.sqrt());
        let h = g.spacing();
        let phi2 = (-2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let oracle = statrs::function::erf::erfc(std::f64::consts::SQRT_2)
            + 2.0 * (0.5 * h * phi2 + h * h / 12.0 * 2.0 * phi2);
        assert!((p - oracle).abs() < 1e-7, "p={p} oracle={oracle}");
    }

    #[test]
    fn packet_moments() {
        let g = GridSpec::line(40.0, 1024).unwrap();
        let (x0, p0, s) = (2.5, 1.3, 1.2);
        let psi = gaussian_packet(&g, [x0, 0.0], [p0, 0.0], s).unwrap();
        let f = crate::fourier::Fourier::new(&g);
        let cell = g.cell();
        let mean_x: f64 = psi
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| g.position(i)[0] * z.norm_sqr())
            .sum::<f64>()
            * cell;
        assert!((mean_x - x0).abs() < 1e-10);
        let ppsi = WaveFunction {
            grid: g,
            values: f.momentum(&psi.values, 0),
        };
        let mean_p = psi.inner(&ppsi).unwrap().re;
        assert!((mean_p - p0).abs() < 1e-10);
        let p2 = ppsi.norm_sq();
        assert!((p2 - (p0 * p0 + 1.0 / (4.0 * s * s))).abs() < 1e-8);
        let still = gaussian_packet(&g, [0.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        let pm = still
            .inner(&WaveFunction {
                grid: g,
                values: f.momentum(&still.values, 0),
            })
            .unwrap()
            .re;
        assert!(pm.abs() < 1e-10);
    }

    #[test]
    fn packet_too_wide() {
        let g = GridSpec::line(10.0, 128).unwrap();
        assert!(matches!(
            gaussian_packet(&g, [0.0, 0.0], [0.0, 0.0], 3.0),
            Err(Error::PacketTooWide(_))
        ));
        assert!(gaussian_packet(&g, [0.0, 0.0], [0.0, 0.0], 1.0).is_ok());
    }

    #[test]
    fn parseval() {
        let g = GridSpec::new(2, 10.0, 32).unwrap();
        let psi = gaussian_packet(&g, [1.0, -2.0], [0.7, 0.2], 1.1).unwrap();
        let f = crate::fourier::Fourier::new(&g);
        let mut hat = psi.values.clone();
        f.forward(&mut hat);
        // unnormalized forward transform: Σ|ψ̂|² = N^dim Σ|ψ|²
        let k_norm = hat.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64 * g.cell();
        assert!((k_norm - psi.norm_sq()).abs() < 1e-12);
    }
}
