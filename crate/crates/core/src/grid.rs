//! Periodic spectral grid and field states.
//!
//! The simulated box is `[0, L)^d` with `d ∈ {1, 2, 3}` and `N` points per
//! axis, stored row-major with the last axis fastest. Wavenumbers follow the
//! FFT ordering `2π/L · [0, 1, …, N/2−1, −N/2, …, −1]`.
//!
//! Fields physically live on `ℝ^{D−1}`; here the spacetime dimension `D`
//! only enters through background coefficients, while all norms are computed
//! on the simulated grid. The periodic box stands in for the whole space as
//! long as compactly supported data has not reached the box boundary.
//!
//! Discrete transforms are unnormalized forward / `1/N^d` inverse, so
//! Parseval reads `Σ|u|²·Δx^d = Δx^d/N^d · Σ|û|²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which field a [`FieldState`] carries: `φ` or `ψ = a^{(D−2)/2} φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Original,
    Transformed,
}

/// Field and its conformal-time derivative on the grid at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub tau: f64,
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub frame: Frame,
}

impl FieldState {
    pub fn new(tau: f64, phi: Vec<f64>, pi: Vec<f64>, frame: Frame) -> Self {
        debug_assert_eq!(phi.len(), pi.len());
        Self { tau, phi, pi, frame }
    }

    pub fn zeros(grid: &SpatialGrid, frame: Frame) -> Self {
        let n = grid.len();
        Self::new(0.0, vec![0.0; n], vec![0.0; n], frame)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(&self.pi).all(|v| v.is_finite())
    }

    /// Largest absolute entry of `φ` and `π` together.
    pub fn max_abs(&self) -> f64 {
        self.phi.iter().chain(&self.pi).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Periodic box with its FFT plans and wavenumber lattice.
#[derive(Clone)]
pub struct SpatialGrid {
    d_sim: usize,
    n: usize,
    length: f64,
    axis_wavenumbers: Vec<f64>,
    k2: Arc<Vec<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("d_sim", &self.d_sim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.d_sim == other.d_sim && self.n == other.n && self.length == other.length
    }
}

impl SpatialGrid {
    pub fn new(d_sim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&d_sim) {
            return Err(Error::InvalidGrid(format!("d_sim = {d_sim} must be 1, 2 or 3")));
        }
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and at least 16")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("L = {length} must be positive")));
        }
        let half = n as i64 / 2;
        let axis_wavenumbers = (0..n as i64)
            .map(|i| {
                let m = if i < half { i } else { i - n as i64 };
                2.0 * std::f64::consts::PI * m as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut grid = Self {
            d_sim,
            n,
            length,
            axis_wavenumbers,
            k2: Arc::new(Vec::new()),
            fwd,
            inv,
        };
        let k2 = (0..grid.len())
            .map(|idx| grid.wavevector(idx).iter().map(|k| k * k).sum())
            .collect();
        grid.k2 = Arc::new(k2);
        Ok(grid)
    }

    pub fn d_sim(&self) -> usize {
        self.d_sim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d_sim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d_sim as i32)
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.axis_wavenumbers
    }

    /// Integer mode numbers of flat index `idx`, one per axis.
    pub fn mode_indices(&self, idx: usize) -> Vec<i64> {
        let half = self.n as i64 / 2;
        self.axis_indices(idx)
            .into_iter()
            .map(|i| if (i as i64) < half { i as i64 } else { i as i64 - self.n as i64 })
            .collect()
    }

    fn axis_indices(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.d_sim];
        for a in (0..self.d_sim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Wavevector components of flat spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> Vec<f64> {
        self.axis_indices(idx).into_iter().map(|i| self.axis_wavenumbers[i]).collect()
    }

    /// `|λ|²` for every spectral index.
    pub fn wavenumber_sq(&self) -> &[f64] {
        &self.k2
    }

    /// Physical coordinates of flat grid index `idx`.
    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        let dx = self.spacing();
        self.axis_indices(idx).into_iter().map(|i| i as f64 * dx).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        vec![0.5 * self.length; self.d_sim]
    }

    /// Minimum-image distance between two points of the periodic box.
    pub fn periodic_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                let mut d = (a - b).rem_euclid(self.length);
                if d > 0.5 * self.length {
                    d = self.length - d;
                }
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// 2/3-rule mask: keeps modes with `|m| < N/3` on every axis.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cutoff = self.n as f64 / 3.0;
        (0..self.len())
            .map(|idx| self.mode_indices(idx).iter().all(|m| (m.abs() as f64) < cutoff))
            .collect()
    }

    fn transform_axes(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let total = self.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.d_sim {
            let stride = n.pow((self.d_sim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform of a real field.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.len(), "field does not match grid");
        let mut data: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_axes(&mut data, &self.fwd);
        data
    }

    /// Inverse transform, normalized by `1/N^d`, keeping the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut data = spectrum.to_vec();
        self.transform_axes(&mut data, &self.inv);
        let scale = 1.0 / self.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Spectral Laplacian `F⁻¹[−|λ|² û]`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(u);
        for (c, &k2) in spec.iter_mut().zip(self.wavenumber_sq()) {
            *c *= -k2;
        }
        self.inverse_real(&spec)
    }

    /// Weighted spectral sum `Δx^d/N^d · Σ w(|λ|²) |û|²`.
    pub(crate) fn spectral_quadratic(
        &self,
        spectrum: &[Complex64],
        weight: impl Fn(f64) -> f64,
    ) -> f64 {
        let norm = self.cell_volume() / self.len() as f64;
        spectrum
            .iter()
            .zip(self.wavenumber_sq())
            .map(|(c, &k2)| weight(k2) * c.norm_sqr())
            .sum::<f64>()
            * norm
    }

    /// `H^k` norm with multiplier `(1+|λ|²)^k`; `k = 0` is the grid `L²` norm.
    pub fn sobolev_norm(&self, u: &[f64], k: u32) -> f64 {
        let spec = self.forward(u);
        self.spectral_quadratic(&spec, |k2| (1.0 + k2).powi(k as i32)).sqrt()
    }

    /// Direct grid `L²` norm `(Σ|u|² Δx^d)^{1/2}`.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        (u.iter().map(|v| v * v).sum::<f64>() * self.cell_volume()).sqrt()
    }

    /// Smooth compactly supported bump `A·exp(−r²/(R²−r²))` for `r < R`,
    /// with zero velocity. Distances are periodic minimum-image.
    pub fn bump_initial_data(
        &self,
        amplitude: f64,
        radius: f64,
        center: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(radius > 0.0 && radius < 0.5 * self.length) {
            return Err(Error::InvalidGrid(format!(
                "bump radius {radius} must lie in (0, L/2 = {}) or its support wraps",
                0.5 * self.length
            )));
        }
        if center.len() != self.d_sim {
            return Err(Error::InvalidGrid(format!(
                "center has {} coordinates for a {}-dimensional grid",
                center.len(),
                self.d_sim
            )));
        }
        let r2max = radius * radius;
        let f = (0..self.len())
            .map(|idx| {
                let r = self.periodic_distance(&self.coordinates(idx), center);
                let r2 = r * r;
                if r < radius {
                    amplitude * (-r2 / (r2max - r2)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Ok((f, vec![0.0; self.len()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(grid: &SpatialGrid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(&grid.coordinates(i))).collect()
    }

    #[test]
    fn make_grid_examples() {
        let g = SpatialGrid::new(1, 64, 2.0 * PI).unwrap();
        let mut lattice: Vec<i64> =
            g.axis_wavenumbers().iter().map(|k| k.round() as i64).collect();
        lattice.sort();
        assert_eq!(lattice, (-32..32).collect::<Vec<_>>());
        for k in g.axis_wavenumbers() {
            assert!((k - k.round()).abs() < 1e-12);
        }

        let g = SpatialGrid::new(2, 16, 1.0).unwrap();
        assert_eq!(g.len(), 256);
        let kmax = g.axis_wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        assert!((kmax - 2.0 * PI * 8.0).abs() < 1e-12);

        assert!(matches!(SpatialGrid::new(1, 15, 1.0), Err(Error::InvalidGrid(_))));
        assert!(SpatialGrid::new(1, 14, 1.0).is_err());
        assert!(SpatialGrid::new(4, 16, 1.0).is_err());
        assert!(SpatialGrid::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn multiplier_symmetric_under_reflection() {
        let g = SpatialGrid::new(2, 16, 3.0).unwrap();
        let k2 = g.wavenumber_sq();
        let n = 16;
        for idx in 0..g.len() {
            let (i, j) = (idx / n, idx % n);
            let mirror = ((n - i) % n) * n + (n - j) % n;
            assert_eq!(k2[idx], k2[mirror]);
        }
    }

    #[test]
    fn laplacian_examples() {
        let g = SpatialGrid::new(1, 64, 2.0 * PI).unwrap();
        let c = vec![3.5; 64];
        assert!(g.laplacian(&c).iter().all(|v| v.abs() < 1e-12));

        let u = sample(&g, |x| x[0].sin());
        let lap = g.laplacian(&u);
        let err = lap.iter().zip(&u).map(|(l, s)| (l + s).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-12, "err = {err}");

        let g2 = SpatialGrid::new(2, 32, 2.0 * PI).unwrap();
        let u = sample(&g2, |x| x[0].sin() + (2.0 * x[1]).cos());
        let expect = sample(&g2, |x| -x[0].sin() - 4.0 * (2.0 * x[1]).cos());
        let err = g2
            .laplacian(&u)
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-11, "err = {err}");
    }

    #[test]
    fn laplacian_3d_eigenfunction() {
        let g = SpatialGrid::new(3, 16, 2.0 * PI).unwrap();
        let u = sample(&g, |x| (x[0] + 2.0 * x[1] - x[2]).cos());
        let err = g
            .laplacian(&u)
            .iter()
            .zip(&u)
            .map(|(l, v)| (l + 6.0 * v).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-11);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = SpatialGrid::new(1, 64, 2.0 * PI).unwrap();
        assert_eq!(g.sobolev_norm(&vec![0.0; 64], 3), 0.0);
        let u = sample(&g, |x| x[0].sin());
        assert!((g.sobolev_norm(&u, 0) - PI.sqrt()).abs() < 1e-13);
        assert!((g.sobolev_norm(&u, 1) - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bump_examples() {
        let g = SpatialGrid::new(1, 64, 10.0).unwrap();
        let (f, v) = g.bump_initial_data(0.0, 1.0, &[5.0]).unwrap();
        assert!(f.iter().chain(&v).all(|x| *x == 0.0));

        let (f, v) = g.bump_initial_data(2.5, 1.0, &[5.0]).unwrap();
        assert_eq!(f[32], 2.5);
        assert!(v.iter().all(|x| *x == 0.0));
        // outside the ball the profile is identically zero
        for (i, val) in f.iter().enumerate() {
            if (g.coordinates(i)[0] - 5.0).abs() >= 1.0 {
                assert_eq!(*val, 0.0);
            }
        }

        assert!(matches!(g.bump_initial_data(1.0, 5.0, &[5.0]), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn bump_vanishes_at_support_edge() {
        let g = SpatialGrid::new(1, 16, 10.0).unwrap();
        let x1 = g.coordinates(1)[0];
        for (amplitude, radius) in [(1.0, 0.3), (3.0, 1.0), (0.5, 2.7)] {
            // place grid point 1 at distance 0.999999·R from the center
            let center = [x1 - 0.999999 * radius];
            let (f, _) = g.bump_initial_data(amplitude, radius, &center).unwrap();
            assert!(f[1] >= 0.0 && f[1] <= 1e-10 * amplitude);
        }
    }

    #[test]
    fn periodic_bump_wraps_consistently() {
        let g = SpatialGrid::new(1, 64, 8.0).unwrap();
        let (f, _) = g.bump_initial_data(1.0, 1.5, &[0.0]).unwrap();
        // symmetric about x = 0 through the periodic boundary
        for i in 1..32 {
            assert_eq!(f[i], f[64 - i]);
        }
    }
}
