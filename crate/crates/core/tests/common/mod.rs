//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use kgfrw::grid::SpatialGrid;
use num_complex::Complex64;
use rand::Rng;

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if !delta.is_finite() {
            // Overflowing integrand: nothing to refine.
            return left + right;
        }
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 24)
}

/// `∫_0^∞ g` by doubling the upper limit until the last increment is below
/// `tail_tol` relative to the running total. `None` if it never settles
/// before `u_max` or the running total stops being finite.
pub fn improper_integral(g: &dyn Fn(f64) -> f64, tail_tol: f64, u_max: f64) -> Option<f64> {
    let mut lower = 0.0;
    let mut upper = 1.0;
    let mut total = 0.0;
    while upper <= u_max {
        let scale = g(lower).abs().max(g(upper).abs()) * (upper - lower);
        let piece = adaptive_simpson(g, lower, upper, 1e-11 * scale.max(1e-300));
        total += piece;
        if !total.is_finite() {
            return None;
        }
        if piece.abs() <= tail_tol * total.abs() && g(upper).abs() * upper <= tail_tol * total.abs()
        {
            return Some(total);
        }
        lower = upper;
        upper *= 2.0;
    }
    None
}

/// Random smooth real field: Fourier modes with `|m| ≤ m_max` on every axis,
/// Hermitian-symmetric so it is real, with no Nyquist content.
pub fn random_smooth_field(grid: &SpatialGrid, m_max: i64, rng: &mut impl Rng) -> Vec<f64> {
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, slot) in spec.iter_mut().enumerate() {
        let m = grid.mode_indices(idx);
        if m.iter().all(|v| v.abs() <= m_max) {
            let decay = 1.0 / (1.0 + m.iter().map(|v| (v * v) as f64).sum::<f64>());
            *slot = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
        }
    }
    let raw = grid.inverse_real(&spec);
    // Taking the real part symmetrizes the spectrum.
    let scale = grid.len() as f64;
    raw.into_iter().map(|v| v * scale / 10.0).collect()
}

/// `∂^β u` for a multi-index `β`, computed spectrally per axis.
pub fn partial_derivative(grid: &SpatialGrid, u: &[f64], beta: &[u32]) -> Vec<f64> {
    let mut spec = grid.forward(u);
    for (idx, c) in spec.iter_mut().enumerate() {
        let k = grid.wavevector(idx);
        let mut factor = Complex64::new(1.0, 0.0);
        for (kj, &bj) in k.iter().zip(beta) {
            factor *= (Complex64::new(0.0, *kj)).powu(bj);
        }
        *c *= factor;
    }
    grid.inverse_real(&spec)
}

/// All multi-indices in `d` variables with total order `≤ k`.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for b in 0..=(k - used) {
                let mut p = prefix.clone();
                p.push(b);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// `½ Σ_{|β|≤k} ( ‖∂^β π‖² + Σ_j ‖∂_j ∂^β φ‖² )` with grid quadrature of
/// explicitly differentiated fields.
pub fn multi_index_energy(grid: &SpatialGrid, phi: &[f64], pi: &[f64], k: u32) -> f64 {
    let d = grid.d_sim();
    let sq = |u: &[f64]| grid.l2_norm(u).powi(2);
    let mut total = 0.0;
    for beta in multi_indices(d, k) {
        total += sq(&partial_derivative(grid, pi, &beta));
        for j in 0..d {
            let mut b = beta.clone();
            b[j] += 1;
            total += sq(&partial_derivative(grid, phi, &b));
        }
    }
    0.5 * total
}

/// Max absolute difference.
pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn linf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
