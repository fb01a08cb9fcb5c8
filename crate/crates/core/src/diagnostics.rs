//! Energy functionals, iterate gaps, the decay monitor and support tracking.
//!
//! The k-order energy uses the isotropic multiplier `M_k(λ) = Σ_{m≤k} |λ|^{2m}`
//! in place of a sum over all multi-indices `|α| ≤ k`. By the multinomial
//! theorem the two are equivalent:
//!
//! ```text
//! E_exact ≤ E_ours ≤ c₂(k, d) · E_exact
//! ```
//!
//! where `E_exact = Σ_{|α|≤k} ‖∂^α ·‖²` and `c₂(k, d)` is the largest
//! multinomial coefficient of degree `k` in `d` variables, see
//! [`multi_index_constant`]. In one dimension the two coincide.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::geometry::ScaleFactorModel;
use crate::grid::{FieldState, Frame, SpatialGrid};
use crate::matter::to_original;

/// Diagnostics of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub tau: f64,
    /// `H_k` for `k = 0..=k_max`.
    pub hk: Vec<f64>,
    /// `|φ|_k` for `k = 0..=k_max`.
    pub energy_norm: Vec<f64>,
    pub l2: f64,
    pub linf: f64,
    pub decay_product: f64,
}

/// `M_k(|λ|²) = Σ_{m=0}^{k} |λ|^{2m}`.
pub fn energy_multiplier(k2: f64, k: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..k {
        term *= k2;
        sum += term;
    }
    sum
}

/// Upper equivalence constant between the `M_k` energy and the exact
/// multi-index energy: the largest coefficient `m!/(β₁!…β_d!)` over
/// `m ≤ k`, `|β| = m`. The lower constant is 1.
pub fn multi_index_constant(k: u32, d_sim: usize) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut best = 1.0f64;
    for m in 0..=k {
        // Most balanced split of m over d parts maximizes the coefficient.
        let d = d_sim as u32;
        let (q, r) = (m / d, m % d);
        let denom = fact(q + 1).powi(r as i32) * fact(q).powi((d - r) as i32);
        best = best.max(fact(m) / denom);
    }
    best
}

fn linear_energy_spectral(
    grid: &SpatialGrid,
    phi_hat: &[Complex64],
    pi_hat: &[Complex64],
    k: u32,
) -> f64 {
    let norm = grid.cell_volume() / grid.len() as f64;
    let sum: f64 = phi_hat
        .iter()
        .zip(pi_hat)
        .zip(grid.wavenumber_sq())
        .map(|((f, p), &k2)| energy_multiplier(k2, k) * (p.norm_sqr() + k2 * f.norm_sqr()))
        .sum();
    0.5 * sum * norm
}

/// k-order linear energy `½ Σ M_k(λ)(|π̂|² + |λ|²|φ̂|²)` with Parseval scaling.
pub fn linear_energy(grid: &SpatialGrid, state: &FieldState, k: u32) -> f64 {
    linear_energy_spectral(grid, &grid.forward(&state.phi), &grid.forward(&state.pi), k)
}

/// `‖φ‖_{H^{k+1}} + ‖π‖_{H^k}`.
pub fn energy_norm(grid: &SpatialGrid, state: &FieldState, k: u32) -> f64 {
    grid.sobolev_norm(&state.phi, k + 1) + grid.sobolev_norm(&state.pi, k)
}

/// Instantaneous rate `Σ M_k Re(F̂ π̂*)` at which a source `F` changes `H_k`
/// along `∂τ²φ − Δφ = F`.
pub fn energy_flux(grid: &SpatialGrid, pi: &[f64], source: &[f64], k: u32) -> f64 {
    let norm = grid.cell_volume() / grid.len() as f64;
    let pi_hat = grid.forward(pi);
    let src_hat = grid.forward(source);
    pi_hat
        .iter()
        .zip(&src_hat)
        .zip(grid.wavenumber_sq())
        .map(|((p, s), &k2)| energy_multiplier(k2, k) * (s * p.conj()).re)
        .sum::<f64>()
        * norm
}

/// `H_k^{1/2}[a − b] + ‖φ_a − φ_b‖_{L²}` at one instant.
pub fn state_gap(grid: &SpatialGrid, a: &FieldState, b: &FieldState, k: u32) -> f64 {
    let dphi: Vec<f64> = a.phi.iter().zip(&b.phi).map(|(x, y)| x - y).collect();
    let dpi: Vec<f64> = a.pi.iter().zip(&b.pi).map(|(x, y)| x - y).collect();
    let e = linear_energy_spectral(grid, &grid.forward(&dphi), &grid.forward(&dpi), k);
    e.sqrt() + grid.l2_norm(&dphi)
}

/// `E_k = sup_τ ( H_k^{1/2}[a − b] + ‖φ_a − φ_b‖_{L²} )` over a shared time lattice.
pub fn iterate_gap(grid: &SpatialGrid, a: &Trajectory, b: &Trajectory, k: u32) -> Result<f64> {
    if a.states.len() != b.states.len() {
        return Err(Error::LatticeMismatch(format!(
            "{} vs {} stored states",
            a.states.len(),
            b.states.len()
        )));
    }
    let mut sup = 0.0f64;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        if (sa.tau - sb.tau).abs() > 1e-12 * (1.0 + sa.tau.abs()) {
            return Err(Error::LatticeMismatch(format!("tau {} vs {}", sa.tau, sb.tau)));
        }
        if sa.frame != sb.frame {
            return Err(Error::LatticeMismatch(format!(
                "frames {:?} vs {:?} at tau {}",
                sa.frame, sb.frame, sa.tau
            )));
        }
        if sa.phi.len() != grid.len() || sb.phi.len() != grid.len() {
            return Err(Error::LatticeMismatch("state does not match the grid".into()));
        }
        sup = sup.max(state_gap(grid, sa, sb, k));
    }
    Ok(sup)
}

/// `a^{(D−2)/2} ( ‖φ‖_{H^{k+1}} + (D−2)/2 · ‖Hφ + ∂τφ‖_{H^k} )` for an
/// original-frame state. Bounded in time exactly when the decay estimate holds.
pub fn decay_product(
    grid: &SpatialGrid,
    state: &FieldState,
    model: &ScaleFactorModel,
    k: u32,
) -> Result<f64> {
    if state.frame != Frame::Original {
        return Err(Error::FrameMismatch { expected: Frame::Original, found: state.frame });
    }
    let half = 0.5 * (model.dim() as f64 - 2.0);
    let h = model.hubble(state.tau);
    let weighted: Vec<f64> = state.phi.iter().zip(&state.pi).map(|(f, p)| h * f + p).collect();
    let inner = grid.sobolev_norm(&state.phi, k + 1) + half * grid.sobolev_norm(&weighted, k);
    Ok(model.scale_factor_pow(state.tau, half) * inner)
}

/// [`decay_product`] along every stored state.
pub fn decay_monitor(
    grid: &SpatialGrid,
    traj: &Trajectory,
    model: &ScaleFactorModel,
    k: u32,
) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| decay_product(grid, s, model, k)).collect()
}

/// Radius of the smallest ball about the box center outside which
/// `|φ|, |π| ≤ threshold`.
pub fn support_radius(grid: &SpatialGrid, state: &FieldState, threshold: f64) -> f64 {
    support_radius_about(grid, state, threshold, &grid.center())
}

/// As [`support_radius`] about an arbitrary center. Capped at `L/2`, which
/// means the field fills the box.
pub fn support_radius_about(
    grid: &SpatialGrid,
    state: &FieldState,
    threshold: f64,
    center: &[f64],
) -> f64 {
    let cap = 0.5 * grid.length();
    let mut radius = 0.0f64;
    for idx in 0..grid.len() {
        if state.phi[idx].abs() > threshold || state.pi[idx].abs() > threshold {
            radius = radius.max(grid.periodic_distance(&grid.coordinates(idx), center));
        }
    }
    radius.min(cap)
}

/// Full diagnostics row. Transformed-frame states are mapped back to `φ` first.
pub fn energy_report(
    grid: &SpatialGrid,
    state: &FieldState,
    model: &ScaleFactorModel,
    k_max: u32,
) -> Result<EnergyReport> {
    let state = to_original(state, model)?;
    let phi_hat = grid.forward(&state.phi);
    let pi_hat = grid.forward(&state.pi);
    let hk = (0..=k_max).map(|k| linear_energy_spectral(grid, &phi_hat, &pi_hat, k)).collect();
    let sob = |spec: &[Complex64], k: u32| {
        grid.spectral_quadratic(spec, |k2| (1.0 + k2).powi(k as i32)).sqrt()
    };
    let energy_norm = (0..=k_max).map(|k| sob(&phi_hat, k + 1) + sob(&pi_hat, k)).collect();
    Ok(EnergyReport {
        tau: state.tau,
        hk,
        energy_norm,
        l2: grid.l2_norm(&state.phi),
        linf: state.phi.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        decay_product: decay_product(grid, &state, model, k_max)?,
    })
}
