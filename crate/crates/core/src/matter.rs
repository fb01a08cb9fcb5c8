//! Scalar sector: potential, curvature coupling and the two forms of the
//! field equation.
//!
//! Original frame, for `φ`:
//!
//! ```text
//! ∂τ²φ − Δφ = F(φ, ∂τφ)
//! F = −(D−2) H ∂τφ − ξ (D−1)(2Ḣ + (D−2)H²) φ + a² ∂φV(φ)
//! ```
//!
//! Transformed frame, for `ψ = a^{(D−2)/2} φ`:
//!
//! ```text
//! ∂τ²ψ − Δψ = h(τ) ψ + ε P(τ, ψ)
//! h = [(D−2)/2 − 2ξ(D−1)] [Ḣ + (D−2)/2 · H²]
//! P = −a^{(D+2−(D−2)p)/2} ψ^p
//! ```
//!
//! The potential is the monomial `V(φ) = −ε/(p+1) φ^{p+1}`, which satisfies
//! `V(0) = ∂φV(0) = 0`. Non-integer powers are only defined for `φ ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Family, ScaleFactorModel};
use crate::grid::{FieldState, Frame};

/// Monomial potential `V(φ) = −ε/(p+1) φ^{p+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub epsilon: f64,
    pub p: f64,
}

/// Nonminimal coupling `ξ R φ²/2`. Any real `ξ` is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub xi: f64,
}

/// Everything the field equation needs besides the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldTheory {
    pub model: ScaleFactorModel,
    pub coupling: CouplingSpec,
    pub potential: PotentialSpec,
}

impl FieldTheory {
    pub fn new(model: ScaleFactorModel, coupling: CouplingSpec, potential: PotentialSpec) -> Self {
        Self { model, coupling, potential }
    }

    /// `a ≡ 1`, no coupling, no potential: the free wave equation.
    pub fn flat_free(dim: u32) -> Result<Self> {
        Ok(Self {
            model: ScaleFactorModel::flat(dim)?,
            coupling: CouplingSpec { xi: 0.0 },
            potential: PotentialSpec::new(0.0, 1.0)?,
        })
    }
}

fn is_integer_power(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() < i32::MAX as f64
}

/// `x^p`, rejecting negative bases for non-integer powers.
fn checked_pow(x: f64, p: f64) -> Result<f64> {
    if is_integer_power(p) {
        Ok(x.powi(p as i32))
    } else if x >= 0.0 {
        Ok(x.powf(p))
    } else {
        Err(Error::NonIntegerPowerNegativeBase { p, value: x })
    }
}

/// Elementwise `u^p` over a grid field. For non-integer `p`, negative entries
/// within rounding of zero (relative to the field's maximum) are read as zero;
/// genuinely negative entries are an error.
pub fn field_pow(u: &[f64], p: f64) -> Result<Vec<f64>> {
    if is_integer_power(p) {
        let e = p as i32;
        return Ok(u.iter().map(|v| v.powi(e)).collect());
    }
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 64.0 * f64::EPSILON * scale;
    u.iter()
        .map(|&v| {
            if v >= 0.0 {
                Ok(v.powf(p))
            } else if v >= -floor {
                Ok(0.0)
            } else {
                Err(Error::NonIntegerPowerNegativeBase { p, value: v })
            }
        })
        .collect()
}

impl PotentialSpec {
    pub fn new(epsilon: f64, p: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameters(format!("epsilon = {epsilon} must be >= 0")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameters(format!("p = {p} must be positive")));
        }
        Ok(Self { epsilon, p })
    }

    pub fn potential(&self, phi: f64) -> Result<f64> {
        Ok(-self.epsilon / (self.p + 1.0) * checked_pow(phi, self.p + 1.0)?)
    }

    pub fn potential_grad(&self, phi: f64) -> Result<f64> {
        Ok(-self.epsilon * checked_pow(phi, self.p)?)
    }
}

/// Right-hand side `F(φ, ∂τφ)` of the original-frame equation.
pub fn rhs_f(
    model: &ScaleFactorModel,
    coupling: CouplingSpec,
    potential: PotentialSpec,
    phi: &[f64],
    pi: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    let d = model.dim() as f64;
    let c = model.curvature_sample(tau);
    let damping = (d - 2.0) * c.hubble;
    let mass = coupling.xi
        * (d - 1.0)
        * (2.0 * c.hubble_rate + (d - 2.0) * c.hubble * c.hubble);
    let mut out: Vec<f64> = phi
        .iter()
        .zip(pi)
        .map(|(&f, &v)| -damping * v - mass * f)
        .collect();
    if potential.epsilon != 0.0 {
        let weight = -potential.epsilon * c.a * c.a;
        for (o, pw) in out.iter_mut().zip(field_pow(phi, potential.p)?) {
            *o += weight * pw;
        }
    }
    Ok(out)
}

/// `(D−2)/2 − 2ξ(D−1)`, the coupling factor of `h`.
fn coupling_factor(dim: u32, coupling: CouplingSpec) -> f64 {
    let d = dim as f64;
    0.5 * (d - 2.0) - 2.0 * coupling.xi * (d - 1.0)
}

/// Power-law coefficient `c` with `h(τ) = c/(τ+τ₀)²`; zero for the exponential family.
pub fn h_power_law_coefficient(model: &ScaleFactorModel, coupling: CouplingSpec) -> f64 {
    match model.family() {
        Family::PowerLaw => {
            let half = 0.5 * (model.dim() as f64 - 2.0);
            let alpha = model.alpha();
            alpha * coupling_factor(model.dim(), coupling) * (-1.0 + alpha * half)
        }
        Family::Exponential => 0.0,
    }
}

/// Coefficient `h(τ)` of the transformed equation.
pub fn h_of_tau(model: &ScaleFactorModel, coupling: CouplingSpec, tau: f64) -> f64 {
    match model.family() {
        Family::PowerLaw => {
            let s = tau + model.tau0();
            h_power_law_coefficient(model, coupling) / (s * s)
        }
        Family::Exponential => {
            let half = 0.5 * (model.dim() as f64 - 2.0);
            model.alpha().powi(2) * half * coupling_factor(model.dim(), coupling)
        }
    }
}

/// `∂τh`, in closed form.
pub fn h_rate(model: &ScaleFactorModel, coupling: CouplingSpec, tau: f64) -> f64 {
    match model.family() {
        Family::PowerLaw => {
            let s = tau + model.tau0();
            -2.0 * h_power_law_coefficient(model, coupling) / (s * s * s)
        }
        Family::Exponential => 0.0,
    }
}

/// Power of `a` in the transformed source: `(D+2−(D−2)p)/2`.
pub fn source_exponent(dim: u32, p: f64) -> f64 {
    let d = dim as f64;
    0.5 * (d + 2.0 - (d - 2.0) * p)
}

/// `P(τ, ψ) = −a^{(D+2−(D−2)p)/2} ψ^p`, without the factor `ε`.
pub fn source_p(
    model: &ScaleFactorModel,
    potential: PotentialSpec,
    tau: f64,
    psi: &[f64],
) -> Result<Vec<f64>> {
    let weight = -model.scale_factor_pow(tau, source_exponent(model.dim(), potential.p));
    Ok(field_pow(psi, potential.p)?.into_iter().map(|v| weight * v).collect())
}

fn frame_weight(model: &ScaleFactorModel, tau: f64) -> (f64, f64) {
    let half = 0.5 * (model.dim() as f64 - 2.0);
    (model.scale_factor_pow(tau, half), half * model.hubble(tau))
}

/// `(φ, ∂τφ) ↦ (ψ, ∂τψ)` with `ψ = a^{(D−2)/2} φ`.
pub fn to_transformed(state: &FieldState, model: &ScaleFactorModel) -> Result<FieldState> {
    if state.frame != Frame::Original {
        return Err(Error::FrameMismatch { expected: Frame::Original, found: state.frame });
    }
    let (w, mh) = frame_weight(model, state.tau);
    let psi = state.phi.iter().map(|f| w * f).collect();
    let psi_dot = state.phi.iter().zip(&state.pi).map(|(f, v)| w * (mh * f + v)).collect();
    Ok(FieldState::new(state.tau, psi, psi_dot, Frame::Transformed))
}

/// Inverse of [`to_transformed`].
pub fn from_transformed(state: &FieldState, model: &ScaleFactorModel) -> Result<FieldState> {
    if state.frame != Frame::Transformed {
        return Err(Error::FrameMismatch { expected: Frame::Transformed, found: state.frame });
    }
    let (w, mh) = frame_weight(model, state.tau);
    let inv = 1.0 / w;
    let phi: Vec<f64> = state.phi.iter().map(|p| inv * p).collect();
    let pi = phi.iter().zip(&state.pi).map(|(f, v)| inv * v - mh * f).collect();
    Ok(FieldState::new(state.tau, phi, pi, Frame::Original))
}

/// Bring a state of either frame to the original frame.
pub fn to_original(state: &FieldState, model: &ScaleFactorModel) -> Result<FieldState> {
    match state.frame {
        Frame::Original => Ok(state.clone()),
        Frame::Transformed => from_transformed(state, model),
    }
}
