//! Spatially flat FRW backgrounds in conformal time.
//!
//! The metric is `ds² = a(τ)² (−dτ² + Σ dx_i²)` on a `D`-dimensional spacetime.
//! Two closed-form families of scale factor are supported:
//!
//! ```text
//! PowerLaw:     a(τ) = (τ + τ₀)^α
//! Exponential:  a(τ) = exp(α (τ + τ₀)),  α > 0
//! ```
//!
//! Run time always starts at `τ = 0`; the offset `τ₀ > 0` is added internally,
//! so a power law with negative exponent never meets its pole.
//!
//! For a single-component fluid with `P = wρ` the power-law exponent is
//! `α = 2 / ((D−1)(w+1) − 2)`; the line `w = −(D−3)/(D−1)` is the exponential
//! family instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to detect the degenerate equation of state.
pub const DEGENERATE_W_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PowerLaw,
    Exponential,
}

/// Background scale factor `a(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactorModel {
    family: Family,
    alpha: f64,
    tau0: f64,
    dim: u32,
    w: Option<f64>,
}

/// Background quantities at one instant, all from closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub tau: f64,
    pub a: f64,
    /// Conformal Hubble rate `ȧ/a`.
    pub hubble: f64,
    /// `dH/dτ`.
    pub hubble_rate: f64,
    /// Scalar curvature `R = (D−1) a⁻² (2Ḣ + (D−2) H²)`.
    pub ricci_scalar: f64,
}

fn check_common(alpha: f64, tau0: f64, dim: u32) -> Result<()> {
    if dim < 4 {
        return Err(Error::InvalidModel(format!("dimension D = {dim} must be at least 4")));
    }
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(Error::InvalidModel(format!("tau0 = {tau0} must be positive")));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidModel(format!("alpha = {alpha} must be finite")));
    }
    Ok(())
}

/// Power-law exponent for equation of state `w`.
pub fn alpha_from_w(dim: u32, w: f64) -> Result<f64> {
    if dim < 4 {
        return Err(Error::InvalidModel(format!("dimension D = {dim} must be at least 4")));
    }
    let d = dim as f64;
    if (w - degenerate_w(dim)).abs() <= DEGENERATE_W_TOL {
        return Err(Error::DegenerateEquationOfState { dim, w });
    }
    Ok(2.0 / ((d - 1.0) * (w + 1.0) - 2.0))
}

/// The equation of state `−(D−3)/(D−1)` whose background is exponential.
pub fn degenerate_w(dim: u32) -> f64 {
    let d = dim as f64;
    -(d - 3.0) / (d - 1.0)
}

impl ScaleFactorModel {
    pub fn power_law(alpha: f64, tau0: f64, dim: u32) -> Result<Self> {
        check_common(alpha, tau0, dim)?;
        Ok(Self { family: Family::PowerLaw, alpha, tau0, dim, w: None })
    }

    pub fn exponential(rate: f64, tau0: f64, dim: u32) -> Result<Self> {
        check_common(rate, tau0, dim)?;
        if rate <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "exponential rate alpha = {rate} must be positive"
            )));
        }
        Ok(Self { family: Family::Exponential, alpha: rate, tau0, dim, w: None })
    }

    /// Power law from an equation of state; fails on the degenerate line.
    pub fn from_w(w: f64, tau0: f64, dim: u32) -> Result<Self> {
        let alpha = alpha_from_w(dim, w)?;
        check_common(alpha, tau0, dim)?;
        Ok(Self { family: Family::PowerLaw, alpha, tau0, dim, w: Some(w) })
    }

    /// Static background `a ≡ 1` (power law with zero exponent).
    pub fn flat(dim: u32) -> Result<Self> {
        Self::power_law(0.0, 1.0, dim)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn w(&self) -> Option<f64> {
        self.w
    }

    /// `a(τ)` at run time `τ ≥ 0`.
    pub fn scale_factor(&self, tau: f64) -> f64 {
        let s = tau + self.tau0;
        match self.family {
            Family::PowerLaw => s.powf(self.alpha),
            Family::Exponential => (self.alpha * s).exp(),
        }
    }

    /// `a(τ)^q`, evaluated without forming `a` first where that loses range.
    pub fn scale_factor_pow(&self, tau: f64, q: f64) -> f64 {
        let s = tau + self.tau0;
        match self.family {
            Family::PowerLaw => s.powf(self.alpha * q),
            Family::Exponential => (q * self.alpha * s).exp(),
        }
    }

    pub fn hubble(&self, tau: f64) -> f64 {
        match self.family {
            Family::PowerLaw => self.alpha / (tau + self.tau0),
            Family::Exponential => self.alpha,
        }
    }

    pub fn hubble_rate(&self, tau: f64) -> f64 {
        match self.family {
            Family::PowerLaw => {
                let s = tau + self.tau0;
                -self.alpha / (s * s)
            }
            Family::Exponential => 0.0,
        }
    }

    pub fn curvature_sample(&self, tau: f64) -> CurvatureSample {
        let d = self.dim as f64;
        let a = self.scale_factor(tau);
        let hubble = self.hubble(tau);
        let hubble_rate = self.hubble_rate(tau);
        let ricci_scalar =
            (d - 1.0) * (2.0 * hubble_rate + (d - 2.0) * hubble * hubble) / (a * a);
        CurvatureSample { tau, a, hubble, hubble_rate, ricci_scalar }
    }

    /// Residual of the Friedmann scaling relation `α((D−1)(1+w) − 2) = 2`.
    pub fn friedmann_consistency(&self) -> Result<f64> {
        let w = self.w.ok_or(Error::MissingW)?;
        if self.family != Family::PowerLaw {
            return Err(Error::InvalidModel(
                "Friedmann scaling relation applies to power laws only".into(),
            ));
        }
        let d = self.dim as f64;
        Ok((2.0 - self.alpha * ((d - 1.0) * (1.0 + w) - 2.0)).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn scale_factor_examples() {
        let m = ScaleFactorModel::power_law(2.0, 1.0, 4).unwrap();
        assert_eq!(m.scale_factor(0.0), 1.0);
        // matter dominated in D = 5
        let m = ScaleFactorModel::power_law(2.0 / (5.0 - 3.0), 1.0, 5).unwrap();
        assert_eq!(m.scale_factor(0.0), 1.0);
        let m = ScaleFactorModel::exponential(0.5, 0.2, 4).unwrap();
        assert!(close(m.scale_factor(0.0), 0.1f64.exp(), 1e-15));
    }

    #[test]
    fn curvature_examples() {
        let m = ScaleFactorModel::power_law(2.0, 1.0, 4).unwrap();
        let c = m.curvature_sample(0.0);
        assert!(close(c.ricci_scalar, 12.0, 1e-15));
        assert_eq!(c.hubble, 2.0);
        assert_eq!(c.hubble_rate, -2.0);

        let m = ScaleFactorModel::exponential(0.7, 0.3, 6).unwrap();
        for tau in [0.0, 1.0, 5.0] {
            assert_eq!(m.curvature_sample(tau).hubble_rate, 0.0);
        }

        let m = ScaleFactorModel::power_law(1.0, 2.0, 6).unwrap();
        assert!(close(m.curvature_sample(0.0).ricci_scalar, 5.0 / 8.0, 1e-15));
    }

    #[test]
    fn alpha_from_w_examples() {
        assert!(close(alpha_from_w(4, 0.0).unwrap(), 2.0, 1e-15));
        assert!(close(alpha_from_w(4, 1.0 / 3.0).unwrap(), 1.0, 1e-15));
        assert!(matches!(
            alpha_from_w(4, -1.0 / 3.0),
            Err(Error::DegenerateEquationOfState { dim: 4, .. })
        ));
        assert!(matches!(alpha_from_w(3, 0.0), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn friedmann_consistency_examples() {
        let m = ScaleFactorModel::from_w(0.0, 1.0, 4).unwrap();
        assert!(m.friedmann_consistency().unwrap() <= 1e-15);

        let mut off = m;
        off.alpha = 1.9;
        assert!(close(off.friedmann_consistency().unwrap(), 0.1, 1e-12));

        let m = ScaleFactorModel::from_w(0.25, 1.0, 5).unwrap();
        assert!(close(m.alpha(), 2.0 / 3.0, 1e-15));
        assert!(m.friedmann_consistency().unwrap() <= 1e-15);

        let m = ScaleFactorModel::power_law(2.0, 1.0, 4).unwrap();
        assert_eq!(m.friedmann_consistency(), Err(Error::MissingW));
    }

    #[test]
    fn constructor_guards() {
        assert!(ScaleFactorModel::power_law(1.0, 0.0, 4).is_err());
        assert!(ScaleFactorModel::power_law(1.0, 1.0, 3).is_err());
        assert!(ScaleFactorModel::exponential(0.0, 1.0, 4).is_err());
        assert!(ScaleFactorModel::exponential(-1.0, 1.0, 4).is_err());
        // Λ-dominated power law stays positive
        let m = ScaleFactorModel::power_law(-1.0, 0.5, 4).unwrap();
        assert!(m.scale_factor(0.0) > 0.0 && m.scale_factor(1e6) > 0.0);
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let step = 1e-5;
        let models = [
            ScaleFactorModel::power_law(2.0, 1.0, 4).unwrap(),
            ScaleFactorModel::power_law(-1.0, 0.7, 5).unwrap(),
            ScaleFactorModel::power_law(0.4, 2.0, 9).unwrap(),
            ScaleFactorModel::exponential(0.3, 0.5, 6).unwrap(),
        ];
        for m in &models {
            for i in 0..50 {
                let tau = 0.1 + 0.2 * i as f64;
                let fd_h = (m.scale_factor(tau + step) - m.scale_factor(tau - step))
                    / (2.0 * step)
                    / m.scale_factor(tau);
                assert!(close(fd_h, m.hubble(tau), 1e-6), "{m:?} tau={tau}");
                let fd_hdot = (m.hubble(tau + step) - m.hubble(tau - step)) / (2.0 * step);
                let exact = m.hubble_rate(tau);
                if exact == 0.0 {
                    assert!(fd_hdot.abs() <= 1e-12);
                } else {
                    assert!(close(fd_hdot, exact, 1e-6), "{m:?} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn matter_dominated_curvature_closed_form() {
        for dim in 4..=10u32 {
            let d = dim as f64;
            let m = ScaleFactorModel::power_law(2.0 / (d - 3.0), 1.0, dim).unwrap();
            for tau in [0.0f64, 0.5, 3.0, 17.0] {
                let s = tau + 1.0;
                let expected = 4.0 * (d - 1.0) / ((d - 3.0).powi(2) * s.powf(2.0 * (d - 1.0) / (d - 3.0)));
                assert!(close(m.curvature_sample(tau).ricci_scalar, expected, 1e-12));
            }
        }
    }

    #[test]
    fn alpha_from_w_solves_scaling_relation() {
        for dim in 4..=12u32 {
            for i in 0..200 {
                let w = -1.5 + 0.0173 * i as f64;
                if (w - degenerate_w(dim)).abs() < 1e-6 {
                    continue;
                }
                let m = ScaleFactorModel::from_w(w, 1.0, dim).unwrap();
                assert!(m.friedmann_consistency().unwrap() <= 1e-12);
            }
        }
    }
}
