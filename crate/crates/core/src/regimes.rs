//! Admissibility of a background for the small-data global theory.
//!
//! Three conditions are checked:
//!
//! * sign: `h(τ) ≤ 0` and `∂τh(τ) ≥ 0` for all `τ ≥ 0`;
//! * the potential is the monomial `−ε/(p+1) φ^{p+1}` (always true here);
//! * integrability: `A(τ₀) = ∫_{τ₀}^∞ a(s)^{(D+2−(D−2)p)/2} ds < ∞`.
//!
//! For power laws `h = c/(τ+τ₀)²`, so the sign condition is just `c ≤ 0`.
//! Splitting by the exponent `α` relative to `2/(D−2)` gives the familiar
//! case table with explicit bounds on `ξ` and `p`. The case table uses strict
//! inequalities while the sign condition itself is non-strict; both are
//! reported, and admissibility follows the conditions.
//!
//! The smallness threshold on `ε` depends on constants that are not
//! computable in closed form; it scales like `1/A(τ₀)`, which is reported so
//! regimes can be compared.
//!
//! Inputs may be exact rationals (parsed from decimal or `n/d` strings), in
//! which case bounds and case boundaries are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{Family, ScaleFactorModel, DEGENERATE_W_TOL};
use crate::matter::CouplingSpec;

pub type Rational = Ratio<i64>;

/// Tolerance for recognizing `α = 2/(D−2)` when `α` is a float.
pub const CASE_IV_TOL: f64 = 1e-12;

/// A real number that stays exact while its inputs are rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Real {
    Exact(Rational),
    Float(f64),
}

impl Real {
    pub fn int(n: i64) -> Self {
        Real::Exact(Rational::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Real::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Real::Float(x) => x,
        }
    }

    pub fn exact(self) -> Option<Rational> {
        match self {
            Real::Exact(r) => Some(r),
            Real::Float(_) => None,
        }
    }

    fn combine(
        self,
        other: Real,
        exact: impl Fn(&Rational, &Rational) -> Option<Rational>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (self, other) {
            if let Some(r) = exact(&a, &b) {
                return Real::Exact(r);
            }
        }
        Real::Float(float(self.to_f64(), other.to_f64()))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Real) -> Real {
        self.combine(o, |a, b| a.checked_add(b), |a, b| a + b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Real) -> Real {
        self.combine(o, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Real) -> Real {
        self.combine(o, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, o: Real) -> Real {
        self.combine(
            o,
            |a, b| if b.is_zero() { None } else { a.checked_div(b) },
            |a, b| a / b,
        )
    }

    pub fn abs(self) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(r.abs()),
            Real::Float(x) => Real::Float(x.abs()),
        }
    }

    /// Exact when both sides are exact, float comparison otherwise.
    pub fn compare(self, o: Real) -> Ordering {
        match (self, o) {
            (Real::Exact(a), Real::Exact(b)) => a.cmp(&b),
            _ => self.to_f64().partial_cmp(&o.to_f64()).unwrap_or(Ordering::Equal),
        }
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real::Float(x)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) => write!(f, "{r}"),
            Real::Float(x) => write!(f, "{x}"),
        }
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: i64 = digits.parse().ok()?;
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

impl FromStr for Real {
    type Err = Error;

    /// Accepts `7/2`, `-0.25`, `3` exactly; anything else `f64` parses
    /// (exponents, long decimals) becomes a float.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameters(format!("cannot read {s:?} as a number"));
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_decimal(n.trim()).ok_or_else(bad)?;
            let d = parse_decimal(d.trim()).ok_or_else(bad)?;
            if d.is_zero() {
                return Err(Error::InvalidParameters(format!("zero denominator in {s:?}")));
            }
            return Ok(Real::Exact(n / d));
        }
        if let Some(r) = parse_decimal(s) {
            return Ok(Real::Exact(r));
        }
        match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Real::Float(x)),
            _ => Err(bad()),
        }
    }
}

/// A reported quantity with its exact form when one is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Number {
    pub value: f64,
    #[serde(serialize_with = "serialize_exact")]
    pub exact: Option<Rational>,
}

fn serialize_exact<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl From<Real> for Number {
    fn from(r: Real) -> Self {
        Number { value: r.to_f64(), exact: r.exact() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub direction: Direction,
    pub value: Number,
}

impl Bound {
    fn strictly_satisfied_by(&self, x: Real) -> bool {
        let v = match self.value.exact {
            Some(e) => Real::Exact(e),
            None => Real::Float(self.value.value),
        };
        let ord = x.compare(v);
        match self.direction {
            Direction::Less => ord == Ordering::Less,
            Direction::Greater => ord == Ordering::Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiBound {
    Unrestricted,
    Bounded(Bound),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
    ExponentialCase,
    Inadmissible,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::I => "I",
            CaseLabel::II => "II",
            CaseLabel::III => "III",
            CaseLabel::IV => "IV",
            CaseLabel::ExponentialCase => "exponential",
            CaseLabel::Inadmissible => "inadmissible",
        };
        f.write_str(s)
    }
}

/// Sign condition on `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assumption1 {
    pub pass: bool,
    /// `c` in `h = c/(τ+τ₀)²` for power laws; the constant `h` for exponentials.
    pub h_coefficient: f64,
    /// A time at which `h > 0` or `∂τh < 0`, present on failure.
    pub witness_tau: Option<f64>,
}

/// Integrability of the source weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assumption3 {
    pub converges: bool,
    /// Exponent of `(τ+τ₀)` (power law) or rate `β` (exponential) in the integrand.
    pub exponent: f64,
    /// `A(τ₀)`; `None` when the integral diverges.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub dim: u32,
    pub w: Option<Number>,
    pub family: Family,
    pub alpha: Number,
    pub xi: f64,
    pub p: f64,
    pub tau0: f64,
    pub case_label: CaseLabel,
    pub assumption1: Assumption1,
    pub assumption3: Assumption3,
    pub p_bound: Option<Bound>,
    pub xi_bound: Option<XiBound>,
    /// `(ξ, p)` strictly inside the case-table bounds.
    pub table_satisfied: bool,
    /// Sign condition and integrability both hold.
    pub admissible: bool,
}

/// How the background is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    EquationOfState(Real),
    PowerLaw(Real),
    /// Exponential family with the given positive rate.
    Exponential(Real),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyInput {
    pub dim: u32,
    pub background: Background,
    pub xi: Real,
    pub p: Real,
    pub tau0: f64,
}

/// `(D−2)/(4(D−1))`, the conformal value of `ξ`.
pub fn xi_threshold(dim: u32) -> Rational {
    let d = dim as i64;
    Rational::new(d - 2, 4 * (d - 1))
}

fn sign(x: Real) -> Ordering {
    x.compare(Real::int(0))
}

fn is_case_iv(dim: u32, alpha: Real) -> bool {
    let target = Real::Exact(Rational::new(2, dim as i64 - 2));
    match alpha {
        Real::Exact(_) => alpha.compare(target) == Ordering::Equal,
        Real::Float(a) => (a - target.to_f64()).abs() <= CASE_IV_TOL,
    }
}

fn assumption1_parts(family: Family, dim: u32, alpha: Real, xi: Real) -> Assumption1 {
    let d = Real::int(dim as i64);
    let half = Real::Exact(Rational::new(dim as i64 - 2, 2));
    let factor = half.sub(Real::int(2).mul(xi).mul(d.sub(Real::int(1))));
    match family {
        Family::PowerLaw => {
            let growth = if is_case_iv(dim, alpha) {
                Real::int(0)
            } else {
                alpha.mul(half).sub(Real::int(1))
            };
            let c = alpha.mul(factor).mul(growth);
            let pass = sign(c) != Ordering::Greater;
            Assumption1 {
                pass,
                h_coefficient: c.to_f64(),
                witness_tau: (!pass).then_some(0.0),
            }
        }
        Family::Exponential => {
            let pass = xi.compare(Real::Exact(xi_threshold(dim))) != Ordering::Less;
            let h = alpha.mul(alpha).mul(half).mul(factor);
            Assumption1 { pass, h_coefficient: h.to_f64(), witness_tau: (!pass).then_some(0.0) }
        }
    }
}

fn assumption3_parts(family: Family, dim: u32, alpha: Real, p: Real, tau0: f64) -> Assumption3 {
    let d = dim as i64;
    let weight = Real::int(d + 2).sub(Real::int(d - 2).mul(p));
    let exponent = alpha.mul(weight).div(Real::int(2));
    let e = exponent.to_f64();
    match family {
        Family::PowerLaw => {
            let converges = exponent.compare(Real::int(-1)) == Ordering::Less;
            Assumption3 {
                converges,
                exponent: e,
                value: converges.then(|| tau0.powf(e + 1.0) / (-e - 1.0)),
            }
        }
        Family::Exponential => {
            let converges = sign(exponent) == Ordering::Less;
            Assumption3 { converges, exponent: e, value: converges.then(|| (e * tau0).exp() / -e) }
        }
    }
}

/// Sign condition on `h` for a model, with `α = 2/(D−2)` recognized to
/// within [`CASE_IV_TOL`].
pub fn check_assumption1(model: &ScaleFactorModel, coupling: CouplingSpec) -> Assumption1 {
    assumption1_parts(model.family(), model.dim(), Real::Float(model.alpha()), Real::Float(coupling.xi))
}

/// Closed-form `A(τ₀)` for the model's own `τ₀`.
pub fn a_integral(model: &ScaleFactorModel, p: f64) -> Assumption3 {
    assumption3_parts(model.family(), model.dim(), Real::Float(model.alpha()), Real::Float(p), model.tau0())
}

/// `A` with an arbitrary lower limit `τ₀ ≥ 0` (exponential) or `τ₀ > 0` (power law).
pub fn a_integral_from(family: Family, dim: u32, alpha: f64, p: f64, tau0: f64) -> Assumption3 {
    assumption3_parts(family, dim, Real::Float(alpha), Real::Float(p), tau0)
}

/// Case label and table bounds for a power-law exponent.
fn power_law_case(dim: u32, alpha: Real) -> (CaseLabel, Option<Bound>, Option<XiBound>) {
    let d = dim as i64;
    let thr = Bound {
        direction: Direction::Greater,
        value: Real::Exact(xi_threshold(dim)).into(),
    };
    let two = Real::int(2);
    let dm2 = Real::int(d - 2);
    let upper = |value: Real| Some(Bound { direction: Direction::Greater, value: value.into() });
    if is_case_iv(dim, alpha) {
        let v = Real::int(2 * d).div(dm2);
        return (CaseLabel::IV, upper(v), Some(XiBound::Unrestricted));
    }
    match sign(alpha) {
        Ordering::Equal => (CaseLabel::Inadmissible, None, None),
        Ordering::Less => {
            let v = Real::int(d + 2).sub(two.div(alpha.abs())).div(dm2);
            let p = Some(Bound { direction: Direction::Less, value: v.into() });
            (CaseLabel::I, p, Some(XiBound::Bounded(thr)))
        }
        Ordering::Greater => {
            let v = Real::int(d + 2).add(two.div(alpha)).div(dm2);
            if alpha.compare(two.div(dm2)) == Ordering::Less {
                let xi = Bound { direction: Direction::Less, ..thr };
                (CaseLabel::II, upper(v), Some(XiBound::Bounded(xi)))
            } else {
                (CaseLabel::III, upper(v), Some(XiBound::Bounded(thr)))
            }
        }
    }
}

/// Classify one parameter point.
pub fn classify(input: &ClassifyInput) -> Result<RegimeVerdict> {
    let ClassifyInput { dim, background, xi, p, tau0 } = *input;
    if dim < 4 {
        return Err(Error::InvalidParameters(format!("D = {dim} must be at least 4")));
    }
    if !(p.is_finite() && sign(p) == Ordering::Greater) {
        return Err(Error::InvalidParameters(format!("p = {p} must be positive")));
    }
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(Error::InvalidParameters(format!("tau0 = {tau0} must be positive")));
    }
    if !xi.is_finite() {
        return Err(Error::InvalidParameters(format!("xi = {xi} must be finite")));
    }
    let d = dim as i64;
    let (family, alpha, w) = match background {
        Background::EquationOfState(w) => {
            if !w.is_finite() {
                return Err(Error::InvalidParameters(format!("w = {w} must be finite")));
            }
            let denom = Real::int(d - 1).mul(w.add(Real::int(1))).sub(Real::int(2));
            let degenerate = match w {
                Real::Exact(_) => sign(denom) == Ordering::Equal,
                Real::Float(x) => (x - crate::geometry::degenerate_w(dim)).abs() <= DEGENERATE_W_TOL,
            };
            if degenerate {
                (Family::Exponential, Real::int(1), Some(w))
            } else {
                (Family::PowerLaw, Real::int(2).div(denom), Some(w))
            }
        }
        Background::PowerLaw(a) => {
            if !a.is_finite() {
                return Err(Error::InvalidParameters(format!("alpha = {a} must be finite")));
            }
            (Family::PowerLaw, a, None)
        }
        Background::Exponential(rate) => {
            if !(rate.is_finite() && sign(rate) == Ordering::Greater) {
                return Err(Error::InvalidParameters(format!("rate = {rate} must be positive")));
            }
            (Family::Exponential, rate, None)
        }
    };

    let (case_label, p_bound, xi_bound) = match family {
        Family::PowerLaw => power_law_case(dim, alpha),
        Family::Exponential => {
            let v = Real::int(d + 2).div(Real::int(d - 2));
            (
                CaseLabel::ExponentialCase,
                Some(Bound { direction: Direction::Greater, value: v.into() }),
                Some(XiBound::Bounded(Bound {
                    direction: Direction::Greater,
                    value: Real::Exact(xi_threshold(dim)).into(),
                })),
            )
        }
    };
    let assumption1 = assumption1_parts(family, dim, alpha, xi);
    let assumption3 = assumption3_parts(family, dim, alpha, p, tau0);
    let table_satisfied = match (p_bound, xi_bound) {
        (Some(pb), Some(xb)) => {
            pb.strictly_satisfied_by(p)
                && match xb {
                    XiBound::Unrestricted => true,
                    XiBound::Bounded(b) => b.strictly_satisfied_by(xi),
                }
        }
        _ => false,
    };
    Ok(RegimeVerdict {
        dim,
        w: w.map(Number::from),
        family,
        alpha: alpha.into(),
        xi: xi.to_f64(),
        p: p.to_f64(),
        tau0,
        case_label,
        assumption1,
        assumption3,
        p_bound,
        xi_bound,
        table_satisfied,
        admissible: assumption1.pass && assumption3.converges,
    })
}
