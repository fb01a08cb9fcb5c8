//! Regime classification over a parameter lattice.

use kgfrw::geometry::Family;
use kgfrw::regimes::{
    classify, Background, Bound, ClassifyInput, Direction, Number, Real, RegimeVerdict, XiBound,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;

/// Hard ceiling on the lattice size of one sweep.
pub const MAX_POINTS: usize = 1_000_000;

/// A number written either as a TOML/JSON number or as a string such as
/// `"1/6"`. Decimal literals are read exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    pub fn to_real(&self) -> CliResult<Real> {
        let text = match self {
            Scalar::Num(x) => x.to_string(),
            Scalar::Text(s) => s.clone(),
        };
        text.parse().map_err(|e: kgfrw::Error| CliError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: Scalar,
    pub stop: Scalar,
    /// Number of points, endpoints included. Zero gives an empty axis.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    // Lists go first: an untagged struct would also accept a 3-element array.
    List(Vec<Scalar>),
    Range(RangeSpec),
    Single(Scalar),
}

impl AxisSpec {
    pub fn points(&self) -> CliResult<Vec<Real>> {
        match self {
            AxisSpec::Single(s) => Ok(vec![s.to_real()?]),
            AxisSpec::List(v) => v.iter().map(Scalar::to_real).collect(),
            AxisSpec::Range(r) => {
                let (a, b) = (r.start.to_real()?, r.stop.to_real()?);
                Ok(match r.steps {
                    0 => vec![],
                    1 => vec![a],
                    n => {
                        let span = b.sub(a);
                        let last = Real::int(n as i64 - 1);
                        (0..n).map(|i| a.add(span.mul(Real::int(i as i64)).div(last))).collect()
                    }
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    /// Equation of state `w`.
    #[default]
    W,
    /// Power-law exponent.
    Alpha,
    /// Exponential-family rate.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub dim: AxisSpec,
    #[serde(default)]
    pub background: BackgroundKind,
    pub values: AxisSpec,
    pub xi: AxisSpec,
    pub p: AxisSpec,
    #[serde(default = "unit_tau0")]
    pub tau0: AxisSpec,
    #[serde(default = "max_points")]
    pub max_points: usize,
}

fn unit_tau0() -> AxisSpec {
    AxisSpec::Single(Scalar::Num(1.0))
}
fn max_points() -> usize {
    MAX_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepOutput {
    pub directory: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub output: SweepOutput,
    pub sweep: SweepSection,
}

pub const VERDICT_COLUMNS: [&str; 20] = [
    "index",
    "dim",
    "background",
    "value",
    "xi",
    "p",
    "tau0",
    "family",
    "w",
    "alpha",
    "case",
    "assumption1",
    "h_coefficient",
    "assumption3",
    "a_integral",
    "p_bound",
    "xi_bound",
    "table_satisfied",
    "admissible",
    "error",
];

/// The expanded lattice, iterated in lexicographic order over
/// `(dim, value, xi, p, tau0)` with `tau0` fastest.
pub struct Lattice {
    background: BackgroundKind,
    dims: Vec<u32>,
    values: Vec<Real>,
    xis: Vec<Real>,
    ps: Vec<Real>,
    tau0s: Vec<f64>,
}

impl Lattice {
    pub fn new(s: &SweepSection) -> CliResult<Self> {
        let dims = s
            .dim
            .points()?
            .into_iter()
            .map(|d| {
                let v = d.to_f64();
                if v.fract() != 0.0 || !(4.0..=64.0).contains(&v) {
                    return Err(CliError::Validation(format!("dim integer in 4..=64 (got {d})")));
                }
                Ok(v as u32)
            })
            .collect::<CliResult<_>>()?;
        let tau0s = s
            .tau0
            .points()?
            .into_iter()
            .map(|t| {
                let v = t.to_f64();
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Validation(format!("tau0 > 0 (got {t})")));
                }
                Ok(v)
            })
            .collect::<CliResult<_>>()?;
        Ok(Self {
            background: s.background,
            dims,
            values: s.values.points()?,
            xis: s.xi.points()?,
            ps: s.p.points()?,
            tau0s,
        })
    }

    /// Total number of points, `None` on overflow.
    pub fn len(&self) -> Option<usize> {
        [self.dims.len(), self.values.len(), self.xis.len(), self.ps.len(), self.tau0s.len()]
            .into_iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(n))
    }

    fn point(&self, mut i: usize) -> (u32, Real, Real, Real, f64) {
        let t = i % self.tau0s.len();
        i /= self.tau0s.len();
        let p = i % self.ps.len();
        i /= self.ps.len();
        let x = i % self.xis.len();
        i /= self.xis.len();
        let v = i % self.values.len();
        i /= self.values.len();
        (self.dims[i], self.values[v], self.xis[x], self.ps[p], self.tau0s[t])
    }

    /// Classify point `i` and format its CSV row.
    pub fn row(&self, i: usize) -> (Vec<String>, bool) {
        let (dim, value, xi, p, tau0) = self.point(i);
        let background = match self.background {
            BackgroundKind::W => Background::EquationOfState(value),
            BackgroundKind::Alpha => Background::PowerLaw(value),
            BackgroundKind::Rate => Background::Exponential(value),
        };
        let kind = match self.background {
            BackgroundKind::W => "w",
            BackgroundKind::Alpha => "alpha",
            BackgroundKind::Rate => "rate",
        };
        let mut row = vec![
            i.to_string(),
            dim.to_string(),
            kind.to_string(),
            fmt_real(value),
            fmt_real(xi),
            fmt_real(p),
            fmt_f64(tau0),
        ];
        match classify(&ClassifyInput { dim, background, xi, p, tau0 }) {
            Ok(v) => {
                let ok = v.admissible;
                row.extend(verdict_cells(&v));
                row.push(String::new());
                (row, ok)
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 12));
                row.push(e.to_string());
                (row, false)
            }
        }
    }

    /// Rows `0..count` in lattice order, computed in parallel.
    pub fn rows(&self, count: usize) -> Vec<(Vec<String>, bool)> {
        (0..count).into_par_iter().map(|i| self.row(i)).collect()
    }
}

fn fmt_real(r: Real) -> String {
    match r {
        Real::Exact(q) => q.to_string(),
        Real::Float(x) => fmt_f64(x),
    }
}

fn fmt_number(n: &Number) -> String {
    match n.exact {
        Some(q) => q.to_string(),
        None => fmt_f64(n.value),
    }
}

fn fmt_bound(b: &Bound) -> String {
    let d = match b.direction {
        Direction::Less => "<",
        Direction::Greater => ">",
    };
    format!("{d}{}", fmt_number(&b.value))
}

fn verdict_cells(v: &RegimeVerdict) -> Vec<String> {
    let family = match v.family {
        Family::PowerLaw => "power_law",
        Family::Exponential => "exponential",
    };
    vec![
        family.to_string(),
        v.w.as_ref().map(fmt_number).unwrap_or_default(),
        fmt_number(&v.alpha),
        v.case_label.to_string(),
        v.assumption1.pass.to_string(),
        fmt_f64(v.assumption1.h_coefficient),
        v.assumption3.converges.to_string(),
        v.assumption3.value.map(fmt_f64).unwrap_or_default(),
        v.p_bound.as_ref().map(fmt_bound).unwrap_or_default(),
        match &v.xi_bound {
            None => String::new(),
            Some(XiBound::Unrestricted) => "any".into(),
            Some(XiBound::Bounded(b)) => fmt_bound(b),
        },
        v.table_satisfied.to_string(),
        v.admissible.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_document;

    #[test]
    fn exact_range_hits_threshold() {
        let axis = AxisSpec::Range(RangeSpec {
            start: Scalar::Num(0.0),
            stop: Scalar::Text("1/3".into()),
            steps: 5,
        });
        let pts: Vec<String> = axis.points().unwrap().into_iter().map(fmt_real).collect();
        assert_eq!(pts, ["0", "1/12", "1/6", "1/4", "1/3"]);
    }

    #[test]
    fn lattice_order_is_lexicographic() {
        let cfg: SweepConfig = parse_document(
            "[sweep]\ndim = [4, 5]\nvalues = 0\nxi = [0.1, 0.2]\np = [3, 4, 5]\n",
        )
        .unwrap();
        let lat = Lattice::new(&cfg.sweep).unwrap();
        assert_eq!(lat.len(), Some(12));
        let rows = lat.rows(12);
        let key: Vec<(String, String, String)> =
            rows.iter().map(|(r, _)| (r[1].clone(), r[4].clone(), r[5].clone())).collect();
        let mut sorted = key.clone();
        sorted.sort_by(|a, b| {
            (a.0.parse::<u32>().unwrap(), &a.1, a.2.parse::<u32>().unwrap())
                .cmp(&(b.0.parse::<u32>().unwrap(), &b.1, b.2.parse::<u32>().unwrap()))
        });
        assert_eq!(key, sorted);
        assert_eq!(rows[0].0[0], "0");
        assert!(rows.iter().all(|(r, _)| r.len() == VERDICT_COLUMNS.len()));
    }

    #[test]
    fn small_dimension_is_rejected() {
        let cfg: SweepConfig =
            parse_document("[sweep]\ndim = 3\nvalues = 0\nxi = 0.2\np = 4\n").unwrap();
        assert!(matches!(Lattice::new(&cfg.sweep), Err(CliError::Validation(_))));
    }
}
