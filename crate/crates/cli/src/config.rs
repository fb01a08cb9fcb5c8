//! Run configuration: TOML (or JSON) document, defaults and validation.
//!
//! Every section rejects unknown keys. `parse_config` returns a fully
//! resolved config: optional fields that have a computed default (`dt`,
//! `radius`, `center`) are filled in, so echoing the result records exactly
//! what ran.

use std::path::Path;

use kgfrw::evolve::SolverOptions;
use kgfrw::geometry::ScaleFactorModel;
use kgfrw::grid::{FieldState, Frame, SpatialGrid};
use kgfrw::matter::{CouplingSpec, FieldTheory, PotentialSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Columns of `series.csv` other than the per-order energies.
pub const SCALAR_COLUMNS: [&str; 5] = ["tau", "l2", "linf", "decay_product", "support_radius"];

/// Largest supported `k_max`; higher orders only amplify roundoff.
pub const MAX_K: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    #[default]
    PowerLaw,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub family: FamilyName,
    /// Power-law exponent, or the rate for the exponential family.
    pub alpha: Option<f64>,
    /// Equation of state; power-law family only.
    pub w: Option<f64>,
    #[serde(default = "one")]
    pub tau0: f64,
    #[serde(default = "four")]
    pub dim: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatterSection {
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "three")]
    pub p: f64,
}

impl Default for MatterSection {
    fn default() -> Self {
        Self { xi: 0.0, epsilon: 0.0, p: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d_sim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Mol,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "original")]
    pub frame: Frame,
    /// Defaults to the CFL limit `cfl_safety·Δx/√d`.
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default = "one_usize")]
    pub sample_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `A·exp(−r²/(R²−r²))` inside radius `R`, zero velocity.
    #[default]
    Bump,
    /// Right-moving `A·cos(k(x₁ − τ))` with `k = 2π·mode/L`.
    PlaneWave,
    /// Random smooth field from the seeded generator, zero velocity.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Bump radius; defaults to `L/8`.
    pub radius: Option<f64>,
    /// Bump center; defaults to the box center.
    pub center: Option<Vec<f64>>,
    /// Plane-wave mode number, or the largest mode of a random field.
    #[serde(default = "one_i64")]
    pub mode: i64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            profile: Profile::Bump,
            amplitude: default_amplitude(),
            radius: None,
            center: None,
            mode: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<String>,
    #[serde(default = "two")]
    pub k_max: u32,
    /// Threshold for the `support_radius` column.
    #[serde(default = "default_support_threshold")]
    pub support_threshold: f64,
    /// Store every sampled state in `trajectory.json` (needed by `energy`).
    #[serde(default = "yes")]
    pub trajectory: bool,
    #[serde(default)]
    pub plot: bool,
    #[serde(default = "default_plot_columns")]
    pub plot_columns: Vec<String>,
    #[serde(default = "yes")]
    pub plot_log_y: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            k_max: 2,
            support_threshold: default_support_threshold(),
            trajectory: true,
            plot: false,
            plot_columns: default_plot_columns(),
            plot_log_y: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub matter: MatterSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn four() -> u32 {
    4
}
fn two() -> u32 {
    2
}
fn one_usize() -> usize {
    1
}
fn one_i64() -> i64 {
    1
}
fn yes() -> bool {
    true
}
fn original() -> Frame {
    Frame::Original
}
fn default_l_max() -> usize {
    30
}
fn default_tol() -> f64 {
    1e-12
}
fn default_cfl() -> f64 {
    SolverOptions::default().cfl_safety
}
fn default_blowup() -> f64 {
    SolverOptions::default().blowup_threshold
}
fn default_amplitude() -> f64 {
    0.1
}
fn default_support_threshold() -> f64 {
    1e-10
}
fn default_plot_columns() -> Vec<String> {
    vec!["decay_product".into()]
}

/// Parse a document as TOML, or as JSON when it starts with `{`.
pub fn parse_document<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))
    }
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text)
}

/// Parse and validate a run configuration.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let raw: RunConfig = parse_document(text)?;
    raw.validated()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    /// Check every cross-field guard and fill computed defaults.
    pub fn validated(mut self) -> CliResult<Self> {
        let model = self.model()?;
        let _ = self.theory_with(model)?;

        let g = &self.grid;
        if !(1..=3).contains(&g.d_sim) {
            return Err(invalid(format!("d_sim in 1..=3 (got {})", g.d_sim)));
        }
        if !g.n.is_multiple_of(2) {
            return Err(invalid(format!("N even (got {})", g.n)));
        }
        if g.n < 16 {
            return Err(invalid(format!("N at least 16 (got {})", g.n)));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(invalid(format!("L > 0 (got {})", g.length)));
        }
        let grid = self.grid()?;

        let s = &mut self.solver;
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(invalid(format!("T > 0 (got {})", s.t_final)));
        }
        if !(s.cfl_safety > 0.0 && s.cfl_safety.is_finite()) {
            return Err(invalid(format!("cfl_safety > 0 (got {})", s.cfl_safety)));
        }
        if s.blowup_threshold.is_nan() || s.blowup_threshold <= 0.0 {
            return Err(invalid(format!("blowup_threshold > 0 (got {})", s.blowup_threshold)));
        }
        if s.sample_every == 0 {
            return Err(invalid("sample_every at least 1"));
        }
        if s.l_max == 0 {
            return Err(invalid("l_max at least 1"));
        }
        if s.tol.is_nan() || s.tol <= 0.0 {
            return Err(invalid(format!("tol > 0 (got {})", s.tol)));
        }
        let limit = SolverOptions { cfl_safety: s.cfl_safety, ..Default::default() }.max_dt(&grid);
        let dt = s.dt.unwrap_or(limit);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt > 0 (got {dt})")));
        }
        if s.mode == Mode::Mol && dt > limit * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "dt within the CFL limit cfl_safety·Δx/√d = {limit} (got {dt})"
            )));
        }
        s.dt = Some(dt);

        let half = 0.5 * g.length;
        let init = &mut self.initial;
        if !init.amplitude.is_finite() {
            return Err(invalid("amplitude finite"));
        }
        match init.profile {
            Profile::Bump => {
                let r = init.radius.unwrap_or(g.length / 8.0);
                if r.is_nan() || r <= 0.0 {
                    return Err(invalid(format!("radius > 0 (got {r})")));
                }
                if r >= half {
                    return Err(invalid(format!("radius < L/2 (radius {r}, L/2 {half})")));
                }
                if r + s.t_final >= half {
                    return Err(invalid(format!(
                        "wraparound: radius + T = {} must stay below L/2 = {half}",
                        r + s.t_final
                    )));
                }
                init.radius = Some(r);
                let c = init.center.clone().unwrap_or_else(|| grid.center());
                if c.len() != g.d_sim {
                    return Err(invalid(format!(
                        "center has d_sim = {} coordinates (got {})",
                        g.d_sim,
                        c.len()
                    )));
                }
                init.center = Some(c);
            }
            Profile::PlaneWave | Profile::Random => {
                if init.radius.is_some() || init.center.is_some() {
                    return Err(invalid("radius and center apply to the bump profile only"));
                }
                if init.mode < 1 || init.mode >= (g.n / 2) as i64 {
                    return Err(invalid(format!(
                        "mode in 1..N/2 (got {}, N/2 = {})",
                        init.mode,
                        g.n / 2
                    )));
                }
            }
        }

        let out = &self.output;
        if out.k_max > MAX_K {
            return Err(invalid(format!("k_max at most {MAX_K} (got {})", out.k_max)));
        }
        if out.support_threshold.is_nan() || out.support_threshold < 0.0 {
            return Err(invalid("support_threshold non-negative"));
        }
        let columns = series_columns(out.k_max);
        if let Some(bad) = out.plot_columns.iter().find(|c| !columns.contains(c)) {
            return Err(invalid(format!("plot_columns entries name series columns (got {bad:?})")));
        }
        Ok(self)
    }

    pub fn model(&self) -> CliResult<ScaleFactorModel> {
        let m = &self.model;
        if m.tau0.is_nan() || m.tau0 <= 0.0 {
            return Err(invalid(format!("tau0 > 0 (got {})", m.tau0)));
        }
        let built = match (m.family, m.alpha, m.w) {
            (FamilyName::PowerLaw, Some(a), None) => ScaleFactorModel::power_law(a, m.tau0, m.dim),
            (FamilyName::PowerLaw, None, Some(w)) => ScaleFactorModel::from_w(w, m.tau0, m.dim),
            (FamilyName::Exponential, Some(rate), None) => {
                ScaleFactorModel::exponential(rate, m.tau0, m.dim)
            }
            (FamilyName::Exponential, _, Some(_)) => {
                return Err(invalid("the exponential family takes alpha (its rate), not w"))
            }
            _ => return Err(invalid("model needs exactly one of alpha or w")),
        };
        built.map_err(|e| invalid(e.to_string()))
    }

    fn theory_with(&self, model: ScaleFactorModel) -> CliResult<FieldTheory> {
        let potential = PotentialSpec::new(self.matter.epsilon, self.matter.p)
            .map_err(|e| invalid(e.to_string()))?;
        if !self.matter.xi.is_finite() {
            return Err(invalid("xi finite"));
        }
        Ok(FieldTheory::new(model, CouplingSpec { xi: self.matter.xi }, potential))
    }

    pub fn theory(&self) -> CliResult<FieldTheory> {
        self.theory_with(self.model()?)
    }

    pub fn grid(&self) -> CliResult<SpatialGrid> {
        SpatialGrid::new(self.grid.d_sim, self.grid.n, self.grid.length)
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn dt(&self) -> f64 {
        self.solver.dt.expect("validated config has dt")
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            cfl_safety: self.solver.cfl_safety,
            blowup_threshold: self.solver.blowup_threshold,
            dealias: self.solver.dealias,
            initial_support: match self.initial.profile {
                Profile::Bump => self.initial.radius,
                _ => None,
            },
        }
    }

    /// Center used for the `support_radius` column.
    pub fn support_center(&self, grid: &SpatialGrid) -> Vec<f64> {
        self.initial.center.clone().unwrap_or_else(|| grid.center())
    }

    /// Original-frame initial data at `τ = 0`.
    pub fn initial_state(&self, grid: &SpatialGrid) -> CliResult<FieldState> {
        let init = &self.initial;
        let amp = init.amplitude;
        let (phi, pi) = match init.profile {
            Profile::Bump => grid.bump_initial_data(
                amp,
                init.radius.expect("validated"),
                init.center.as_deref().expect("validated"),
            )?,
            Profile::PlaneWave => {
                let k = 2.0 * std::f64::consts::PI * init.mode as f64 / grid.length();
                (0..grid.len())
                    .map(|i| {
                        let x = grid.coordinates(i)[0];
                        (amp * (k * x).cos(), amp * k * (k * x).sin())
                    })
                    .unzip()
            }
            Profile::Random => {
                let phi = random_field(grid, init.mode, amp, self.seed);
                (phi, vec![0.0; grid.len()])
            }
        };
        Ok(FieldState::new(0.0, phi, pi, Frame::Original))
    }
}

/// Sum of cosines over modes with `|m_j| ≤ m_max` with seeded random
/// amplitudes and phases, decaying like `1/(1+|m|²)`, scaled to sup-norm `amp`.
fn random_field(grid: &SpatialGrid, m_max: i64, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.d_sim();
    let side = (2 * m_max + 1) as usize;
    let mut terms = Vec::new();
    for flat in 0..side.pow(d as u32) {
        let mut rest = flat;
        let m: Vec<f64> = (0..d)
            .map(|_| {
                let v = (rest % side) as i64 - m_max;
                rest /= side;
                v as f64
            })
            .collect();
        let norm2: f64 = m.iter().map(|v| v * v).sum();
        let c = rng.gen_range(-1.0..1.0) / (1.0 + norm2);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        terms.push((m, c, phase));
    }
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    let mut u: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.coordinates(i);
            terms
                .iter()
                .map(|(m, c, ph)| {
                    let arg: f64 = m.iter().zip(&x).map(|(mj, xj)| mj * xj).sum::<f64>() * scale;
                    c * (arg + ph).cos()
                })
                .sum()
        })
        .collect();
    let peak = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        u.iter_mut().for_each(|v| *v *= amp / peak);
    }
    u
}

/// Header of `series.csv` for a given `k_max`.
pub fn series_columns(k_max: u32) -> Vec<String> {
    let mut cols = vec!["tau".to_string()];
    cols.extend((0..=k_max).map(|k| format!("Hk_{k}")));
    cols.extend((0..=k_max).map(|k| format!("norm_{k}")));
    cols.extend(SCALAR_COLUMNS[1..].iter().map(|s| s.to_string()));
    cols
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
alpha = 0.0

[grid]
d_sim = 1
N = 64
L = 32.0

[solver]
T = 4.0
"#;

    #[test]
    fn minimal_document_gets_documented_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(cfg.solver.mode, Mode::Mol);
        assert_eq!(cfg.output.k_max, 2);
        assert_eq!(cfg.dt(), 0.5 * grid.spacing());
        assert_eq!(cfg.initial.radius, Some(4.0));
        assert_eq!(cfg.initial.center, Some(vec![16.0]));
        assert_eq!(cfg.model.dim, 4);
        assert_eq!(cfg.solver.frame, Frame::Original);
    }

    #[test]
    fn odd_n_is_rejected() {
        let doc = MINIMAL.replace("N = 64", "N = 15");
        match parse_config(&doc) {
            Err(CliError::Validation(m)) => assert!(m.contains("N even"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wraparound_is_rejected() {
        // radius = 0.6·L/2 and T = 0.5·L/2 with L = 32.
        let doc = MINIMAL.replace("T = 4.0", "T = 8.0") + "\n[initial]\nradius = 9.6\n";
        match parse_config(&doc) {
            Err(CliError::Validation(m)) => assert!(m.contains("wraparound"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn guards_name_their_invariant() {
        let cases = [
            (MINIMAL.replace("alpha = 0.0", "alpha = 0.0\ntau0 = -1.0"), "tau0 > 0"),
            (MINIMAL.to_string() + "\n[initial]\nradius = 16.0\n", "radius < L/2"),
            (MINIMAL.replace("alpha = 0.0", "alpha = 1.0\nw = 0.0"), "exactly one of alpha or w"),
            (MINIMAL.replace("T = 4.0", "T = 4.0\ndt = 1.0"), "CFL"),
        ];
        for (doc, needle) in cases {
            match parse_config(&doc) {
                Err(CliError::Validation(m)) => assert!(m.contains(needle), "{needle}: {m}"),
                other => panic!("{needle}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let doc = MINIMAL.replace("N = 64", "N = 64\nresolution = 3");
        match parse_config(&doc) {
            Err(CliError::Parse(m)) => {
                assert!(m.contains("resolution"), "{m}");
                assert!(m.contains("line"), "{m}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_encoding_is_equivalent() {
        let json = r#"{"model": {"alpha": 0.0}, "grid": {"d_sim": 1, "N": 64, "L": 32.0},
                       "solver": {"T": 4.0}}"#;
        assert_eq!(parse_config(json).unwrap(), parse_config(MINIMAL).unwrap());
    }

    #[test]
    fn degenerate_w_points_to_exponential_family() {
        let doc = MINIMAL.replace("alpha = 0.0", "w = -0.3333333333333333");
        match parse_config(&doc) {
            Err(CliError::Validation(m)) => assert!(m.contains("exponential"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_lists_every_key() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../config.schema.json")).unwrap();
        let cfg = parse_config(MINIMAL).unwrap();
        let echo = serde_json::to_value(&cfg).unwrap();
        let props = &schema["properties"];
        for (key, value) in echo.as_object().unwrap() {
            assert!(props.get(key).is_some(), "{key}");
            if let Some(inner) = value.as_object() {
                for sub in inner.keys() {
                    assert!(props[key]["properties"].get(sub).is_some(), "{key}.{sub}");
                }
            }
        }
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for name in ["decay.toml", "picard.toml"] {
            let text = std::fs::read_to_string(dir.join(name)).unwrap();
            parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let text = std::fs::read_to_string(dir.join("sweep.toml")).unwrap();
        let sweep: crate::sweep::SweepConfig = parse_document(&text).unwrap();
        assert_eq!(crate::sweep::Lattice::new(&sweep.sweep).unwrap().len(), Some(486));
    }

    #[test]
    fn random_profile_is_seeded() {
        let doc = MINIMAL.to_string() + "\n[initial]\nprofile = \"random\"\nmode = 3\namplitude = 0.2\n";
        let mut cfg = parse_config(&doc).unwrap();
        let grid = cfg.grid().unwrap();
        let a = cfg.initial_state(&grid).unwrap();
        let b = cfg.initial_state(&grid).unwrap();
        assert_eq!(a, b);
        let peak = a.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.2).abs() < 1e-15);
        cfg.seed = 7;
        assert_ne!(cfg.initial_state(&grid).unwrap().phi, a.phi);
    }
}
