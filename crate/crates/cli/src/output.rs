//! Files written into a run directory.

use std::fs;
use std::path::{Path, PathBuf};

use kgfrw::diagnostics::{energy_report, support_radius_about};
use kgfrw::evolve::Trajectory;
use kgfrw::geometry::ScaleFactorModel;
use kgfrw::grid::SpatialGrid;
use kgfrw::matter::to_original;
use serde::Serialize;

use crate::config::series_columns;
use crate::error::CliResult;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    ryu::Buffer::new().format(x).to_string()
}

/// `series.csv` rows, one per stored state, diagnostics in the original frame.
pub fn series_rows(
    grid: &SpatialGrid,
    traj: &Trajectory,
    model: &ScaleFactorModel,
    k_max: u32,
    support_threshold: f64,
    center: &[f64],
) -> CliResult<Vec<Vec<f64>>> {
    traj.states
        .iter()
        .map(|state| {
            let r = energy_report(grid, state, model, k_max)?;
            let orig = to_original(state, model)?;
            let mut row = vec![r.tau];
            row.extend(&r.hk);
            row.extend(&r.energy_norm);
            row.extend([
                r.l2,
                r.linf,
                r.decay_product,
                support_radius_about(grid, &orig, support_threshold, center),
            ]);
            Ok(row)
        })
        .collect()
}

pub fn write_series(path: &Path, k_max: u32, rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(series_columns(k_max))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Write `bytes` to `path` through a sibling temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Headline {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_hk: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy_norm: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_product_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard_gaps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard_converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissible_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

impl Headline {
    /// Final-state energies and the running maximum of the decay product.
    pub fn from_series(k_max: u32, rows: &[Vec<f64>]) -> Self {
        let n = k_max as usize + 1;
        let decay_col = 1 + 2 * n + 2;
        let mut h = Headline::default();
        if let Some(last) = rows.last() {
            h.final_tau = Some(last[0]);
            h.final_hk = Some(last[1..1 + n].to_vec());
            h.final_energy_norm = Some(last[1 + n..1 + 2 * n].to_vec());
            h.decay_product_max =
                Some(rows.iter().map(|r| r[decay_col]).fold(f64::NEG_INFINITY, f64::max));
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp,
    NotConverged,
    Admissible,
    Inadmissible,
    Truncated,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub started_at: String,
    pub finished_at: String,
    pub status: RunStatus,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub headline: Headline,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, started_at: String) -> Self {
        Self {
            tool: "kgfrw",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            started_at,
            finished_at: String::new(),
            status: RunStatus::Error,
            exit_code: crate::error::exit::ERROR,
            message: None,
            seed: None,
            config: serde_json::Value::Null,
            headline: Headline::default(),
            outputs: Vec::new(),
        }
    }

    pub fn finish(mut self, dir: &Path) -> CliResult<()> {
        self.finished_at = now();
        write_json(&dir.join("manifest.json"), &self)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
