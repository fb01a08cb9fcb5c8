//! Subcommand drivers. Each returns the process exit code; errors inside a
//! run directory are recorded in its manifest before being reported.

use std::fs;
use std::path::{Path, PathBuf};

use kgfrw::evolve::{evolve, picard_solve, Trajectory, TrajectoryStatus};
use kgfrw::grid::Frame;
use kgfrw::matter::to_transformed;
use kgfrw::regimes::{classify, Background, ClassifyInput, Real};
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, read_document, Mode, RunConfig};
use crate::error::{exit, CliError, CliResult};
use crate::output::{
    fmt_f64, now, series_rows, write_json, write_series, Headline, RunManifest, RunStatus,
};
use crate::plot::{render_plot, PlotSpec, Table};
use crate::sweep::{Lattice, SweepConfig, MAX_POINTS, VERDICT_COLUMNS};

/// Output directory used when neither `--out`, the environment nor the
/// config names one.
pub const DEFAULT_OUT_DIR: &str = "kgfrw-out";

#[derive(Debug, Clone, Default)]
pub struct Context {
    /// `--out` or `KGFRW_OUT_DIR`.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Context {
    fn out_dir(&self, configured: Option<&str>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| configured.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// What `energy` needs to recompute diagnostics.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub config: RunConfig,
    pub trajectory: Trajectory,
}

struct Outcome {
    status: RunStatus,
    code: u8,
    message: Option<String>,
    headline: Headline,
    outputs: Vec<String>,
}

fn require_config(path: Option<&Path>) -> CliResult<&Path> {
    path.ok_or_else(|| CliError::Validation("--config PATH is required".into()))
}

fn load_run_config(ctx: &Context, path: Option<&Path>) -> CliResult<RunConfig> {
    let path = require_config(path)?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `evolve` (mode from the config) and `picard` (mode forced).
pub fn cmd_run(ctx: &Context, config: Option<&Path>, force_picard: bool) -> u8 {
    let started = now();
    let command = if force_picard { "picard" } else { "evolve" };
    let cfg = match load_run_config(ctx, config) {
        Ok(c) => c,
        Err(e) => return fail_early(ctx, command, started, e),
    };
    let dir = ctx.out_dir(cfg.output.directory.as_deref());
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return exit::ERROR;
    }
    let mut manifest = RunManifest::new(command, started);
    manifest.seed = Some(cfg.seed);
    manifest.config = serde_json::to_value(&cfg).expect("serializable");
    let outcome = simulate(ctx, &cfg, &dir, force_picard).unwrap_or_else(|e| Outcome {
        status: RunStatus::Error,
        code: exit::ERROR,
        message: Some(e.to_string()),
        headline: Headline::default(),
        outputs: vec![],
    });
    finish(ctx, manifest, &dir, outcome)
}

fn finish(ctx: &Context, mut manifest: RunManifest, dir: &Path, outcome: Outcome) -> u8 {
    if let Some(m) = &outcome.message {
        eprintln!("{}: {m}", if outcome.code == exit::OK { "note" } else { "error" });
    }
    manifest.status = outcome.status;
    manifest.exit_code = outcome.code;
    manifest.message = outcome.message;
    manifest.headline = outcome.headline;
    manifest.outputs = outcome.outputs;
    if let Err(e) = manifest.finish(dir) {
        eprintln!("error: cannot write manifest: {e}");
        return exit::ERROR;
    }
    ctx.note(&format!("wrote {}", dir.join("manifest.json").display()));
    outcome.code
}

/// Errors before a run directory is known. With an explicit output
/// directory a manifest is still written there.
fn fail_early(ctx: &Context, command: &str, started: String, e: CliError) -> u8 {
    match &ctx.out {
        Some(dir) if fs::create_dir_all(dir).is_ok() => {
            let outcome = Outcome {
                status: RunStatus::Error,
                code: exit::ERROR,
                message: Some(e.to_string()),
                headline: Headline::default(),
                outputs: vec![],
            };
            finish(ctx, RunManifest::new(command, started), dir, outcome)
        }
        _ => {
            eprintln!("error: {e}");
            exit::ERROR
        }
    }
}

fn simulate(ctx: &Context, cfg: &RunConfig, dir: &Path, force_picard: bool) -> CliResult<Outcome> {
    let grid = cfg.grid()?;
    let theory = cfg.theory()?;
    let opts = cfg.solver_options();
    let s = &cfg.solver;
    let initial = cfg.initial_state(&grid)?;
    let mut outputs = Vec::new();
    let mut extra = Headline::default();

    let picard = force_picard || s.mode == Mode::Picard;
    let (traj, status, code, message) = if picard {
        ctx.note("running Picard iteration");
        match picard_solve(
            &grid,
            &initial.phi,
            &initial.pi,
            &theory,
            s.frame,
            s.t_final,
            cfg.dt(),
            s.l_max,
            s.tol,
            cfg.output.k_max,
            &opts,
        ) {
            Ok((mut traj, trace)) => {
                let mut w = csv::Writer::from_path(dir.join("gaps.csv"))?;
                w.write_record(["l", "gap"])?;
                for (l, g) in trace.gaps.iter().enumerate() {
                    w.write_record([(l + 1).to_string(), fmt_f64(*g)])?;
                }
                w.flush()?;
                outputs.push("gaps.csv".to_string());
                extra.picard_gaps = Some(trace.gaps.clone());
                extra.picard_converged = Some(trace.converged);
                let last = traj.states.len() - 1;
                traj.states = std::mem::take(&mut traj.states)
                    .into_iter()
                    .enumerate()
                    .filter(|(j, _)| j % s.sample_every == 0 || *j == last)
                    .map(|(_, st)| st)
                    .collect();
                if trace.converged {
                    (traj, RunStatus::Completed, exit::OK, None)
                } else {
                    let msg = format!(
                        "Picard iteration did not reach tol = {} within l_max = {}",
                        s.tol, s.l_max
                    );
                    (traj, RunStatus::NotConverged, exit::ERROR, Some(msg))
                }
            }
            Err(kgfrw::Error::BlowUp { tau }) => {
                extra.blowup_tau = Some(tau);
                let msg = format!("Picard iterate blew up at tau = {tau}");
                return Ok(Outcome {
                    status: RunStatus::BlowUp,
                    code: exit::BLOW_UP,
                    message: Some(msg),
                    headline: extra,
                    outputs,
                });
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        ctx.note("running method of lines");
        let start = match s.frame {
            Frame::Original => initial,
            Frame::Transformed => to_transformed(&initial, &theory.model)?,
        };
        let traj = evolve(&grid, &start, &theory, s.t_final, cfg.dt(), s.sample_every, &opts)?;
        let (status, code, message) = match &traj.status {
            TrajectoryStatus::Completed => (RunStatus::Completed, exit::OK, None),
            TrajectoryStatus::BlowUp { tau } => {
                extra.blowup_tau = Some(*tau);
                (RunStatus::BlowUp, exit::BLOW_UP, Some(format!("solution blew up at tau = {tau}")))
            }
            TrajectoryStatus::Error { message } => {
                (RunStatus::Error, exit::ERROR, Some(message.clone()))
            }
        };
        (traj, status, code, message)
    };

    let k_max = cfg.output.k_max;
    let rows = series_rows(
        &grid,
        &traj,
        &theory.model,
        k_max,
        cfg.output.support_threshold,
        &cfg.support_center(&grid),
    )?;
    let series = dir.join("series.csv");
    write_series(&series, k_max, &rows)?;
    outputs.push("series.csv".into());
    if cfg.output.trajectory {
        write_json(
            &dir.join("trajectory.json"),
            &TrajectoryFile { config: cfg.clone(), trajectory: traj },
        )?;
        outputs.push("trajectory.json".into());
    }
    if cfg.output.plot {
        let spec = PlotSpec {
            x: "tau".into(),
            columns: cfg.output.plot_columns.clone(),
            log_x: false,
            log_y: cfg.output.plot_log_y,
        };
        let svg = render_plot(&Table::read(&series)?, &spec)?;
        fs::write(dir.join("series.svg"), svg)?;
        outputs.push("series.svg".into());
    }
    let mut headline = Headline::from_series(k_max, &rows);
    headline.blowup_tau = extra.blowup_tau;
    headline.picard_gaps = extra.picard_gaps;
    headline.picard_converged = extra.picard_converged;
    Ok(Outcome { status, code, message, headline, outputs })
}

/// Recompute `series.csv` from a stored `trajectory.json`. Output goes to
/// `--out`, or an `energy/` directory beside the trajectory.
pub fn cmd_energy(ctx: &Context, trajectory: &Path, k_max: Option<u32>) -> u8 {
    let started = now();
    let stored: TrajectoryFile = match read_document(trajectory) {
        Ok(t) => t,
        Err(e) => return fail_early(ctx, "energy", started, e),
    };
    let dir = ctx.out.clone().unwrap_or_else(|| {
        trajectory.parent().unwrap_or(Path::new(".")).join("energy")
    });
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return exit::ERROR;
    }
    let mut manifest = RunManifest::new("energy", started);
    manifest.seed = Some(stored.config.seed);
    manifest.config = serde_json::to_value(&stored.config).expect("serializable");
    let run = || -> CliResult<Outcome> {
        let cfg = stored.config.clone().validated()?;
        let k = k_max.unwrap_or(cfg.output.k_max);
        if k > crate::config::MAX_K {
            return Err(CliError::Validation(format!("k_max at most {}", crate::config::MAX_K)));
        }
        let grid = cfg.grid()?;
        let model = cfg.model()?;
        let rows = series_rows(
            &grid,
            &stored.trajectory,
            &model,
            k,
            cfg.output.support_threshold,
            &cfg.support_center(&grid),
        )?;
        write_series(&dir.join("series.csv"), k, &rows)?;
        Ok(Outcome {
            status: RunStatus::Completed,
            code: exit::OK,
            message: None,
            headline: Headline::from_series(k, &rows),
            outputs: vec!["series.csv".into()],
        })
    };
    let outcome = run().unwrap_or_else(|e| Outcome {
        status: RunStatus::Error,
        code: exit::ERROR,
        message: Some(e.to_string()),
        headline: Headline::default(),
        outputs: vec![],
    });
    finish(ctx, manifest, &dir, outcome)
}

pub struct ClassifyArgs {
    pub dim: u32,
    pub w: Option<String>,
    pub alpha: Option<String>,
    pub rate: Option<String>,
    pub xi: String,
    pub p: String,
    pub tau0: f64,
}

fn real(s: &str) -> CliResult<Real> {
    s.parse().map_err(|e: kgfrw::Error| CliError::Validation(e.to_string()))
}

/// Print the verdict as JSON. Exit 0 if admissible, 3 if not.
pub fn cmd_classify(ctx: &Context, args: &ClassifyArgs) -> u8 {
    let started = now();
    let run = || -> CliResult<kgfrw::regimes::RegimeVerdict> {
        let background = match (&args.w, &args.alpha, &args.rate) {
            (Some(w), None, None) => Background::EquationOfState(real(w)?),
            (None, Some(a), None) => Background::PowerLaw(real(a)?),
            (None, None, Some(r)) => Background::Exponential(real(r)?),
            _ => return Err(CliError::Validation("give exactly one of --w, --alpha, --rate".into())),
        };
        let input = ClassifyInput {
            dim: args.dim,
            background,
            xi: real(&args.xi)?,
            p: real(&args.p)?,
            tau0: args.tau0,
        };
        Ok(classify(&input)?)
    };
    let verdict = match run() {
        Ok(v) => v,
        Err(e) => return fail_early(ctx, "classify", started, e),
    };
    let value = serde_json::to_value(verdict).expect("serializable");
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    let (status, code) = if verdict.admissible {
        (RunStatus::Admissible, exit::OK)
    } else {
        (RunStatus::Inadmissible, exit::INADMISSIBLE)
    };
    // Files only when an output directory was asked for explicitly.
    if let Some(dir) = &ctx.out {
        let write = || -> CliResult<()> {
            fs::create_dir_all(dir)?;
            write_json(&dir.join("verdict.json"), &value)
        };
        if let Err(e) = write() {
            eprintln!("error: {e}");
            return exit::ERROR;
        }
        let mut manifest = RunManifest::new("classify", started);
        manifest.config = serde_json::json!({
            "dim": args.dim, "w": args.w, "alpha": args.alpha, "rate": args.rate,
            "xi": args.xi, "p": args.p, "tau0": args.tau0,
        });
        let headline = Headline { verdict: Some(value), ..Default::default() };
        let outcome =
            Outcome { status, code, message: None, headline, outputs: vec!["verdict.json".into()] };
        return finish(ctx, manifest, dir, outcome);
    }
    code
}

/// Classify every lattice point into `verdicts.csv`.
pub fn cmd_sweep(ctx: &Context, config: Option<&Path>) -> u8 {
    let started = now();
    let cfg: SweepConfig = match require_config(config).and_then(read_document) {
        Ok(c) => c,
        Err(e) => return fail_early(ctx, "sweep", started, e),
    };
    let dir = ctx.out_dir(cfg.output.directory.as_deref());
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return exit::ERROR;
    }
    let mut manifest = RunManifest::new("sweep", started);
    manifest.config = serde_json::to_value(&cfg).expect("serializable");
    let run = || -> CliResult<Outcome> {
        let lattice = Lattice::new(&cfg.sweep)?;
        let budget = cfg.sweep.max_points.min(MAX_POINTS);
        let total = lattice.len();
        let truncated = total.is_none_or(|n| n > budget);
        let count = total.unwrap_or(usize::MAX).min(budget);
        ctx.note(&format!("classifying {count} points"));
        let rows = lattice.rows(count);
        let mut w = csv::Writer::from_path(dir.join("verdicts.csv"))?;
        w.write_record(VERDICT_COLUMNS)?;
        for (row, _) in &rows {
            w.write_record(row)?;
        }
        w.flush()?;
        let admissible = rows.iter().filter(|(_, ok)| *ok).count();
        let headline = Headline {
            points: Some(count),
            admissible_points: Some(admissible),
            truncated: Some(truncated),
            ..Default::default()
        };
        let outputs = vec!["verdicts.csv".to_string()];
        Ok(if truncated {
            let msg = match total {
                Some(n) => format!("budget exceeded: {n} points, {budget} written"),
                None => format!("budget exceeded: lattice size overflows, {budget} written"),
            };
            Outcome { status: RunStatus::Truncated, code: exit::ERROR, message: Some(msg), headline, outputs }
        } else {
            Outcome { status: RunStatus::Completed, code: exit::OK, message: None, headline, outputs }
        })
    };
    let outcome = run().unwrap_or_else(|e| Outcome {
        status: RunStatus::Error,
        code: exit::ERROR,
        message: Some(e.to_string()),
        headline: Headline::default(),
        outputs: vec![],
    });
    finish(ctx, manifest, &dir, outcome)
}

pub fn cmd_plot(
    ctx: &Context,
    csv: &Path,
    spec: &PlotSpec,
    output: Option<&Path>,
) -> u8 {
    let target = output.map(Path::to_path_buf).unwrap_or_else(|| csv.with_extension("svg"));
    let run = || -> CliResult<()> {
        let svg = render_plot(&Table::read(csv)?, spec)?;
        fs::write(&target, svg)?;
        Ok(())
    };
    match run() {
        Ok(()) => {
            ctx.note(&format!("wrote {}", target.display()));
            exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::ERROR
        }
    }
}
