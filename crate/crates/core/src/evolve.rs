//! Time evolution.
//!
//! Two solvers share the same spatial discretization:
//!
//! * a method-of-lines integrator, classical RK4 on `∂τφ = π`, `∂τπ = Δφ + S`;
//! * a Picard iteration that re-solves the linear wave equation with the
//!   previous iterate's source, one Fourier mode at a time, via Duhamel's
//!   formula and trapezoid quadrature on the stored time lattice.
//!
//! `S` is `F(φ, π)` in the original frame and `hψ + εP(τ, ψ)` in the
//! transformed frame. RK4 is used rather than a symplectic scheme because the
//! damping term makes the system non-separable.
//!
//! Picard keeps every iterate on the full `(time × grid)` lattice, so memory
//! is `O(N^d · T/dt)` per iterate (two iterates are alive at once).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::iterate_gap;
use crate::error::{Error, Result};
use crate::grid::{FieldState, Frame, SpatialGrid};
use crate::matter::{h_of_tau, rhs_f, source_p, to_transformed, FieldTheory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    BlowUp { tau: f64 },
    Error { message: String },
}

/// Time-ordered states on a uniform step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<FieldState>,
    pub dt: f64,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn last(&self) -> Option<&FieldState> {
        self.states.last()
    }
}

/// Gaps `E_{l,k}` for `l = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub gaps: Vec<f64>,
    pub k: u32,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// `dt ≤ cfl_safety · Δx / √d` is enforced.
    pub cfl_safety: f64,
    /// Largest admissible `|φ|` or `|π|` before the run counts as blown up.
    pub blowup_threshold: f64,
    /// Apply the 2/3-rule to the nonlinear source.
    pub dealias: bool,
    /// Radius of the initial support, when known. Runs with
    /// `radius + T ≥ L/2` are refused since the support would wrap.
    pub initial_support: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cfl_safety: 0.5, blowup_threshold: 1e8, dealias: false, initial_support: None }
    }
}

impl SolverOptions {
    /// Largest step allowed on `grid`.
    pub fn max_dt(&self, grid: &SpatialGrid) -> f64 {
        self.cfl_safety * grid.spacing() / (grid.d_sim() as f64).sqrt()
    }
}

fn check_dt(grid: &SpatialGrid, dt: f64, opts: &SolverOptions) -> Result<()> {
    let limit = opts.max_dt(grid);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Setup(format!("dt = {dt} must be positive")));
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Setup(format!(
            "dt = {dt} exceeds the stability limit cfl_safety·Δx/√d = {limit}"
        )));
    }
    Ok(())
}

fn check_window(grid: &SpatialGrid, t_final: f64, opts: &SolverOptions) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Setup(format!("T = {t_final} must be positive")));
    }
    if let Some(r) = opts.initial_support {
        let half = 0.5 * grid.length();
        if r + t_final >= half {
            return Err(Error::Setup(format!(
                "wraparound: support radius {r} + T {t_final} reaches L/2 = {half}"
            )));
        }
    }
    Ok(())
}

/// Nonlinear part `S` of `∂τπ = Δφ + S` in the given frame.
pub fn source_term(
    grid: &SpatialGrid,
    theory: &FieldTheory,
    frame: Frame,
    tau: f64,
    phi: &[f64],
    pi: &[f64],
    dealias: bool,
) -> Result<Vec<f64>> {
    let mut s = match frame {
        Frame::Original => rhs_f(&theory.model, theory.coupling, theory.potential, phi, pi, tau)?,
        Frame::Transformed => {
            let h = h_of_tau(&theory.model, theory.coupling, tau);
            let mut s: Vec<f64> = phi.iter().map(|v| h * v).collect();
            let eps = theory.potential.epsilon;
            if eps != 0.0 {
                let p = source_p(&theory.model, theory.potential, tau, phi)?;
                for (o, v) in s.iter_mut().zip(p) {
                    *o += eps * v;
                }
            }
            s
        }
    };
    if dealias {
        let mut spec = grid.forward(&s);
        for (c, keep) in spec.iter_mut().zip(grid.dealias_mask()) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        s = grid.inverse_real(&spec);
    }
    Ok(s)
}

fn derivative(
    grid: &SpatialGrid,
    theory: &FieldTheory,
    frame: Frame,
    tau: f64,
    phi: &[f64],
    pi: &[f64],
    dealias: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut acc = grid.laplacian(phi);
    for (a, s) in acc.iter_mut().zip(source_term(grid, theory, frame, tau, phi, pi, dealias)?) {
        *a += s;
    }
    Ok((pi.to_vec(), acc))
}

fn axpy(base: &[f64], scale: f64, dir: &[f64]) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + scale * d).collect()
}

/// One classical RK4 step.
pub fn step_mol(
    grid: &SpatialGrid,
    state: &FieldState,
    theory: &FieldTheory,
    dt: f64,
    opts: &SolverOptions,
) -> Result<FieldState> {
    check_dt(grid, dt, opts)?;
    let (t, f, frame) = (state.tau, state.frame, opts.dealias);
    let (k1f, k1p) = derivative(grid, theory, f, t, &state.phi, &state.pi, frame)?;
    let (p2, v2) = (axpy(&state.phi, 0.5 * dt, &k1f), axpy(&state.pi, 0.5 * dt, &k1p));
    let (k2f, k2p) = derivative(grid, theory, f, t + 0.5 * dt, &p2, &v2, frame)?;
    let (p3, v3) = (axpy(&state.phi, 0.5 * dt, &k2f), axpy(&state.pi, 0.5 * dt, &k2p));
    let (k3f, k3p) = derivative(grid, theory, f, t + 0.5 * dt, &p3, &v3, frame)?;
    let (p4, v4) = (axpy(&state.phi, dt, &k3f), axpy(&state.pi, dt, &k3p));
    let (k4f, k4p) = derivative(grid, theory, f, t + dt, &p4, &v4, frame)?;

    let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len()).map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    let next = FieldState::new(
        t + dt,
        combine(&state.phi, &k1f, &k2f, &k3f, &k4f),
        combine(&state.pi, &k1p, &k2p, &k3p, &k4p),
        f,
    );
    if !next.is_finite() || next.max_abs() > opts.blowup_threshold {
        return Err(Error::BlowUp { tau: next.tau });
    }
    Ok(next)
}

/// Number of steps and the uniform step actually used to reach `t_final`
/// with steps no longer than `dt`.
pub fn time_lattice(t_final: f64, dt: f64) -> (usize, f64) {
    let n = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

/// Integrate from `initial` over `[τ₀, τ₀ + T]`, storing the initial state,
/// every `sample_every`-th step and the final state.
///
/// A blow-up ends the run early with [`TrajectoryStatus::BlowUp`]; any other
/// failure mid-run ends it with [`TrajectoryStatus::Error`]. Invalid setups
/// are returned as errors before any step is taken.
pub fn evolve(
    grid: &SpatialGrid,
    initial: &FieldState,
    theory: &FieldTheory,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    check_window(grid, t_final, opts)?;
    check_dt(grid, dt, opts)?;
    if sample_every == 0 {
        return Err(Error::Setup("sample_every must be at least 1".into()));
    }
    if initial.phi.len() != grid.len() || initial.pi.len() != grid.len() {
        return Err(Error::Setup("initial state does not match the grid".into()));
    }
    let (steps, h) = time_lattice(t_final, dt);
    let t0 = initial.tau;
    let mut states = vec![initial.clone()];
    let mut current = initial.clone();
    let mut status = TrajectoryStatus::Completed;
    for i in 1..=steps {
        match step_mol(grid, &current, theory, h, opts) {
            Ok(mut next) => {
                next.tau = t0 + i as f64 * h;
                current = next;
            }
            Err(Error::BlowUp { tau }) => {
                status = TrajectoryStatus::BlowUp { tau };
                break;
            }
            Err(e) => {
                status = TrajectoryStatus::Error { message: e.to_string() };
                break;
            }
        }
        if i % sample_every == 0 || i == steps {
            states.push(current.clone());
        }
    }
    Ok(Trajectory { states, dt: h, status })
}

/// Solve `η'' + λ²η = s(τ)`, `η(0) = f`, `η'(0) = g` on `τ_n = n·dt`,
/// returning `η(τ_n)`.
pub fn duhamel_mode_solve(
    lambda2: f64,
    f_hat: Complex64,
    g_hat: Complex64,
    source_samples: &[Complex64],
    dt: f64,
) -> Vec<Complex64> {
    duhamel_mode_solve_with_rate(lambda2, f_hat, g_hat, source_samples, dt).0
}

/// As [`duhamel_mode_solve`], also returning `η'(τ_n)`.
///
/// With `c(t) = cos λt` and `s(t) = sin(λt)/λ` the addition formula splits
/// the kernel, `s(t−u) = s(t)c(u) − c(t)s(u)`, so the trapezoid sums for all
/// `τ_n` come from two running integrals.
pub fn duhamel_mode_solve_with_rate(
    lambda2: f64,
    f_hat: Complex64,
    g_hat: Complex64,
    source_samples: &[Complex64],
    dt: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let lambda = lambda2.sqrt();
    let kernel = |t: f64| -> (f64, f64) {
        if lambda == 0.0 {
            (1.0, t)
        } else {
            ((lambda * t).cos(), (lambda * t).sin() / lambda)
        }
    };
    let n = source_samples.len();
    let mut values = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    let zero = Complex64::new(0.0, 0.0);
    let (mut big_c, mut big_s) = (zero, zero);
    let mut prev: Option<(Complex64, Complex64)> = None;
    for (j, &src) in source_samples.iter().enumerate() {
        let t = j as f64 * dt;
        let (c, s) = kernel(t);
        let (cs, ss) = (src * c, src * s);
        if let Some((pc, ps)) = prev {
            big_c += (pc + cs) * (0.5 * dt);
            big_s += (ps + ss) * (0.5 * dt);
        }
        prev = Some((cs, ss));
        values.push(f_hat * c + g_hat * s + big_c * s - big_s * c);
        rates.push(-f_hat * (lambda2 * s) + g_hat * c + big_c * c + big_s * (lambda2 * s));
    }
    (values, rates)
}

/// One Picard iterate on the stored lattice: spectra of `φ` and `π` per time.
struct Iterate {
    phi: Vec<Vec<f64>>,
    pi: Vec<Vec<f64>>,
}

impl Iterate {
    fn to_trajectory(&self, times: &[f64], frame: Frame, dt: f64) -> Trajectory {
        let states = times
            .iter()
            .zip(self.phi.iter().zip(&self.pi))
            .map(|(&t, (f, p))| FieldState::new(t, f.clone(), p.clone(), frame))
            .collect();
        Trajectory { states, dt, status: TrajectoryStatus::Completed }
    }

    fn blowup_time(&self, times: &[f64], threshold: f64) -> Option<f64> {
        times.iter().zip(self.phi.iter().zip(&self.pi)).find_map(|(&t, (f, p))| {
            let bad = f.iter().chain(p).any(|v| !v.is_finite() || v.abs() > threshold);
            bad.then_some(t)
        })
    }
}

/// Re-solve every mode with the given source spectra (`None` = homogeneous).
fn solve_modes(
    grid: &SpatialGrid,
    f_hat: &[Complex64],
    g_hat: &[Complex64],
    source_hat: Option<&[Vec<Complex64>]>,
    steps: usize,
    dt: f64,
) -> Iterate {
    let modes = grid.len();
    let zeros = vec![Complex64::new(0.0, 0.0); steps + 1];
    let per_mode: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..modes)
        .into_par_iter()
        .map(|m| {
            let src: Vec<Complex64> = match source_hat {
                Some(s) => s.iter().map(|row| row[m]).collect(),
                None => zeros.clone(),
            };
            duhamel_mode_solve_with_rate(grid.wavenumber_sq()[m], f_hat[m], g_hat[m], &src, dt)
        })
        .collect();
    let (phi, pi) = (0..=steps)
        .into_par_iter()
        .map(|j| {
            let a: Vec<Complex64> = per_mode.iter().map(|(v, _)| v[j]).collect();
            let b: Vec<Complex64> = per_mode.iter().map(|(_, r)| r[j]).collect();
            (grid.inverse_real(&a), grid.inverse_real(&b))
        })
        .unzip();
    Iterate { phi, pi }
}

/// Picard iteration for the initial-value problem with data `(f, g)` at `τ = 0`.
///
/// `f` and `g` are original-frame data; with `frame = Transformed` they are
/// mapped to `ψ` first and the iteration runs on the transformed equation,
/// returning a transformed-frame trajectory. Every lattice time is stored.
///
/// Stops at the first `l` with `E_{l,k} ≤ tol`, or at `l_max` with
/// `converged = false` and the last iterate.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve(
    grid: &SpatialGrid,
    f: &[f64],
    g: &[f64],
    theory: &FieldTheory,
    frame: Frame,
    t_final: f64,
    dt: f64,
    l_max: usize,
    tol: f64,
    k: u32,
    opts: &SolverOptions,
) -> Result<(Trajectory, PicardTrace)> {
    check_window(grid, t_final, opts)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Setup(format!("dt = {dt} must be positive")));
    }
    if l_max == 0 {
        return Err(Error::Setup("l_max must be at least 1".into()));
    }
    if f.len() != grid.len() || g.len() != grid.len() {
        return Err(Error::Setup("initial data does not match the grid".into()));
    }
    let start = FieldState::new(0.0, f.to_vec(), g.to_vec(), Frame::Original);
    let start = match frame {
        Frame::Original => start,
        Frame::Transformed => to_transformed(&start, &theory.model)?,
    };
    let (steps, h) = time_lattice(t_final, dt);
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * h).collect();
    let f_hat = grid.forward(&start.phi);
    let g_hat = grid.forward(&start.pi);

    let mut current = solve_modes(grid, &f_hat, &g_hat, None, steps, h);
    if let Some(tau) = current.blowup_time(&times, opts.blowup_threshold) {
        return Err(Error::BlowUp { tau });
    }
    let mut current_traj = current.to_trajectory(&times, frame, h);
    let mut gaps = Vec::new();
    let mut converged = false;
    for _ in 1..=l_max {
        let sources: Vec<Vec<Complex64>> = (0..=steps)
            .into_par_iter()
            .map(|j| {
                let s = source_term(
                    grid,
                    theory,
                    frame,
                    times[j],
                    &current.phi[j],
                    &current.pi[j],
                    opts.dealias,
                )?;
                Ok(grid.forward(&s))
            })
            .collect::<Result<_>>()?;
        let next = solve_modes(grid, &f_hat, &g_hat, Some(&sources), steps, h);
        if let Some(tau) = next.blowup_time(&times, opts.blowup_threshold) {
            return Err(Error::BlowUp { tau });
        }
        let next_traj = next.to_trajectory(&times, frame, h);
        let gap = iterate_gap(grid, &next_traj, &current_traj, k)?;
        gaps.push(gap);
        current = next;
        current_traj = next_traj;
        if gap <= tol {
            converged = true;
            break;
        }
    }
    let iterations = gaps.len();
    Ok((current_traj, PicardTrace { gaps, k, converged, iterations }))
}
