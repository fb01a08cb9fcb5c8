//! Nonlinear Klein–Gordon fields with nonminimal curvature coupling on
//! spatially flat FRW backgrounds in conformal time.
//!
//! The field obeys
//!
//! ```text
//! ∂τ²φ − Δφ = −(D−2) H ∂τφ − ξ (D−1)(2Ḣ + (D−2)H²) φ + a² ∂φV(φ)
//! ```
//!
//! on a `D`-dimensional background `a(τ)`, discretized on a periodic box of
//! one to three dimensions with spectral derivatives.
//!
//! * [`geometry`]: scale factors, Hubble rates, curvature.
//! * [`matter`]: potential, coupling, right-hand sides, frame change.
//! * [`grid`]: periodic spectral grid, Sobolev norms, initial data.
//! * [`evolve`]: RK4 method of lines and the Picard/Duhamel solver.
//! * [`diagnostics`]: energies, iterate gaps, decay monitor, support.
//! * [`regimes`]: admissibility conditions and case table.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod geometry;
pub mod grid;
pub mod matter;
pub mod regimes;

pub use error::{Error, Result};
pub use evolve::{PicardTrace, SolverOptions, Trajectory, TrajectoryStatus};
pub use geometry::{Family, ScaleFactorModel};
pub use grid::{FieldState, Frame, SpatialGrid};
pub use matter::{CouplingSpec, FieldTheory, PotentialSpec};
