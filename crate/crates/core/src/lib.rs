//! Pseudo-steady-state density matrices of N-level atoms driven by a strong
//! pump and a weak probe that share the same optical transitions.
//!
//! The pump and probe differ in frequency by a beat frequency `δ`. In the
//! frame rotating with the pump, the steady state of the density matrix is
//! periodic with period `2π/δ` and is expanded in harmonics
//! `ρ(t) = Σ_k ρ^k e^{ikδt}`, truncated at `|k| ≤ K`. The harmonic equations
//! are assembled into a dense linear system `M A = 0`, reduced with the trace
//! condition, and solved directly.
//!
//! Two independent builders produce `M`: [`solver::assemble_m`] probes the
//! linear operator with unit matrices, and [`terms::assemble_m`] expands the
//! equations symbolically. A fixed-step time integrator in [`timedomain`]
//! provides an oracle for the periodic steady state.
//!
//! ```
//! use pumpprobe::{models, solver};
//!
//! let g = 2.0 * std::f64::consts::PI * 1e7;
//! let spec = models::two_level(g, 0.0, 3.6 * g, 0.6 * g, 0.0, 1.5 * g).unwrap();
//! let solution = solver::solve(&spec, 1).unwrap();
//! let rho0 = solution.harmonics.get(0).unwrap();
//! assert!(((rho0[(0, 0)] + rho0[(1, 1)]).re - 1.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod linalg;
pub mod model;
pub mod models;
pub mod parallel;
pub mod solver;
pub mod spectroscopy;
pub mod terms;
pub mod timedomain;

pub use error::{Error, Result};
pub use model::{
    CMatrix, Coupling, DensityHarmonics, HamiltonianDecomposition, HarmonicLayout, HarmonicTag,
    SourceChannel, SystemSpec,
};
pub use num_complex::Complex64;
pub use parallel::Execution;
pub use solver::{solve, LinearSystem, MatrixBuilder, Solution, SolveOptions};
