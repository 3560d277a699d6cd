//! Fourier-Galerkin Navier-Stokes on the periodic torus, together with the
//! long-time averaging machinery needed to study mean flows: the averaging
//! operator `M_t`, Reynolds decomposition and stress, the closed mean-flow
//! equations, the turbulent dissipation balance, and ensemble (Cesàro)
//! averages of long-time limits.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] – grids, divergence-free spectral fields, the Leray
//!   projector, norms and the dealiased nonlinear term.
//! * [`forcing`] – force programs in the uniformly-local class and their
//!   norm estimators.
//! * [`solver`] – integrating-factor RK4 time stepping with energy
//!   bookkeeping, a-priori bound checks and checkpoints.
//! * [`averaging`] – the streaming time averager and Reynolds statistics.
//! * [`report`] – closure identities and mean-flow diagnostics.
//! * [`ensemble`] – families of forces and Cesàro means of mean flows.

pub mod averaging;
pub mod ensemble;
pub mod error;
pub mod forcing;
pub mod report;
pub mod solver;
pub mod spectral;

pub use averaging::{CenteredMoments, HorizonAverager, ReynoldsAggregate, TimeAverager};
pub use ensemble::{EnsembleReport, ForceFamily};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use forcing::ForcingSpec;
pub use report::ReynoldsReport;
pub use solver::{Sample, Solver, SolverConfig, SolverState};
pub use spectral::{GridSpec, Norms, SpectralField, SymTensorField};
