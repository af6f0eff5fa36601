//! Planar Willmore flow solvers on closed curves.
//!
//! The flow moves a curve by the normal velocity V = kappa_ss + kappa^3/2,
//! the L2 gradient descent of the bending energy W = (1/2) int kappa^2 ds.
//! Everything is discretized on a uniform periodic parameter grid with
//! second-order centered differences and BDFk (k = 1..4) time stepping; the
//! implicit step is solved by Picard iteration over a cyclic banded system.
//!
//! Three pipelines share that core:
//! - plain BDFk ([`bdfk::evolve`] with redistribution off), which leaves node
//!   placement to the flow and degrades on strongly curved shapes;
//! - BDFk with adaptive weighted-arc redistribution ([`bdfk::evolve`] with
//!   [`bdfk::RedistributeMode::Awar`]), which resamples nodes after each step
//!   so every segment carries equal monitor-weighted arc length;
//! - the moving-mesh scheme ([`adaptive::evolve_adaptive`]), which adds a
//!   monitor-driven tangential velocity to the dynamics and can wrap each step
//!   with an energy corrector that enforces monotone decay of an auxiliary
//!   energy ([`energy`]).
//!
//! [`verify`] carries the exact expanding-circle solution and the convergence
//! and mesh-quality harnesses; [`catalog`] the initial-curve presets; [`cli`]
//! the command-line front end.

pub mod adaptive;
pub mod bdfk;
pub mod catalog;
pub mod cli;
pub mod energy;
pub mod error;
pub mod grid;
pub mod linsys;
pub mod monitor;
pub mod redistribute;
pub mod verify;

pub use adaptive::{evolve_adaptive, TangentialConfig};
pub use bdfk::{evolve, RedistributeMode, RunOutcome, RunRecord, SolverConfig};
pub use catalog::curve_catalog;
pub use energy::EnergyCorrectorState;
pub use error::{Error, Result};
pub use grid::{GeometricState, NodalCurve, ScalarField, Vec2};
pub use monitor::{MonitorModel, MonitorParams};
pub use verify::{convergence_study, exact_circle, mesh_quality, StudyMethod};
