//! Finite-difference solvers for the sine-Gordon equation `u_tt = Lap u - sin u`
//! on 1D and 2D rectangular meshes.
//!
//! The main integrator is linearly implicit and preserves a discrete local
//! energy law built on the auxiliary variable `r = sqrt(2 - cos u)`; a fully
//! implicit energy-preserving scheme is included for comparison.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linear_solver;
pub mod operators;
pub mod problems;
pub mod schemes;

pub use diagnostics::{DensityForm, EnergyRecord, ErrorReport};
pub use error::{Error, Result};
pub use grid::{Boundary, Grid, MeshFunction};
pub use linear_solver::{SolveOptions, SystemOperator};
pub use operators::StencilSet;
pub use problems::{Problem, ProblemId};
pub use schemes::{SchemeKind, SchemeState, Simulation, TimeGrid};
