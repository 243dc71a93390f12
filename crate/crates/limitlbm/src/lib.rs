//! Lattice Boltzmann solver with a grid-limit consistency harness.
//!
//! The crate has two halves that share one set of kernels:
//!
//! * a small BGK lattice Boltzmann solver (D2Q9 / D3Q19, periodic box,
//!   collide-then-stream) under diffusive scaling `dt = dx^2 = h^2`, and
//! * a verification harness that measures how fast discrete artifacts
//!   vanish as `h -> 0`: equilibrium truncation remainders, the residual
//!   of the update equation on manufactured flows, observed convergence
//!   orders, and viscosity/stress recovery.
//!
//! Entry points worth knowing:
//!
//! * [`lattice::d2q9`], [`lattice::d3q19`] build the velocity sets and
//!   [`lattice::verify_quadrature`] checks their moment identities.
//! * [`scaling::make_scaling`] fixes all scale factors from `(nu, h)`.
//! * [`solver::step`] advances a [`grid::PopulationField`] one time step.
//! * [`manufactured`] provides closed-form flows with analytic gradients.
//! * [`consistency`] runs convergence, residual-boundedness and stress
//!   studies and produces CSV-backed reports.
//! * [`driver::run_experiment`] executes a config file end to end; the
//!   `limitlbm` binary is a thin wrapper around it.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

// Validation guards use the `!(x > 0.0)` form on purpose: NaN must fail
// the check and land in the error branch. Index loops are the house style
// in the stencil kernels, which walk several same-length arrays in
// lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod consistency;
pub mod driver;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod manufactured;
pub mod moments;
pub mod report;
pub mod scaling;
pub mod solver;

pub use error::{Error, ExitStatus, Result};
pub use grid::{Grid, PopulationField};
pub use lattice::{d2q9, d3q19, Stencil};
pub use scaling::{make_scaling, ScalingParams};
