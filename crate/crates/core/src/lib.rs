//! Shock-fitting solver for steady axisymmetric transonic flow with swirl in a circular
//! cylinder, built on a Helmholtz decomposition of the velocity.
//!
//! The solver finds the shock curve `x = f(r)` and the subsonic flow behind it for a given
//! supersonic inflow close to a uniform background. See [`driver::solve_transonic_shock`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli_io;
pub mod diagnostics;
pub mod driver;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod gasdyn;
pub mod geometry;
pub mod interp;
pub mod transport;
pub mod upstream;
pub mod verify;

pub use driver::{solve_transonic_shock, Nesting, Solution, SolverConfig};
pub use error::{Error, Result, SmallnessProxy};
pub use gasdyn::{BackgroundShock, GasConstants, GasState};
pub use upstream::{build_parallel_swirl_inflow, InflowSpec, UpstreamSolution};
