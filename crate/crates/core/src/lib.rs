//! Numerical workbench for the trace formula of flat Laplacians twisted by
//! (possibly non-unitary) representations of a genus-2 surface group.
//!
//! The two sides are computed independently:
//!
//! * [`spectral`]: finite elements on the Bolza octagon with twisted side
//!   gluing, eigenvalues with multiplicities, and `sum m(l) phi(sqrt(l - 1/4))`.
//! * [`geomside`]: the identity (Plancherel) term plus the sum over
//!   hyperbolic conjugacy classes enumerated by [`fuchsian`].
//!
//! [`workbench`] wires both into the `twisted-trace` command line tool.

pub mod analysis;
pub mod error;
pub mod fuchsian;
pub mod geomside;
pub mod reps;
pub mod spectral;
pub mod workbench;

pub use error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
