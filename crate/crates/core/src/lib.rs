//! Lie point symmetries of two-dimensional autonomous systems.
//!
//! The crate relates symmetries of a planar system `u' = ω_u(u, v)`,
//! `v' = ω_v(u, v)` to symmetries of its phase-plane equation
//! `dv/du = ω_v / ω_u`:
//!
//! - [`expr`]: symbolic expressions (parse, evaluate, differentiate).
//! - [`jets`]: systems, generators, total derivatives and prolongations.
//! - [`verify`]: symmetry-condition residuals and grid certification.
//! - [`reduction`]: push-forward of time-domain generators to the phase plane.
//! - [`lifting`]: lifting phase-plane generators back to the time domain.
//! - [`flow`]: RK4 trajectories and finite symmetry transformations.
//! - [`models`]: the linear mass-conserved and nonlinear oscillator models.

pub mod error;
pub mod expr;
pub mod flow;
pub mod jets;
pub mod lifting;
pub mod models;
pub mod random;
pub mod reduction;
pub mod region;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use jets::{Chart, JetPointPhase, JetPointTime, PhaseGenerator, System2D, TimeGenerator};
pub use region::{Exclusion, ResidualReport, SampleRegion};

/// Version string recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
