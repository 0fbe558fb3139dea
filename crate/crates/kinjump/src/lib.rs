//! Analytic and direct solvers for the combined temperature-jump /
//! weak-evaporation problem of a one-dimensional BGK gas whose collision
//! frequency depends affinely on molecular speed.
//!
//! The half-space boundary value problem is solved two independent ways:
//!
//! * analytically, through the dispersion function of the associated
//!   characteristic equation, its Riemann-Hilbert factorization on the cut,
//!   and Laurent matching of the general solution against the far-field
//!   asymptotics (modules [`dispersion`], [`factorization`], [`jump`]);
//! * numerically, by discrete ordinates and upwind transport sweeps with
//!   far-field moment matching (module [`oracle`]).
//!
//! The two routes cross-validate each other; see the `acceptance`
//! integration test for the full battery.

pub mod dispersion;
pub mod error;
pub mod factorization;
pub mod jump;
pub mod model;
pub mod oracle;
pub mod quadrature;
mod spline;

pub use error::{Error, Result};
pub use model::{rescale_slope, AsymptoticState, GasModel, PhysicalScaling};
pub use quadrature::{build_grid, CutGrid};
