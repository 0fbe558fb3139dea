use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid parameter (negative slope, odd panel count, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quadrature failed to deliver the requested accuracy.
    #[error("quadrature failure: {what} (achieved error estimate {achieved:.3e})")]
    Quadrature { what: String, achieved: f64 },

    /// An integrand produced a non-finite value.
    #[error("non-finite integrand value at node {node}: {what}")]
    NonFinite { what: String, node: f64 },

    /// Continuous phase unwrapping could not be completed.
    #[error("phase unwrap failed near eta = {eta:.6e}: {what}")]
    PhaseUnwrap { eta: f64, what: String },

    /// The measured phase winding disagrees with the index-2 structure
    /// the factorization is built on.
    #[error("phase winding {winding:.6e} differs from 2*pi by {deviation:.3e} (a = {a})")]
    WindingMismatch { a: f64, winding: f64, deviation: f64 },

    /// The boundary value of the dispersion function came indistinguishable
    /// from zero on the cut, which would poison every downstream division.
    #[error("dispersion boundary value vanishes on the cut near eta = {eta:.6e} (|lambda+| = {magnitude:.3e})")]
    SingularWeight { eta: f64, magnitude: f64 },

    /// The 2x2 linear system for the jump coefficients is degenerate.
    #[error("degenerate jump system: |Delta| = {determinant:.3e} below scale {scale:.3e}")]
    DegenerateSystem { determinant: f64, scale: f64 },

    /// The direct solver ran out of iterations.
    #[error("direct solver failed to converge after {iterations} iterations (last residuals: {history:?})")]
    OracleNonConvergence { iterations: usize, history: Vec<f64> },

    /// The far-field fit shows curvature: the spatial domain is too short.
    #[error("domain-too-short: far-field fit is nonlinear (curvature measure {curvature:.3e} > {threshold:.3e})")]
    DomainTooShort { curvature: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
