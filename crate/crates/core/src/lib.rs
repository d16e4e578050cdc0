//! Numerical laboratory for antipeakon–peakon collisions of the Novikov
//! equation on the line and on the circle (period 2π).
//!
//! The library simulates multi-peakon solutions `u = Σ_j p_j(t)·K(x − q_j(t))`
//! (`K = e^{−|·|}` on the line, `K = cosh([·]_p − π)` on the circle), and
//! provides:
//!
//! * the n-peakon ODE right-hand sides and an H¹ conservation monitor
//!   ([`dynamics`]);
//! * the transformed two-peakon variables `(q, p, w, z)` with their exact
//!   closed-form solutions, the autonomous gap ODE `q' = −f(q)`, dominating
//!   power-law ODEs, and collision-time quadratures ([`closed_form`]);
//! * an adaptive embedded Runge–Kutta integrator with dense output and
//!   event detection for the collision `q ↓ q_min` ([`integrate`]);
//! * Sobolev `H^s` norms by the exact two-peakon formula and by an
//!   independent Fourier-side oracle, the oscillatory kernel integral
//!   `Q_s`, and `L^r` distances to the limiting antipeakon ([`sobolev`]);
//! * end-to-end experiments: small-lifespan/small-data parameter selection,
//!   norm-inflation runs, non-uniqueness demonstrations, and power-law
//!   fitting ([`experiments`]).
//!
//! All computations are deterministic; there is no randomness anywhere in
//! the library.

pub mod closed_form;
pub mod dynamics;
pub mod experiments;
pub mod integrate;
pub mod kernel;
pub mod quad;
pub mod sobolev;

pub use closed_form::{ClosedFormParams, TransformedState};
pub use dynamics::{InitialProfile, PeakonState};
pub use integrate::{EventKind, IntegratorConfig, Trajectory};
pub use kernel::{DomainKind, SolitaryPeakon};
pub use sobolev::NormReport;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A non-finite value was passed where a finite one is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration or profile violates its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The requested configuration is not supported (e.g. circle dynamics
    /// with n ≠ 2 peakons).
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// The closed-form expressions are singular at the requested point.
    #[error("singularity: {0}")]
    Singularity(String),
    /// The two-peakon gap is non-positive: the collision has been crossed.
    #[error("collision crossed: gap q = {0} is not positive")]
    CollisionCrossed(f64),
    /// The scalar gap ODE has no finite-time zero (power-law exponent r ≥ 1).
    #[error("no finite-time zero: power-law exponent r = {0} is >= 1")]
    NoZero(f64),
    /// The H^s machinery diverges for s ≥ 3/2.
    #[error("divergent for s = {0}: H^s machinery requires s < 3/2")]
    Divergent(f64),
    /// The two-peakon norm factorization is inapplicable (p₁ = 0).
    #[error("norm formula inapplicable: {0}")]
    FormulaInapplicable(String),
    /// A numerical procedure failed to converge within its budget.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Data required by the operation is missing.
    #[error("missing data: {0}")]
    MissingData(String),
    /// Filesystem error while writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Checks that a value is finite, returning a domain error otherwise.
pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(format!("{what} = {x}")))
    }
}
