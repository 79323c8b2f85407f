//! Derivation-based differential calculus for noncommutative algebras.
//!
//! The crate covers three families of algebras, all driven by one generic
//! engine ([`calculus`]):
//!
//! * the matrix algebra `M_n(C)` with its canonical frame `∂_k = ad_{iE_k}`
//!   ([`algebra`], [`matrix_geometry`]);
//! * matrix-valued polynomial functions on `R^m`, a desk-scale stand-in for
//!   `C^∞(M) ⊗ M_n` ([`polymatrix`], [`matrix_functions`]);
//! * the polynomial subalgebra of the Moyal plane with the five-dimensional
//!   `isp(2,R)^C` frame ([`moyal`]).
//!
//! Connections, curvature and gauge transformations live in [`connections`];
//! JSON import/export in [`io`].

pub mod algebra;
pub mod calculus;
pub mod connections;
mod error;
pub mod io;
pub mod linalg;
pub mod matrix_functions;
pub mod matrix_geometry;
pub mod moyal;
pub mod polymatrix;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default absolute tolerance for equality predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Environment variable that overrides [`DEFAULT_TOL`] in [`Tolerance::from_env`].
pub const TOL_ENV_VAR: &str = "DERCALC_TOL";

/// Tolerance used by approximate equality predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(pub f64);

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(DEFAULT_TOL)
    }
}

impl Tolerance {
    /// Reads `DERCALC_TOL`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        std::env::var(TOL_ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|t| t.is_finite() && *t > 0.0)
            .map(Tolerance)
            .unwrap_or_default()
    }

    pub fn value(self) -> f64 {
        self.0
    }
}
