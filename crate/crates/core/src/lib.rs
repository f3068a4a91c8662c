//! Numerical and symbolic tools for multidimensional Mellin transforms of
//! rational functions `g / f^p` with Laurent polynomial denominators.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: Newton polytopes, faces and the shifted polytopes `Δ(γ)`.
//! * [`laurent`]: sparse Laurent polynomials, truncations, Euler derivatives.
//! * [`mellin`]: quadrature of Mellin integrals, Laurent coefficients, inversion.
//! * [`continuation`]: the integration-by-parts recursion and the entire factor `Φ`.
//! * [`oracles`]: closed-form special cases used as ground truth.
//! * [`coamoeba`]: argument images of zero sets and non-vanishing diagnostics.
//! * [`gkz`]: A-hypergeometric residual checks.

pub mod coamoeba;
pub mod continuation;
pub mod error;
pub mod exact;
pub mod gamma;
pub mod gkz;
pub mod lattice;
pub mod laurent;
pub mod mellin;
pub mod oracles;

pub use coamoeba::ArgDirection;
pub use error::{Error, Result};
pub use lattice::{ExponentVector, Face, Facet, NewtonPolytope, ShiftedPolytope};
pub use laurent::{ExactPolynomial, LaurentPolynomial, LogPoint};
pub use mellin::{MellinValue, QuadratureSpec, TubePoint};
