//! Exact symbolic workbench for formal deformation quantization.
//!
//! Functions on an affine chart are modeled by polynomials with
//! Gaussian-rational coefficients. On top of that the crate builds
//! truncated star products as lists of bidifferential operators, lifts
//! idempotents and line bundles through them, extracts the semiclassical
//! contravariant connection with its curvature, and keeps track of the
//! Picard-group action on characteristic classes. Every identity is
//! decided by exact coefficient comparison.

pub mod classes;
pub mod coeffring;
pub mod diffop;
pub mod error;
pub mod lbquant;
pub mod linalg;
pub mod literal;
pub mod matdef;
pub mod poisson;
pub mod random;
pub mod series;
pub mod star;

pub use error::{Error, Result};
