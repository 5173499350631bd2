//! Exact coefficient ring: Gaussian rationals and polynomials over them.
//!
//! Polynomial functions on an affine chart stand in for smooth functions;
//! every identity checked by this crate is a local (bidifferential)
//! identity, so the polynomial model is sufficient.

mod gaussian;
mod poly;

pub use gaussian::GaussianRational;
pub use poly::{default_names, partial, poly_add, poly_mul, Monomial, PolyFun};

pub(crate) use poly::unit_index;
