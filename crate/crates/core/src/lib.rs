//! High-precision toolkit for the modular j-function and its first two
//! derivatives: exact q-expansions, fundamental-domain evaluation, modular
//! polynomials and their derivative laws, singular moduli and class groups,
//! integer-relation detection, and a registry of numerical identity checks.

pub mod cmfields;
pub mod error;
pub mod evaluator;
pub mod hpcomplex;
pub mod identities;
pub mod intpoly;
pub mod mat2;
pub mod modpoly;
pub mod parallel;
pub mod recognize;
pub mod series;
pub mod varieties;

pub use error::{Error, Result};
pub use hpcomplex::HPComplex;
pub use mat2::Mat2Z;
