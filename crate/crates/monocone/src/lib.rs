//! Exact analysis of set-valued operators on ℝⁿ.
//!
//! The crate computes regular and limiting coderivatives for structured
//! operator classes (rational maps, affine-plus-box operators, polyhedral
//! graph unions, subdifferentials of finite maxima of quadratics) and applies
//! positive-semidefiniteness tests to certify or refute maximal monotonicity,
//! strong monotonicity, and convexity of the underlying functions.
//!
//! Polyhedral computations are exact: rational arithmetic end to end, an
//! exact simplex underneath, and stratum enumeration where a certificate
//! over the whole graph is required. Sampled fallbacks are always labeled
//! as such and never promoted to certificates.

pub mod cone;
pub mod coderivative;
pub mod convexity;
pub mod copositive;
pub mod error;
pub mod jsonio;
pub mod lp;
pub mod maxquad;
pub mod monotonicity;
pub mod operator;
pub mod polyhedron;
pub mod polynomial;
pub mod rat;
pub mod report;
pub mod strata;

pub use error::{Error, Result};
