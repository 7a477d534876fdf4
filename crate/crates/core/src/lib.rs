//! Exact normal ordering of exponentials in the Weyl–Heisenberg algebra.
//!
//! For exponents `i k_b x_a phi_ab(p) + i k_a chi_a(p)` the crate computes the
//! conjugated momenta `J_mu(k, p)`, normal-ordered exponents `phi_mu(k, p)` and
//! the phase `h(k, p)` order by order in `k` with Gaussian-rational
//! coefficients, and checks them against a brute-force normal-ordering oracle.
//!
//! - [`series`]: graded multivariate series, the arithmetic substrate.
//! - [`flows`]: the flow engine.
//! - [`weyl`]: the independent Weyl-algebra oracle.
//! - [`applications`]: plane-wave action, realization library, composition.
//! - [`expr`], [`specfile`], [`cli`]: the command-line front end.

pub mod applications;
pub mod cli;
pub mod error;
pub mod expr;
pub mod flows;
pub mod index;
pub mod scalar;
pub mod series;
pub mod specfile;
pub mod weyl;

pub use error::{AlgebraError, FlowError, OracleError, ParseError};
pub use flows::{FlowResult, LinearRealization, Realization};
pub use index::MultiIndex;
pub use scalar::ExactScalar;
pub use series::GradedSeries;
pub use weyl::{AlgebraSignature, WeylElement};
