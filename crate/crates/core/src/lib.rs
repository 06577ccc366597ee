//! Computational tools for Diophantine inequalities in sums of shifted k-th powers.
//!
//! * [`exponents`]: exact exponent bookkeeping and the variable-count optimisers.
//! * [`polynomials`]: shifted forms, polynomial systems and their structural predicates.
//! * [`kernels`]: Davenport-Heilbronn kernels and their Fourier transforms.
//! * [`weyl`]: Weyl sums and oscillatory integrals.
//! * [`diophantine`]: continued-fraction approximation and major-arc classification.
//! * [`counting`]: exact solution counters (brute force and meet-in-the-middle).
//! * [`asymptotic`]: main-term formula and count-versus-main-term scans.

pub mod asymptotic;
pub mod counting;
pub mod diophantine;
pub mod error;
pub mod exponents;
pub mod kernels;
pub mod polynomials;
pub mod quadrature;
pub mod weyl;
pub mod precision;

pub use error::{Error, Result};
