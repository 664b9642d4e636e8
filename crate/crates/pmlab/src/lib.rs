//! Numerical laboratory for singular porous-medium / fast-diffusion systems.
//!
//! The crate studies the degenerate parabolic system
//!
//! ```text
//! ∂_t u − div A(x, t, u, ∇⟦u⟧^m) = div F
//! ```
//!
//! in the fast-diffusion range `0 < m < 1`, with the prototype `A(ξ) = ξ`, at
//! desk scale: exact singular solutions with their forcing construction,
//! the exponent calculus that governs admissibility and gradient higher
//! integrability, intrinsically scaled space-time cylinders, covering and
//! stopping-time algorithms, and numerical checkers that evaluate both sides
//! of every major energy/oscillation inequality on concrete fields.
//!
//! Modules:
//! - [`exponents`]: scalar exponent formulas and iteration-lemma simulators;
//! - [`solutions`]: exact radial solution families and PDE residuals;
//! - [`quad`]: one-dimensional quadrature building blocks;
//! - [`geometry`]: cylinders, means, sup-norms, level-set measures;
//! - [`field`]: the evaluatable space-time field abstraction;
//! - [`intrinsic`]: the non-uniform cylinder system, Vitali covering,
//!   stopping-time radii, truncation/Fubini identities;
//! - [`verify`]: inequality checkers producing machine-readable [`verify::Report`]s;
//! - [`solver`]: a radial finite-difference solver for cross-validation.

pub mod error;
pub mod exponents;
pub mod field;
pub mod geometry;
pub mod intrinsic;
pub mod quad;
pub mod solutions;
pub mod solver;
pub mod verify;

pub use error::Error;
