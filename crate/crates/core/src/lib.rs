//! Eigenvalues of unitary-plus-rank-k matrices `A = U + X Y^H` in `O(n^2 k)`
//! arithmetic.
//!
//! The matrix is embedded into a larger Hessenberg matrix that is stored as a
//! product `L (Q + T Z^H) R` of rotation chains, and an implicit single-shift QR
//! iteration is run directly on that compressed form.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod builders;
pub mod dense;
pub mod error;
pub mod factors;
pub mod invariants;
pub mod oracle;
pub mod qr;
pub mod representation;
pub mod rotation;

pub use num_complex::Complex64 as C64;

pub use dense::Mat;
pub use error::{Error, Result};
pub use factors::{KHessenbergFactor, LfrState, MiddleFactor, RotationChain};
pub use qr::{solve, ShiftStrategy, SolveConfig, SolveReport, ZMode};
pub use representation::{EmbeddedProblem, ProblemInput, UnitaryKind};
pub use rotation::{Core, PhasePair, Rotation};

/// Unit roundoff of `f64`.
pub const EPS: f64 = f64::EPSILON;
