//! Numerical laboratory for moment operators of random quantum circuits.
//!
//! Dense and matrix-free kernels live in [`tensor`]; Haar moments and permutation operators in
//! [`haar`]; stabilizer tableaux in [`clifford`]; circuit moment operators, Hamiltonians and gap
//! computations in [`walk`]; coupling Monte Carlo in [`coupling`]; closed-form bounds in
//! [`bounds`]; and the report-producing commands in [`verify`].

pub mod bounds;
pub mod clifford;
pub mod coupling;
pub mod error;
pub mod haar;
pub mod tensor;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, Isometry, LinearOperator, C64};
