//! Complex linear algebra shared by the rest of the crate.

pub mod dense;
pub mod krylov;
pub mod layout;
pub mod matrix;
pub mod operator;
pub mod vector;

pub use dense::{eigh, hermitian_operator_norm, polar_unitary, psd_check, schatten_norm, singular_values, svd, PolarResult, PsdReport, SchattenP};
pub use krylov::{deflated_norm, hermitian_eigs, EigOptions, EigResult, SolverChoice, SolverMethod, Which, AUTO_DENSE_LIMIT, DEFAULT_DENSE_CAP};
pub use layout::{apply_on_axis, devectorize, partial_trace, permute_axes, permute_matrix_axes, vectorize};
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
pub use operator::{
    densify, kron_lift, DenseOperator, GramOperator, KronFactor, KronLift, LinearCombination, LinearOperator, LocalOperator,
    PowerOperator, ProductOperator, ProjectorOperator, SharedOperator,
};
pub use vector::Isometry;
