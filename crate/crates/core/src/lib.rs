//! Static linear state-based peridynamics on uniform 2-D lattices.
//!
//! The pipeline is lattice, partial-area weights, nodal material
//! coefficients, a matrix-free operator, and a conjugate-gradient solve on
//! the nodes outside the volume constraint. [`study`] drives convergence
//! studies against a fine reference solution and [`oracle`] evaluates the
//! underlying cell integrals by Gauss quadrature for verification.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod cli;
pub mod config;
pub mod error;
pub mod error_metrics;
pub mod field_io;
pub mod geometry;
pub mod kernels;
pub mod lattice;
pub mod material;
pub mod operator;
pub mod oracle;
pub mod par;
pub mod study;
pub mod system;
pub mod weights;

pub use error::{Error, Result};
pub use error_metrics::{l2_diff, l2_norm, PiecewiseConstantField};
pub use geometry::{Rect, Region, Vec2};
pub use kernels::{Kernel, KernelVariant};
pub use lattice::{BoxDomain, Lattice};
pub use material::{NodalMaterial, ScalarField, VectorField};
pub use operator::{
    assemble_dense, assemble_dense_bond_only, DenseOperator, MatrixFreeOperator, Model,
};
pub use study::{
    builtin_problem, run_convergence_study, run_problem, ProblemSpec, StudyConfig, StudyRow,
};
pub use system::{solve_cg, Preconditioner, ReducedSystem, SolveStats, SolverSettings};
pub use weights::{build_weights, validate_weights, WeightScheme, WeightTable};
