//! Approximate k-subspace median via a mixed semidefinite and second-order
//! cone relaxation solved by a central-path interior-point method, followed
//! by spectral rounding to a projection matrix.
//!
//! The pipeline is exposed as [`ksm_approx`]. The barrier lives in [`conic`]
//! and the path-following solver in [`pathsolver`]. Rounding and the
//! certificate are in [`ksm`], reference methods in [`baselines`].

pub mod baselines;
pub mod conic;
pub mod fixtures;
pub mod ksm;
pub mod linalg;
pub mod pathsolver;

pub use baselines::{
    ksvd_baseline, oracle_2d, oracle_3d, sampling_baseline, BaselineError, OracleMethod,
    OracleResult,
};
pub use conic::{build_instance, ConicError, ConicInstance, InteriorPoint, PointSet};
pub use ksm::{
    ksm_approx, lift_affine, recover_flat, subspace_cost, CertRatio, Certificate, Flat, KsmApprox,
    KsmError, Subspace,
};
pub use linalg::{LinalgError, SymMatrix};
pub use pathsolver::{solve_relaxation, Epsilon, RelaxationSolution, SolverConfig, SolverError};
