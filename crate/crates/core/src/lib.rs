//! Bilinear fractional integrals on the Heisenberg group.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod group;
pub mod harness;
pub mod lattice;
pub mod exponents;
pub mod functions;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
pub use group::{GroupParams, GroupPoint};
pub use lattice::{cube_contains, locate, overlap_count, CubeKind, LatticeIndex};
pub use functions::{FamilyParams, LatticeFamily, TestFunction};
pub use exponents::{characterize, stein_weiss_characterize, Classification, Condition, ExponentConfig, Verdict};
pub use quadrature::{eval_b_lambda, eval_i_lambda, eval_s, EstimateWithError, OperatorEstimate, QuadratureConfig, Weights};
pub use harness::{
    divergence_scan, ExperimentConfig, ExperimentReport, Family, NormEstimatorConfig, ScanConfig,
};
