//! Experiments built on the estimators: norm ratios, divergence scans, the
//! weak-type endpoint and the tiling audit, with report emission.

pub mod config;
pub mod divergence;
pub mod experiments;
pub mod norms;
pub mod report;

pub use config::{ExperimentConfig, Inputs};
pub use divergence::{check_pairing, divergence_scan, Family, PreparedScan, ScanConfig, ScanResult};
pub use experiments::{
    boundedness_experiment, tiling_audit, weak_type_endpoint_experiment, TilingAuditConfig,
};
pub use norms::{lp_norm, weak_lr_norm, NormEstimate, NormEstimatorConfig, Sampled, WeakNormEstimate};
pub use report::ExperimentReport;
