//! Case studies and scans with machine-readable reports.

pub mod cases;
pub mod report;
pub mod scan;

use thiserror::Error;

use crate::lie::LieError;
use crate::multilinear::AlgebraError;
use crate::sphere::SphereError;
use crate::twist::TwistError;

pub use cases::{case_r4_kahler, case_s3s3, sphere_props, twist_props, Suite};
pub use report::{CaseReport, Check, Comparison};
pub use scan::{certificate_search, eigen_scan, eigen_scan_s6, nonintegrability_certificate, parse_c_range, Certificate, CertificateOutcome, EigenScanResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
