//! Positivity of holomorphic sectional curvature: pointwise extrema, grid
//! scans, the threshold search in `λ` and the closed-form certificate.

mod certificate;
mod consistency;
mod lambda;
mod optimizer;
mod scan;

pub use certificate::{bound_quartic, certify_lambda, reduced_polynomial, Certificate, GRID_STEP};
pub use consistency::{
    certificate_consistency, certificate_inputs, check_final_bound_at, BoundSample, ConsistencyOptions,
    ConsistencyReport, FinalBoundCheck, SLACK_TOL,
};
pub use lambda::{
    find_lambda0, Lambda0Report, LambdaProbe, LINEAR_SCAN_POINTS, MONOTONICITY_DISCLAIMER, SEARCH_POINTS_PER_CHART,
    SPOT_CHECKS,
};
pub use optimizer::{max_hsc_at_point, min_hsc_at_point, HscExtremum, OptimizerOptions, StartSet};
pub use scan::{kahler_check, scan, KahlerCheck, PointRecord, SamplePoint, ScanOptions, ScanReport};
