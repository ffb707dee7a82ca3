//! Counting the gluing configurations whose curvature is reducible at two
//! marked points, with orientation signs, stability checks and continuation.

pub mod config;
pub mod continuation;
pub mod holonomy;
pub mod model;
pub mod report;
pub mod sensitivity;
pub mod sign;

pub use config::{derived_scales, ellipsoid_solve, DerivedScales, ProblemConfig};
pub use model::{
    count_model_intersections, g_of_y, reducibility_certificate, solution_sign, BranchPair, CountClassification,
    CountReport, IntersectionSolution,
};
pub use report::{boundary_report, BoundarySummary, Ratio};
pub use sign::{solution_sign_for, ChartOrientation, SignContext};
pub use holonomy::{count_with_holonomy, count_with_holonomy_model, HolonomyModel, HolonomyReport};
pub use sensitivity::{sensitivity_scan, ScalingFit, SensitivityReport, SensitivitySample};
pub use continuation::{continuation_count, ContinuationOptions, ContinuationReport, ContinuationSlice};
