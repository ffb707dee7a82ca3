//! Summary of the fiber-integral limits: the separated-point limit, the
//! coincident-point value and the resulting ratio for simple-type manifolds.

use serde::{Deserialize, Serialize};

use crate::integrate::fiber::integrate_ip_reduced;
use crate::integrate::QuadratureResult;
use crate::intersect::Ratio;

/// The fiber is parametrized two-to-one by `(a, b)`.
pub const COVERING_DEGREE: u32 = 2;

/// Value of the full product form needed on a simple-type manifold.
pub const SIMPLE_TYPE_TARGET: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberLimitReport {
    pub ip: QuadratureResult,
    /// `I_p / 2`.
    pub fiber_limit: f64,
    pub fiber_limit_err: f64,
    pub coincident_value: f64,
    /// `(1/2) / 4` as an exact ratio.
    pub ratio: Ratio,
    pub lines: Vec<String>,
}

/// Builds the report from an already computed `I_p`.
pub fn fiber_limit_report(ip: QuadratureResult) -> FiberLimitReport {
    let fiber_limit = ip.value / COVERING_DEGREE as f64;
    let ratio = Ratio::new(1, (COVERING_DEGREE * SIMPLE_TYPE_TARGET) as i64);
    let lines = vec![
        format!("I_p = {:.9} +/- {:.1e}", ip.value, ip.err_estimate),
        format!("fiber integral limit = {fiber_limit:.9}"),
        "coincident-point value = 0".to_string(),
        format!("boundary ratio = {ratio}"),
    ];
    FiberLimitReport {
        ip,
        fiber_limit,
        fiber_limit_err: ip.err_estimate / COVERING_DEGREE as f64,
        coincident_value: 0.0,
        ratio,
        lines,
    }
}

pub fn fiber_contribution_report() -> FiberLimitReport {
    fiber_limit_report(integrate_ip_reduced())
}
