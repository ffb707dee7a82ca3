//! Quadrature for the half-plane toy model, the local fiber integrand and the
//! `I_p` integral, truncated-region limits and the summary report.

use serde::{Deserialize, Serialize};

pub mod fiber;
pub mod mc;
pub mod quad;
pub mod report;
pub mod toy;
pub mod truncated;

pub use fiber::{
    axisymmetric_density, instanton_number_radial, integrate_ip_reduced, mu_loc_fiber_integrand, FiberPoint,
};
pub use mc::{integrate_ip_mc, sphere_area_mc};
pub use quad::{integrate, AdaptiveOptions, Integral};
pub use report::{fiber_contribution_report, FiberLimitReport};
pub use toy::{toy_wedge_integral, ToyConfig};
pub use truncated::{
    concentration_profile, limit_order_demo, log_log_slope, truncated_fiber_integral, ConcentrationProfile, LambdaBin,
    LimitOrderPoint, Truncation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    AdaptiveNested,
    MonteCarlo,
    Radial1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub err_estimate: f64,
    pub n_evals: u64,
    pub method: QuadratureMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl QuadratureResult {
    pub fn new(value: f64, err_estimate: f64, n_evals: u64, method: QuadratureMethod) -> Self {
        QuadratureResult { value, err_estimate: err_estimate.abs(), n_evals, method, seed: None }
    }

    /// Whether `other` agrees with `self` within the sum of the error estimates scaled by `k`.
    pub fn agrees_with(&self, other: &QuadratureResult, k: f64) -> bool {
        (self.value - other.value).abs() <= k * (self.err_estimate + other.err_estimate)
    }
}
