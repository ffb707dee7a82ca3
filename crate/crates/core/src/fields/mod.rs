//! Closed-form gauge fields: the standard instanton, the polynomial
//! background, cutoffs and the glued connection.

pub mod background;
pub mod cutoff;
pub mod glued;
pub mod instanton;

use crate::algebra::Quaternion;
use crate::error::{Error, Result};

pub use background::BackgroundModel;
pub use cutoff::{beta, beta_prime, zone_classify, CutoffScales, ScaleThresholds, Zone};
pub use glued::{glued_curvature, interpolated_curvature, GluedConnectionModel, GluedCurvature};
pub use instanton::{
    astd_radial_gauge, astd_regular_gauge, fstd_magnitude, fstd_radial_gauge, fstd_regular_gauge,
    GluingData,
};

/// `|F|^2 = 48 |a|^4 / (|a|^2 + |x - b|^2)^4` for the instanton of scale `|a|`
/// centered at `b`.
pub fn fiber_curvature_norm_sq(x: Quaternion, a: Quaternion, b: Quaternion) -> Result<f64> {
    let a2 = a.norm_sq();
    if a2 == 0.0 {
        return Err(Error::invalid("fiber parameter a must be nonzero"));
    }
    let d = a2 + (x - b).norm_sq();
    Ok(48.0 * a2 * a2 / (d * d * d * d))
}
