//! The local fiber integrand and the reduced integral `I_p`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::Quaternion;
use crate::error::{Error, Result};
use crate::fields::fiber_curvature_norm_sq;
use crate::integrate::quad::{integrate, AdaptiveOptions, Estimate};
use crate::integrate::{QuadratureMethod, QuadratureResult};

/// Fiber coordinates: `a` encodes scale `|a|` and gluing angle `a / |a|`, `b` the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFiberPoint")]
pub struct FiberPoint {
    pub a: Quaternion,
    pub b: Quaternion,
}

#[derive(Deserialize)]
struct RawFiberPoint {
    a: Quaternion,
    b: Quaternion,
}

impl TryFrom<RawFiberPoint> for FiberPoint {
    type Error = Error;
    fn try_from(r: RawFiberPoint) -> Result<Self> {
        FiberPoint::new(r.a, r.b)
    }
}

impl FiberPoint {
    pub fn new(a: Quaternion, b: Quaternion) -> Result<Self> {
        if a.norm_sq() == 0.0 {
            return Err(Error::invalid("fiber parameter a must be nonzero"));
        }
        Ok(FiberPoint { a, b })
    }

    pub fn lambda(&self) -> f64 {
        self.a.norm()
    }

    pub fn center(&self) -> Quaternion {
        self.b
    }
}

/// `2^4 (8 pi^2)^-2 |F(p)|^2 |F(q)|^2 |a|^-4`.
pub fn mu_loc_fiber_integrand(fp: &FiberPoint, p: Quaternion, q: Quaternion) -> Result<f64> {
    let fp2 = fiber_curvature_norm_sq(p, fp.a, fp.b)?;
    let fq2 = fiber_curvature_norm_sq(q, fp.a, fp.b)?;
    let a2 = fp.a.norm_sq();
    Ok(16.0 / (64.0 * PI.powi(4)) * fp2 * fq2 / (a2 * a2))
}

/// The integrand after integrating out the gluing angle (`2 pi^2 lambda^3`)
/// and the rotations about the `p q` axis (`4 pi rho^2`), for `p = 0` and
/// `q = 2`; `z` is the coordinate of `b` along the axis and `rho` its distance
/// from the axis.
pub fn axisymmetric_density(lambda: f64, z: f64, rho: f64) -> f64 {
    axisymmetric_density_at(lambda, z, rho, 2.0)
}

/// [`axisymmetric_density`] with `q` at distance `sep` from `p = 0`.
pub fn axisymmetric_density_at(lambda: f64, z: f64, rho: f64, sep: f64) -> f64 {
    let l2 = lambda * lambda;
    let r2 = rho * rho;
    let d0 = l2 + z * z + r2;
    let d2 = l2 + (z - sep) * (z - sep) + r2;
    let c = 36.0 / PI.powi(4) * 16.0 * 2.0 * PI * PI * 4.0 * PI;
    c * lambda.powi(7) * r2 / (d0 * d0 * d0 * d0 * d2 * d2 * d2 * d2)
}

/// Polar integrand in the `(lambda, rho)` quarter-plane after the angle has
/// been integrated: `int_0^{pi/2} cos^7 sin^2 = 16/315`.
pub fn reduced_density(radius: f64, z: f64) -> f64 {
    let r2 = radius * radius;
    let d0 = r2 + z * z;
    let d2 = r2 + (z - 2.0) * (z - 2.0);
    4608.0 / PI * (16.0 / 315.0) * radius.powi(10) / (d0.powi(4) * d2.powi(4))
}

/// The unreduced triple integrand `lambda^7 r^2 / ((lambda^2 + r^2 + z^2)^4 (lambda^2 + r^2 + (z-2)^2)^4)`.
pub fn triple_integrand(lambda: f64, r: f64, z: f64) -> f64 {
    let s = lambda * lambda + r * r;
    lambda.powi(7) * r * r / ((s + z * z).powi(4) * (s + (z - 2.0) * (z - 2.0)).powi(4))
}

/// `int dz` of [`triple_integrand`] at fixed `(lambda, r)`.
pub fn inner_z_integral(lambda: f64, r: f64, opts: &AdaptiveOptions) -> Estimate {
    integrate(|z| triple_integrand(lambda, r, z), f64::NEG_INFINITY, f64::INFINITY, &[0.0, 1.0, 2.0], opts).into()
}

/// `I_p` by nested adaptive quadrature of the polar-reduced form.
pub fn integrate_ip_reduced() -> QuadratureResult {
    let inner = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 400 };
    let outer = AdaptiveOptions { abs_tol: 1e-11, rel_tol: 1e-9, max_intervals: 400 };
    let r = integrate(
        |radius: f64| -> Estimate {
            integrate(|z| reduced_density(radius, z), f64::NEG_INFINITY, f64::INFINITY, &[0.0, 1.0, 2.0], &inner).into()
        },
        0.0,
        f64::INFINITY,
        &[0.5, 1.0, 2.0, 4.0],
        &outer,
    );
    QuadratureResult::new(r.value, r.err, r.n_evals, QuadratureMethod::AdaptiveNested)
}

/// `(8 pi^2)^-1 int |F|^2` over `R^4` for an instanton of scale `lambda`,
/// as a one-dimensional radial integral.
pub fn instanton_number_radial(lambda: f64) -> Result<QuadratureResult> {
    let a = Quaternion::real(lambda);
    fiber_curvature_norm_sq(Quaternion::ZERO, a, Quaternion::ZERO)?;
    let opts = AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 400 };
    let r = integrate(
        |r: f64| {
            let f2 = fiber_curvature_norm_sq(Quaternion::real(r), a, Quaternion::ZERO).unwrap_or(0.0);
            f2 * 2.0 * PI * PI * r.powi(3) / (8.0 * PI * PI)
        },
        0.0,
        f64::INFINITY,
        &[lambda, 4.0 * lambda],
        &opts,
    );
    Ok(QuadratureResult::new(r.value, r.err, r.n_evals, QuadratureMethod::Radial1d))
}
