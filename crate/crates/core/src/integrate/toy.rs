//! The half-plane model of two angle forms: `int_H d theta_0 ^ d theta_L`.
//!
//! On `H = {(x, lambda) : lambda > 0}` the angle `theta_L` is measured from the
//! point `(L, 0)`, and the wedge of the two differentials is
//! `lambda L / ((x^2 + lambda^2) ((x - L)^2 + lambda^2)) dx d lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::quad::{integrate, AdaptiveOptions, Estimate};
use crate::integrate::{QuadratureMethod, QuadratureResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub x_max: f64,
    pub lambda_max: f64,
}

impl ToyConfig {
    pub fn new(l: f64, x_max: f64, lambda_max: f64) -> Result<Self> {
        let c = ToyConfig { l, x_max, lambda_max };
        c.validate()?;
        Ok(c)
    }

    /// Truncation at `1e8` in both directions.
    pub fn with_default_truncation(l: f64) -> Result<Self> {
        ToyConfig::new(l, 1e8, 1e8)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.lambda_max > 0.0 && self.x_max.is_finite() && self.lambda_max.is_finite()) {
            return Err(Error::invalid("toy truncation must be positive and finite"));
        }
        if !self.l.is_finite() {
            return Err(Error::invalid("toy offset L must be finite"));
        }
        Ok(())
    }
}

pub fn toy_integrand(x: f64, lambda: f64, l: f64) -> f64 {
    lambda * l / ((x * x + lambda * lambda) * ((x - l) * (x - l) + lambda * lambda))
}

/// `2 pi asin(|L| / (R - |L|))`: bounds the integral outside the half-disk of
/// radius `R`, where the two angles differ by at most that arcsine.
pub fn toy_tail_bound(l: f64, radius: f64) -> f64 {
    let l = l.abs();
    if radius <= 2.0 * l {
        return std::f64::consts::PI * std::f64::consts::PI;
    }
    2.0 * std::f64::consts::PI * (l / (radius - l)).asin()
}

/// Adaptive nested integral over the truncated box; the tail bound is part of
/// `err_estimate`.
pub fn toy_wedge_integral(cfg: &ToyConfig) -> Result<QuadratureResult> {
    cfg.validate()?;
    let l = cfg.l;
    if l == 0.0 {
        return Ok(QuadratureResult::new(0.0, 0.0, 0, QuadratureMethod::AdaptiveNested));
    }
    let al = l.abs();
    let inner = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 1000 };
    let outer = AdaptiveOptions { abs_tol: 1e-11, rel_tol: 1e-11, max_intervals: 2000 };
    let mut lambda_cuts = vec![al];
    let mut c = al;
    while c < cfg.lambda_max {
        c *= 10.0;
        lambda_cuts.push(c);
        lambda_cuts.push(al / (c / al));
    }
    let r = integrate(
        |lambda: f64| -> Estimate {
            let mut cuts = vec![0.0, l, -lambda, lambda, l - lambda, l + lambda];
            let mut w = 10.0 * (lambda + al);
            while w < cfg.x_max {
                cuts.push(l.min(0.0) - w);
                cuts.push(l.max(0.0) + w);
                w *= 10.0;
            }
            integrate(|x| toy_integrand(x, lambda, l), -cfg.x_max, cfg.x_max, &cuts, &inner).into()
        },
        0.0,
        cfg.lambda_max,
        &lambda_cuts,
        &outer,
    );
    let tail = toy_tail_bound(l, cfg.x_max.min(cfg.lambda_max));
    Ok(QuadratureResult::new(r.value, r.err + tail, r.n_evals, QuadratureMethod::AdaptiveNested))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_offset_gives_half_pi_squared() {
        let r = toy_wedge_integral(&ToyConfig::with_default_truncation(1.0).unwrap()).unwrap();
        assert!((r.value - PI * PI / 2.0).abs() < 1e-6, "{r:?}");
        assert!(r.err_estimate < 1e-6);
    }

    #[test]
    fn zero_offset_is_exactly_zero() {
        let r = toy_wedge_integral(&ToyConfig::with_default_truncation(0.0).unwrap()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.err_estimate, 0.0);
    }

    #[test]
    fn reflection_flips_sign() {
        let a = toy_wedge_integral(&ToyConfig::with_default_truncation(0.3).unwrap()).unwrap();
        let b = toy_wedge_integral(&ToyConfig::with_default_truncation(-0.3).unwrap()).unwrap();
        assert!((a.value + b.value).abs() < 1e-9);
        for (x, lam) in [(0.2, 0.5), (-1.0, 2.0), (3.0, 0.01)] {
            assert_eq!(toy_integrand(x, lam, 0.3), -toy_integrand(-x, lam, -0.3));
        }
    }

    #[test]
    fn rejects_bad_truncation() {
        assert!(ToyConfig::new(1.0, 0.0, 1.0).is_err());
        assert!(ToyConfig::new(1.0, 1.0, f64::INFINITY).is_err());
    }
}
