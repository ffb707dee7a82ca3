//! Cutoff profile, cutoff scales and the five radial zones around a bubble.

use serde::{Deserialize, Serialize};

use crate::algebra::Quaternion;
use crate::error::{Error, Result};
use crate::fields::background::BackgroundModel;

const PLATEAU: f64 = 0.25;

/// `C^2` step on `[0, 1]` whose derivative ramps up on `[0, a]`, stays
/// constant on `[a, 1 - a]` and ramps down symmetrically.
fn step(t: f64) -> f64 {
    let a = PLATEAU;
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else if t <= a {
        let u = t / a;
        a * (u * u * u - 0.5 * u * u * u * u) / (1.0 - a)
    } else if t < 1.0 - a {
        (t - 0.5 * a) / (1.0 - a)
    } else {
        1.0 - step(1.0 - t)
    }
}

fn step_prime(t: f64) -> f64 {
    let a = PLATEAU;
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else if t <= a {
        let u = t / a;
        (3.0 * u * u - 2.0 * u * u * u) / (1.0 - a)
    } else if t < 1.0 - a {
        1.0 / (1.0 - a)
    } else {
        step_prime(1.0 - t)
    }
}

/// Monotone cutoff: 0 for `r <= 1/2`, 1 for `r >= 2`, `0 <= beta' <= 8/9`.
pub fn beta(r: f64) -> f64 {
    step((r - 0.5) / 1.5)
}

pub fn beta_prime(r: f64) -> f64 {
    step_prime((r - 0.5) / 1.5) / 1.5
}

/// Scale-separation constants: `R1^2 < inner * lambda * R3`,
/// `R2^2 > outer * lambda / sqrt(s0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleThresholds {
    pub inner: f64,
    pub outer: f64,
}

impl Default for ScaleThresholds {
    fn default() -> Self {
        ScaleThresholds { inner: 1e-6, outer: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffScales {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub s0: f64,
}

impl CutoffScales {
    /// `R1 = 1e-4 sqrt(lambda R3)`, `R2 = 1e4 sqrt(lambda / sqrt(s0))`, with
    /// `R3` and `s0` read off the background at `center`.
    pub fn default_for(background: &BackgroundModel, center: Quaternion, lambda: f64) -> Result<Self> {
        let r3 = background.length_scale_r3_at(center);
        let s0 = background.s0_at(center);
        if !(s0 > 0.0) {
            return Err(Error::InvalidScales(format!("s0 = {s0} must be positive")));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidScales(format!("lambda = {lambda} must be positive")));
        }
        Ok(CutoffScales {
            r1: 1e-4 * (lambda * r3).sqrt(),
            r2: 1e4 * (lambda / s0.sqrt()).sqrt(),
            r3,
            s0,
        })
    }

    pub fn validate(&self, lambda: f64, th: &ScaleThresholds) -> Result<()> {
        if !(self.r1 > 0.0 && self.r2 > self.r1 && self.r3 > 0.0 && self.s0 > 0.0) {
            return Err(Error::InvalidScales(format!("{self:?}")));
        }
        if self.r1 * self.r1 >= th.inner * lambda * self.r3 {
            return Err(Error::InvalidScales(format!(
                "R1^2 = {:e} is not below {:e} * lambda * R3 = {:e}",
                self.r1 * self.r1,
                th.inner,
                th.inner * lambda * self.r3
            )));
        }
        if self.r2 * self.r2 <= th.outer * lambda / self.s0.sqrt() {
            return Err(Error::InvalidScales(format!(
                "R2^2 = {:e} is not above {:e} * lambda / sqrt(s0) = {:e}",
                self.r2 * self.r2,
                th.outer,
                th.outer * lambda / self.s0.sqrt()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    #[serde(rename = "I_interior")]
    Interior,
    #[serde(rename = "II_inner_shoulder")]
    InnerShoulder,
    #[serde(rename = "III_plateau")]
    Plateau,
    #[serde(rename = "IV_outer_shoulder")]
    OuterShoulder,
    #[serde(rename = "V_exterior")]
    Exterior,
}

/// Zone of `x` relative to the bubble center `y` by the thresholds
/// `R1/2, 2R1, R2/2, 2R2`; a point exactly on a threshold belongs to the shoulder.
pub fn zone_classify(x: Quaternion, y: Quaternion, scales: &CutoffScales) -> Zone {
    let r = (x - y).norm();
    if r < scales.r1 / 2.0 {
        Zone::Interior
    } else if r <= 2.0 * scales.r1 {
        Zone::InnerShoulder
    } else if r < scales.r2 / 2.0 {
        Zone::Plateau
    } else if r <= 2.0 * scales.r2 {
        Zone::OuterShoulder
    } else {
        Zone::Exterior
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CurvatureMatrix;

    #[test]
    fn beta_shape() {
        assert_eq!(beta(0.3), 0.0);
        assert_eq!(beta(0.5), 0.0);
        assert_eq!(beta(2.0), 1.0);
        assert_eq!(beta(5.0), 1.0);
        assert!((beta(1.25) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        let mut max_slope: f64 = 0.0;
        for k in 0..=3000 {
            let r = 0.4 + 1.8 * k as f64 / 3000.0;
            let b = beta(r);
            assert!(b >= prev - 1e-15);
            prev = b;
            max_slope = max_slope.max(beta_prime(r));
            let h = 1e-6;
            let fd = (beta(r + h) - beta(r - h)) / (2.0 * h);
            assert!((fd - beta_prime(r)).abs() < 1e-6, "r = {r}");
        }
        assert!(max_slope <= 1.0);
        assert!((max_slope - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn beta_second_derivative_continuous() {
        // One-sided difference quotients of beta' agree at the joins.
        for t in [0.25, 0.75] {
            let r = 0.5 + 1.5 * t;
            let h = 1e-7;
            let left = (beta_prime(r) - beta_prime(r - h)) / h;
            let right = (beta_prime(r + h) - beta_prime(r)) / h;
            assert!((left - right).abs() < 1e-5);
        }
    }

    #[test]
    fn zones() {
        let s = CutoffScales { r1: 1.0, r2: 100.0, r3: 1e4, s0: 1.0 };
        let y = Quaternion::new(0.1, 0.0, 0.0, 0.0);
        let at = |r: f64| zone_classify(y + Quaternion::new(0.0, 0.0, r, 0.0), y, &s);
        assert_eq!(at(0.25), Zone::Interior);
        assert_eq!(at((2.0 + 50.0) / 2.0), Zone::Plateau);
        assert_eq!(at(300.0), Zone::Exterior);
        assert_eq!(at(1.0), Zone::InnerShoulder);
        assert_eq!(at(100.0), Zone::OuterShoulder);
        assert_eq!(at(2.0), Zone::InnerShoulder);
        assert_eq!(at(0.5), Zone::InnerShoulder);
        assert_eq!(at(50.0), Zone::OuterShoulder);
        assert_eq!(at(200.0), Zone::OuterShoulder);
    }

    #[test]
    fn default_scales_are_valid() {
        let b = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0).unwrap();
        for lambda in [1e-2, 1e-4, 1e-8] {
            let s = CutoffScales::default_for(&b, Quaternion::ZERO, lambda).unwrap();
            s.validate(lambda, &ScaleThresholds::default()).unwrap();
        }
        let bad = CutoffScales { r1: 1.0, r2: 2.0, r3: 1.0, s0: 1.0 };
        assert!(matches!(bad.validate(1e-3, &ScaleThresholds::default()), Err(Error::InvalidScales(_))));
    }
}
