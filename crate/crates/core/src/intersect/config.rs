use serde::{Deserialize, Serialize};

use crate::algebra::{CurvatureMatrix, Quaternion};
use crate::error::{Error, Result};
use crate::fields::BackgroundModel;
use crate::reducible::{classify_spectrum, SpectrumClass, SpectrumKind, DEFAULT_GAP_TOL};

/// Marked points `p = (-L, 0, 0, 0)`, `q = (L, 0, 0, 0)`, admissibility
/// `lambda < K L^alpha`, and the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub background: BackgroundModel,
}

impl ProblemConfig {
    pub fn new(l: f64, k: f64, alpha: f64, background: BackgroundModel) -> Result<Self> {
        let cfg = ProblemConfig { l, k, alpha, background };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::invalid(format!("L = {} must be positive", self.l)));
        }
        if !(self.k > 0.0) {
            return Err(Error::invalid(format!("K = {} must be positive", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::invalid(format!("alpha = {} must lie in (0, 2)", self.alpha)));
        }
        if self.l > self.background.patch_radius() {
            return Err(Error::OutOfPatch { distance: self.l, radius: self.background.patch_radius() });
        }
        Ok(())
    }

    pub fn p(&self) -> Quaternion {
        Quaternion::real(-self.l)
    }

    pub fn q(&self) -> Quaternion {
        Quaternion::real(self.l)
    }

    /// `K L^alpha`.
    pub fn lambda_max(&self) -> f64 {
        self.k * self.l.powf(self.alpha)
    }

    pub fn background_at_p(&self) -> CurvatureMatrix {
        self.background.curvature(self.p())
    }

    pub fn background_at_q(&self) -> CurvatureMatrix {
        self.background.curvature(self.q())
    }

    /// Spectral class of the background at the origin.
    pub fn origin_class(&self) -> SpectrumClass {
        let p0 = self.background.p0();
        let tol = DEFAULT_GAP_TOL * (1.0 + p0.singular_values()[0]);
        classify_spectrum(p0, tol).expect("positive tolerance")
    }
}

/// Scales derived from the background at the marked points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    #[serde(rename = "L")]
    pub l: f64,
    pub s_p: f64,
    pub s_q: f64,
    pub s_m: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "R_Kalpha")]
    pub r_kalpha: f64,
    pub lambda_max: f64,
}

impl DerivedScales {
    /// `1 + Delta^2 / 16`.
    pub fn quad_coefficient(&self) -> f64 {
        1.0 + self.delta * self.delta / 16.0
    }

    /// Scales for prescribed magnitudes at `p` and `q`.
    pub fn from_magnitudes(l: f64, s_p: f64, s_q: f64, lambda_max: f64) -> Result<Self> {
        if !(s_p > 0.0 && s_q > 0.0) {
            return Err(Error::invalid(format!("s_p = {s_p}, s_q = {s_q} must be positive")));
        }
        let (ip, iq) = (1.0 / s_p.sqrt(), 1.0 / s_q.sqrt());
        let s_m = (2.0 / (ip + iq)).powi(2);
        let delta = (ip - iq) / l;
        let mut out = DerivedScales { l, s_p, s_q, s_m, delta, r_kalpha: 0.0, lambda_max };
        let a = out.quad_coefficient();
        let b = 1.0 / s_m.sqrt();
        let lam = lambda_max.min(b / (2.0 * a));
        let r2 = lam * b - a * lam * lam - l * l;
        out.r_kalpha = r2.max(0.0).sqrt();
        Ok(out)
    }
}

/// Reads `s_p, s_q` off the background and forms `s_m`, `Delta`, `R_{K,alpha}`.
pub fn derived_scales(cfg: &ProblemConfig) -> Result<DerivedScales> {
    cfg.validate()?;
    for m in [cfg.background_at_p(), cfg.background_at_q()] {
        let tol = DEFAULT_GAP_TOL * (1.0 + m.singular_values()[0]);
        let class = classify_spectrum(&m, tol)?;
        if class.kind != SpectrumKind::Generic {
            return Err(Error::DegenerateInput { class });
        }
    }
    let s_p = cfg.background_at_p().singular_values()[1];
    let s_q = cfg.background_at_q().singular_values()[1];
    DerivedScales::from_magnitudes(cfg.l, s_p, s_q, cfg.lambda_max())
}

/// Small root `lambda` of `lambda^2 (1 + Delta^2/16) - lambda / sqrt(s_m) + L^2 + |y_I|^2 = 0`
/// and `y0 = lambda Delta / 4`; `None` when the discriminant is negative.
pub fn ellipsoid_solve(scales: &DerivedScales, y_i: &nalgebra::Vector3<f64>) -> Option<(f64, f64)> {
    let a = scales.quad_coefficient();
    let b = 1.0 / scales.s_m.sqrt();
    let c = scales.l * scales.l + y_i.norm_squared();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let lambda = 2.0 * c / (b + disc.sqrt());
    Some((lambda, lambda * scales.delta / 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    fn scales(s_m: f64, delta: f64, l: f64) -> DerivedScales {
        DerivedScales { l, s_p: s_m, s_q: s_m, s_m, delta, r_kalpha: 0.0, lambda_max: 1.0 }
    }

    #[test]
    fn ellipsoid_examples() {
        let s = scales(1.0, 0.0, 0.1);
        let (lam, y0) = ellipsoid_solve(&s, &Vector3::zeros()).unwrap();
        let oracle = (1.0 - (1.0f64 - 0.04).sqrt()) / 2.0;
        assert!((lam - oracle).abs() < 1e-15);
        assert!((lam - 0.010102051443364).abs() < 1e-12);
        assert_eq!(y0, 0.0);
        assert!(ellipsoid_solve(&s, &Vector3::new(0.6, 0.0, 0.0)).is_none());
        let s = scales(1.0, 0.0, 1e-3);
        for r in [0.0, 5e-4, 1e-3] {
            let (lam, _) = ellipsoid_solve(&s, &Vector3::new(r, 0.0, 0.0)).unwrap();
            let ratio = lam / (1e-6 + r * r);
            assert!((0.9..=1.1).contains(&ratio));
        }
    }

    #[test]
    fn harmonic_mean_and_constant_background() {
        let d = DerivedScales::from_magnitudes(0.1, 4.0, 4.0, 0.1).unwrap();
        assert!((d.s_m - 4.0).abs() < 1e-14);
        assert_eq!(d.delta, 0.0);
        let bg = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0).unwrap();
        let cfg = ProblemConfig::new(1e-2, 1.0, 1.0, bg).unwrap();
        let d = derived_scales(&cfg).unwrap();
        assert_eq!(d.s_p, d.s_q);
        assert!((d.s_p - 2.0).abs() < 1e-14);
        assert_eq!(d.delta, 0.0);
        // R_{K,alpha} is exactly where the small root reaches K L^alpha.
        let (lam, _) = ellipsoid_solve(&d, &Vector3::new(d.r_kalpha, 0.0, 0.0)).unwrap();
        assert!((lam - cfg.lambda_max()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let bg = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0).unwrap();
        assert!(ProblemConfig::new(-1.0, 1.0, 1.0, bg.clone()).is_err());
        assert!(ProblemConfig::new(0.1, 1.0, 2.5, bg.clone()).is_err());
        assert!(ProblemConfig::new(2.0, 1.0, 1.0, bg).is_err());
        let deg = BackgroundModel::constant(CurvatureMatrix(Matrix3::identity()), 1.0).unwrap();
        let cfg = ProblemConfig::new(0.1, 1.0, 1.0, deg).unwrap();
        assert!(matches!(derived_scales(&cfg), Err(Error::DegenerateInput { .. })));
    }
}
