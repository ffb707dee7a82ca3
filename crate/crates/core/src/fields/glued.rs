//! The glued connection `A' = beta1 A0 + beta2 A_std`, its curvature, and the
//! interpolation `F_t = t (F_A0 + F_std) + (1 - t) F_A'`.

use serde::{Deserialize, Serialize};

use crate::algebra::{CurvatureMatrix, Quaternion};
use crate::error::{Error, Result};
use crate::fields::background::BackgroundModel;
use crate::fields::cutoff::{beta, beta_prime, CutoffScales, ScaleThresholds};
use crate::fields::instanton::{astd_radial_gauge, fstd_radial_two_form, GluingData};
use crate::forms::{scalar_wedge, OneForm, TwoForm};

/// Background plus bubble plus cutoff scales. The background enters in
/// radial gauge about the bubble center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedConnectionModel {
    pub background: BackgroundModel,
    pub bubble: GluingData,
    pub scales: CutoffScales,
    pub t: f64,
}

/// Every ingredient of the curvature expansion at one point.
#[derive(Debug, Clone, Copy)]
pub struct GluedTerms {
    pub beta1: f64,
    pub beta2: f64,
    pub dbeta1: [f64; 4],
    pub dbeta2: [f64; 4],
    pub a0: OneForm,
    pub astd: OneForm,
    pub f_a0: TwoForm,
    pub f_std: TwoForm,
}

impl GluedTerms {
    /// `A0 ^ A_std + A_std ^ A0`.
    pub fn cross(&self) -> TwoForm {
        self.a0.wedge_sym(&self.astd)
    }

    /// Curvature of `A'` assembled term by term.
    pub fn glued(&self) -> TwoForm {
        let (b1, b2) = (self.beta1, self.beta2);
        self.f_a0 * b1
            + self.f_std * b2
            + self.a0.wedge_self() * (b1 * b1 - b1)
            + self.astd.wedge_self() * (b2 * b2 - b2)
            + scalar_wedge(&self.dbeta1, &self.a0)
            + scalar_wedge(&self.dbeta2, &self.astd)
            + self.cross() * (b1 * b2)
    }

    /// `F_A0 + F_std`.
    pub fn sum(&self) -> TwoForm {
        self.f_a0 + self.f_std
    }

    pub fn interpolated(&self, t: f64) -> TwoForm {
        if t == 1.0 {
            self.sum()
        } else if t == 0.0 {
            self.glued()
        } else {
            self.sum() * t + self.glued() * (1.0 - t)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GluedCurvature {
    pub full: TwoForm,
    pub asd: CurvatureMatrix,
}

impl GluedConnectionModel {
    pub fn new(
        background: BackgroundModel,
        bubble: GluingData,
        scales: CutoffScales,
        thresholds: &ScaleThresholds,
    ) -> Result<Self> {
        scales.validate(bubble.lambda, thresholds)?;
        if bubble.y.norm() > background.patch_radius() {
            return Err(Error::OutOfPatch {
                distance: bubble.y.norm(),
                radius: background.patch_radius(),
            });
        }
        Ok(GluedConnectionModel { background, bubble, scales, t: 0.0 })
    }

    /// Default scales for the bubble's own scale and center.
    pub fn with_default_scales(background: BackgroundModel, bubble: GluingData) -> Result<Self> {
        let scales = CutoffScales::default_for(&background, bubble.y, bubble.lambda)?;
        GluedConnectionModel::new(background, bubble, scales, &ScaleThresholds::default())
    }

    pub fn with_t(mut self, t: f64) -> Result<Self> {
        check_t(t)?;
        self.t = t;
        Ok(self)
    }

    fn cutoffs(&self, x: Quaternion) -> (f64, f64, [f64; 4], [f64; 4]) {
        let z = x - self.bubble.y;
        let r = z.norm();
        let (r1, r2) = (self.scales.r1, self.scales.r2);
        let b1 = beta(r / r1);
        let b2 = 1.0 - beta(r / r2);
        if r == 0.0 {
            return (b1, b2, [0.0; 4], [0.0; 4]);
        }
        let zc = z.coords();
        let g1 = beta_prime(r / r1) / (r1 * r);
        let g2 = -beta_prime(r / r2) / (r2 * r);
        (b1, b2, zc.map(|c| c * g1), zc.map(|c| c * g2))
    }

    pub fn terms(&self, x: Quaternion) -> Result<GluedTerms> {
        let (beta1, beta2, dbeta1, dbeta2) = self.cutoffs(x);
        let y = self.bubble.y;
        Ok(GluedTerms {
            beta1,
            beta2,
            dbeta1,
            dbeta2,
            a0: self.background.connection_form_about(x, y)?,
            astd: astd_radial_gauge(x, &self.bubble)?,
            f_a0: self.background.connection_curvature_about(x, y)?,
            f_std: fstd_radial_two_form(x, &self.bubble)?,
        })
    }

    /// The connection form `A'` itself.
    pub fn connection(&self, x: Quaternion) -> Result<OneForm> {
        let (b1, b2, _, _) = self.cutoffs(x);
        let a0 = self.background.connection_form_about(x, self.bubble.y)?;
        let astd = astd_radial_gauge(x, &self.bubble)?;
        Ok(a0 * b1 + astd * b2)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// Curvature of `A'` (all seven terms) and its ASD matrix.
pub fn glued_curvature(x: Quaternion, model: &GluedConnectionModel) -> Result<GluedCurvature> {
    let full = model.terms(x)?.glued();
    Ok(GluedCurvature { asd: full.asd_matrix(), full })
}

/// ASD matrix of `F_t`.
pub fn interpolated_curvature(x: Quaternion, model: &GluedConnectionModel, t: f64) -> Result<CurvatureMatrix> {
    check_t(t)?;
    Ok(model.terms(x)?.interpolated(t).asd_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rho, Quaternion};
    use crate::fields::cutoff::{zone_classify, Zone};
    use crate::fields::instanton::fstd_radial_gauge;
    use crate::forms::finite_difference_curvature;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn background(rng: &mut impl Rng) -> BackgroundModel {
        let p0 = CurvatureMatrix(Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        let p1 = std::array::from_fn(|_| Matrix3::from_fn(|_, _| rng.random_range(-0.5..0.5)));
        BackgroundModel::new_projected(p0, p1, 50.0).unwrap()
    }

    fn test_model(rng: &mut impl Rng) -> GluedConnectionModel {
        let g0 = Quaternion::new(0.3, -0.5, 0.2, 0.7).normalize().unwrap();
        let bubble = GluingData::new(Quaternion::new(0.1, 0.0, -0.1, 0.05), 1.0, g0).unwrap();
        let scales = CutoffScales { r1: 1.0, r2: 8.0, r3: 1.0, s0: 1.0 };
        let lax = ScaleThresholds { inner: 10.0, outer: 1.0 };
        GluedConnectionModel::new(background(rng), bubble, scales, &lax).unwrap()
    }

    fn offset(rng: &mut impl Rng, r: f64) -> Quaternion {
        let d = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        d.normalize().unwrap() * r
    }

    #[test]
    fn interior_zone_is_pure_instanton() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = test_model(&mut rng);
        for _ in 0..20 {
            let r = rng.random_range(0.01..0.49);
            let x = m.bubble.y + offset(&mut rng, r);
            assert_eq!(zone_classify(x, m.bubble.y, &m.scales), Zone::Interior);
            let g = glued_curvature(x, &m).unwrap();
            assert_eq!(g.asd, fstd_radial_gauge(x, &m.bubble).unwrap());
            assert!(g.full.sd_matrix().abs().max() < 1e-15);
        }
    }

    #[test]
    fn exterior_zone_is_pure_background() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = test_model(&mut rng);
        for _ in 0..20 {
            let r = rng.random_range(16.0..40.0);
            let x = m.bubble.y + offset(&mut rng, r);
            assert_eq!(zone_classify(x, m.bubble.y, &m.scales), Zone::Exterior);
            let g = glued_curvature(x, &m).unwrap();
            let bg = m.background.connection_curvature_about(x, m.bubble.y).unwrap();
            assert_eq!(g.full, bg);
        }
    }

    #[test]
    fn plateau_cross_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = test_model(&mut rng);
        for _ in 0..20 {
            let r = rng.random_range(2.01..3.99);
            let x = m.bubble.y + offset(&mut rng, r);
            assert_eq!(zone_classify(x, m.bubble.y, &m.scales), Zone::Plateau);
            let t = m.terms(x).unwrap();
            let lhs = t.glued();
            let rhs = t.f_a0 + t.f_std + t.cross();
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }
    }

    #[test]
    fn endpoints_and_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = test_model(&mut rng);
        for _ in 0..20 {
            let r = rng.random_range(0.3..20.0);
            let x = m.bubble.y + offset(&mut rng, r);
            let t = m.terms(x).unwrap();
            let one = interpolated_curvature(x, &m, 1.0).unwrap();
            assert_eq!(one, t.sum().asd_matrix());
            let zero = interpolated_curvature(x, &m, 0.0).unwrap();
            assert_eq!(zero, glued_curvature(x, &m).unwrap().asd);
            let half = interpolated_curvature(x, &m, 0.5).unwrap();
            assert!((half.0 - (one.0 + zero.0) * 0.5).abs().max() < 1e-14 * (1.0 + one.norm()));
        }
        assert!(interpolated_curvature(Quaternion::real(1.0), &m, 1.5).is_err());
    }

    #[test]
    fn glued_connection_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = test_model(&mut rng);
        for _ in 0..30 {
            let r = rng.random_range(0.5..6.0);
            let x = m.bubble.y + offset(&mut rng, r);
            let fd = finite_difference_curvature(
                |c| m.connection(Quaternion::from_coords(c)).unwrap(),
                x.coords(),
                1e-4,
            );
            let exact = glued_curvature(x, &m).unwrap().full;
            assert!(fd.max_abs_diff(&exact) < 1e-6);
        }
    }

    #[test]
    fn gauge_covariance_of_bubble() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = test_model(&mut rng);
        let u = Quaternion::new(0.9, 0.1, -0.3, 0.2).normalize().unwrap();
        let b2 = GluingData::new(m.bubble.y, m.bubble.lambda, m.bubble.g0 * u).unwrap();
        let x = m.bubble.y + offset(&mut rng, 0.3);
        let a = fstd_radial_gauge(x, &m.bubble).unwrap();
        let b = fstd_radial_gauge(x, &b2).unwrap();
        let ru = rho(u).unwrap();
        assert!((b.0 - ru.matrix().transpose() * a.0).abs().max() < 1e-13);
    }
}
