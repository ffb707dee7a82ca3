//! The charge-one instanton in regular gauge and in exterior radial gauge.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{rho, rho_lift, CurvatureMatrix, Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::forms::{OneForm, TwoForm};

/// Bubble parameters: center `y`, scale `lambda`, gluing angle `m = rho(g0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGluing")]
pub struct GluingData {
    pub y: Quaternion,
    pub lambda: f64,
    pub m: RotationMatrix,
    pub g0: Quaternion,
}

#[derive(Deserialize)]
struct RawGluing {
    y: Quaternion,
    lambda: f64,
    g0: Quaternion,
}

impl TryFrom<RawGluing> for GluingData {
    type Error = Error;
    fn try_from(r: RawGluing) -> Result<Self> {
        GluingData::new(r.y, r.lambda, r.g0)
    }
}

impl GluingData {
    pub fn new(y: Quaternion, lambda: f64, g0: Quaternion) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("scale must be positive, got {lambda}")));
        }
        let m = rho(g0)?;
        Ok(GluingData { y, lambda, m, g0 })
    }

    /// Uses the lift of `m` with nonnegative real part.
    pub fn from_rotation(y: Quaternion, lambda: f64, m: RotationMatrix) -> Result<Self> {
        let g0 = rho_lift(&m);
        let mut out = GluingData::new(y, lambda, g0)?;
        out.m = m;
        Ok(out)
    }
}

/// `lambda^2 / (lambda^2 + r^2)^2`.
pub fn fstd_magnitude(r: f64, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    l2 / ((l2 + r * r) * (l2 + r * r))
}

/// Unit instanton at the origin, regular gauge: `Mat = I / (1 + |x|^2)^2`.
pub fn fstd_regular_gauge(x: Quaternion) -> CurvatureMatrix {
    CurvatureMatrix(Matrix3::identity() * fstd_magnitude(x.norm(), 1.0))
}

/// Regular-gauge connection `Im(xbar dx) / (lambda^2 + |x|^2)` of a scale-`lambda`
/// instanton centered at the origin.
pub fn astd_regular_gauge(x: Quaternion, lambda: f64) -> OneForm {
    let den = lambda * lambda + x.norm_sq();
    let xb = x.conj();
    OneForm(std::array::from_fn(|mu| (xb * Quaternion::BASIS[mu]).imag() / den))
}

fn offset(x: Quaternion, g: &GluingData) -> Result<(Quaternion, f64)> {
    let z = x - g.y;
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::SingularGauge);
    }
    Ok((z, r))
}

/// Curvature matrix in exterior radial gauge:
/// `lambda^2/(lambda^2+|x-y|^2)^2 * m^{-1} rho((x-y)/|x-y|)`.
pub fn fstd_radial_gauge(x: Quaternion, g: &GluingData) -> Result<CurvatureMatrix> {
    let (z, r) = offset(x, g)?;
    let dir = crate::algebra::rho_normalized(z);
    Ok(CurvatureMatrix(
        g.m.matrix().transpose() * dir.matrix() * fstd_magnitude(r, g.lambda),
    ))
}

/// Full (ASD) curvature 2-form in exterior radial gauge.
pub fn fstd_radial_two_form(x: Quaternion, g: &GluingData) -> Result<TwoForm> {
    Ok(TwoForm::from_asd_matrix(&fstd_radial_gauge(x, g)?))
}

/// Connection in exterior radial gauge about `y`, conjugated by `g0`:
/// `A_mu = lambda^2 Im(z conj(e_mu)) / (|z|^2 (lambda^2 + |z|^2))` with `z = x - y`.
pub fn astd_radial_gauge(x: Quaternion, g: &GluingData) -> Result<OneForm> {
    let (z, r) = offset(x, g)?;
    let l2 = g.lambda * g.lambda;
    let c = l2 / (r * r * (l2 + r * r));
    let mt = g.m.matrix().transpose();
    Ok(OneForm(std::array::from_fn(|mu| {
        let v: Vector3<f64> = (z * Quaternion::BASIS[mu].conj()).imag();
        mt * v * c
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::finite_difference_curvature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_quat(rng: &mut impl Rng, scale: f64) -> Quaternion {
        Quaternion::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    }

    fn rand_unit(rng: &mut impl Rng) -> Quaternion {
        rand_quat(rng, 1.0).normalize().unwrap()
    }

    #[test]
    fn regular_gauge_values() {
        assert_eq!(fstd_regular_gauge(Quaternion::ZERO).0, Matrix3::identity());
        let x = Quaternion::new(0.0, 0.6, 0.0, 0.8);
        assert!((fstd_regular_gauge(x).0 - Matrix3::identity() * 0.25).abs().max() < 1e-15);
    }

    #[test]
    fn regular_gauge_curvature_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = rand_quat(&mut rng, 1.5);
            let lambda = rng.random_range(0.5..2.0);
            let f = finite_difference_curvature(
                |c| astd_regular_gauge(Quaternion::from_coords(c), lambda),
                x.coords(),
                1e-4,
            );
            let expect = Matrix3::identity() * fstd_magnitude(x.norm(), lambda);
            assert!((f.asd_matrix().0 - expect).abs().max() < 1e-7);
            assert!(f.sd_matrix().abs().max() < 1e-7);
        }
    }

    #[test]
    fn radial_gauge_curvature_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let y = rand_quat(&mut rng, 0.5);
            let g = GluingData::new(y, rng.random_range(0.5..1.5), rand_unit(&mut rng)).unwrap();
            let x = y + rand_quat(&mut rng, 1.0);
            let f = finite_difference_curvature(
                |c| astd_radial_gauge(Quaternion::from_coords(c), &g).unwrap(),
                x.coords(),
                1e-4,
            );
            let exact = fstd_radial_gauge(x, &g).unwrap();
            assert!((f.asd_matrix().0 - exact.0).abs().max() < 1e-6);
            assert!(f.sd_matrix().abs().max() < 1e-6);
        }
    }

    #[test]
    fn radial_gauge_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = rand_quat(&mut rng, 1.0);
            let lambda = rng.random_range(0.1..2.0);
            let g1 = GluingData::new(y, lambda, Quaternion::ONE).unwrap();
            let x = y + rand_quat(&mut rng, 2.0);
            let z = x - y;
            let a = astd_radial_gauge(x, &g1).unwrap();
            let contraction: Vector3<f64> = (0..4).map(|mu| a.0[mu] * z.coords()[mu]).sum();
            assert!(contraction.norm() < 1e-10);

            let f = fstd_radial_gauge(x, &g1).unwrap();
            let sv = f.singular_values();
            let mag = fstd_magnitude(z.norm(), lambda);
            for s in sv {
                assert!((s - mag).abs() < 1e-12 * (1.0 + mag));
            }

            let u = rand_unit(&mut rng);
            let g0 = rand_unit(&mut rng);
            let ga = GluingData::new(y, lambda, g0).unwrap();
            let gb = GluingData::new(y, lambda, g0 * u).unwrap();
            let fa = fstd_radial_gauge(x, &ga).unwrap();
            let fb = fstd_radial_gauge(x, &gb).unwrap();
            let ru = rho(u).unwrap();
            assert!((fb.0 - ru.matrix().transpose() * fa.0).abs().max() < 1e-12);
            let left = ga.m.matrix().transpose() * f.0;
            assert!((fa.0 - left).abs().max() < 1e-12);
        }
        let g = GluingData::new(Quaternion::ZERO, 1.0, Quaternion::ONE).unwrap();
        let f = fstd_radial_gauge(Quaternion::real(2.0), &g).unwrap();
        assert!((f.0 - Matrix3::identity() / 25.0).abs().max() < 1e-15);
        assert!(matches!(fstd_radial_gauge(Quaternion::ZERO, &g), Err(Error::SingularGauge)));
        assert!(matches!(astd_radial_gauge(Quaternion::ZERO, &g), Err(Error::SingularGauge)));
    }

    #[test]
    fn radial_gauge_decay() {
        let g = GluingData::new(Quaternion::ZERO, 0.3, Quaternion::new(0.5, 0.5, 0.5, 0.5)).unwrap();
        let x = Quaternion::new(0.0, 3.0, 0.0, 0.0) * (1.0 / 1.0);
        let a = astd_radial_gauge(x, &g).unwrap();
        let r = 3.0f64;
        let expect = 0.09 / r.powi(3);
        let ratio = a.norm() / expect;
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}
