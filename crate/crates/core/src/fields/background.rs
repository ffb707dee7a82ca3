//! Polynomial background connection with affine curvature matrix
//! `P0 + sum_mu x^mu P1[mu]`.
//!
//! The connection is written in Fock-Schwinger (radial) gauge about a chosen
//! center `c`: with `z = x - c`,
//! `A_nu = 1/2 z^mu F0_{mu nu} + 1/3 z^mu F1(z)_{mu nu}`,
//! where `F0` is the ASD form of the curvature matrix at `c` and `F1(z)` the
//! form of `sum_mu z^mu P1[mu]`. When `F1` is closed, `dA = F0 + F1(z)` exactly
//! and the full curvature is `F0 + F1(z) + A ^ A`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{CurvatureMatrix, Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::forms::{OneForm, TwoForm};

/// Tolerance on the closedness residual of `P1`, relative to `1 + |P1|`.
pub const CLOSED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBackground", into = "RawBackground")]
pub struct BackgroundModel {
    p0: CurvatureMatrix,
    p1: [Matrix3<f64>; 4],
    patch_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBackground {
    p0: CurvatureMatrix,
    p1: [Matrix3<f64>; 4],
    patch_radius: f64,
}

impl TryFrom<RawBackground> for BackgroundModel {
    type Error = Error;
    fn try_from(r: RawBackground) -> Result<Self> {
        BackgroundModel::new(r.p0, r.p1, r.patch_radius)
    }
}

impl From<BackgroundModel> for RawBackground {
    fn from(b: BackgroundModel) -> Self {
        RawBackground { p0: b.p0, p1: b.p1, patch_radius: b.patch_radius }
    }
}

/// Residuals `F1^(l)_{mn} + F1^(m)_{nl} + F1^(n)_{lm}` for the four triples `l < m < n`.
fn bianchi_residuals(p1: &[Matrix3<f64>; 4]) -> [Vector3<f64>; 4] {
    let forms: [TwoForm; 4] = std::array::from_fn(|mu| TwoForm::from_asd_matrix(&CurvatureMatrix(p1[mu])));
    let triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    triples.map(|(l, m, n)| forms[l].get(m, n) + forms[m].get(n, l) + forms[n].get(l, m))
}

fn p1_norm(p1: &[Matrix3<f64>; 4]) -> f64 {
    p1.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Largest component of the Bianchi residual of the linear curvature term.
pub fn closedness_residual(p1: &[Matrix3<f64>; 4]) -> f64 {
    bianchi_residuals(p1)
        .iter()
        .map(|v| v.abs().max())
        .fold(0.0, f64::max)
}

fn flatten(p1: &[Matrix3<f64>; 4]) -> DVector<f64> {
    DVector::from_iterator(36, p1.iter().flat_map(|m| m.iter().copied()))
}

fn unflatten(v: &DVector<f64>) -> [Matrix3<f64>; 4] {
    std::array::from_fn(|mu| Matrix3::from_iterator(v.rows(9 * mu, 9).iter().copied()))
}

fn bianchi_operator() -> DMatrix<f64> {
    let mut a = DMatrix::zeros(12, 36);
    for k in 0..36 {
        let mut e = DVector::zeros(36);
        e[k] = 1.0;
        let res = bianchi_residuals(&unflatten(&e));
        for (t, v) in res.iter().enumerate() {
            for r in 0..3 {
                a[(3 * t + r, k)] = v[r];
            }
        }
    }
    a
}

/// Orthogonal projection of `P1` onto the closed (Bianchi-compatible) subspace.
pub fn project_closed(p1: &[Matrix3<f64>; 4]) -> [Matrix3<f64>; 4] {
    let a = bianchi_operator();
    let x = flatten(p1);
    let pinv = a.clone().pseudo_inverse(1e-12).expect("pseudo-inverse of a fixed matrix");
    unflatten(&(&x - pinv * (&a * &x)))
}

/// Dimension of the space of closed `P1` tensors.
pub fn closed_dimension() -> usize {
    36 - bianchi_operator().rank(1e-10)
}

impl BackgroundModel {
    /// Validates that `P1` is closed and the patch radius positive.
    pub fn new(p0: CurvatureMatrix, p1: [Matrix3<f64>; 4], patch_radius: f64) -> Result<Self> {
        if !(patch_radius > 0.0) {
            return Err(Error::invalid("patch radius must be positive"));
        }
        let res = closedness_residual(&p1);
        if res > CLOSED_TOL * (1.0 + p1_norm(&p1)) {
            return Err(Error::invalid(format!(
                "linear curvature term is not closed (Bianchi residual {res:e}); use new_projected"
            )));
        }
        Ok(BackgroundModel { p0, p1, patch_radius })
    }

    /// Projects `P1` onto the closed subspace before constructing.
    pub fn new_projected(p0: CurvatureMatrix, p1: [Matrix3<f64>; 4], patch_radius: f64) -> Result<Self> {
        BackgroundModel::new(p0, project_closed(&p1), patch_radius)
    }

    pub fn constant(p0: CurvatureMatrix, patch_radius: f64) -> Result<Self> {
        BackgroundModel::new(p0, [Matrix3::zeros(); 4], patch_radius)
    }

    pub fn p0(&self) -> &CurvatureMatrix {
        &self.p0
    }

    pub fn p1(&self) -> &[Matrix3<f64>; 4] {
        &self.p1
    }

    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    /// Affine curvature model `P0 + sum x^mu P1[mu]`.
    pub fn curvature(&self, x: Quaternion) -> CurvatureMatrix {
        let c = x.coords();
        let mut m = self.p0.0;
        for mu in 0..4 {
            m += self.p1[mu] * c[mu];
        }
        CurvatureMatrix(m)
    }

    /// `sum z^mu P1[mu]`.
    fn linear_part(&self, z: Quaternion) -> CurvatureMatrix {
        let c = z.coords();
        CurvatureMatrix((0..4).map(|mu| self.p1[mu] * c[mu]).sum())
    }

    fn check_patch(&self, x: Quaternion) -> Result<()> {
        let d = x.norm();
        if d > self.patch_radius {
            return Err(Error::OutOfPatch { distance: d, radius: self.patch_radius });
        }
        Ok(())
    }

    /// Connection form in radial gauge about the origin.
    pub fn connection_form(&self, x: Quaternion) -> Result<OneForm> {
        self.connection_form_about(x, Quaternion::ZERO)
    }

    /// Connection form in radial gauge about `center`.
    pub fn connection_form_about(&self, x: Quaternion, center: Quaternion) -> Result<OneForm> {
        self.check_patch(x)?;
        Ok(self.connection_unchecked(x, center))
    }

    fn connection_unchecked(&self, x: Quaternion, center: Quaternion) -> OneForm {
        let z = x - center;
        let zc = z.coords();
        let f0 = TwoForm::from_asd_matrix(&self.curvature(center));
        let f1 = TwoForm::from_asd_matrix(&self.linear_part(z));
        OneForm(std::array::from_fn(|nu| {
            let mut v = Vector3::zeros();
            for mu in 0..4 {
                v += f0.get(mu, nu) * (0.5 * zc[mu]) + f1.get(mu, nu) * (zc[mu] / 3.0);
            }
            v
        }))
    }

    /// Exact curvature of [`connection_form`](Self::connection_form).
    pub fn connection_curvature(&self, x: Quaternion) -> Result<TwoForm> {
        self.connection_curvature_about(x, Quaternion::ZERO)
    }

    /// Exact curvature of the connection in radial gauge about `center`.
    pub fn connection_curvature_about(&self, x: Quaternion, center: Quaternion) -> Result<TwoForm> {
        self.check_patch(x)?;
        let a = self.connection_unchecked(x, center);
        let z = x - center;
        let lin = TwoForm::from_asd_matrix(&CurvatureMatrix(
            self.curvature(center).0 + self.linear_part(z).0,
        ));
        Ok(lin + a.wedge_self())
    }

    /// Frobenius norm of `P0`.
    pub fn curvature_norm(&self) -> f64 {
        self.p0.norm()
    }

    /// `sqrt(sum_mu |P1[mu]|^2)`.
    pub fn gradient_norm(&self) -> f64 {
        p1_norm(&self.p1)
    }

    /// `min(|F(c)|^{-1/2}, |F(c)| / |grad F|)`.
    pub fn length_scale_r3_at(&self, center: Quaternion) -> f64 {
        let f = self.curvature(center).norm();
        let g = self.gradient_norm();
        let a = f.powf(-0.5);
        if g == 0.0 {
            a
        } else {
            a.min(f / g)
        }
    }

    /// Second singular value of the curvature matrix at `center`.
    pub fn s0_at(&self, center: Quaternion) -> f64 {
        self.curvature(center).singular_values()[1]
    }
}

/// Random backgrounds for experiments and tests.
impl BackgroundModel {
    /// Random `P0` with entries in `[-1, 1]` and a relative spectral gap of at
    /// least `min_gap`, plus a random closed `P1` of norm `gradient`.
    pub fn random_generic(rng: &mut impl Rng, gradient: f64, min_gap: f64, patch_radius: f64) -> Result<Self> {
        loop {
            let p0 = CurvatureMatrix(Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
            let sv = p0.singular_values();
            let gap = (sv[0] - sv[1]).min(sv[1] - sv[2]);
            if gap >= min_gap * sv[0] {
                return BackgroundModel::new(p0, random_closed_p1(rng, gradient), patch_radius);
            }
        }
    }

    /// `P0 = U diag(2, 2, 1) V^T` for random rotations `U, V`, with a random
    /// closed `P1` of norm `gradient`.
    pub fn random_degenerate(rng: &mut impl Rng, gradient: f64, patch_radius: f64) -> Result<Self> {
        let mut rot = || {
            let v = Vector3::from_fn(|_, _| rng.random_range(-PI..PI) / 3f64.sqrt());
            *RotationMatrix::exp(&v).matrix()
        };
        let (u, v) = (rot(), rot());
        let p0 = CurvatureMatrix(u * Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 1.0)) * v.transpose());
        BackgroundModel::new(p0, random_closed_p1(rng, gradient), patch_radius)
    }
}

/// A uniformly oriented closed `P1` with `sqrt(sum |P1[mu]|^2) = norm`.
pub fn random_closed_p1(rng: &mut impl Rng, norm: f64) -> [Matrix3<f64>; 4] {
    if norm == 0.0 {
        return [Matrix3::zeros(); 4];
    }
    let normal = StandardNormal;
    let raw: [Matrix3<f64>; 4] = std::array::from_fn(|_| Matrix3::from_fn(|_, _| normal.sample(rng)));
    let closed = project_closed(&raw);
    let n = p1_norm(&closed);
    closed.map(|m| m * (norm / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::finite_difference_curvature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_p1(rng: &mut impl Rng) -> [Matrix3<f64>; 4] {
        std::array::from_fn(|_| Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn closed_subspace_dimension() {
        assert_eq!(closed_dimension(), 24);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = random_p1(&mut rng);
        assert!(closedness_residual(&raw) > 1e-3);
        let p = project_closed(&raw);
        assert!(closedness_residual(&p) < 1e-13);
        let again = project_closed(&p);
        for mu in 0..4 {
            assert!((again[mu] - p[mu]).abs().max() < 1e-13);
        }
        assert!(BackgroundModel::new(CurvatureMatrix::zero(), raw, 1.0).is_err());
    }

    #[test]
    fn origin_and_patch() {
        let b = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0).unwrap();
        let a = b.connection_form(Quaternion::ZERO).unwrap();
        assert_eq!(a, OneForm::zero());
        assert!(matches!(
            b.connection_form(Quaternion::real(2.0)),
            Err(Error::OutOfPatch { .. })
        ));
    }

    #[test]
    fn exact_curvature_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p0 = CurvatureMatrix(Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
            let b = BackgroundModel::new_projected(p0, random_p1(&mut rng), 2.0).unwrap();
            let c = Quaternion::new(0.1, -0.2, 0.05, 0.1);
            let x = Quaternion::new(0.3, 0.1, -0.4, 0.2);
            let fd = finite_difference_curvature(
                |q| b.connection_form_about(Quaternion::from_coords(q), c).unwrap(),
                x.coords(),
                1e-3,
            );
            let exact = b.connection_curvature_about(x, c).unwrap();
            assert!(fd.max_abs_diff(&exact) < 1e-9);
        }
    }

    #[test]
    fn constant_background_quadratic_remainder() {
        let p0 = CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]);
        let b = BackgroundModel::constant(p0, 1.0).unwrap();
        for r in [0.3, 0.1, 0.03] {
            let x = Quaternion::new(r, r, -r, 0.5 * r);
            let f = b.connection_curvature(x).unwrap();
            let dev = (f.asd_matrix().0 - p0.0).norm();
            assert!(dev <= 2.0 * x.norm_sq() * p0.norm() * p0.norm());
            let a = b.connection_form(x).unwrap();
            assert!(a.norm() <= 2.0 * x.norm() * p0.norm());
        }
    }

    #[test]
    fn serde_roundtrip_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = BackgroundModel::new_projected(
            CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]),
            random_p1(&mut rng),
            1.0,
        )
        .unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: BackgroundModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.p0(), b.p0());
        let mut bad: serde_json::Value = serde_json::from_str(&s).unwrap();
        bad["patch_radius"] = serde_json::json!(-1.0);
        assert!(serde_json::from_value::<BackgroundModel>(bad).is_err());
    }
}
