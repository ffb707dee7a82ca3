//! Quaternions, the double cover `SU(2) -> SO(3)`, and 3x3 curvature matrices.
//!
//! Points of R^4 are identified with quaternions via
//! `(x0, x1, x2, x3) <-> x0 + x1 i + x2 j + x3 k`. Unit quaternions form
//! `SU(2)`; the imaginary quaternions form its Lie algebra, and an imaginary
//! quaternion is stored as the `Vector3` of its `(i, j, k)` coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deviation from unit norm tolerated by [`rho`].
pub const UNIT_TOL: f64 = 1e-9;

/// A real quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    /// Quaternion units `1, i, j, k`, indexed like the coordinates of R^4.
    pub const BASIS: [Quaternion; 4] = [Self::ONE, Self::I, Self::J, Self::K];

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_coords(c: [f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    pub fn from_parts(w: f64, v: Vector3<f64>) -> Self {
        Quaternion::new(w, v.x, v.y, v.z)
    }

    pub fn pure(v: Vector3<f64>) -> Self {
        Self::from_parts(0.0, v)
    }

    pub fn imag(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sq(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// `q^{-1} = conj(q) / |q|^2`; `None` for the zero quaternion.
    pub fn inverse(&self) -> Option<Self> {
        let n2 = self.norm_sq();
        (n2 > 0.0).then(|| self.conj().scale(1.0 / n2))
    }

    pub fn normalize(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn dot(&self, o: &Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Unit quaternion `exp(v)` for imaginary `v` (rotation by `2|v|` under [`rho`]).
    pub fn exp_imag(v: Vector3<f64>) -> Self {
        let t = v.norm();
        if t < 1e-300 {
            return Quaternion::ONE;
        }
        Quaternion::from_parts(t.cos(), v * (t.sin() / t))
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        quat_product(self, o)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

/// Hamilton product.
pub fn quat_product(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion {
        w: p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        x: p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        y: p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        z: p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    }
}

/// Skew-symmetric matrix `[v]_x` with `[v]_x w = v x w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] applied to the antisymmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix3<f64>", into = "Matrix3<f64>")]
pub struct RotationMatrix(Matrix3<f64>);

impl TryFrom<Matrix3<f64>> for RotationMatrix {
    type Error = Error;
    fn try_from(m: Matrix3<f64>) -> Result<Self> {
        RotationMatrix::new(m)
    }
}

impl From<RotationMatrix> for Matrix3<f64> {
    fn from(r: RotationMatrix) -> Matrix3<f64> {
        r.0
    }
}

impl RotationMatrix {
    /// Validates `M^T M = I` and `det M = 1` to 1e-10.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if orth > 1e-10 || (det - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "not a rotation: |M^T M - I| = {orth:e}, det = {det}"
            )));
        }
        Ok(RotationMatrix(m))
    }

    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Rodrigues formula for the rotation with axis-angle vector `w`.
    pub fn exp(w: &Vector3<f64>) -> Self {
        let t = w.norm();
        let k = skew(w);
        let (a, b) = if t < 1e-8 {
            (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
        } else {
            (t.sin() / t, (1.0 - t.cos()) / (t * t))
        };
        RotationMatrix(Matrix3::identity() + k * a + k * k * b)
    }

    /// Axis-angle vector with angle in `[0, pi]`.
    pub fn log(&self) -> Vector3<f64> {
        let m = &self.0;
        let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let v = vee(m);
        let angle = v.norm().atan2(c);
        if angle < 1e-6 {
            return v * (1.0 + angle * angle / 6.0);
        }
        if angle < std::f64::consts::PI - 1e-4 {
            return v * (angle / angle.sin());
        }
        // Near pi the antisymmetric part vanishes; read the axis off the
        // symmetric part (M + M^T)/2 = cos(t) I + (1 - cos(t)) n n^T.
        let s = ((m + m.transpose()) * 0.5 - Matrix3::identity() * c) / (1.0 - c);
        let col = (0..3)
            .max_by(|&a, &b| s[(a, a)].total_cmp(&s[(b, b)]))
            .unwrap_or(0);
        let mut n = s.column(col).into_owned();
        n /= n.norm();
        if n.dot(&v) < 0.0 {
            n = -n;
        }
        n * angle
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        vee(&self.0).norm().atan2((self.0.trace() - 1.0) * 0.5)
    }

    /// Geodesic distance `angle(self^T other)`.
    pub fn distance(&self, other: &RotationMatrix) -> f64 {
        (self.transpose() * *other).angle()
    }

    /// Projects a nearly orthogonal matrix back onto SO(3).
    pub fn orthonormalize(m: &Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u2 = u;
            u2.column_mut(2).neg_mut();
            r = u2 * vt;
        }
        RotationMatrix(r)
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, o: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * o.0)
    }
}

/// A 3x3 matrix representing the ASD part of a curvature at a point.
///
/// Column `c` holds half the `omega_c` component of `F^-` in the basis
/// `omega_1 = dx0 dx1 - dx2 dx3`, `omega_2 = dx0 dx2 - dx3 dx1`,
/// `omega_3 = dx0 dx3 - dx1 dx2`; rows are the `(i, j, k)` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurvatureMatrix(pub Matrix3<f64>);

impl CurvatureMatrix {
    pub fn zero() -> Self {
        CurvatureMatrix(Matrix3::zeros())
    }

    pub fn from_diagonal(d: [f64; 3]) -> Self {
        CurvatureMatrix(Matrix3::from_diagonal(&Vector3::from(d)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `(sigma_1, sigma_2, sigma_3)`, descending.
    pub fn singular_values(&self) -> [f64; 3] {
        let sv = self.0.singular_values();
        let mut s = [sv[0], sv[1], sv[2]];
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Add for CurvatureMatrix {
    type Output = CurvatureMatrix;
    fn add(self, o: CurvatureMatrix) -> CurvatureMatrix {
        CurvatureMatrix(self.0 + o.0)
    }
}

impl Sub for CurvatureMatrix {
    type Output = CurvatureMatrix;
    fn sub(self, o: CurvatureMatrix) -> CurvatureMatrix {
        CurvatureMatrix(self.0 - o.0)
    }
}

impl Mul<f64> for CurvatureMatrix {
    type Output = CurvatureMatrix;
    fn mul(self, s: f64) -> CurvatureMatrix {
        CurvatureMatrix(self.0 * s)
    }
}

/// The double cover `SU(2) -> SO(3)`: column `c` of `rho(g)` holds the
/// coefficients of `g e_c g^{-1}` for `e = (i, j, k)`.
pub fn rho(g: Quaternion) -> Result<RotationMatrix> {
    let n = g.norm();
    if (n - 1.0).abs() >= UNIT_TOL {
        return Err(Error::invalid(format!("rho needs a unit quaternion, |g| = {n}")));
    }
    Ok(rho_normalized(g.scale(1.0 / n)))
}

/// [`rho`] without the unit-norm check; `g` is normalized first.
pub(crate) fn rho_normalized(g: Quaternion) -> RotationMatrix {
    let g = g.scale(1.0 / g.norm());
    let Quaternion { w, x, y, z } = g;
    RotationMatrix(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// One of the two unit quaternions `g` with `rho(g) = r` (the one with `w >= 0`).
pub fn rho_lift(r: &RotationMatrix) -> Quaternion {
    let w = r.log();
    Quaternion::exp_imag(w * 0.5)
}

/// `P = U diag(d) V^T` with `U, V` in SO(3) and `d1 >= d2 >= |d3|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedSvd {
    pub u: RotationMatrix,
    pub d: Vector3<f64>,
    pub v: RotationMatrix,
}

impl SignedSvd {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.u.matrix() * Matrix3::from_diagonal(&self.d) * self.v.matrix().transpose()
    }
}

/// Signed singular value decomposition; `sign(d3) = sign(det P)`.
pub fn signed_svd(p: &CurvatureMatrix) -> SignedSvd {
    let svd = p.0.svd(true, true);
    let (u0, vt0) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sv = svd.singular_values;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut u = Matrix3::zeros();
    let mut v = Matrix3::zeros();
    let mut d = Vector3::zeros();
    for (k, &i) in order.iter().enumerate() {
        u.set_column(k, &u0.column(i));
        v.set_column(k, &vt0.row(i).transpose());
        d[k] = sv[i];
    }

    // Sign pivot on the first two columns of U: largest-magnitude entry positive.
    for k in 0..2 {
        let col = u.column(k);
        let piv = (0..3).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
        if col[piv] < 0.0 {
            u.column_mut(k).neg_mut();
            v.column_mut(k).neg_mut();
        }
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    SignedSvd {
        u: RotationMatrix(u),
        d,
        v: RotationMatrix(v),
    }
}

/// `g P h`: a gauge change acts on the left, a frame change on the right.
pub fn mat_gauge_transform(
    p: &CurvatureMatrix,
    g: &RotationMatrix,
    h: &RotationMatrix,
) -> CurvatureMatrix {
    CurvatureMatrix(g.matrix() * p.0 * h.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_unit(rng: &mut impl Rng) -> Quaternion {
        loop {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n < 1.0 {
                return q.scale(1.0 / n);
            }
        }
    }

    #[test]
    fn quaternion_table() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::K, Quaternion::I);
        assert_eq!(Quaternion::K * Quaternion::I, Quaternion::J);
        assert_eq!(Quaternion::I * Quaternion::I, -Quaternion::ONE);
        let p = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let q = Quaternion::new(1.0, 0.0, 1.0, 0.0);
        assert_eq!(p * q, Quaternion::new(1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn inverse_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = Quaternion::new(rng.random(), rng.random(), -rng.random::<f64>(), 2.0);
            let q = Quaternion::new(-rng.random::<f64>(), 0.3, rng.random(), rng.random());
            let pq = p * q;
            assert_relative_eq!(pq.norm(), p.norm() * q.norm(), max_relative = 1e-12);
            let one = q * q.inverse().unwrap();
            assert!((one - Quaternion::ONE).norm() < 1e-14);
            let lhs = pq.inverse().unwrap();
            let rhs = q.inverse().unwrap() * p.inverse().unwrap();
            assert!((lhs - rhs).norm() < 1e-14);
            assert_relative_eq!((q * q.conj()).w, q.norm_sq(), max_relative = 1e-14);
        }
        assert!(Quaternion::ZERO.inverse().is_none());
    }

    #[test]
    fn rho_matches_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_unit(&mut rng);
            let r = rho(g).unwrap();
            let gi = g.inverse().unwrap();
            for (c, e) in [Quaternion::I, Quaternion::J, Quaternion::K].iter().enumerate() {
                let col = (g * *e * gi).imag();
                assert!((r.matrix().column(c) - col).norm() < 1e-14);
            }
            let r2 = rho(-g).unwrap();
            assert!((r.matrix() - r2.matrix()).abs().max() < 1e-15);
        }
        assert_eq!(rho(Quaternion::ONE).unwrap(), RotationMatrix::identity());
        let ri = rho(Quaternion::I).unwrap();
        assert_eq!(*ri.matrix(), Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)));
        assert!(rho(Quaternion::new(1.1, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn rho_homomorphism_and_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            let lhs = rho(a * b).unwrap();
            let rhs = rho(a).unwrap() * rho(b).unwrap();
            assert!((lhs.matrix() - rhs.matrix()).abs().max() < 1e-10);
            let l = rho_lift(&rho(a).unwrap());
            assert!((l - a).norm() < 1e-9 || (l + a).norm() < 1e-9);
        }
    }

    #[test]
    fn log_exp_roundtrip_including_near_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..500 {
            let axis = Vector3::new(rng.random::<f64>() - 0.5, rng.random(), rng.random::<f64>() - 0.5)
                .normalize();
            let angle = match k % 4 {
                0 => std::f64::consts::PI - 1e-7 * rng.random::<f64>(),
                1 => 1e-9 * rng.random::<f64>(),
                _ => rng.random_range(0.0..std::f64::consts::PI),
            };
            let r = RotationMatrix::exp(&(axis * angle));
            let w = r.log();
            assert!(w.norm() <= std::f64::consts::PI + 1e-12);
            let r2 = RotationMatrix::exp(&w);
            assert!((r.matrix() - r2.matrix()).abs().max() < 1e-9, "angle {angle}");
        }
    }

    #[test]
    fn signed_svd_canonical_examples() {
        let id = CurvatureMatrix(Matrix3::identity());
        let s = signed_svd(&id);
        assert!((s.d - Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-14);

        let p = CurvatureMatrix::from_diagonal([3.0, 2.0, -1.0]);
        let s = signed_svd(&p);
        assert!((s.d - Vector3::new(3.0, 2.0, -1.0)).norm() < 1e-14);
        assert!((s.u.matrix() - Matrix3::identity()).abs().max() < 1e-14);
        assert!((s.v.matrix() - Matrix3::identity()).abs().max() < 1e-14);
    }

    #[test]
    fn signed_svd_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let p = CurvatureMatrix(m);
            let s = signed_svd(&p);
            assert!((s.reconstruct() - m).norm() < 1e-10 * (1.0 + m.norm()));
            assert!(s.d[0] >= s.d[1] && s.d[1] >= s.d[2].abs());
            assert_eq!(s.d[2] < 0.0, m.determinant() < 0.0);
            RotationMatrix::new(*s.u.matrix()).unwrap();
            RotationMatrix::new(*s.v.matrix()).unwrap();
            // Oracle: eigenvalues of P^T P.
            let eig = (m.transpose() * m).symmetric_eigen();
            let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            for k in 0..3 {
                assert!((s.d[k].abs() - ev[k]).abs() < 1e-10, "{k}");
            }
        }
    }

    #[test]
    fn gauge_transform_preserves_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]);
        for _ in 0..50 {
            let g = rho(random_unit(&mut rng)).unwrap();
            let h = rho(random_unit(&mut rng)).unwrap();
            let q = mat_gauge_transform(&p, &g, &h);
            let s = q.singular_values();
            assert!((s[0] - 3.0).abs() < 1e-10 && (s[1] - 2.0).abs() < 1e-10 && (s[2] - 1.0).abs() < 1e-10);
            // Re-decomposing g P h gives the same signed diagonal.
            let d = signed_svd(&q).d;
            assert!((d - Vector3::new(3.0, 2.0, 1.0)).norm() < 1e-10);
        }
        let same = mat_gauge_transform(&p, &RotationMatrix::identity(), &RotationMatrix::identity());
        assert_eq!(same, p);
    }
}
