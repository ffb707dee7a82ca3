//! Decomposing a 3x3 matrix as minus a positive multiple of a rotation plus a
//! rank-one matrix, i.e. solving `rank(P + sM) <= 1` for `s > 0`, `M` in SO(3).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{signed_svd, CurvatureMatrix, RotationMatrix, SignedSvd};
use crate::error::{Error, Result};

/// Relative tolerance used when the caller does not supply one.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// Empirical constant of [`sensitivity_bound`].
///
/// Calibrated over 20000 random generic matrices (entries uniform in
/// `[-1, 1]`) with perturbations between `1e-4` and `1e-1` of the spectral
/// gap; the worst observed ratio `|dM| gap / |dP|` was about 1.8 (Frobenius
/// norms), so 4 leaves headroom.
pub const SENSITIVITY_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Generic,
    Sigma12Equal,
    Sigma23Equal,
    RankLe1,
    #[serde(rename = "multiple_of_SO3")]
    MultipleOfSO3,
    Zero,
}

/// Spectral class of a matrix together with the smallest relevant gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClass {
    pub kind: SpectrumKind,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
    DoubleRoot,
}

/// One solution `(s, M)` of `rank(P + sM) <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducibleDecomposition {
    pub s: f64,
    pub m: RotationMatrix,
    pub theta: f64,
    pub branch: Branch,
}

impl ReducibleDecomposition {
    /// `(sigma_2, sigma_3)` of `P + sM`.
    pub fn residual_singular_values(&self, p: &CurvatureMatrix) -> (f64, f64) {
        let sv = CurvatureMatrix(p.0 + self.m.matrix() * self.s).singular_values();
        (sv[1], sv[2])
    }

    /// Checks `sigma_2, sigma_3 (P + sM) < 1e-8 (1 + sigma_1(P))`.
    pub fn passes_rank_certificate(&self, p: &CurvatureMatrix) -> bool {
        let tol = rank_tolerance(p);
        let (s2, s3) = self.residual_singular_values(p);
        s2 < tol && s3 < tol
    }
}

pub fn rank_tolerance(p: &CurvatureMatrix) -> f64 {
    1e-8 * (1.0 + p.singular_values()[0])
}

/// Classifies the spectrum, checking the most degenerate classes first.
pub fn classify_spectrum(p: &CurvatureMatrix, gap_tol: f64) -> Result<SpectrumClass> {
    if !(gap_tol > 0.0) {
        return Err(Error::invalid("gap_tol must be positive"));
    }
    let svd = signed_svd(p);
    let d = svd.d;
    let (s1, s2, s3) = (d[0], d[1], d[2].abs());
    let g12 = s1 - s2;
    let g23 = s2 - s3;
    let class = |kind, gap| Ok(SpectrumClass { kind, gap });
    if s1 <= gap_tol {
        return class(SpectrumKind::Zero, s1);
    }
    if s2 <= gap_tol {
        return class(SpectrumKind::RankLe1, s2);
    }
    if d[0] - d[2] <= gap_tol {
        return class(SpectrumKind::MultipleOfSO3, d[0] - d[2]);
    }
    if g12 <= gap_tol {
        return class(SpectrumKind::Sigma12Equal, g12);
    }
    if g23 <= gap_tol {
        return class(SpectrumKind::Sigma23Equal, g23);
    }
    class(SpectrumKind::Generic, g12.min(g23))
}

fn default_tol(p: &CurvatureMatrix) -> f64 {
    DEFAULT_GAP_TOL * (1.0 + p.singular_values()[0])
}

/// Rotation by `pi` about `(sin(theta/2), 0, cos(theta/2))`.
pub fn canonical_rotation(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(-c, 0.0, s, 0.0, -1.0, 0.0, s, 0.0, c)
}

fn cos_theta(d: &Vector3<f64>) -> f64 {
    let num = d[1] * d[1] - d[0] * d[2];
    let den = (d[0] - d[2]) * d[1];
    num / den
}

fn build(svd: &SignedSvd, theta: f64, branch: Branch) -> ReducibleDecomposition {
    let m = svd.u.matrix() * canonical_rotation(theta) * svd.v.matrix().transpose();
    ReducibleDecomposition {
        s: svd.d[1],
        m: RotationMatrix::orthonormalize(&m),
        theta,
        branch,
    }
}

/// The two decompositions of a matrix with distinct singular values.
///
/// Returned in the order `[plus, minus]`.
pub fn decompose_rank1(p: &CurvatureMatrix) -> Result<[ReducibleDecomposition; 2]> {
    let class = classify_spectrum(p, default_tol(p))?;
    if class.kind != SpectrumKind::Generic {
        return Err(Error::DegenerateInput { class });
    }
    let svd = signed_svd(p);
    let c = cos_theta(&svd.d);
    let c = if c > 1.0 && c <= 1.0 + 1e-9 {
        1.0
    } else if c < -1.0 && c >= -1.0 - 1e-9 {
        -1.0
    } else {
        c
    };
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::NonConvergence(format!("arccos argument {c} out of range")));
    }
    let theta = c.acos();
    Ok([build(&svd, theta, Branch::Plus), build(&svd, -theta, Branch::Minus)])
}

/// The single (double-root) decomposition when exactly two singular values agree.
pub fn decompose_rank1_degenerate(p: &CurvatureMatrix) -> Result<ReducibleDecomposition> {
    let class = classify_spectrum(p, default_tol(p))?;
    match class.kind {
        SpectrumKind::MultipleOfSO3 => return Err(Error::InfiniteSolutions),
        SpectrumKind::RankLe1 | SpectrumKind::Zero => return Err(Error::AlreadyReducible),
        SpectrumKind::Generic => return Err(Error::DegenerateInput { class }),
        SpectrumKind::Sigma12Equal | SpectrumKind::Sigma23Equal => {}
    }
    let svd = signed_svd(p);
    let c = cos_theta(&svd.d).clamp(-1.0, 1.0);
    let theta = if c >= 0.0 { 0.0 } else { PI };
    Ok(build(&svd, theta, Branch::DoubleRoot))
}

/// Upper bound `c |dP| / min(sigma_1 - sigma_2, sigma_2 - sigma_3)` on how far
/// the rotations of [`decompose_rank1`] move under `P -> P + dP`.
pub fn sensitivity_bound(p: &CurvatureMatrix, dp: &CurvatureMatrix) -> Result<f64> {
    let class = classify_spectrum(p, default_tol(p))?;
    if class.kind != SpectrumKind::Generic {
        return Err(Error::DegenerateInput { class });
    }
    Ok(SENSITIVITY_CONSTANT * dp.norm() / class.gap)
}

/// Frobenius distance between matched branches of two decomposition pairs.
pub fn branch_displacement(
    a: &[ReducibleDecomposition; 2],
    b: &[ReducibleDecomposition; 2],
) -> f64 {
    let d = |x: &ReducibleDecomposition, y: &ReducibleDecomposition| {
        (x.m.matrix() - y.m.matrix()).norm()
    };
    let straight = d(&a[0], &b[0]).max(d(&a[1], &b[1]));
    let crossed = d(&a[0], &b[1]).max(d(&a[1], &b[0]));
    straight.min(crossed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classify_examples() {
        let c = |d: [f64; 3]| {
            classify_spectrum(&CurvatureMatrix::from_diagonal(d), 1e-6)
                .unwrap()
                .kind
        };
        assert_eq!(c([3.0, 2.0, 1.0]), SpectrumKind::Generic);
        assert_eq!(c([2.0, 2.0, 1.0]), SpectrumKind::Sigma12Equal);
        assert_eq!(c([3.0, 2.0, 2.0]), SpectrumKind::Sigma23Equal);
        assert_eq!(c([3.0, 2.0, -2.0]), SpectrumKind::Sigma23Equal);
        assert_eq!(c([1.0, 1.0, 1.0]), SpectrumKind::MultipleOfSO3);
        assert_eq!(c([1.0, 0.0, 0.0]), SpectrumKind::RankLe1);
        assert_eq!(c([0.0, 0.0, 0.0]), SpectrumKind::Zero);
        assert!(classify_spectrum(&CurvatureMatrix::zero(), 0.0).is_err());
    }

    #[test]
    fn diag_321() {
        let p = CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]);
        let sols = decompose_rank1(&p).unwrap();
        for (sol, sign) in sols.iter().zip([1.0, -1.0]) {
            assert_relative_eq!(sol.s, 2.0, epsilon = 1e-14);
            assert_relative_eq!(sol.theta, sign * 0.25f64.acos(), epsilon = 1e-14);
            assert!(sol.passes_rank_certificate(&p));
            // Rotation by pi about an axis at angle theta/2 from e3 in the 1-3 plane.
            let axis = Vector3::new((sol.theta / 2.0).sin(), 0.0, (sol.theta / 2.0).cos());
            assert!((sol.m.matrix() * axis - axis).norm() < 1e-14);
            assert_relative_eq!(sol.m.angle(), PI, epsilon = 1e-7);
        }
    }

    #[test]
    fn rank_deficient_background() {
        let p = CurvatureMatrix::from_diagonal([1.0, 0.5, 0.0]);
        let sols = decompose_rank1(&p).unwrap();
        for sol in &sols {
            assert_relative_eq!(sol.s, 0.5, epsilon = 1e-14);
            assert_relative_eq!(sol.theta.abs(), 0.5f64.acos(), epsilon = 1e-14);
            assert!(sol.passes_rank_certificate(&p));
        }
    }

    #[test]
    fn degenerate_roots() {
        let p = CurvatureMatrix::from_diagonal([2.0, 2.0, 1.0]);
        let d = decompose_rank1_degenerate(&p).unwrap();
        assert_eq!(d.theta, 0.0);
        assert_eq!(d.branch, Branch::DoubleRoot);
        assert_relative_eq!(d.s, 2.0, epsilon = 1e-14);
        assert!(d.passes_rank_certificate(&p));
        assert!(matches!(decompose_rank1(&p), Err(Error::DegenerateInput { .. })));

        let p = CurvatureMatrix::from_diagonal([3.0, 2.0, 2.0]);
        let d = decompose_rank1_degenerate(&p).unwrap();
        assert_eq!(d.theta, PI);
        assert!(d.passes_rank_certificate(&p));

        let p = CurvatureMatrix::from_diagonal([1.0, 1.0, 1.0]);
        assert!(matches!(decompose_rank1_degenerate(&p), Err(Error::InfiniteSolutions)));
        let p = CurvatureMatrix::from_diagonal([1.0, 0.0, 0.0]);
        assert!(matches!(decompose_rank1_degenerate(&p), Err(Error::AlreadyReducible)));
    }

    #[test]
    fn determinant_function_extremes() {
        // f(theta) = -P22^2 + P11 P33 + (P11 - P33) P22 cos(theta)
        let f = |d: [f64; 3], th: f64| -d[1] * d[1] + d[0] * d[2] + (d[0] - d[2]) * d[1] * th.cos();
        let d = [2.0, 2.0, 1.0];
        assert_relative_eq!(f(d, 0.0), (d[0] - d[1]) * (d[1] + d[2]), epsilon = 1e-15);
        let d = [3.0, 2.0, 2.0];
        assert_relative_eq!(f(d, PI), -(d[0] + d[1]) * (d[1] - d[2]), epsilon = 1e-15);
    }

    #[test]
    fn sensitivity_zero_perturbation() {
        let p = CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]);
        assert_eq!(sensitivity_bound(&p, &CurvatureMatrix::zero()).unwrap(), 0.0);
        let a = decompose_rank1(&p).unwrap();
        assert_eq!(branch_displacement(&a, &a), 0.0);
    }
}
