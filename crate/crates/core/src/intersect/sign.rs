//! Orientation signs of intersection points.
//!
//! The eight unknowns `(y, lambda, omega)` with `m = m0 exp(omega)` are mapped
//! to the eight residuals `(mu_x - s_x, log(M_x^T m^T rho(u_x)))` for
//! `x = p, q`. The sign of a solution is the sign of the Jacobian determinant
//! relative to a reference configuration that counts as `+1`.

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{rho_normalized, Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::fields::{fstd_magnitude, GluingData};

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SVector<f64, 8>;

/// Jacobians whose equilibrated condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartOrientation {
    Standard,
    /// The same chart with the last coordinate reversed.
    Reversed,
}

/// Marked point, target magnitude and target rotation.
pub type PointTarget = (Quaternion, f64, RotationMatrix);

/// Reference sign for separation `L`.
#[derive(Debug, Clone, Copy)]
pub struct SignContext {
    pub l: f64,
    reference: f64,
}

impl SignContext {
    pub fn new(l: f64) -> Self {
        let reference = reference_determinant_sign(l);
        SignContext { l, reference }
    }

    /// `+1` when `det_sign` agrees with the reference orientation.
    pub fn orient(&self, det_sign: f64) -> i32 {
        if det_sign * self.reference > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Residual vector at the perturbed parameters.
pub fn residual_map(g: &GluingData, targets: &[PointTarget; 2], delta: &Vector8) -> Vector8 {
    residual_map_with(g, &|_| *targets, delta)
}

/// [`residual_map`] with targets that may depend on the center `y`.
pub fn residual_map_with(
    g: &GluingData,
    targets_at: &dyn Fn(Quaternion) -> [PointTarget; 2],
    delta: &Vector8,
) -> Vector8 {
    let y = g.y + Quaternion::new(delta[0], delta[1], delta[2], delta[3]);
    let targets = targets_at(y);
    let lambda = g.lambda + delta[4];
    let m = *g.m.matrix() * RotationMatrix::exp(&Vector3::new(delta[5], delta[6], delta[7])).matrix();
    let mut out = Vector8::zeros();
    for (k, (x, s, target)) in targets.iter().enumerate() {
        let mu = fstd_magnitude((*x - y).norm(), lambda);
        let rot = target.matrix().transpose() * m.transpose() * rho_normalized(*x - y).matrix();
        let log = RotationMatrix::orthonormalize(&rot).log();
        out[4 * k] = (mu - s) / s;
        out.fixed_rows_mut::<3>(4 * k + 1).copy_from(&log);
    }
    out
}

/// Central-difference Jacobian of [`residual_map`] at the solution.
pub fn jacobian(g: &GluingData, targets: &[PointTarget; 2], l: f64, orientation: ChartOrientation) -> Matrix8 {
    jacobian_with(g, &|_| *targets, l, orientation)
}

pub fn jacobian_with(
    g: &GluingData,
    targets_at: &dyn Fn(Quaternion) -> [PointTarget; 2],
    l: f64,
    orientation: ChartOrientation,
) -> Matrix8 {
    let mut jac = Matrix8::zeros();
    for c in 0..8 {
        let h = match c {
            0..=3 => 1e-6 * l,
            4 => 1e-6 * g.lambda,
            _ => 1e-6,
        };
        let mut d = Vector8::zeros();
        d[c] = h;
        let col = (residual_map_with(g, targets_at, &d) - residual_map_with(g, targets_at, &(-d))) / (2.0 * h);
        jac.set_column(c, &col);
    }
    if orientation == ChartOrientation::Reversed {
        jac.column_mut(7).neg_mut();
    }
    jac
}

/// Sign of `det` and the condition number after row and column scaling.
pub fn equilibrated_sign(jac: &Matrix8) -> Result<(f64, f64)> {
    let mut a = *jac;
    for mut row in a.row_iter_mut() {
        let m = row.amax();
        if m > 0.0 {
            row /= m;
        }
    }
    for mut col in a.column_iter_mut() {
        let m = col.amax();
        if m > 0.0 {
            col /= m;
        }
    }
    let sv = a.singular_values();
    let smin = sv.min();
    let cond = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IndeterminateSign { condition: cond });
    }
    Ok((a.determinant().signum(), cond))
}

/// The reference: unit magnitudes, identity targets, `y = 0`, `m = I`, and
/// `lambda` the small root of `lambda^2 - lambda + L^2 = 0`.
fn reference_determinant_sign(l: f64) -> f64 {
    let lambda = 2.0 * l * l / (1.0 + (1.0 - 4.0 * l * l).max(0.0).sqrt());
    let g = GluingData::from_rotation(Quaternion::ZERO, lambda, RotationMatrix::identity())
        .expect("positive scale");
    let targets = [
        (Quaternion::real(-l), 1.0, RotationMatrix::identity()),
        (Quaternion::real(l), 1.0, RotationMatrix::identity()),
    ];
    let jac = jacobian(&g, &targets, l, ChartOrientation::Standard);
    equilibrated_sign(&jac).map(|(s, _)| s).unwrap_or(1.0)
}

/// `+1` or `-1` for a solution with the given point targets.
pub fn solution_sign_for(
    g: &GluingData,
    targets: [PointTarget; 2],
    ctx: &SignContext,
    orientation: ChartOrientation,
) -> Result<i32> {
    solution_sign_with(g, &|_| targets, ctx, orientation)
}

/// Sign for targets that depend on the center `y`.
pub fn solution_sign_with(
    g: &GluingData,
    targets_at: &dyn Fn(Quaternion) -> [PointTarget; 2],
    ctx: &SignContext,
    orientation: ChartOrientation,
) -> Result<i32> {
    let jac = jacobian_with(g, targets_at, ctx.l, orientation);
    let (s, _) = equilibrated_sign(&jac)?;
    Ok(ctx.orient(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_positive_and_reversal_flips() {
        let l = 1e-2;
        let ctx = SignContext::new(l);
        let lambda = 2.0 * l * l / (1.0 + (1.0 - 4.0 * l * l).sqrt());
        let g = GluingData::from_rotation(Quaternion::ZERO, lambda, RotationMatrix::identity()).unwrap();
        let t = [
            (Quaternion::real(-l), 1.0, RotationMatrix::identity()),
            (Quaternion::real(l), 1.0, RotationMatrix::identity()),
        ];
        assert!(residual_map(&g, &t, &Vector8::zeros()).norm() < 1e-12);
        assert_eq!(solution_sign_for(&g, t, &ctx, ChartOrientation::Standard).unwrap(), 1);
        assert_eq!(solution_sign_for(&g, t, &ctx, ChartOrientation::Reversed).unwrap(), -1);
    }

    #[test]
    fn singular_jacobian_is_indeterminate() {
        let mut j = Matrix8::identity();
        j[(7, 7)] = 0.0;
        assert!(matches!(equilibrated_sign(&j), Err(Error::IndeterminateSign { .. })));
    }
}
