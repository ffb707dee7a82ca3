//! Fiber integrals over truncated regions, the distribution of integrand mass
//! in the scale `lambda`, and the order-of-limits comparison.
//!
//! All integrals use the axisymmetric reduction: the gluing angle and the
//! rotations about the axis through the marked points are integrated
//! analytically, leaving `(lambda, z, rho)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::fiber::axisymmetric_density_at;
use crate::integrate::quad::{integrate, AdaptiveOptions, Estimate};
use crate::integrate::{QuadratureMethod, QuadratureResult};

/// Rescaled region (marked points at `0` and `2`):
/// `L^lambda_min_exp <= lambda <= L^lambda_max_exp` and `|b| <= ball_factor sqrt(lambda / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub lambda_min_exp: f64,
    pub lambda_max_exp: f64,
    pub ball_factor: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { lambda_min_exp: 1.0, lambda_max_exp: -0.8, ball_factor: 1.0 }
    }
}

/// Relative tolerances of the `rho`, `z` and `lambda` levels.
#[derive(Clone, Copy)]
struct Levels([f64; 3]);

const PRECISE: Levels = Levels([1e-12, 1e-10, 1e-8]);
const COARSE: Levels = Levels([1e-9, 1e-7, 1e-5]);

impl Levels {
    fn opts(self, k: usize) -> AdaptiveOptions {
        AdaptiveOptions { abs_tol: if k == 2 { 1e-300 } else { 0.0 }, rel_tol: self.0[k], max_intervals: 200 }
    }
}

/// `int dz d rho` of the density over `{z^2 + rho^2 <= radius^2}` (or all of
/// the half-plane when `radius` is infinite).
fn b_integral(lambda: f64, radius: f64, sep: f64, tol: Levels) -> Estimate {
    let (rho_opts, z_opts) = (tol.opts(0), tol.opts(1));
    let zc = [0.0, 0.5 * sep, sep, -lambda, sep + lambda];
    integrate(
        |z: f64| -> Estimate {
            let top = if radius.is_finite() { (radius * radius - z * z).max(0.0).sqrt() } else { f64::INFINITY };
            if top == 0.0 {
                return Estimate::exact(0.0);
            }
            let d = (z.abs().min((z - sep).abs()) + lambda).max(1e-300);
            integrate(|rho| axisymmetric_density_at(lambda, z, rho, sep), 0.0, top, &[d, 4.0 * d], &rho_opts).into()
        },
        if radius.is_finite() { -radius } else { f64::NEG_INFINITY },
        if radius.is_finite() { radius } else { f64::INFINITY },
        &zc,
        &z_opts,
    )
    .into()
}

fn log_breaks(lo: f64, hi: f64, sep: f64) -> Vec<f64> {
    let mut v = vec![0.5 * sep, sep];
    let mut c = lo.max(1e-4 * hi);
    while c < hi {
        v.push(c);
        c *= 4.0;
    }
    v
}

/// `int lambda in [lo, hi]` of the `b` integral with `b` restricted to the
/// ball of radius `radius(lambda)`.
pub fn lambda_integral(lo: f64, hi: f64, radius: impl Fn(f64) -> f64) -> QuadratureResult {
    lambda_integral_at(lo, hi, radius, 2.0, PRECISE)
}

fn lambda_integral_at(lo: f64, hi: f64, radius: impl Fn(f64) -> f64, sep: f64, tol: Levels) -> QuadratureResult {
    if !(hi > lo) {
        return QuadratureResult::new(0.0, 0.0, 0, QuadratureMethod::AdaptiveNested);
    }
    let r = integrate(|lambda| b_integral(lambda, radius(lambda), sep, tol), lo, hi, &log_breaks(lo, hi, sep), &tol.opts(2));
    QuadratureResult::new(r.value, r.err, r.n_evals, QuadratureMethod::AdaptiveNested)
}

/// Integral over the rescaled region `G_L`.
pub fn truncated_fiber_integral(l: f64, t: &Truncation) -> Result<QuadratureResult> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("L = {l} must be positive")));
    }
    if !(t.ball_factor >= 0.0) {
        return Err(Error::invalid("ball factor must be nonnegative"));
    }
    let lo = l.powf(t.lambda_min_exp);
    let hi = l.powf(t.lambda_max_exp);
    if t.ball_factor == 0.0 || !(hi > lo) {
        return Ok(QuadratureResult::new(0.0, 0.0, 0, QuadratureMethod::AdaptiveNested));
    }
    Ok(lambda_integral(lo, hi, |lambda| t.ball_factor * (lambda / l).sqrt()))
}

/// Mass of one `lambda` bin in unscaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBin {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProfile {
    #[serde(rename = "L")]
    pub l: f64,
    pub bins: Vec<LambdaBin>,
    /// Total mass times `L^4`, comparable to `I_p`.
    pub total_mass_rescaled: f64,
    pub median_lambda: f64,
}

/// Mass-weighted `lambda` distribution for marked points `0` and `2L`,
/// integrated directly in unscaled coordinates over `lambda` in
/// `[1e-3 L, 1e3 L]` on a logarithmic grid of `bins` bins.
pub fn concentration_profile(l: f64, bins: usize) -> Result<ConcentrationProfile> {
    if !(l > 0.0 && l.is_finite()) || bins == 0 {
        return Err(Error::invalid("concentration profile needs L > 0 and at least one bin"));
    }
    let (lo, hi) = (1e-3 * l, 1e3 * l);
    let ratio = (hi / lo).powf(1.0 / bins as f64);
    let out: Vec<LambdaBin> = (0..bins)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (lo * ratio.powi(k as i32), lo * ratio.powi(k as i32 + 1));
            let r = lambda_integral_at(a, b, |_| f64::INFINITY, 2.0 * l, COARSE);
            LambdaBin { lambda_lo: a, lambda_hi: b, mass: r.value }
        })
        .collect();
    let total: f64 = out.iter().map(|b| b.mass).sum();
    let mut acc = 0.0;
    let mut median = hi;
    for b in &out {
        if acc + b.mass >= 0.5 * total {
            let frac = (0.5 * total - acc) / b.mass;
            median = b.lambda_lo * (b.lambda_hi / b.lambda_lo).powf(frac);
            break;
        }
        acc += b.mass;
    }
    Ok(ConcentrationProfile { l, bins: out, total_mass_rescaled: total * l.powi(4), median_lambda: median })
}

/// Slope of `log y` against `log x` by least squares.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitOrderPoint {
    pub lambda0: f64,
    /// Half the separation of the marked points.
    #[serde(rename = "L")]
    pub l: f64,
    pub value: f64,
    pub err: f64,
}

/// Scale-truncated integrals `lambda <= lambda0` over all centers: once with
/// the marked points fixed at separation `2 fixed_l`, once with the coupled
/// separation `L = c lambda0^(1 + alpha')`.
pub fn limit_order_demo(
    lambda0s: &[f64],
    fixed_l: f64,
    c: f64,
    alpha_prime: f64,
) -> Result<(Vec<LimitOrderPoint>, Vec<LimitOrderPoint>)> {
    if !(fixed_l > 0.0 && c > 0.0 && alpha_prime > 0.0) {
        return Err(Error::invalid("limit-order demo needs positive L, c and alpha'"));
    }
    let run = |lambda0: f64, l: f64| {
        let r = lambda_integral(0.0, lambda0 / l, |_| f64::INFINITY);
        LimitOrderPoint { lambda0, l, value: r.value, err: r.err_estimate }
    };
    let fixed = lambda0s.iter().map(|&x| run(x, fixed_l)).collect();
    let coupled = lambda0s.iter().map(|&x| run(x, c * x.powf(1.0 + alpha_prime))).collect();
    Ok((fixed, coupled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_values_match_independent_quadrature() {
        // Reference values from an independent tensor-product quadrature.
        let oracle = [(0.1, 0.9905208909314742), (0.03, 0.9998662698505892), (0.01, 0.9999967576239365)];
        let mut prev = 0.0;
        for (l, want) in oracle {
            let r = truncated_fiber_integral(l, &Truncation::default()).unwrap();
            assert!((r.value - want).abs() < 1e-7, "L = {l}: {} vs {want}", r.value);
            assert!(r.value > prev);
            prev = r.value;
        }
    }

    #[test]
    fn empty_region_is_zero() {
        let t = Truncation { ball_factor: 0.0, ..Default::default() };
        assert_eq!(truncated_fiber_integral(0.1, &t).unwrap().value, 0.0);
        let t = Truncation { lambda_min_exp: -1.0, lambda_max_exp: 1.0, ball_factor: 1.0 };
        assert_eq!(truncated_fiber_integral(0.1, &t).unwrap().value, 0.0);
    }

    #[test]
    fn median_scales_like_l() {
        let pts: Vec<_> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&l| (l, concentration_profile(l, 24).unwrap().median_lambda))
            .collect();
        let ratios: Vec<f64> = pts.iter().map(|(l, m)| m / l).collect();
        let mean = ratios.iter().sum::<f64>() / 3.0;
        assert!(ratios.iter().all(|r| (0.5..=2.0).contains(&(r / mean))));
        assert!((log_log_slope(&pts) - 1.0).abs() < 0.15);
    }

    #[test]
    fn limit_orders_differ() {
        let (fixed, coupled) = limit_order_demo(&[1e-1, 1e-2, 1e-3], 0.1, 1.0, 0.5).unwrap();
        assert!(fixed.windows(2).all(|w| w[1].value < w[0].value));
        assert!(fixed.last().unwrap().value < 1e-3);
        assert!(coupled.last().unwrap().value > 0.99);
    }
}
