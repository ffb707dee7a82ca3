//! Importance-sampled Monte Carlo for `I_p` over the full 8-dimensional fiber.
//!
//! Proposal: `b` is drawn from the 4D density `2 s^2 / (pi^2 (s^2 + |b - 1|^2)^3)`
//! with `s = 3/2`, then `a` from an equal mixture of the radial densities
//! `p_k(a) ∝ |a|^4 / (k^2 + |a|^2)^6` at scales `k = min(|b|, |b - 2|)` and
//! `k = 1`. The first component follows the integrand where `a` is small
//! compared with the distance to the nearer marked point; the second keeps
//! the weights bounded when `b` sits close to a marked point.
//!
//! Samples are processed in blocks of [`BLOCK`] indices; block `k` uses the
//! ChaCha8 stream `k` of the seed, and block sums are merged in index order,
//! so results do not depend on the number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algebra::Quaternion;
use crate::error::{Error, Result};
use crate::integrate::{QuadratureMethod, QuadratureResult};

pub const BLOCK: u64 = 4096;
pub const MIN_SAMPLES: u64 = 100_000;

const B_SCALE: f64 = 1.5;

fn unit_direction(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let v = Quaternion::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Some(u) = v.normalize() {
            return u;
        }
    }
}

/// `36 pi^-4 2^4 |a|^4 / ((|a|^2 + |b|^2)^4 (|a|^2 + |2 - b|^2)^4)`.
pub fn ip_integrand(a: Quaternion, b: Quaternion) -> f64 {
    let a2 = a.norm_sq();
    let d0 = a2 + b.norm_sq();
    let d2 = a2 + (Quaternion::real(2.0) - b).norm_sq();
    36.0 / PI.powi(4) * 16.0 * a2 * a2 / (d0.powi(4) * d2.powi(4))
}

fn b_density(b: Quaternion) -> f64 {
    let s2 = B_SCALE * B_SCALE;
    let d = s2 + (b - Quaternion::ONE).norm_sq();
    2.0 * s2 / (PI * PI * d * d * d)
}

fn sample_b(rng: &mut ChaCha8Rng) -> Quaternion {
    // u = rho^2 / s^2 is beta-prime(2, 1): u = B / (1 - B) with B = sqrt(U).
    let beta = rng.random::<f64>().sqrt();
    let u = beta / (1.0 - beta);
    Quaternion::ONE + unit_direction(rng) * (B_SCALE * u.sqrt())
}

/// Normalized 4D density of `|a|^4 / (k^2 + |a|^2)^6`: `u = |a|^2/k^2` is beta-prime(4, 2).
fn a_density(a: Quaternion, k: f64) -> f64 {
    let k2 = k * k;
    let u = a.norm_sq() / k2;
    // p_u = 20 u^3 / (1 + u)^6, p(a) = p_u * (2 r / k^2) / (2 pi^2 r^3) = p_u / (pi^2 k^4 u).
    20.0 * u * u / ((1.0 + u).powi(6) * PI * PI * k2 * k2)
}

fn sample_a(rng: &mut ChaCha8Rng, k: f64, beta: &Beta<f64>) -> Quaternion {
    let x = beta.sample(rng);
    let u = x / (1.0 - x);
    unit_direction(rng) * (k * u.sqrt())
}

fn near_scale(b: Quaternion) -> f64 {
    b.norm().min((b - Quaternion::real(2.0)).norm()).max(1e-300)
}

/// Sum of weights and of squared weights over one block.
fn block_sums(seed: u64, block: u64, count: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let beta = Beta::new(4.0, 2.0).expect("valid shape");
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..count {
        let b = sample_b(&mut rng);
        let k = near_scale(b);
        let a = if rng.random::<bool>() { sample_a(&mut rng, k, &beta) } else { sample_a(&mut rng, 1.0, &beta) };
        let q = b_density(b) * 0.5 * (a_density(a, k) + a_density(a, 1.0));
        let w = if q > 0.0 { ip_integrand(a, b) / q } else { 0.0 };
        s1 += w;
        s2 += w * w;
    }
    (s1, s2)
}

/// Monte Carlo estimate of `I_p` with its standard error.
pub fn integrate_ip_mc(seed: u64, n_samples: u64) -> Result<QuadratureResult> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    let blocks = n_samples.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|k| block_sums(seed, k, BLOCK.min(n_samples - k * BLOCK)))
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let mut r = QuadratureResult::new(mean, (var / n).sqrt(), n_samples, QuadratureMethod::MonteCarlo);
    r.seed = Some(seed);
    Ok(r)
}

/// Hit-or-miss estimate of the area of the unit sphere in `R^dim` via
/// `area = dim * vol(ball)`.
pub fn sphere_area_mc(dim: usize, n_samples: u64, seed: u64) -> QuadratureResult {
    let blocks = n_samples.div_ceil(BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = BLOCK.min(n_samples - k * BLOCK);
            (0..count)
                .filter(|_| (0..dim).map(|_| rng.random_range(-1.0f64..1.0).powi(2)).sum::<f64>() < 1.0)
                .count() as u64
        })
        .sum();
    let p = hits as f64 / n_samples as f64;
    let cube = 2f64.powi(dim as i32);
    let scale = dim as f64 * cube;
    let mut r = QuadratureResult::new(
        scale * p,
        scale * (p * (1.0 - p) / n_samples as f64).sqrt(),
        n_samples,
        QuadratureMethod::MonteCarlo,
    );
    r.seed = Some(seed);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposal_densities_normalize() {
        use crate::integrate::quad::{integrate, AdaptiveOptions};
        let o = AdaptiveOptions::default();
        let a = integrate(|r: f64| a_density(Quaternion::real(r), 0.7) * 2.0 * PI * PI * r.powi(3), 0.0, f64::INFINITY, &[0.7], &o);
        assert!((a.value - 1.0).abs() < 1e-9);
        let b = integrate(
            |r: f64| b_density(Quaternion::ONE + Quaternion::real(r)) * 2.0 * PI * PI * r.powi(3),
            0.0,
            f64::INFINITY,
            &[B_SCALE],
            &o,
        );
        assert!((b.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_close_to_one() {
        let a = integrate_ip_mc(11, 400_000).unwrap();
        let b = integrate_ip_mc(11, 400_000).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!((a.value - 1.0).abs() < 4.0 * a.err_estimate + 1e-3, "{a:?}");
        assert!(integrate_ip_mc(1, 10).is_err());
    }

    #[test]
    fn error_scales_like_inverse_sqrt_n() {
        let a = integrate_ip_mc(5, 200_000).unwrap();
        let b = integrate_ip_mc(5, 800_000).unwrap();
        let ratio = a.err_estimate / b.err_estimate;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
        let reduced = crate::integrate::integrate_ip_reduced();
        assert!(b.agrees_with(&reduced, 3.0), "{b:?}");
    }

    #[test]
    fn sphere_areas() {
        let s3 = sphere_area_mc(4, 20_000_000, 3);
        assert!((s3.value / (2.0 * PI * PI) - 1.0).abs() < 1e-3, "{s3:?}");
        let s2 = sphere_area_mc(3, 20_000_000, 4);
        assert!((s2.value / (4.0 * PI) - 1.0).abs() < 1e-3, "{s2:?}");
    }
}
