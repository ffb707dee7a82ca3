//! Counting with center-dependent targets.
//!
//! The targets at `p` and `q` are rotated by a synthetic holonomy
//! `M_x(y) = M_x(0) exp(skew(C_x L y_I))` with `|C_x| <= strength`, which obeys
//! `|M_x(y) - M_x(0)| <= const L |y_I|`. Every unperturbed solution is refined
//! by alternating a target update with a Newton solve.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::intersect::config::{derived_scales, ProblemConfig};
use crate::intersect::model::{
    classification, order_solutions, solve_all_pairs, CountReport, IntersectionSolution, PairProblem,
    Targets,
};
use crate::intersect::sign::{solution_sign_with, ChartOrientation, PointTarget, SignContext};

const MAX_ITERATIONS: usize = 200;

/// The coupling matrices `C_p`, `C_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyModel {
    pub c_p: Matrix3<f64>,
    pub c_q: Matrix3<f64>,
}

impl HolonomyModel {
    pub fn zero() -> Self {
        HolonomyModel { c_p: Matrix3::zeros(), c_q: Matrix3::zeros() }
    }

    /// Random directions, each matrix scaled to Frobenius norm `strength`.
    pub fn random(strength: f64, seed: u64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::invalid(format!("holonomy strength {strength} must be finite and >= 0")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let m = Matrix3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let n: f64 = m.norm();
            if strength == 0.0 { Matrix3::zeros() } else { m * (strength / n) }
        };
        let c_p = draw();
        let c_q = draw();
        Ok(HolonomyModel { c_p, c_q })
    }

    pub fn strength(&self) -> f64 {
        self.c_p.norm().max(self.c_q.norm())
    }

    pub fn rotate(&self, m: &RotationMatrix, c: &Matrix3<f64>, l: f64, y: Quaternion) -> RotationMatrix {
        *m * RotationMatrix::exp(&(c * y.imag() * l))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub report: CountReport,
    /// `max |y - y_unperturbed| / (L |y_I|)` over solutions with `|y_I| > 1e-8 L`.
    pub displacement_constant: f64,
    pub max_iterations: usize,
}

/// Counts with the holonomy model of the given strength.
pub fn count_with_holonomy_model(cfg: &ProblemConfig, holonomy_strength: f64) -> Result<HolonomyReport> {
    count_with_holonomy(cfg, &HolonomyModel::random(holonomy_strength, 0x401)?)
}

pub fn count_with_holonomy(cfg: &ProblemConfig, model: &HolonomyModel) -> Result<HolonomyReport> {
    let scales = derived_scales(cfg)?;
    let targets = Targets::from_matrices(&cfg.background_at_p(), &cfg.background_at_q())?;
    let base = solve_all_pairs(&scales, &targets, cfg.p(), cfg.q())?;
    let (p, q, l) = (cfg.p(), cfg.q(), cfg.l);
    let ctx = SignContext::new(l);
    let mut sols = Vec::with_capacity(base.len());
    let mut disp: f64 = 0.0;
    let mut max_iters = 0;
    for (pair, g0, _, y_i0) in base {
        let (i, j) = pair.index;
        let (mp0, mq0) = (targets.p[i].m, targets.q[j].m);
        let problem_at = |y: Quaternion| PairProblem {
            scales,
            m_p: model.rotate(&mp0, &model.c_p, l, y),
            m_q: model.rotate(&mq0, &model.c_q, l, y),
        };
        let mut v = y_i0;
        let mut y = g0.y;
        let mut prev_step = f64::INFINITY;
        let mut growth = 0;
        let mut converged = false;
        for it in 0..MAX_ITERATIONS {
            let prob = problem_at(y);
            let next = prob
                .newton(prob.lifted_target(), v)
                .ok_or_else(|| Error::NonContraction(format!("Newton failed at iteration {it}")))?;
            let step = (next - v).norm();
            v = next;
            y = prob
                .center(&v)
                .ok_or_else(|| Error::NonContraction("iterate left the ellipsoid".into()))?
                .0;
            max_iters = max_iters.max(it + 1);
            if step <= 1e-15 * (l + v.norm()) {
                converged = true;
                break;
            }
            growth = if step > prev_step { growth + 1 } else { 0 };
            if growth >= 3 || !v.iter().all(|c| c.is_finite()) {
                return Err(Error::NonContraction(format!("steps grew for 3 iterations (last {step:e})")));
            }
            prev_step = step;
        }
        if !converged {
            return Err(Error::NonContraction(format!("no convergence in {MAX_ITERATIONS} iterations")));
        }
        let prob = problem_at(y);
        let (gluing, residual) = prob
            .assemble(&v, p, q)
            .ok_or_else(|| Error::NonConvergence("assembly failed".into()))?;
        let targets_at = |yy: Quaternion| -> [PointTarget; 2] {
            let pr = problem_at(yy);
            [(p, scales.s_p, pr.m_p), (q, scales.s_q, pr.m_q)]
        };
        let sign = solution_sign_with(&gluing, &targets_at, &ctx, ChartOrientation::Standard)?;
        if v.norm() > 1e-8 * l {
            disp = disp.max((gluing.y - g0.y).norm() / (l * v.norm()));
        }
        sols.push(IntersectionSolution { gluing, pair, residual, sign, y0: gluing.y.w, y_i: [v.x, v.y, v.z] });
    }
    order_solutions(&mut sols);
    Ok(HolonomyReport {
        report: CountReport::new(sols, classification(cfg)),
        displacement_constant: disp,
        max_iterations: max_iters,
    })
}

/// `sup |M_x(y) - M_x(0)| / (L |y_I|)` sampled on random centers; bounded by `sqrt(2) strength`.
pub fn holonomy_lipschitz_constant(model: &HolonomyModel, l: f64, radius: f64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
        let y = Quaternion::pure(v * (radius / v.norm()));
        for c in [&model.c_p, &model.c_q] {
            let m = model.rotate(&RotationMatrix::identity(), c, l, y);
            worst = worst.max((m.matrix() - Matrix3::identity()).norm() / (l * radius));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BackgroundModel;
    use crate::intersect::model::count_model_intersections;

    fn config(seed: u64) -> ProblemConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bg = BackgroundModel::random_generic(&mut rng, 0.3, 0.1, 1.0).unwrap();
        ProblemConfig::new(1e-2, 1.0, 1.0, bg).unwrap()
    }

    #[test]
    fn zero_strength_reproduces_model() {
        let cfg = config(3);
        let h = count_with_holonomy_model(&cfg, 0.0).unwrap();
        let m = count_model_intersections(&cfg).unwrap();
        assert_eq!(h.report.count(), m.count());
        for (a, b) in h.report.solutions.iter().zip(&m.solutions) {
            assert!((a.gluing.y - b.gluing.y).norm() < 1e-14);
            assert_eq!(a.sign, b.sign);
        }
        assert!(h.displacement_constant < 1e-9);
    }

    #[test]
    fn moderate_strength_keeps_six() {
        let cfg = config(4);
        let h = count_with_holonomy_model(&cfg, 5.0).unwrap();
        assert_eq!(h.report.count(), 6);
        assert_eq!(h.report.total_signed_count, 6);
        assert!(h.displacement_constant > 0.0 && h.displacement_constant <= 5.0);
        assert!(h.report.solutions.iter().all(|s| s.residual < 1e-9));
    }

    #[test]
    fn lipschitz_bound() {
        let m = HolonomyModel::random(2.0, 1).unwrap();
        let c = holonomy_lipschitz_constant(&m, 1e-2, 0.05, 200);
        assert!(c <= 2.0 * 2f64.sqrt() + 1e-12);
    }
}
