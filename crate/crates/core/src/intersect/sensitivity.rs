//! How far a solution moves when the target rotation at `p` is perturbed.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::RotationMatrix;
use crate::error::{Error, Result};
use crate::intersect::config::{derived_scales, ProblemConfig};
use crate::intersect::model::{PairProblem, Targets};

/// One perturbed re-solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySample {
    #[serde(rename = "L")]
    pub l: f64,
    pub eps: f64,
    pub delta_m: f64,
    pub delta_y: f64,
    pub delta_lambda: f64,
}

/// Exponents `(b, c)` of a fit `log delta = a + b log eps + c log L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub eps_exponent: f64,
    #[serde(rename = "L_exponent")]
    pub l_exponent: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub samples: Vec<SensitivitySample>,
    pub m: ScalingFit,
    pub y: ScalingFit,
    pub lambda: ScalingFit,
}

/// Displacements of the smaller mixed-pair solution at separation `l` when
/// `M_p` is rotated by `eps` about `axis`.
pub fn perturbed_displacement(cfg: &ProblemConfig, l: f64, eps: f64, axis: &Vector3<f64>) -> Result<SensitivitySample> {
    let cfg = ProblemConfig { l, ..cfg.clone() };
    let scales = derived_scales(&cfg)?;
    let targets = Targets::from_matrices(&cfg.background_at_p(), &cfg.background_at_q())?;
    let base = PairProblem { scales, m_p: targets.p[0].m, m_q: targets.q[1].m };
    let root = base
        .solve(0x5eed ^ 1)
        .into_iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| Error::NonConvergence("mixed branch pair has no admissible solution".into()))?;
    let (g0, _) = base
        .assemble(&root, cfg.p(), cfg.q())
        .ok_or_else(|| Error::NonConvergence("assembly failed".into()))?;
    let pert = PairProblem { m_p: base.m_p * RotationMatrix::exp(&(axis.normalize() * eps)), ..base };
    let moved = pert
        .newton(pert.lifted_target(), root)
        .ok_or_else(|| Error::NonConvergence(format!("re-solve failed at eps = {eps}")))?;
    let (g1, _) = pert
        .assemble(&moved, cfg.p(), cfg.q())
        .ok_or_else(|| Error::NonConvergence("assembly failed".into()))?;
    Ok(SensitivitySample {
        l,
        eps,
        delta_m: g0.m.distance(&g1.m),
        delta_y: (g1.y - g0.y).norm(),
        delta_lambda: (g1.lambda - g0.lambda).abs(),
    })
}

/// Least-squares fit of `log delta` against `log eps` and `log L`.
pub fn fit_scaling(points: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    let rows: Vec<_> = points.iter().filter(|(_, _, d)| *d > 0.0).collect();
    if rows.len() < 3 {
        return Err(Error::invalid("scaling fit needs at least three positive samples"));
    }
    let a = DMatrix::from_fn(rows.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => rows[r].0.ln(),
        _ => rows[r].1.ln(),
    });
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2.ln()));
    let x = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::NonConvergence(format!("scaling fit: {e}")))?;
    Ok(ScalingFit { intercept: x[0], eps_exponent: x[1], l_exponent: x[2] })
}

/// Runs every `(L, eps)` combination with one random axis and fits all three exponents.
pub fn sensitivity_scan(cfg: &ProblemConfig, eps_list: &[f64], l_list: &[f64]) -> Result<SensitivityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe95);
    let axis = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
    let mut samples = Vec::new();
    for &l in l_list {
        for &eps in eps_list {
            samples.push(perturbed_displacement(cfg, l, eps, &axis)?);
        }
    }
    let fit = |f: fn(&SensitivitySample) -> f64| {
        fit_scaling(&samples.iter().map(|s| (s.eps, s.l, f(s))).collect::<Vec<_>>())
    };
    Ok(SensitivityReport {
        m: fit(|s| s.delta_m)?,
        y: fit(|s| s.delta_y)?,
        lambda: fit(|s| s.delta_lambda)?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CurvatureMatrix;
    use crate::fields::BackgroundModel;

    fn cfg() -> ProblemConfig {
        let bg = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0).unwrap();
        ProblemConfig::new(1e-2, 1.0, 1.0, bg).unwrap()
    }

    #[test]
    fn zero_eps_zero_displacement() {
        let s = perturbed_displacement(&cfg(), 1e-2, 0.0, &Vector3::x()).unwrap();
        assert_eq!((s.delta_m, s.delta_y, s.delta_lambda), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fit_recovers_exponents() {
        let pts: Vec<_> = [1e-3, 1e-2]
            .iter()
            .flat_map(|&e| [1e-2, 1e-3].map(|l| (e, l, 3.0 * e * l * l)))
            .collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.eps_exponent - 1.0).abs() < 1e-10);
        assert!((f.l_exponent - 2.0).abs() < 1e-10);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn scan_exponents() {
        let r = sensitivity_scan(&cfg(), &[1e-3, 3e-4, 1e-4], &[1e-2, 3e-3, 1e-3]).unwrap();
        for (fit, want) in [(r.m, (1.0, 0.0)), (r.y, (1.0, 1.0)), (r.lambda, (1.0, 2.0))] {
            assert!((fit.eps_exponent - want.0).abs() < 0.2, "{fit:?}");
            assert!((fit.l_exponent - want.1).abs() < 0.2, "{fit:?}");
        }
    }
}
