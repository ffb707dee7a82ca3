//! The model intersection count: adding `F_std` to the background at `p` and
//! `q` so that both become reducible.

use std::cmp::Ordering;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{rho_lift, rho_normalized, CurvatureMatrix, Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::fields::{fstd_magnitude, fstd_radial_gauge, GluingData};
use crate::intersect::config::{derived_scales, ellipsoid_solve, DerivedScales, ProblemConfig};
use crate::intersect::sign::{solution_sign_for, ChartOrientation, SignContext};
use crate::reducible::{decompose_rank1, Branch, ReducibleDecomposition, SpectrumKind};

/// Seeds per branch pair: 8 asymptotic starting points times 8 jitters.
pub const SEEDS_PER_PAIR: usize = 64;
/// Distinct solutions closer than this multiple of `L` are merged.
pub const DEDUP_RADIUS: f64 = 1e-6;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountClassification {
    Generic,
    #[serde(rename = "degenerate_alpha_gt_1")]
    DegenerateAlphaGt1,
    #[serde(rename = "degenerate_alpha_lt_1")]
    DegenerateAlphaLt1,
}

impl CountClassification {
    /// Count predicted for this class.
    pub fn expected_count(&self) -> usize {
        match self {
            CountClassification::Generic => 6,
            CountClassification::DegenerateAlphaGt1 => 4,
            CountClassification::DegenerateAlphaLt1 => 8,
        }
    }
}

/// Branch labels of the rotations matched at `p` and at `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchPair {
    pub p: Branch,
    pub q: Branch,
    /// Indices into the `p` and `q` decompositions, aligned so that equal
    /// indices denote nearby rotations.
    pub index: (usize, usize),
}

impl BranchPair {
    pub fn matched(&self) -> bool {
        self.index.0 == self.index.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSolution {
    pub gluing: GluingData,
    pub pair: BranchPair,
    pub residual: f64,
    pub sign: i32,
    pub y0: f64,
    #[serde(rename = "yI")]
    pub y_i: [f64; 3],
}

impl IntersectionSolution {
    pub fn lambda(&self) -> f64 {
        self.gluing.lambda
    }

    pub fn y_imag(&self) -> Vector3<f64> {
        Vector3::from(self.y_i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub solutions: Vec<IntersectionSolution>,
    pub total_signed_count: i64,
    pub boundary_ratio: super::report::Ratio,
    pub classification: CountClassification,
    pub expected_count: usize,
}

impl CountReport {
    pub fn new(solutions: Vec<IntersectionSolution>, classification: CountClassification) -> Self {
        let total: i64 = solutions.iter().map(|s| s.sign as i64).sum();
        CountReport {
            total_signed_count: total,
            boundary_ratio: super::report::Ratio::new(total, 64),
            classification,
            expected_count: classification.expected_count(),
            solutions,
        }
    }

    pub fn count(&self) -> usize {
        self.solutions.len()
    }

    /// Solution count equals the predicted count and every sign is `+1`.
    pub fn matches_prediction(&self) -> bool {
        self.count() == self.expected_count
            && self.solutions.iter().all(|s| s.sign == 1)
            && self.total_signed_count == self.expected_count as i64
    }
}

/// `g(y) = (conj(y) - conj(p)) (y - q) / |(y - p)(y - q)|` with `p = -L`, `q = L`.
pub fn g_of_y(y: Quaternion, l: f64) -> Result<Quaternion> {
    let p = Quaternion::real(-l);
    let q = Quaternion::real(l);
    let a = y - p;
    let b = y - q;
    let n = a.norm() * b.norm();
    if n == 0.0 {
        return Err(Error::invalid("g(y) is singular at y = p or y = q"));
    }
    Ok((a.conj() * b).scale(1.0 / n))
}

/// Imaginary `v` with `g(v) = h` on the imaginary hyperplane `y0 = 0`;
/// `None` for `h = 1`, which is reached only at infinity.
pub fn g_inverse_imag(h: Quaternion, l: f64) -> Option<Vector3<f64>> {
    let w = h.w / h.norm();
    if w >= 1.0 - 1e-15 {
        return None;
    }
    Some(h.imag() * (l / (h.norm() * (1.0 - w))))
}

/// Rotations `(s_p M_p, s_q M_q)` that `F_std` must reproduce at `p` and `q`.
#[derive(Debug, Clone, Copy)]
pub struct Targets {
    pub p: [ReducibleDecomposition; 2],
    pub q: [ReducibleDecomposition; 2],
}

impl Targets {
    /// Decomposes at both points and aligns the `q` branches with the `p` branches.
    pub fn from_matrices(fp: &CurvatureMatrix, fq: &CurvatureMatrix) -> Result<Self> {
        let p = decompose_rank1(fp)?;
        let mut q = decompose_rank1(fq)?;
        let d = |a: &ReducibleDecomposition, b: &ReducibleDecomposition| (a.m.matrix() - b.m.matrix()).norm();
        if d(&p[0], &q[1]) + d(&p[1], &q[0]) < d(&p[0], &q[0]) + d(&p[1], &q[1]) {
            q.swap(0, 1);
        }
        Ok(Targets { p, q })
    }

    pub fn pair(&self, i: usize, j: usize) -> BranchPair {
        BranchPair { p: self.p[i].branch, q: self.q[j].branch, index: (i, j) }
    }
}

/// Everything that determines one branch-pair subproblem.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairProblem {
    pub scales: DerivedScales,
    pub m_p: RotationMatrix,
    pub m_q: RotationMatrix,
}

impl PairProblem {
    pub(crate) fn lifted_target(&self) -> Quaternion {
        rho_lift(&(self.m_p.transpose() * self.m_q))
    }

    /// `y(y_I) = (lambda(y_I) Delta / 4, y_I)`.
    pub fn center(&self, y_i: &Vector3<f64>) -> Option<(Quaternion, f64)> {
        let (lambda, y0) = ellipsoid_solve(&self.scales, y_i)?;
        Some((Quaternion::from_parts(y0, *y_i), lambda))
    }

    fn residual(&self, h: Quaternion, y_i: &Vector3<f64>) -> Option<Vector3<f64>> {
        let (y, _) = self.center(y_i)?;
        let g = g_of_y(y, self.scales.l).ok()?;
        Some((h.conj() * g).imag())
    }

    /// Damped Newton on `Im(conj(h) g(y(y_I))) = 0`.
    pub fn newton(&self, h: Quaternion, start: Vector3<f64>) -> Option<Vector3<f64>> {
        let l = self.scales.l;
        let mut v = start;
        let mut f = self.residual(h, &v)?;
        for _ in 0..NEWTON_MAX_ITERS {
            if f.norm() < NEWTON_TOL {
                return Some(v);
            }
            let step = 1e-7 * (l + v.norm());
            let mut jac = Matrix3::zeros();
            for k in 0..3 {
                let mut vp = v;
                let mut vm = v;
                vp[k] += step;
                vm[k] -= step;
                let col = (self.residual(h, &vp)? - self.residual(h, &vm)?) / (2.0 * step);
                jac.set_column(k, &col);
            }
            let dv = jac.lu().solve(&(-f))?;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = v + dv * t;
                if let Some(fc) = self.residual(h, &cand) {
                    if fc.norm() < f.norm() || fc.norm() < NEWTON_TOL {
                        v = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return (f.norm() < 1e3 * NEWTON_TOL).then_some(v);
            }
        }
        (f.norm() < 1e3 * NEWTON_TOL).then_some(v)
    }

    /// The eight asymptotic seeds: for each lift `+-h`, the exact inverse on
    /// the imaginary hyperplane, the near-field linearization `y_I = L Im(h)/2`,
    /// the far-field linearization `y_I = 2 L Im(h)/|Im(h)|^2`, and their midpoint.
    pub fn asymptotic_seeds(&self) -> Vec<Vector3<f64>> {
        let l = self.scales.l;
        let h = self.lifted_target();
        let mut seeds = Vec::with_capacity(8);
        for lift in [h, -h] {
            let exact = g_inverse_imag(lift, l);
            let near = lift.imag() * (l / 2.0);
            let im2 = lift.imag().norm_squared();
            let far = if im2 > 0.0 { lift.imag() * (2.0 * l / im2) } else { near };
            seeds.push(exact.unwrap_or(far));
            seeds.push(near);
            seeds.push(far);
            seeds.push((near + far) * 0.5);
        }
        seeds
    }

    fn admissible(&self, y_i: &Vector3<f64>) -> Option<(Quaternion, f64)> {
        let (y, lambda) = self.center(y_i)?;
        (lambda < self.scales.lambda_max && y_i.norm() < self.scales.r_kalpha.max(f64::MIN_POSITIVE))
            .then_some((y, lambda))
    }

    /// All distinct admissible roots reachable from the multistart seeds.
    pub fn solve(&self, rng_seed: u64) -> Vec<Vector3<f64>> {
        let l = self.scales.l;
        let h = self.lifted_target();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut roots: Vec<Vector3<f64>> = Vec::new();
        let seeds = self.asymptotic_seeds();
        let jitters_per_seed = SEEDS_PER_PAIR / seeds.len();
        for seed in &seeds {
            for j in 0..jitters_per_seed {
                let start = if j == 0 {
                    *seed
                } else {
                    let jit = Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    seed + jit * (0.1 * (seed.norm() + l))
                };
                let Some(root) = self.newton(h, start) else { continue };
                if self.admissible(&root).is_none() {
                    continue;
                }
                if roots.iter().all(|r| (r - root).norm() > DEDUP_RADIUS * l) {
                    roots.push(root);
                }
            }
        }
        roots
    }

    /// Builds the full solution data from a root `y_I`.
    pub fn assemble(&self, y_i: &Vector3<f64>, p: Quaternion, q: Quaternion) -> Option<(GluingData, f64)> {
        let (y, lambda) = self.center(y_i)?;
        let u_p = rho_normalized(p - y);
        let m = RotationMatrix::orthonormalize(&(u_p.matrix() * self.m_p.matrix().transpose()));
        let gluing = GluingData::from_rotation(y, lambda, m).ok()?;
        let residual = model_residual(&gluing, p, self.scales.s_p, &self.m_p)
            .max(model_residual(&gluing, q, self.scales.s_q, &self.m_q));
        Some((gluing, residual))
    }
}

/// `max(|mu - s| / s, angle(M^{-1} m^{-1} rho(u)))` at one marked point.
pub fn model_residual(g: &GluingData, x: Quaternion, s: f64, target: &RotationMatrix) -> f64 {
    let mu = fstd_magnitude((x - g.y).norm(), g.lambda);
    let dir = g.m.transpose() * rho_normalized(x - g.y);
    ((mu - s).abs() / s).max((target.transpose() * dir).angle())
}

/// `sigma_2` and `sigma_3` of `F_0 + F_std` at both points, the largest of the four.
pub fn reducibility_certificate(cfg: &ProblemConfig, g: &GluingData) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, f0) in [(cfg.p(), cfg.background_at_p()), (cfg.q(), cfg.background_at_q())] {
        let total = CurvatureMatrix(f0.0 + fstd_radial_gauge(x, g)?.0);
        let sv = total.singular_values();
        worst = worst.max(sv[1]).max(sv[2]);
    }
    Ok(worst)
}

pub(crate) fn classification(cfg: &ProblemConfig) -> CountClassification {
    match cfg.origin_class().kind {
        SpectrumKind::Generic => CountClassification::Generic,
        _ if cfg.alpha >= 1.0 => CountClassification::DegenerateAlphaGt1,
        _ => CountClassification::DegenerateAlphaLt1,
    }
}

pub(crate) fn order_solutions(sols: &mut [IntersectionSolution]) {
    sols.sort_by(|a, b| {
        a.pair
            .index
            .cmp(&b.pair.index)
            .then_with(|| {
                let ka = a.gluing.y.coords();
                let kb = b.gluing.y.coords();
                ka.iter()
                    .zip(kb.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    });
}

/// Solves all four branch pairs against fixed targets.
pub(crate) fn solve_all_pairs(
    scales: &DerivedScales,
    targets: &Targets,
    p: Quaternion,
    q: Quaternion,
) -> Result<Vec<(BranchPair, GluingData, f64, Vector3<f64>)>> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let prob = PairProblem { scales: *scales, m_p: targets.p[i].m, m_q: targets.q[j].m };
            let roots = prob.solve(0x5eed ^ ((i as u64) << 8) ^ j as u64);
            check_exact_seeds(&prob, &roots)?;
            for r in roots {
                let (g, res) = prob
                    .assemble(&r, p, q)
                    .ok_or_else(|| Error::NonConvergence("assembly failed".into()))?;
                out.push((targets.pair(i, j), g, res, r));
            }
        }
    }
    Ok(out)
}

/// An exact-inverse seed that is comfortably admissible must produce a root.
fn check_exact_seeds(prob: &PairProblem, roots: &[Vector3<f64>]) -> Result<()> {
    let l = prob.scales.l;
    let h = prob.lifted_target();
    for lift in [h, -h] {
        let Some(seed) = g_inverse_imag(lift, l) else { continue };
        let Some((_, lambda)) = prob.center(&seed) else { continue };
        let clear = lambda < 0.5 * prob.scales.lambda_max && seed.norm() < 0.5 * prob.scales.r_kalpha;
        if clear && roots.iter().all(|r| (r - seed).norm() > 0.1 * (seed.norm() + l)) {
            return Err(Error::IncompleteCount {
                reason: format!("no root found near the admissible seed {:?}", seed.as_slice()),
                found: roots.len(),
            });
        }
    }
    Ok(())
}

/// Enumerates branch pairs, solves each, signs each solution.
pub fn count_model_intersections(cfg: &ProblemConfig) -> Result<CountReport> {
    let scales = derived_scales(cfg)?;
    let targets = Targets::from_matrices(&cfg.background_at_p(), &cfg.background_at_q())?;
    let raw = solve_all_pairs(&scales, &targets, cfg.p(), cfg.q())?;
    let ctx = SignContext::new(cfg.l);
    let mut sols = Vec::with_capacity(raw.len());
    for (pair, gluing, residual, y_i) in raw {
        let sign = solution_sign_for(
            &gluing,
            [(cfg.p(), scales.s_p, targets.p[pair.index.0].m), (cfg.q(), scales.s_q, targets.q[pair.index.1].m)],
            &ctx,
            ChartOrientation::Standard,
        )?;
        sols.push(IntersectionSolution {
            gluing,
            pair,
            residual,
            sign,
            y0: gluing.y.w,
            y_i: [y_i.x, y_i.y, y_i.z],
        });
    }
    order_solutions(&mut sols);
    Ok(CountReport::new(sols, classification(cfg)))
}

/// Recomputes the sign of a reported solution against the configuration's targets.
pub fn solution_sign(sol: &IntersectionSolution, cfg: &ProblemConfig) -> Result<i32> {
    let scales = derived_scales(cfg)?;
    let targets = Targets::from_matrices(&cfg.background_at_p(), &cfg.background_at_q())?;
    let (i, j) = sol.pair.index;
    if i > 1 || j > 1 {
        return Err(Error::invalid(format!("branch index {:?} out of range", sol.pair.index)));
    }
    solution_sign_for(
        &sol.gluing,
        [(cfg.p(), scales.s_p, targets.p[i].m), (cfg.q(), scales.s_q, targets.q[j].m)],
        &SignContext::new(cfg.l),
        ChartOrientation::Standard,
    )
}
