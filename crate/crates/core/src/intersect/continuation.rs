//! Tracking the intersection points from `F_A0 + F_std` (at `t = 1`) to the
//! curvature of the glued connection (at `t = 0`).
//!
//! At every `t` the unknowns are the gluing data `(y, lambda, m)`. Writing
//! `Q_x = Mat F_t(x) - Mat F_std(x)` for the part of the curvature not coming
//! from the bare instanton, the conditions are that `F_std(x)` equals
//! `s M` for the tracked decomposition `(s, M)` of `Q_x` at both marked points.

use nalgebra::{SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{rho_normalized, CurvatureMatrix, Quaternion, RotationMatrix};
use crate::error::{Error, Result};
use crate::fields::{
    fstd_magnitude, zone_classify, CutoffScales, GluedConnectionModel, GluingData, ScaleThresholds, Zone,
};
use crate::intersect::config::ProblemConfig;
use crate::intersect::model::{
    classification, count_model_intersections, BranchPair, CountReport, IntersectionSolution,
};
use crate::intersect::sign::{equilibrated_sign, SignContext};
use crate::reducible::decompose_rank1;

type Matrix8 = SMatrix<f64, 8, 8>;
type Vector8 = SMatrix<f64, 8, 1>;

const CORRECTOR_TOL: f64 = 1e-11;
const CORRECTOR_MAX_ITERS: usize = 25;
const FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Decreasing grid of recorded `t` values; must start at 1 and end at 0.
    pub t_grid: Vec<f64>,
    pub initial_dt: f64,
    pub min_dt: f64,
    pub thresholds: ScaleThresholds,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            t_grid: (0..=10).rev().map(|k| k as f64 / 10.0).collect(),
            initial_dt: 0.05,
            min_dt: 1e-4,
            thresholds: ScaleThresholds::default(),
        }
    }
}

impl ContinuationOptions {
    fn validate(&self) -> Result<()> {
        let g = &self.t_grid;
        let ok = g.first() == Some(&1.0)
            && g.last() == Some(&0.0)
            && g.windows(2).all(|w| w[1] < w[0])
            && self.min_dt > 0.0
            && self.initial_dt >= self.min_dt;
        if !ok {
            return Err(Error::invalid(
                "t grid must decrease strictly from 1 to 0 and 0 < min_dt <= initial_dt",
            ));
        }
        Ok(())
    }
}

/// One slice of the continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSlice {
    pub t: f64,
    pub report: CountReport,
    /// Zones of `p` and `q` relative to each solution's center.
    pub zones: Vec<(Zone, Zone)>,
    /// Largest `sigma_2, sigma_3` of `Mat F_t` at `p` and `q` over all solutions.
    pub certificate: f64,
}

impl ContinuationSlice {
    pub fn all_plateau(&self) -> bool {
        self.zones.iter().all(|z| *z == (Zone::Plateau, Zone::Plateau))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub slices: Vec<ContinuationSlice>,
    pub steps: usize,
    pub smallest_dt: f64,
}

impl ContinuationReport {
    pub fn counts(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.report.count()).collect()
    }
}

/// A tracked point: gluing data plus the decompositions it is matched to.
#[derive(Debug, Clone, Copy)]
struct Tracked {
    y: Quaternion,
    lambda: f64,
    m: RotationMatrix,
    m_p: RotationMatrix,
    m_q: RotationMatrix,
    pair: BranchPair,
}

struct System<'a> {
    cfg: &'a ProblemConfig,
    thresholds: ScaleThresholds,
    t: f64,
}

impl System<'_> {
    fn model(&self, y: Quaternion, lambda: f64, m: RotationMatrix) -> Result<GluedConnectionModel> {
        let bubble = GluingData::from_rotation(y, lambda, m)?;
        let scales = CutoffScales::default_for(&self.cfg.background, y, lambda)?;
        GluedConnectionModel::new(self.cfg.background.clone(), bubble, scales, &self.thresholds)
    }

    /// `(Mat F_t(x), Mat F_t(x) - Mat F_std(x))`.
    fn curvature_parts(&self, model: &GluedConnectionModel, x: Quaternion) -> Result<(CurvatureMatrix, CurvatureMatrix)> {
        let terms = model.terms(x)?;
        let total = terms.interpolated(self.t).asd_matrix();
        Ok((total, total - terms.f_std.asd_matrix()))
    }

    /// Residual at `base` moved by `d = (dy / L, d log lambda, omega)`, and the
    /// decompositions it was matched against.
    fn residual(&self, base: &Tracked, d: &Vector8) -> Result<(Vector8, [RotationMatrix; 2])> {
        let l = self.cfg.l;
        let y = base.y + Quaternion::new(d[0], d[1], d[2], d[3]).scale(l);
        let lambda = base.lambda * d[4].exp();
        let m = base.m * RotationMatrix::exp(&Vector3::new(d[5], d[6], d[7]));
        let model = self.model(y, lambda, m)?;
        let mut out = Vector8::zeros();
        let mut matched = [base.m_p, base.m_q];
        for (k, (x, tracked)) in [(self.cfg.p(), base.m_p), (self.cfg.q(), base.m_q)].into_iter().enumerate() {
            let (_, q) = self.curvature_parts(&model, x)?;
            let dec = decompose_rank1(&q)?;
            let best = if dec[0].m.distance(&tracked) <= dec[1].m.distance(&tracked) { dec[0] } else { dec[1] };
            let z = x - y;
            let mu = fstd_magnitude(z.norm(), lambda);
            let dir = m.transpose() * rho_normalized(z);
            out[4 * k] = (mu - best.s) / best.s;
            out.fixed_rows_mut::<3>(4 * k + 1).copy_from(&(best.m.transpose() * dir).log());
            matched[k] = best.m;
        }
        Ok((out, matched))
    }

    fn jacobian(&self, base: &Tracked) -> Result<Matrix8> {
        let mut jac = Matrix8::zeros();
        for c in 0..8 {
            let mut d = Vector8::zeros();
            d[c] = FD_STEP;
            let (fp, _) = self.residual(base, &d)?;
            let (fm, _) = self.residual(base, &(-d))?;
            jac.set_column(c, &((fp - fm) / (2.0 * FD_STEP)));
        }
        Ok(jac)
    }

    fn apply(&self, base: &Tracked, d: &Vector8, matched: [RotationMatrix; 2]) -> Tracked {
        Tracked {
            y: base.y + Quaternion::new(d[0], d[1], d[2], d[3]).scale(self.cfg.l),
            lambda: base.lambda * d[4].exp(),
            m: base.m * RotationMatrix::exp(&Vector3::new(d[5], d[6], d[7])),
            m_p: matched[0],
            m_q: matched[1],
            pair: base.pair,
        }
    }

    /// Newton corrector; rejects steps that jump further than `max_move` in chart units.
    fn correct(&self, start: &Tracked, max_move: f64) -> Result<(Tracked, f64)> {
        let mut cur = *start;
        let mut moved = Vector8::zeros();
        for _ in 0..CORRECTOR_MAX_ITERS {
            let (f, matched) = self.residual(&cur, &Vector8::zeros())?;
            cur.m_p = matched[0];
            cur.m_q = matched[1];
            if f.norm() < CORRECTOR_TOL {
                return Ok((cur, f.norm()));
            }
            let jac = self.jacobian(&cur)?;
            let step = jac
                .lu()
                .solve(&(-f))
                .ok_or_else(|| Error::NonConvergence("singular corrector Jacobian".into()))?;
            moved += step;
            if moved.norm() > max_move {
                return Err(Error::NonConvergence(format!("corrector moved {:e}", moved.norm())));
            }
            let (_, m2) = self.residual(&cur, &step)?;
            cur = self.apply(&cur, &step, m2);
        }
        Err(Error::NonConvergence("corrector did not converge".into()))
    }

    fn to_solution(&self, tr: &Tracked, ctx: &SignContext) -> Result<(IntersectionSolution, (Zone, Zone), f64)> {
        let (res, _) = self.residual(tr, &Vector8::zeros())?;
        let (det, _) = equilibrated_sign(&self.jacobian(tr)?)?;
        let model = self.model(tr.y, tr.lambda, tr.m)?;
        let mut cert: f64 = 0.0;
        for x in [self.cfg.p(), self.cfg.q()] {
            let (total, _) = self.curvature_parts(&model, x)?;
            let sv = total.singular_values();
            cert = cert.max(sv[1]).max(sv[2]);
        }
        let zones = (
            zone_classify(self.cfg.p(), tr.y, &model.scales),
            zone_classify(self.cfg.q(), tr.y, &model.scales),
        );
        let gluing = model.bubble;
        Ok((
            IntersectionSolution {
                gluing,
                pair: tr.pair,
                residual: res.amax(),
                sign: ctx.orient(det),
                y0: tr.y.w,
                y_i: [tr.y.x, tr.y.y, tr.y.z],
            },
            zones,
            cert,
        ))
    }
}

/// Chart distance between two tracked points.
fn separation(a: &Tracked, b: &Tracked, l: f64) -> f64 {
    (a.y - b.y).norm() / l + (a.lambda / b.lambda).ln().abs() + a.m.distance(&b.m)
}

/// Continues every model solution from `t = 1` to `t = 0`.
pub fn continuation_count(cfg: &ProblemConfig, opts: &ContinuationOptions) -> Result<ContinuationReport> {
    opts.validate()?;
    let model_report = count_model_intersections(cfg)?;
    let ctx = SignContext::new(cfg.l);
    let targets_p = decompose_rank1(&cfg.background_at_p())?;
    let targets_q = decompose_rank1(&cfg.background_at_q())?;
    let sys_at = |t: f64| System { cfg, thresholds: opts.thresholds, t };

    let mut tracked = Vec::with_capacity(model_report.count());
    for s in &model_report.solutions {
        let closest = |decs: &[crate::reducible::ReducibleDecomposition; 2], target: RotationMatrix| {
            decs.iter().map(|d| d.m).min_by(|a, b| a.distance(&target).total_cmp(&b.distance(&target))).unwrap()
        };
        let z_p = cfg.p() - s.gluing.y;
        let z_q = cfg.q() - s.gluing.y;
        let dir_p = s.gluing.m.transpose() * rho_normalized(z_p);
        let dir_q = s.gluing.m.transpose() * rho_normalized(z_q);
        let seed = Tracked {
            y: s.gluing.y,
            lambda: s.gluing.lambda,
            m: s.gluing.m,
            m_p: closest(&targets_p, dir_p),
            m_q: closest(&targets_q, dir_q),
            pair: s.pair,
        };
        let (fixed, _) = sys_at(1.0)
            .correct(&seed, 1e-2)
            .map_err(|e| Error::ContinuationFailure { t: 1.0, reason: format!("t = 1 correction: {e}") })?;
        tracked.push(fixed);
    }

    let mut slices = Vec::with_capacity(opts.t_grid.len());
    let mut steps = 0;
    let mut smallest_dt = f64::INFINITY;
    let mut t = 1.0;
    let mut dt = opts.initial_dt;
    for &t_next in &opts.t_grid {
        while t > t_next {
            let target = if t - dt <= t_next + 1e-12 { t_next } else { t - dt };
            let h = t - target;
            let sys = sys_at(target);
            let attempt: Result<Vec<Tracked>> = tracked
                .iter()
                .map(|tr| sys.correct(tr, 0.05).map(|(c, _)| c))
                .collect();
            match attempt {
                Ok(next) => {
                    check_separated(&next, cfg.l, target)?;
                    tracked = next;
                    t = target;
                    steps += 1;
                    smallest_dt = smallest_dt.min(h);
                    dt = (dt * 1.5).min(opts.initial_dt);
                }
                Err(e) => {
                    dt = h / 2.0;
                    if dt < opts.min_dt {
                        return Err(Error::ContinuationFailure { t, reason: format!("step below minimum: {e}") });
                    }
                }
            }
        }
        slices.push(record_slice(&sys_at(t_next), &tracked, &ctx, cfg)?);
    }
    Ok(ContinuationReport { slices, steps, smallest_dt })
}

fn check_separated(tracked: &[Tracked], l: f64, t: f64) -> Result<()> {
    for (a, ta) in tracked.iter().enumerate() {
        for tb in &tracked[a + 1..] {
            let d = separation(ta, tb, l);
            if d < 1e-6 {
                return Err(Error::ContinuationFailure { t, reason: format!("paths crossed (separation {d:e})") });
            }
        }
    }
    Ok(())
}

fn record_slice(sys: &System, tracked: &[Tracked], ctx: &SignContext, cfg: &ProblemConfig) -> Result<ContinuationSlice> {
    let mut sols = Vec::with_capacity(tracked.len());
    let mut zones = Vec::with_capacity(tracked.len());
    let mut certificate: f64 = 0.0;
    for tr in tracked {
        let (sol, z, cert) = sys.to_solution(tr, ctx)?;
        if z != (Zone::Plateau, Zone::Plateau) {
            return Err(Error::ContinuationFailure {
                t: sys.t,
                reason: format!("solution left the plateau: zones {z:?} at y = {:?}", tr.y.coords()),
            });
        }
        sols.push(sol);
        zones.push(z);
        certificate = certificate.max(cert);
    }
    Ok(ContinuationSlice { t: sys.t, report: CountReport::new(sols, classification(cfg)), zones, certificate })
}
