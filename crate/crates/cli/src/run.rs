//! Executes one validated parameter set.

use asd_core::algebra::CurvatureMatrix;
use asd_core::fields::BackgroundModel;
use asd_core::integrate::{
    concentration_profile, integrate_ip_mc, integrate_ip_reduced, log_log_slope, fiber_contribution_report,
    toy_wedge_integral, truncated_fiber_integral, ToyConfig, Truncation,
};
use asd_core::intersect::{
    continuation_count, count_model_intersections, count_with_holonomy_model, reducibility_certificate,
    sensitivity_scan, ContinuationOptions, CountReport, ProblemConfig,
};
use asd_core::reducible::{classify_spectrum, decompose_rank1, decompose_rank1_degenerate, SpectrumKind};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::*;

/// A CSV table; `suffix` is appended to the stem of the result path.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(suffix: &str, header: &[&str]) -> Self {
        Table { suffix: suffix.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn cell(x: impl std::fmt::Display) -> String {
    x.to_string()
}

/// Result of a run that got far enough to produce data.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub summary: String,
    /// Headline lines collected by the suite summary.
    pub headline: Vec<String>,
    /// Certificate failure detected after the data was produced.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn new(result: Value, summary: String) -> Self {
        Outcome { result, tables: Vec::new(), summary, headline: Vec::new(), failure: None }
    }

    fn check(mut self, ok: bool, reason: impl FnOnce() -> String) -> Self {
        if !ok && self.failure.is_none() {
            self.failure = Some(CliError::Certificate(reason()));
        }
        self
    }
}

pub fn execute(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    match params {
        Params::Reduce(p) => reduce(p, seed),
        Params::Count(p) => count(p, seed),
        Params::Degenerate(p) => degenerate(p, seed),
        Params::Continuation(p) => continuation(p, seed),
        Params::Sensitivity(p) => sensitivity(p, seed),
        Params::Toy(p) => toy(p),
        Params::Ip(p) => ip(p, seed),
        Params::Fiber(p) => fiber(p),
        Params::Concentration(p) => concentration(p),
        Params::Report(p) => report(p, seed),
    }
}

pub fn build_background(p: &ProblemParams, seed: u64) -> Result<BackgroundModel, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match p.background {
        BackgroundKind::Generic => BackgroundModel::random_generic(&mut rng, p.gradient, p.min_gap, p.patch_radius)?,
        BackgroundKind::Degenerate => BackgroundModel::random_degenerate(&mut rng, p.gradient, p.patch_radius)?,
        BackgroundKind::Constant => {
            BackgroundModel::constant(CurvatureMatrix::from_diagonal([p.diag[0], p.diag[1], p.diag[2]]), p.patch_radius)?
        }
    })
}

fn problem(p: &ProblemParams, seed: u64) -> Result<ProblemConfig, CliError> {
    Ok(ProblemConfig::new(p.l, p.k, p.alpha, build_background(p, seed)?)?)
}

fn reduce(p: &ReduceParams, seed: u64) -> Result<Outcome, CliError> {
    let mut matrices = Vec::new();
    if let Some(m) = &p.matrix {
        matrices.push(CurvatureMatrix(Matrix3::from_row_slice(m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while matrices.len() < p.random + usize::from(p.matrix.is_some()) {
        let m = CurvatureMatrix(Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        let sv = m.singular_values();
        if sv[0] - sv[1] >= p.min_gap && sv[1] - sv[2] >= p.min_gap {
            matrices.push(m);
        }
    }
    let mut table = Table::new("decompositions", &["index", "branch", "s", "theta", "sigma2_residual", "sigma3_residual"]);
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    for (k, m) in matrices.iter().enumerate() {
        let sv = m.singular_values();
        let class = classify_spectrum(m, asd_core::reducible::DEFAULT_GAP_TOL * (1.0 + sv[0]))?;
        let decs = match class.kind {
            SpectrumKind::Generic => decompose_rank1(m)?.to_vec(),
            _ => vec![decompose_rank1_degenerate(m)?],
        };
        let mut items = Vec::new();
        for d in &decs {
            let (s2, s3) = d.residual_singular_values(m);
            worst = worst.max(s2.max(s3) / (1.0 + sv[0]));
            table.push(vec![cell(k), cell(json!(d.branch).as_str().unwrap_or("")), cell(d.s), cell(d.theta), cell(s2), cell(s3)]);
            items.push(json!({ "decomposition": d, "residual_singular_values": [s2, s3] }));
        }
        entries.push(json!({ "matrix": m, "singular_values": sv, "class": class, "decompositions": items }));
    }
    let n = matrices.len();
    let mut out = Outcome::new(
        json!({ "matrices": entries, "max_relative_residual": worst }),
        format!("{n} matrices decomposed, max relative residual {worst:.1e}"),
    );
    out.tables.push(table);
    Ok(out.check(worst <= 1e-8, || format!("rank residual {worst:e} exceeds 1e-8")))
}

fn solution_table(rep: &CountReport) -> Table {
    let mut t = Table::new(
        "solutions",
        &["pair_p", "pair_q", "y0", "y1", "y2", "y3", "lambda", "sign", "residual"],
    );
    for s in &rep.solutions {
        let y = s.gluing.y.coords();
        t.push(vec![
            cell(s.pair.index.0),
            cell(s.pair.index.1),
            cell(y[0]),
            cell(y[1]),
            cell(y[2]),
            cell(y[3]),
            cell(s.lambda()),
            cell(s.sign),
            cell(s.residual),
        ]);
    }
    t
}

/// `model_certificate` adds the reducibility check of the unperturbed model.
fn certify_count(cfg: &ProblemConfig, rep: &CountReport, model_certificate: bool) -> Result<Option<String>, CliError> {
    if !rep.matches_prediction() {
        return Ok(Some(format!(
            "found {} solutions with signed count {}, expected {}",
            rep.count(),
            rep.total_signed_count,
            rep.expected_count
        )));
    }
    for s in &rep.solutions {
        if s.residual > 1e-9 {
            return Ok(Some(format!("solution residual {:e}", s.residual)));
        }
        if !model_certificate {
            continue;
        }
        let c = reducibility_certificate(cfg, &s.gluing)?;
        if c > 1e-8 {
            return Ok(Some(format!("reducibility certificate {c:e}")));
        }
    }
    Ok(None)
}

fn count(p: &CountParams, seed: u64) -> Result<Outcome, CliError> {
    let cfg = problem(&p.problem, seed)?;
    let (rep, extra) = if p.holonomy > 0.0 {
        let h = count_with_holonomy_model(&cfg, p.holonomy)?;
        let extra = json!({ "displacement_constant": h.displacement_constant, "max_iterations": h.max_iterations });
        (h.report, extra)
    } else {
        (count_model_intersections(&cfg)?, Value::Null)
    };
    let failure = certify_count(&cfg, &rep, p.holonomy == 0.0)?;
    let mut result = serde_json::to_value(&rep).expect("report serializes");
    result["holonomy"] = extra;
    result["background"] = serde_json::to_value(&cfg.background).expect("background serializes");
    let mut out = Outcome::new(
        result,
        format!("count {}, signed {}, boundary ratio {}", rep.count(), rep.total_signed_count, rep.boundary_ratio),
    );
    out.headline.push(format!("boundary contribution = {}", rep.boundary_ratio));
    out.tables.push(solution_table(&rep));
    Ok(out.check(failure.is_none(), || failure.unwrap_or_default()))
}

fn degenerate(p: &DegenerateParams, seed: u64) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("counts", &["run", "alpha", "count", "signed", "expected"]);
    let mut runs = Vec::new();
    let mut all_ok = true;
    for run in 0..p.runs {
        let bg = BackgroundModel::random_degenerate(&mut rng, p.gradient, 1.0)?;
        for &alpha in &p.alphas {
            let cfg = ProblemConfig::new(p.l, p.k, alpha, bg.clone())?;
            let rep = count_model_intersections(&cfg)?;
            all_ok &= rep.matches_prediction();
            table.push(vec![
                cell(run),
                cell(alpha),
                cell(rep.count()),
                cell(rep.total_signed_count),
                cell(rep.expected_count),
            ]);
            runs.push(json!({
                "run": run, "alpha": alpha, "count": rep.count(), "total_signed_count": rep.total_signed_count,
                "classification": rep.classification, "expected_count": rep.expected_count,
            }));
        }
    }
    let summary = table.rows.iter().map(|r| format!("alpha {}: {}", r[1], r[2])).collect::<Vec<_>>().join(", ");
    let mut out = Outcome::new(json!({ "runs": runs }), format!("degenerate counts: {summary}"));
    out.tables.push(table);
    Ok(out.check(all_ok, || "a degenerate count differs from the predicted 4 or 8".into()))
}

fn continuation(p: &ContinuationParams, seed: u64) -> Result<Outcome, CliError> {
    let cfg = problem(&p.problem, seed)?;
    let n = p.t_steps;
    let opts = ContinuationOptions {
        t_grid: (0..=n).rev().map(|k| k as f64 / n as f64).collect(),
        ..Default::default()
    };
    let rep = continuation_count(&cfg, &opts)?;
    let mut table = Table::new("slices", &["t", "count", "signed", "certificate", "all_plateau"]);
    for s in &rep.slices {
        table.push(vec![
            cell(s.t),
            cell(s.report.count()),
            cell(s.report.total_signed_count),
            cell(s.certificate),
            cell(s.all_plateau()),
        ]);
    }
    let ok = rep.slices.iter().all(|s| s.report.matches_prediction() && s.all_plateau() && s.certificate <= 1e-8);
    let counts = rep.counts();
    let mut out = Outcome::new(
        serde_json::to_value(&rep).expect("report serializes"),
        format!("counts along t: {counts:?}, {} steps, smallest dt {:.1e}", rep.steps, rep.smallest_dt),
    );
    out.tables.push(table);
    Ok(out.check(ok, || "count or zone certificate failed along the path".into()))
}

fn sensitivity(p: &SensitivityParams, seed: u64) -> Result<Outcome, CliError> {
    let prob = ProblemParams { l: p.l_values[0], gradient: p.gradient, ..Default::default() };
    let cfg = problem(&prob, seed)?;
    let rep = sensitivity_scan(&cfg, &p.eps, &p.l_values)?;
    let mut table = Table::new("samples", &["L", "eps", "delta_m", "delta_y", "delta_lambda"]);
    for s in &rep.samples {
        table.push(vec![cell(s.l), cell(s.eps), cell(s.delta_m), cell(s.delta_y), cell(s.delta_lambda)]);
    }
    let fits = [(rep.m, 0.0), (rep.y, 1.0), (rep.lambda, 2.0)];
    let ok = fits.iter().all(|(f, le)| (f.eps_exponent - 1.0).abs() <= 0.2 && (f.l_exponent - le).abs() <= 0.2);
    let summary = format!(
        "exponents (eps, L): m ({:.2}, {:.2}), y ({:.2}, {:.2}), lambda ({:.2}, {:.2})",
        rep.m.eps_exponent, rep.m.l_exponent, rep.y.eps_exponent, rep.y.l_exponent, rep.lambda.eps_exponent, rep.lambda.l_exponent
    );
    let mut out = Outcome::new(serde_json::to_value(&rep).expect("report serializes"), summary);
    out.tables.push(table);
    Ok(out.check(ok, || "fitted exponents outside +/-0.2 of (1,0), (1,1), (1,2)".into()))
}

fn toy(p: &ToyParams) -> Result<Outcome, CliError> {
    let cfg = ToyConfig::new(p.l, p.x_max, p.lambda_max)?;
    let r = toy_wedge_integral(&cfg)?;
    Ok(Outcome::new(
        serde_json::to_value(r).expect("result serializes"),
        format!("toy integral at L = {}: {} +/- {:.1e}", p.l, r.value, r.err_estimate),
    ))
}

fn ip(p: &IpParams, seed: u64) -> Result<Outcome, CliError> {
    let reduced = matches!(p.method, IpMethod::Reduced | IpMethod::Both).then(integrate_ip_reduced);
    let mc = match p.method {
        IpMethod::Mc | IpMethod::Both => Some(integrate_ip_mc(seed, p.samples)?),
        IpMethod::Reduced => None,
    };
    let primary = reduced.or(mc).expect("one method runs");
    let mut out = Outcome::new(
        json!({ "value": primary.value, "reduced": reduced, "monte_carlo": mc }),
        format!("I_p = {} +/- {:.1e} ({:?})", primary.value, primary.err_estimate, primary.method),
    );
    if let (Some(r), Some(m)) = (reduced, mc) {
        out = out.check(m.agrees_with(&r, 1.96), || format!("MC {} disagrees with reduced {}", m.value, r.value));
    }
    Ok(out)
}

fn fiber(p: &FiberParams) -> Result<Outcome, CliError> {
    let t = Truncation { lambda_min_exp: p.lambda_min_exp, lambda_max_exp: p.lambda_max_exp, ball_factor: p.ball_factor };
    let mut table = Table::new("truncated", &["L", "value", "err_estimate"]);
    let mut values = Vec::new();
    for &l in &p.l_values {
        let r = truncated_fiber_integral(l, &t)?;
        table.push(vec![cell(l), cell(r.value), cell(r.err_estimate)]);
        values.push(json!({ "L": l, "result": r }));
    }
    let vals: Vec<f64> = values.iter().map(|v| v["result"]["value"].as_f64().unwrap_or(f64::NAN)).collect();
    let mut sorted = p.l_values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let decreasing_l = sorted == p.l_values;
    let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
    let mut out = Outcome::new(
        json!({ "values": values }),
        format!("truncated fiber integrals {vals:.6?}"),
    );
    out.tables.push(table);
    Ok(out.check(!decreasing_l || monotone, || "truncated integrals are not monotone in L".into()))
}

fn concentration(p: &ConcentrationParams) -> Result<Outcome, CliError> {
    let mut table = Table::new("bins", &["L", "lambda_lo", "lambda_hi", "mass"]);
    let mut profiles = Vec::new();
    let mut medians = Vec::new();
    for &l in &p.l_values {
        let prof = concentration_profile(l, p.bins)?;
        for b in &prof.bins {
            table.push(vec![cell(l), cell(b.lambda_lo), cell(b.lambda_hi), cell(b.mass)]);
        }
        medians.push((l, prof.median_lambda));
        profiles.push(prof);
    }
    let median_exponent = log_log_slope(&medians);

    let bg = BackgroundModel::constant(CurvatureMatrix::from_diagonal([3.0, 2.0, 1.0]), 1.0)?;
    let mut sols = Vec::new();
    for l in [1e-2, 3e-3, 1e-3, 3e-4] {
        let rep = count_model_intersections(&ProblemConfig::new(l, 1.0, 1.0, bg.clone())?)?;
        let lam: Vec<f64> = rep.solutions.iter().filter(|s| s.pair.matched()).map(|s| s.lambda()).collect();
        if lam.is_empty() {
            return Err(CliError::Certificate(format!("no matched solutions at L = {l}")));
        }
        sols.push((l, lam.iter().sum::<f64>() / lam.len() as f64));
    }
    let solution_exponent = log_log_slope(&sols);
    let mut out = Outcome::new(
        json!({
            "profiles": profiles,
            "median_exponent": median_exponent,
            "solution_lambdas": sols,
            "solution_exponent": solution_exponent,
        }),
        format!("median lambda ~ L^{median_exponent:.3}, solution lambda ~ L^{solution_exponent:.3}"),
    );
    out.tables.push(table);
    Ok(out.check((median_exponent - 1.0).abs() <= 0.15 && (solution_exponent - 2.0).abs() <= 0.15, || {
        format!("exponents {median_exponent:.3} and {solution_exponent:.3} outside 1 and 2 +/- 0.15")
    }))
}

fn report(p: &ReportParams, seed: u64) -> Result<Outcome, CliError> {
    let cfg = problem(&p.problem, seed)?;
    let rep = count_model_intersections(&cfg)?;
    let failure = certify_count(&cfg, &rep, true)?;
    let fiber = fiber_contribution_report();
    let boundary = format!("boundary contribution = {}", rep.boundary_ratio);
    let fiber_line = format!("fiber contribution = {}", fiber.ratio);
    let mut out = Outcome::new(
        json!({
            "boundary_ratio": rep.boundary_ratio,
            "total_signed_count": rep.total_signed_count,
            "fiber": fiber,
        }),
        format!("{boundary}; fiber limit {:.6}; {fiber_line}", fiber.fiber_limit),
    );
    out.headline = vec![boundary, fiber_line];
    Ok(out.check(failure.is_none(), || failure.unwrap_or_default()))
}
