//! Experiment specifications and the per-command parameter schemas.
//!
//! Each command has one parameter struct. The same struct backs the
//! command-line flags and the `params` object of a suite entry, so defaults
//! and validation are shared. All lengths are dimensionless patch units.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Reduce,
    Count,
    Degenerate,
    Continuation,
    Sensitivity,
    Toy,
    Ip,
    Fiber,
    Concentration,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Reduce => "reduce",
            CommandKind::Count => "count",
            CommandKind::Degenerate => "degenerate",
            CommandKind::Continuation => "continuation",
            CommandKind::Sensitivity => "sensitivity",
            CommandKind::Toy => "toy",
            CommandKind::Ip => "ip",
            CommandKind::Fiber => "fiber",
            CommandKind::Concentration => "concentration",
            CommandKind::Report => "report",
        }
    }
}

/// One experiment as listed in a suite file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: CommandKind,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

/// Fully validated parameters of one command.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Reduce(ReduceParams),
    Count(CountParams),
    Degenerate(DegenerateParams),
    Continuation(ContinuationParams),
    Sensitivity(SensitivityParams),
    Toy(ToyParams),
    Ip(IpParams),
    Fiber(FiberParams),
    Concentration(ConcentrationParams),
    Report(ReportParams),
}

fn parse<T: for<'de> Deserialize<'de>>(map: &serde_json::Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| CliError::Validation(e.to_string()))
}

impl Params {
    pub fn from_map(kind: CommandKind, map: &serde_json::Map<String, Value>) -> Result<Self, CliError> {
        let p = match kind {
            CommandKind::Reduce => Params::Reduce(parse(map)?),
            CommandKind::Count => Params::Count(parse(map)?),
            CommandKind::Degenerate => Params::Degenerate(parse(map)?),
            CommandKind::Continuation => Params::Continuation(parse(map)?),
            CommandKind::Sensitivity => Params::Sensitivity(parse(map)?),
            CommandKind::Toy => Params::Toy(parse(map)?),
            CommandKind::Ip => Params::Ip(parse(map)?),
            CommandKind::Fiber => Params::Fiber(parse(map)?),
            CommandKind::Concentration => Params::Concentration(parse(map)?),
            CommandKind::Report => Params::Report(parse(map)?),
        };
        let known = p.to_value();
        if let Some(key) = map.keys().find(|k| known.get(k.as_str()).is_none()) {
            return Err(CliError::Validation(format!("unknown parameter {key:?} for {}", kind.name())));
        }
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> CommandKind {
        match self {
            Params::Reduce(_) => CommandKind::Reduce,
            Params::Count(_) => CommandKind::Count,
            Params::Degenerate(_) => CommandKind::Degenerate,
            Params::Continuation(_) => CommandKind::Continuation,
            Params::Sensitivity(_) => CommandKind::Sensitivity,
            Params::Toy(_) => CommandKind::Toy,
            Params::Ip(_) => CommandKind::Ip,
            Params::Fiber(_) => CommandKind::Fiber,
            Params::Concentration(_) => CommandKind::Concentration,
            Params::Report(_) => CommandKind::Report,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Validation(msg.to_string()));
        match self {
            Params::Reduce(p) => {
                if p.matrix.as_ref().is_some_and(|m| m.len() != 9) {
                    return bad("matrix needs 9 entries in row-major order");
                }
                if p.matrix.is_none() && p.random == 0 {
                    return bad("give a matrix or a positive number of random matrices");
                }
            }
            Params::Count(p) => p.problem.validate()?,
            Params::Degenerate(p) => {
                if !(p.l > 0.0) || p.runs == 0 || p.alphas.is_empty() {
                    return bad("degenerate needs L > 0, runs > 0 and at least one alpha");
                }
            }
            Params::Continuation(p) => {
                p.problem.validate()?;
                if p.t_steps == 0 {
                    return bad("t_steps must be positive");
                }
            }
            Params::Sensitivity(p) => {
                if p.eps.len() < 2 || p.l_values.len() < 2 {
                    return bad("sensitivity needs at least two eps and two L values");
                }
                if p.eps.iter().chain(&p.l_values).any(|v| !(*v > 0.0)) {
                    return bad("eps and L values must be positive");
                }
            }
            Params::Toy(p) => {
                if !(p.x_max > 0.0 && p.lambda_max > 0.0) {
                    return bad("truncation must be positive");
                }
            }
            Params::Ip(p) => {
                if p.method != IpMethod::Reduced && p.samples < asd_core::integrate::mc::MIN_SAMPLES {
                    return bad("Monte Carlo needs at least 100000 samples");
                }
            }
            Params::Fiber(p) => {
                if p.l_values.is_empty() || p.l_values.iter().any(|v| !(*v > 0.0)) {
                    return bad("fiber needs positive L values");
                }
            }
            Params::Concentration(p) => {
                if p.l_values.len() < 2 || p.l_values.iter().any(|v| !(*v > 0.0)) || p.bins == 0 {
                    return bad("concentration needs two or more positive L values and bins > 0");
                }
            }
            Params::Report(p) => p.problem.validate()?,
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("parameters serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    /// Random matrix with separated singular values plus a closed gradient term.
    Generic,
    /// Constant matrix `diag` with no gradient.
    Constant,
    /// Random matrix with `sigma_1 = sigma_2` plus a closed gradient term.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default)]
pub struct ProblemParams {
    /// Half the separation of the marked points.
    #[arg(long = "L", default_value_t = 1e-2)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    #[serde(rename = "K")]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = BackgroundKind::Generic)]
    pub background: BackgroundKind,
    /// Frobenius norm of the gradient term of the background.
    #[arg(long, default_value_t = 0.3)]
    pub gradient: f64,
    /// Minimum singular-value gap relative to sigma_1 for generic backgrounds.
    #[arg(long, default_value_t = 0.1)]
    pub min_gap: f64,
    /// Diagonal of a constant background.
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 2.0, 1.0])]
    pub diag: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub patch_radius: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            l: 1e-2,
            k: 1.0,
            alpha: 1.0,
            background: BackgroundKind::Generic,
            gradient: 0.3,
            min_gap: 0.1,
            diag: vec![3.0, 2.0, 1.0],
            patch_radius: 1.0,
        }
    }
}

impl ProblemParams {
    fn validate(&self) -> Result<(), CliError> {
        if self.diag.len() != 3 {
            return Err(CliError::Validation("diag needs 3 entries".into()));
        }
        if !(self.l > 0.0 && self.k > 0.0 && self.alpha > 0.0 && self.patch_radius > 0.0) {
            return Err(CliError::Validation("L, K, alpha and patch_radius must be positive".into()));
        }
        if !(self.gradient >= 0.0 && self.min_gap >= 0.0) {
            return Err(CliError::Validation("gradient and min_gap must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct ReduceParams {
    /// Nine entries in row-major order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub matrix: Option<Vec<f64>>,
    /// Number of random matrices with entries uniform in [-1, 1].
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    /// Minimum absolute gap between consecutive singular values of random matrices.
    #[arg(long, default_value_t = 1e-3)]
    pub min_gap: f64,
}

impl Default for ReduceParams {
    fn default() -> Self {
        ReduceParams { matrix: None, random: 0, min_gap: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default)]
pub struct CountParams {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemParams,
    /// Strength of the synthetic holonomy; 0 runs the plain model.
    #[arg(long, default_value_t = 0.0)]
    pub holonomy: f64,
}

impl Default for CountParams {
    fn default() -> Self {
        CountParams { problem: ProblemParams::default(), holonomy: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct DegenerateParams {
    #[arg(long = "L", default_value_t = 1e-6)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    #[serde(rename = "K")]
    pub k: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 0.5])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub gradient: f64,
    /// Number of random degenerate backgrounds.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
}

impl Default for DegenerateParams {
    fn default() -> Self {
        DegenerateParams { l: 1e-6, k: 1.0, alphas: vec![1.5, 0.5], gradient: 0.3, runs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default)]
pub struct ContinuationParams {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemParams,
    /// Number of recorded slices between t = 1 and t = 0.
    #[arg(long, default_value_t = 10)]
    pub t_steps: usize,
}

impl Default for ContinuationParams {
    fn default() -> Self {
        ContinuationParams { problem: ProblemParams::default(), t_steps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityParams {
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 3e-4, 1e-4])]
    pub eps: Vec<f64>,
    #[arg(long = "L", value_delimiter = ',', default_values_t = [1e-2, 3e-3, 1e-3])]
    #[serde(rename = "L")]
    pub l_values: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub gradient: f64,
}

impl Default for SensitivityParams {
    fn default() -> Self {
        SensitivityParams { eps: vec![1e-3, 3e-4, 1e-4], l_values: vec![1e-2, 3e-3, 1e-3], gradient: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct ToyParams {
    #[arg(long = "L", default_value_t = 1.0, allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 1e8)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1e8)]
    pub lambda_max: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams { l: 1.0, x_max: 1e8, lambda_max: 1e8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IpMethod {
    Reduced,
    Mc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct IpParams {
    #[arg(long, value_enum, default_value_t = IpMethod::Reduced)]
    pub method: IpMethod,
    #[arg(long, default_value_t = 10_000_000)]
    pub samples: u64,
}

impl Default for IpParams {
    fn default() -> Self {
        IpParams { method: IpMethod::Reduced, samples: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct FiberParams {
    #[arg(long = "L", value_delimiter = ',', default_values_t = [0.1, 0.03, 0.01])]
    #[serde(rename = "L")]
    pub l_values: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_min_exp: f64,
    #[arg(long, default_value_t = -0.8, allow_hyphen_values = true)]
    pub lambda_max_exp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ball_factor: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        FiberParams { l_values: vec![0.1, 0.03, 0.01], lambda_min_exp: 1.0, lambda_max_exp: -0.8, ball_factor: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct ConcentrationParams {
    #[arg(long = "L", value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
    #[serde(rename = "L")]
    pub l_values: Vec<f64>,
    #[arg(long, default_value_t = 24)]
    pub bins: usize,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        ConcentrationParams { l_values: vec![1e-1, 1e-2, 1e-3], bins: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(default)]
pub struct ReportParams {
    /// Problem used for the boundary count.
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemParams,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams { problem: ProblemParams::default() }
    }
}
