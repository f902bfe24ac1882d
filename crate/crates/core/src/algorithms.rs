//! Iteration engines: conventional IWF, relaxed IWF and average IWF.
//!
//! All three apply the synchronous water-filling operator to the current
//! profile, with an error matrix drawn once per iteration and shared by
//! every user's response.
//!
//! * IWF: `p' = Φ̂(p)`.
//! * R-IWF: `p' = (1 - λ) p + λ Φ̂(p)` with a fixed `λ ∈ (0, 1]`.
//! * A-IWF: `p¹ = Φ̂(p⁰)`, then `p' = (1 - α_t) p + α_t Φ̂(p)` with
//!   diminishing steps (`Σ α_t = ∞`, `Σ α_t² < ∞`). With `α_t = 1/(t+1)`
//!   the iterate is the running mean of all operator outputs so far.

use serde::{Deserialize, Serialize};

use crate::analysis::{self, ContractionCertificate, Verdict};
use crate::network::{NetworkModel, PowerProfile};
use crate::noise::{ErrorSample, NoiseModel};
use crate::waterfill::stacked_response;
use crate::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_WINDOW: usize = 20;
/// Trailing iterates always kept when a trace is decimated.
pub const KEEP_LAST: usize = 50;

/// Stepsize sequence `α_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSizeSchedule {
    /// `α_t = 1 / (t + 1)`.
    Harmonic,
    /// `α_t = min(1, scale / (t + offset)^gamma)`.
    PowerDecay { scale: f64, offset: f64, gamma: f64 },
    /// Fixed `λ`; only meaningful for R-IWF.
    Constant { lambda: f64 },
}

impl StepSizeSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        match *self {
            StepSizeSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
            StepSizeSchedule::PowerDecay {
                scale,
                offset,
                gamma,
            } => (scale / (t as f64 + offset).powf(gamma)).min(1.0),
            StepSizeSchedule::Constant { lambda } => lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizeSchedule::Harmonic => Ok(()),
            StepSizeSchedule::PowerDecay {
                scale,
                offset,
                gamma,
            } => {
                if !(scale > 0.0 && scale.is_finite() && offset > 0.0 && offset.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power_decay needs positive scale and offset, got {scale}, {offset}"
                    )));
                }
                if !(gamma > 0.5 && gamma <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power_decay exponent must lie in (0.5, 1], got {gamma}"
                    )));
                }
                Ok(())
            }
            StepSizeSchedule::Constant { lambda } => check_lambda(lambda),
        }
    }

    /// Whether the schedule diverges in sum and converges in squared sum.
    pub fn is_diminishing(&self) -> bool {
        !matches!(self, StepSizeSchedule::Constant { .. }) && self.validate().is_ok()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Algorithm choice plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    Iwf,
    Riwf { lambda: f64 },
    Aiwf { schedule: StepSizeSchedule },
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Iwf => "iwf",
            Algorithm::Riwf { .. } => "riwf",
            Algorithm::Aiwf { .. } => "aiwf",
        }
    }

    /// Tag plus parameters, usable in file names.
    pub fn label(&self) -> String {
        match self {
            Algorithm::Iwf => "iwf".into(),
            Algorithm::Riwf { lambda } => format!("riwf-{lambda}"),
            Algorithm::Aiwf { schedule } => match schedule {
                StepSizeSchedule::Harmonic => "aiwf".into(),
                StepSizeSchedule::PowerDecay {
                    scale,
                    offset,
                    gamma,
                } => format!("aiwf-power-{scale}-{offset}-{gamma}"),
                StepSizeSchedule::Constant { lambda } => format!("aiwf-const-{lambda}"),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::Iwf => Ok(()),
            Algorithm::Riwf { lambda } => check_lambda(*lambda),
            Algorithm::Aiwf { schedule } => {
                if let StepSizeSchedule::Constant { .. } = schedule {
                    return Err(Error::InvalidParameter(
                        "A-IWF needs a diminishing schedule, not a constant one".into(),
                    ));
                }
                schedule.validate()
            }
        }
    }
}

/// Picard step `p' = Φ̂(p)`.
pub fn iwf_step(model: &NetworkModel, profile: &PowerProfile, error: &ErrorSample) -> Result<PowerProfile> {
    Ok(stacked_response(model, profile, Some(&error.epsilon))?.profile)
}

/// Relaxed step `p' = (1 - λ) p + λ Φ̂(p)`.
pub fn riwf_step(
    model: &NetworkModel,
    profile: &PowerProfile,
    error: &ErrorSample,
    lambda: f64,
) -> Result<PowerProfile> {
    check_lambda(lambda)?;
    let image = iwf_step(model, profile, error)?;
    Ok(relax(profile, image, lambda))
}

/// Mann step with `α_t` from `schedule`; `t = 0` returns `Φ̂(p⁰)` exactly.
pub fn aiwf_step(
    model: &NetworkModel,
    profile: &PowerProfile,
    error: &ErrorSample,
    t: usize,
    schedule: &StepSizeSchedule,
) -> Result<PowerProfile> {
    Algorithm::Aiwf {
        schedule: schedule.clone(),
    }
    .validate()?;
    let image = iwf_step(model, profile, error)?;
    if t == 0 {
        return Ok(image);
    }
    Ok(relax(profile, image, schedule.alpha(t)))
}

fn relax(current: &PowerProfile, image: PowerProfile, weight: f64) -> PowerProfile {
    if weight == 1.0 {
        return image;
    }
    let mut out = current.clone();
    out.blend_toward(&image, weight);
    out
}

/// Weight applied to the operator output at iteration `t`.
fn step_weight(algorithm: &Algorithm, t: usize) -> f64 {
    match algorithm {
        Algorithm::Iwf => 1.0,
        Algorithm::Riwf { lambda } => *lambda,
        Algorithm::Aiwf { schedule } => {
            if t == 0 {
                1.0
            } else {
                schedule.alpha(t)
            }
        }
    }
}

/// Inputs of [`run`].
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub noise: NoiseModel,
    /// `None` starts from the uniform allocation.
    pub start: Option<PowerProfile>,
    pub max_iters: usize,
    pub reference: Option<PowerProfile>,
    /// Keep every `decimation`-th iterate (plus the final [`KEEP_LAST`]).
    pub decimation: usize,
    pub tol: f64,
    pub window: usize,
    pub record_errors: bool,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            noise: NoiseModel::none(),
            start: None,
            max_iters: DEFAULT_MAX_ITERS,
            reference: None,
            decimation: 1,
            tol: DEFAULT_TOL,
            window: DEFAULT_WINDOW,
            record_errors: false,
        }
    }

    pub fn noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn start(mut self, start: PowerProfile) -> Self {
        self.start = Some(start);
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn reference(mut self, reference: PowerProfile) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn decimation(mut self, every: usize) -> Self {
        self.decimation = every;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn record_errors(mut self, yes: bool) -> Self {
        self.record_errors = yes;
        self
    }
}

/// Time-indexed record of one run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Stored iterates with their iteration index, possibly decimated.
    pub iterates: Vec<(usize, PowerProfile)>,
    /// Water levels of the operator evaluated at each stored iterate:
    /// the noisy operator for `t < T`, the exact one at the final iterate.
    pub water_levels: Vec<Vec<f64>>,
    /// `residuals[t]` = weighted block-max distance between `p^t` and `p^{t+1}`.
    pub residuals: Vec<f64>,
    /// Distance of every iterate `p^0 ..= p^T` to the reference, if one was given.
    pub distance_to_reference: Vec<f64>,
    pub errors_applied: Option<Vec<ErrorSample>>,
    /// `||Φ(p^T) - p^T||` with the exact operator.
    pub fixed_point_residual: f64,
    /// Weights used for every distance in this trace.
    pub norm_weight: Vec<f64>,
    pub certificate: ContractionCertificate,
    pub verdict: Verdict,
    pub converged: bool,
    pub convergence_iteration: Option<usize>,
}

impl RunTrace {
    pub fn final_profile(&self) -> &PowerProfile {
        &self.iterates.last().expect("trace holds at least the start").1
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Mean successive-step residual over the last `len` steps.
    pub fn tail_residual_mean(&self, len: usize) -> f64 {
        let len = len.clamp(1, self.residuals.len());
        let tail = &self.residuals[self.residuals.len() - len..];
        tail.iter().sum::<f64>() / len as f64
    }
}

/// Runs one algorithm from `spec.start` for `spec.max_iters` iterations.
pub fn run(model: &NetworkModel, spec: &RunSpec) -> Result<RunTrace> {
    if spec.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if spec.decimation == 0 {
        return Err(Error::InvalidParameter("decimation must be at least 1".into()));
    }
    spec.algorithm.validate()?;
    spec.noise.kind.validate()?;
    let start = spec.start.clone().unwrap_or_else(|| model.uniform_profile());
    model.check_feasible(&start)?;
    if let Some(r) = &spec.reference {
        if r.num_users() != model.num_users() || r.num_channels() != model.num_channels() {
            return Err(Error::Dimension("reference profile shape differs from network".into()));
        }
    }

    let certificate = ContractionCertificate::compute(model)?;
    let weight = certificate.norm_weight(model.num_users());
    let distance = |p: &PowerProfile, q: &PowerProfile| analysis::weighted_block_distance(p, q, &weight);

    let total = spec.max_iters;
    let keep = |t: usize| t % spec.decimation == 0 || t + KEEP_LAST > total;

    let mut noise = spec.noise.process();
    let mut current = start;
    let mut iterates = Vec::new();
    let mut water_levels = Vec::new();
    let mut residuals = Vec::with_capacity(total);
    let mut distances = Vec::new();
    let mut errors = spec.record_errors.then(Vec::new);

    for t in 0..total {
        if let Some(r) = &spec.reference {
            distances.push(distance(&current, r)?);
        }
        let error = noise.sample(model, &current, t)?;
        let response = stacked_response(model, &current, Some(&error.epsilon))?;
        let weight_t = step_weight(&spec.algorithm, t);
        let next = relax(&current, response.profile, weight_t);
        residuals.push(distance(&next, &current)?);
        if keep(t) {
            iterates.push((t, current));
            water_levels.push(response.water_levels);
        }
        if let Some(errs) = errors.as_mut() {
            errs.push(error);
        }
        current = next;
    }

    if let Some(r) = &spec.reference {
        distances.push(distance(&current, r)?);
    }
    let exact = stacked_response(model, &current, None)?;
    let fixed_point_residual = distance(&exact.profile, &current)?;
    iterates.push((total, current));
    water_levels.push(exact.water_levels);

    let verdict = analysis::classify_residuals(&residuals, spec.window.min(residuals.len()).max(2), spec.tol)
        .unwrap_or(Verdict::Undecided);
    let convergence_iteration = match verdict {
        Verdict::ConvergedAt(t) => Some(t),
        _ => None,
    };

    Ok(RunTrace {
        algorithm: spec.algorithm.clone(),
        seed: spec.noise.seed,
        iterates,
        water_levels,
        residuals,
        distance_to_reference: distances,
        errors_applied: errors,
        fixed_point_residual,
        norm_weight: weight,
        certificate,
        verdict,
        converged: verdict.is_converged(),
        convergence_iteration,
    })
}
