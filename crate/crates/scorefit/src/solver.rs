//! The three estimation procedures: plain MOS, the damped Newton-Raphson
//! solver and the alternating projection solver.
//!
//! Both iterative solvers maximize the same likelihood and converge to the
//! same estimates; they differ in update rule and speed. The alternating
//! projection solver can be read as a bias-subtracted consistency-weighted
//! MOS: each subject's votes are weighted by `1 / upsilon[i]^2`, so erratic
//! subjects contribute little without being discarded outright.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{ci_alt, ci_mle, ci_mos, nbic, Interval};
use crate::error::{Error, Result};
use crate::model::{
    apply_zero_mean_bias, log_likelihood, mos_log_likelihood, ModelParams, MosParams,
};
use crate::tensor::ScoreTensor;

/// Default inconsistency floor applied by solvers, in score units.
pub const DEFAULT_UPSILON_FLOOR: f64 = 1e-8;

/// Guard band for the Newton inconsistency update: a subject whose update
/// denominator falls this close to zero keeps its previous value for the
/// iteration.
const UPSILON_DENOMINATOR_GUARD: f64 = 1e-12;

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Plain per-stimulus mean opinion score.
    Mos,
    /// Outlier rejection followed by plain MOS.
    Bt500,
    /// Bias removal, then rejection, then plain MOS.
    P913,
    /// Damped Newton-Raphson on the subject model.
    Nr,
    /// Alternating projection on the subject model.
    Ap,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mos,
        Method::Bt500,
        Method::P913,
        Method::Nr,
        Method::Ap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mos => "mos",
            Method::Bt500 => "bt500",
            Method::P913 => "p913",
            Method::Nr => "nr",
            Method::Ap => "ap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for Method {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mos" => Ok(Method::Mos),
            "bt500" => Ok(Method::Bt500),
            "p913" => Ok(Method::P913),
            "nr" => Ok(Method::Nr),
            "ap" => Ok(Method::Ap),
            other => Err(Error::InvalidConfig(format!(
                "unknown method `{other}` (expected mos|bt500|p913|nr|ap)"
            ))),
        }
    }
}

/// Stopping and damping parameters for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Refresh rate in (0, 1]; only the Newton-Raphson solver uses it.
    pub alpha: f64,
    /// Stop once the Euclidean norm of the per-iteration quality step falls
    /// below this threshold.
    pub psi_threshold: f64,
    /// Safety cap on iterations.
    pub max_iterations: usize,
    /// Lower bound applied to every inconsistency estimate.
    pub upsilon_floor: f64,
}

impl SolverConfig {
    /// Defaults for the Newton-Raphson solver.
    pub fn nr() -> Self {
        Self {
            alpha: 0.1,
            psi_threshold: 1e-9,
            max_iterations: 10_000,
            upsilon_floor: DEFAULT_UPSILON_FLOOR,
        }
    }

    /// Defaults for the alternating projection solver (alpha is unused).
    pub fn ap() -> Self {
        Self {
            alpha: 1.0,
            psi_threshold: 1e-8,
            max_iterations: 10_000,
            upsilon_floor: DEFAULT_UPSILON_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.psi_threshold.is_nan() || self.psi_threshold <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "psi threshold must be positive, got {}",
                self.psi_threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if self.upsilon_floor.is_nan() || self.upsilon_floor <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "upsilon floor must be positive, got {}",
                self.upsilon_floor
            )));
        }
        Ok(())
    }
}

/// Parameters recovered by a fit, depending on the model family.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedParams {
    /// Subject model: quality, bias, inconsistency.
    Subject(ModelParams),
    /// Plain-MOS model: quality and per-stimulus ambiguity.
    Stimulus(MosParams),
    /// Plain-MOS model after per-subject bias removal.
    StimulusWithBias { mos: MosParams, bias: Vec<f64> },
}

impl FittedParams {
    pub fn psi(&self) -> &[f64] {
        match self {
            FittedParams::Subject(p) => &p.psi,
            FittedParams::Stimulus(p) => &p.psi,
            FittedParams::StimulusWithBias { mos, .. } => &mos.psi,
        }
    }

    pub fn subject_model(&self) -> Option<&ModelParams> {
        match self {
            FittedParams::Subject(p) => Some(p),
            _ => None,
        }
    }
}

/// Everything a fit produces: parameters, likelihood, NBIC, confidence
/// intervals, iteration bookkeeping and any rejected subjects.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub method: Method,
    pub params: FittedParams,
    pub log_likelihood: f64,
    pub nbic: f64,
    pub num_observations: usize,
    pub num_parameters: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Euclidean norm of the quality step at each iteration.
    pub psi_step_trace: Vec<f64>,
    pub psi_ci: Option<Vec<Interval>>,
    /// Alternative per-stimulus quality intervals (subject model only).
    pub psi_ci_alt: Option<Vec<Interval>>,
    pub delta_ci: Option<Vec<Interval>>,
    pub upsilon_ci: Option<Vec<Interval>>,
    /// Indices into the fitted tensor's original subject list.
    pub rejected_subjects: BTreeSet<usize>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn psi(&self) -> &[f64] {
        self.params.psi()
    }
}

/// Per-stimulus mean and population standard deviation over present votes.
pub fn mos_params(scores: &ScoreTensor) -> Result<MosParams> {
    let j_count = scores.stimulus_count();
    let mut count = vec![0usize; j_count];
    let mut sum = vec![0.0; j_count];
    for ((_, j, _), u) in scores.votes() {
        count[j] += 1;
        sum[j] += u;
    }
    if let Some(j) = count.iter().position(|&c| c == 0) {
        return Err(Error::VotelessStimulus { index: j });
    }
    let psi: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| s / c as f64)
        .collect();
    let mut var = vec![0.0; j_count];
    for ((_, j, _), u) in scores.votes() {
        let eps = u - psi[j];
        var[j] += eps * eps;
    }
    let upsilon = var
        .iter()
        .zip(&count)
        .map(|(&v, &c)| (v / c as f64).sqrt())
        .collect();
    MosParams::new(psi, upsilon)
}

/// Mean residual of each subject against a per-stimulus reference.
pub(crate) fn subject_bias(scores: &ScoreTensor, psi: &[f64]) -> Vec<f64> {
    let i_count = scores.subject_count();
    let mut count = vec![0usize; i_count];
    let mut sum = vec![0.0; i_count];
    for ((i, j, _), u) in scores.votes() {
        count[i] += 1;
        sum[i] += u - psi[j];
    }
    sum.iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Consistency-weighted quality projection: for every stimulus, the mean of
/// bias-corrected votes weighted by `1 / upsilon[i]^2`.
pub(crate) fn psi_projection(scores: &ScoreTensor, delta: &[f64], upsilon: &[f64]) -> Vec<f64> {
    let j_count = scores.stimulus_count();
    let mut num = vec![0.0; j_count];
    let mut den = vec![0.0; j_count];
    for ((i, j, _), u) in scores.votes() {
        let w = 1.0 / (upsilon[i] * upsilon[i]);
        num[j] += w * (u - delta[i]);
        den[j] += w;
    }
    num.iter().zip(&den).map(|(&n, &d)| n / d).collect()
}

/// Per-subject standard deviation of residuals around the subject's own
/// mean residual, divide-by-count convention.
pub(crate) fn subject_residual_std(scores: &ScoreTensor, psi: &[f64], delta: &[f64]) -> Vec<f64> {
    let i_count = scores.subject_count();
    let mut count = vec![0usize; i_count];
    let mut sum = vec![0.0; i_count];
    for ((i, j, _), u) in scores.votes() {
        count[i] += 1;
        sum[i] += u - psi[j] - delta[i];
    }
    let mut var = vec![0.0; i_count];
    for ((i, j, _), u) in scores.votes() {
        let mean = sum[i] / count[i] as f64;
        let centered = (u - psi[j] - delta[i]) - mean;
        var[i] += centered * centered;
    }
    var.iter()
        .zip(&count)
        .map(|(&v, &c)| (v / c as f64).sqrt())
        .collect()
}

fn euclidean_step(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn single_vote_warnings(scores: &ScoreTensor, counts: &[usize], warnings: &mut Vec<String>) {
    let singles: Vec<&str> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 1)
        .map(|(i, _)| scores.subject_ids()[i].as_str())
        .collect();
    if !singles.is_empty() {
        warnings.push(format!(
            "subjects with a single vote have their inconsistency pinned at the floor: {}",
            singles.join(", ")
        ));
    }
}

/// Fit the plain-MOS model. Closed form, no iteration.
pub fn solve_mos(scores: &ScoreTensor) -> Result<FitReport> {
    let params = mos_params(scores)?;
    let ll = mos_log_likelihood(scores, &params)?;
    let num_parameters = 2 * scores.stimulus_count();
    let num_observations = scores.vote_count();
    let psi_ci = ci_mos(scores, &params)?;
    Ok(FitReport {
        method: Method::Mos,
        params: FittedParams::Stimulus(params),
        log_likelihood: ll,
        nbic: nbic(ll, num_parameters, num_observations)?,
        num_observations,
        num_parameters,
        iterations: 0,
        converged: true,
        psi_step_trace: Vec::new(),
        psi_ci: Some(psi_ci),
        psi_ci_alt: None,
        delta_ci: None,
        upsilon_ci: None,
        rejected_subjects: BTreeSet::new(),
        warnings: Vec::new(),
    })
}

/// Starting point for the Newton-Raphson solver: zero biases, per-stimulus
/// means for quality, per-subject residual spread for inconsistency
/// (floored at [`DEFAULT_UPSILON_FLOOR`]).
pub fn nr_initialize(scores: &ScoreTensor) -> Result<ModelParams> {
    let mos = mos_params(scores)?;
    let delta = vec![0.0; scores.subject_count()];
    let rsd = subject_residual_std(scores, &mos.psi, &delta);
    let upsilon = rsd.iter().map(|&u| u.max(DEFAULT_UPSILON_FLOOR)).collect();
    ModelParams::new(mos.psi, delta, upsilon)
}

fn finish_subject_fit(
    scores: &ScoreTensor,
    method: Method,
    params: ModelParams,
    iterations: usize,
    converged: bool,
    psi_step_trace: Vec<f64>,
    warnings: Vec<String>,
) -> Result<FitReport> {
    let params = apply_zero_mean_bias(&params);
    let ll = log_likelihood(scores, &params)?;
    let num_observations = scores.vote_count();
    // One quality per stimulus plus bias and inconsistency per subject.
    let num_parameters = scores.stimulus_count() + 2 * scores.subject_count();
    let (psi_ci, delta_ci, upsilon_ci) = ci_mle(scores, &params)?;
    let psi_ci_alt = ci_alt(scores, &params)?;
    Ok(FitReport {
        method,
        params: FittedParams::Subject(params),
        log_likelihood: ll,
        nbic: nbic(ll, num_parameters, num_observations)?,
        num_observations,
        num_parameters,
        iterations,
        converged,
        psi_step_trace,
        psi_ci: Some(psi_ci),
        psi_ci_alt: Some(psi_ci_alt),
        delta_ci: Some(delta_ci),
        upsilon_ci: Some(upsilon_ci),
        rejected_subjects: BTreeSet::new(),
        warnings,
    })
}

/// Fit the subject model with the damped Newton-Raphson solver.
///
/// Each iteration refreshes bias, inconsistency and quality in that order,
/// each update seeing the freshest values of the others, damped by
/// `config.alpha`. Stops when both the quality and bias step norms fall
/// below `config.psi_threshold`.
pub fn solve_nr(scores: &ScoreTensor, config: &SolverConfig) -> Result<FitReport> {
    config.validate()?;
    let mut params = nr_initialize(scores)?;
    for u in &mut params.upsilon {
        *u = u.max(config.upsilon_floor);
    }
    let counts = scores.subject_vote_counts();
    let alpha = config.alpha;
    let mut warnings = Vec::new();
    single_vote_warnings(scores, &counts, &mut warnings);
    let mut skipped_upsilon: BTreeSet<usize> = BTreeSet::new();

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let psi_prev = params.psi.clone();
        let delta_prev = params.delta.clone();

        // Bias: damped step toward the mean residual against current quality.
        let delta_new = subject_bias(scores, &params.psi);
        for (d, dn) in params.delta.iter_mut().zip(&delta_new) {
            *d = (1.0 - alpha) * *d + alpha * dn;
        }

        // Inconsistency: damped Newton step. Subjects with one vote stay at
        // the floor; near-zero denominators keep their previous value.
        let mut sq = vec![0.0; params.upsilon.len()];
        for ((i, j, _), u) in scores.votes() {
            let eps = u - params.psi[j] - params.delta[i];
            sq[i] += eps * eps;
        }
        for i in 0..params.upsilon.len() {
            if counts[i] <= 1 {
                params.upsilon[i] = config.upsilon_floor;
                continue;
            }
            let ups = params.upsilon[i];
            let n = counts[i] as f64;
            let denominator = n * ups * ups - 3.0 * sq[i];
            if denominator.abs() < UPSILON_DENOMINATOR_GUARD {
                skipped_upsilon.insert(i);
                continue;
            }
            let numerator = 2.0 * n * ups * ups - 4.0 * sq[i];
            let ups_new = ups * numerator / denominator;
            params.upsilon[i] = ((1.0 - alpha) * ups + alpha * ups_new).max(config.upsilon_floor);
        }

        // Quality: damped consistency-weighted projection.
        let psi_new = psi_projection(scores, &params.delta, &params.upsilon);
        for (p, pn) in params.psi.iter_mut().zip(&psi_new) {
            *p = (1.0 - alpha) * *p + alpha * pn;
        }

        let psi_step = euclidean_step(&params.psi, &psi_prev);
        trace.push(psi_step);
        let delta_step = euclidean_step(&params.delta, &delta_prev);
        if psi_step < config.psi_threshold && delta_step < config.psi_threshold {
            converged = true;
            break;
        }
    }
    if !skipped_upsilon.is_empty() {
        let ids: Vec<&str> = skipped_upsilon
            .iter()
            .map(|&i| scores.subject_ids()[i].as_str())
            .collect();
        warnings.push(format!(
            "inconsistency update skipped on near-zero denominator for: {}",
            ids.join(", ")
        ));
    }
    finish_subject_fit(
        scores,
        Method::Nr,
        params,
        iterations,
        converged,
        trace,
        warnings,
    )
}

/// Fit the subject model with the alternating projection solver.
///
/// Starts from the per-stimulus means and per-subject mean residuals, then
/// alternates: residual spread gives inconsistency, a consistency-weighted
/// average along subjects gives quality, a plain average along stimuli
/// gives bias. Stops when the quality step norm falls below the threshold.
pub fn solve_ap(scores: &ScoreTensor, config: &SolverConfig) -> Result<FitReport> {
    config.validate()?;
    let mos = mos_params(scores)?;
    let counts = scores.subject_vote_counts();
    let mut psi = mos.psi.clone();
    let mut delta = subject_bias(scores, &psi);
    let mut upsilon = vec![config.upsilon_floor; scores.subject_count()];
    let mut warnings = Vec::new();
    single_vote_warnings(scores, &counts, &mut warnings);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let psi_prev = psi.clone();

        let spread = subject_residual_std(scores, &psi, &delta);
        for i in 0..upsilon.len() {
            upsilon[i] = if counts[i] <= 1 {
                config.upsilon_floor
            } else {
                spread[i].max(config.upsilon_floor)
            };
        }

        psi = psi_projection(scores, &delta, &upsilon);
        delta = subject_bias(scores, &psi);

        let psi_step = euclidean_step(&psi, &psi_prev);
        trace.push(psi_step);
        if psi_step < config.psi_threshold {
            converged = true;
            break;
        }
    }
    let params = ModelParams::new(psi, delta, upsilon)?;
    finish_subject_fit(
        scores,
        Method::Ap,
        params,
        iterations,
        converged,
        trace,
        warnings,
    )
}

/// Run any of the five methods with its default configuration, or an
/// explicit one for the iterative solvers.
pub fn fit(
    scores: &ScoreTensor,
    method: Method,
    config: Option<&SolverConfig>,
) -> Result<FitReport> {
    match method {
        Method::Mos => solve_mos(scores),
        Method::Bt500 => crate::legacy::bt500_pipeline(scores),
        Method::P913 => crate::legacy::p913_pipeline(scores),
        Method::Nr => {
            let default = SolverConfig::nr();
            solve_nr(scores, config.unwrap_or(&default))
        }
        Method::Ap => {
            let default = SolverConfig::ap();
            solve_ap(scores, config.unwrap_or(&default))
        }
    }
}
