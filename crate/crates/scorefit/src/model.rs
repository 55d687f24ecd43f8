//! Subject-behavior model and its likelihood.
//!
//! An opinion score is modeled as the stimulus' true quality plus a
//! per-subject additive bias plus zero-mean Gaussian noise whose standard
//! deviation (the subject's inconsistency) is also per subject:
//!
//! ```text
//! u[i][j][r] = psi[j] + delta[i] + upsilon[i] * x,   x ~ N(0, 1)
//! ```
//!
//! The log-likelihood and all derivatives below drop additive constants, so
//! absolute values are only comparable between fits that use the same
//! convention (everything in this crate does).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{Cell, ScoreTensor};

/// Per-stimulus true quality, per-subject bias and inconsistency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// True quality per stimulus, in score units.
    pub psi: Vec<f64>,
    /// Additive bias per subject, in score units.
    pub delta: Vec<f64>,
    /// Inconsistency (noise standard deviation) per subject, non-negative.
    pub upsilon: Vec<f64>,
}

impl ModelParams {
    pub fn new(psi: Vec<f64>, delta: Vec<f64>, upsilon: Vec<f64>) -> Result<Self> {
        if delta.len() != upsilon.len() {
            return Err(Error::DimensionMismatch {
                context: "delta/upsilon lengths",
                expected: delta.len(),
                actual: upsilon.len(),
            });
        }
        if let Some(i) = upsilon.iter().position(|&u| u < 0.0 || !u.is_finite()) {
            return Err(Error::DegenerateVariance {
                subject: i,
                upsilon: upsilon[i],
            });
        }
        Ok(Self {
            psi,
            delta,
            upsilon,
        })
    }

    pub fn subject_count(&self) -> usize {
        self.delta.len()
    }

    pub fn stimulus_count(&self) -> usize {
        self.psi.len()
    }

    pub(crate) fn check_against(&self, scores: &ScoreTensor) -> Result<()> {
        if self.psi.len() != scores.stimulus_count() {
            return Err(Error::DimensionMismatch {
                context: "psi length vs stimulus count",
                expected: scores.stimulus_count(),
                actual: self.psi.len(),
            });
        }
        if self.delta.len() != scores.subject_count() {
            return Err(Error::DimensionMismatch {
                context: "delta length vs subject count",
                expected: scores.subject_count(),
                actual: self.delta.len(),
            });
        }
        if self.upsilon.len() != scores.subject_count() {
            return Err(Error::DimensionMismatch {
                context: "upsilon length vs subject count",
                expected: scores.subject_count(),
                actual: self.upsilon.len(),
            });
        }
        Ok(())
    }
}

/// Parameters of the plain-MOS model: per-stimulus quality and ambiguity.
#[derive(Debug, Clone, PartialEq)]
pub struct MosParams {
    /// True quality per stimulus.
    pub psi: Vec<f64>,
    /// Ambiguity (noise standard deviation) per stimulus, non-negative.
    pub upsilon: Vec<f64>,
}

impl MosParams {
    pub fn new(psi: Vec<f64>, upsilon: Vec<f64>) -> Result<Self> {
        if psi.len() != upsilon.len() {
            return Err(Error::DimensionMismatch {
                context: "psi/upsilon lengths",
                expected: psi.len(),
                actual: upsilon.len(),
            });
        }
        if let Some(j) = upsilon.iter().position(|&u| u < 0.0 || !u.is_finite()) {
            return Err(Error::DegenerateVariance {
                subject: j,
                upsilon: upsilon[j],
            });
        }
        Ok(Self { psi, upsilon })
    }
}

/// First- and second-order partial derivatives of the log-likelihood.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d_psi: Vec<f64>,
    pub d_delta: Vec<f64>,
    pub d_upsilon: Vec<f64>,
    pub d2_psi: Vec<f64>,
    pub d2_delta: Vec<f64>,
    pub d2_upsilon: Vec<f64>,
}

/// Residuals `u - psi[j] - delta[i]`, defined exactly where a vote exists.
pub fn residuals(scores: &ScoreTensor, params: &ModelParams) -> Result<BTreeMap<Cell, f64>> {
    params.check_against(scores)?;
    let mut out = BTreeMap::new();
    for ((i, j, r), u) in scores.votes() {
        out.insert((i, j, r), u - params.psi[j] - params.delta[i]);
    }
    Ok(out)
}

fn check_positive_upsilon(scores: &ScoreTensor, params: &ModelParams) -> Result<()> {
    let counts = scores.subject_vote_counts();
    for (i, &count) in counts.iter().enumerate() {
        if count > 0 && params.upsilon[i] <= 0.0 {
            return Err(Error::DegenerateVariance {
                subject: i,
                upsilon: params.upsilon[i],
            });
        }
    }
    Ok(())
}

/// Log-likelihood of the subject model, summed over present votes only and
/// with constant terms omitted.
pub fn log_likelihood(scores: &ScoreTensor, params: &ModelParams) -> Result<f64> {
    params.check_against(scores)?;
    check_positive_upsilon(scores, params)?;
    let mut total = 0.0;
    for ((i, j, _), u) in scores.votes() {
        let eps = u - params.psi[j] - params.delta[i];
        let ups = params.upsilon[i];
        total += -ups.ln() - eps * eps / (2.0 * ups * ups);
    }
    Ok(total)
}

/// Log-likelihood of the plain-MOS model (per-stimulus ambiguity), constant
/// terms omitted.
///
/// A stimulus whose votes have zero spread yields an unbounded likelihood;
/// the limit (`+inf`, or `-inf` when a nonzero residual meets zero
/// ambiguity) is returned rather than an error so that degenerate fits stay
/// reportable.
pub fn mos_log_likelihood(scores: &ScoreTensor, params: &MosParams) -> Result<f64> {
    if params.psi.len() != scores.stimulus_count() {
        return Err(Error::DimensionMismatch {
            context: "psi length vs stimulus count",
            expected: scores.stimulus_count(),
            actual: params.psi.len(),
        });
    }
    let mut total = 0.0;
    for ((_, j, _), u) in scores.votes() {
        let eps = u - params.psi[j];
        let ups = params.upsilon[j];
        if ups == 0.0 {
            total += if eps == 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        } else {
            total += -ups.ln() - eps * eps / (2.0 * ups * ups);
        }
    }
    Ok(total)
}

/// All first- and second-order partials of the log-likelihood, with sums
/// restricted to present votes.
pub fn derivatives(scores: &ScoreTensor, params: &ModelParams) -> Result<Derivatives> {
    params.check_against(scores)?;
    check_positive_upsilon(scores, params)?;
    let i_count = scores.subject_count();
    let j_count = scores.stimulus_count();
    let mut d = Derivatives {
        d_psi: vec![0.0; j_count],
        d_delta: vec![0.0; i_count],
        d_upsilon: vec![0.0; i_count],
        d2_psi: vec![0.0; j_count],
        d2_delta: vec![0.0; i_count],
        d2_upsilon: vec![0.0; i_count],
    };
    for ((i, j, _), u) in scores.votes() {
        let ups = params.upsilon[i];
        let inv2 = 1.0 / (ups * ups);
        let eps = u - params.psi[j] - params.delta[i];
        d.d_psi[j] += eps * inv2;
        d.d_delta[i] += eps * inv2;
        d.d_upsilon[i] += -1.0 / ups + eps * eps / (ups * ups * ups);
        d.d2_psi[j] -= inv2;
        d.d2_delta[i] -= inv2;
        d.d2_upsilon[i] += inv2 - 3.0 * eps * eps * inv2 * inv2;
    }
    Ok(d)
}

/// Shift the constant ambiguity between quality and bias so that the mean
/// subject bias is zero. The log-likelihood is unchanged.
pub fn apply_zero_mean_bias(params: &ModelParams) -> ModelParams {
    if params.delta.is_empty() {
        return params.clone();
    }
    let shift = params.delta.iter().sum::<f64>() / params.delta.len() as f64;
    ModelParams {
        psi: params.psi.iter().map(|&p| p + shift).collect(),
        delta: params.delta.iter().map(|&d| d - shift).collect(),
        upsilon: params.upsilon.clone(),
    }
}
