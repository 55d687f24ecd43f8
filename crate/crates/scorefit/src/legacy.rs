//! Standardized post-screening baselines: outlier rejection with hard-coded
//! thresholds and per-subject bias removal, plus the composed pipelines
//! that run them before a plain MOS fit.

use std::collections::BTreeSet;

use crate::diagnostics::{ci_mos, nbic};
use crate::error::{Error, Result};
use crate::model::mos_log_likelihood;
use crate::solver::{mos_params, solve_mos, subject_bias, FitReport, FittedParams, Method};
use crate::tensor::ScoreTensor;

/// Fraction of outlier votes above which a subject becomes a candidate for
/// rejection.
pub const REJECTION_RATIO_1: f64 = 0.05;
/// Skewness bound: a candidate is rejected only when `|p - q| / (p + q)`
/// stays below this.
pub const REJECTION_RATIO_2: f64 = 0.3;

/// Why a `(stimulus, repetition)` cell was excluded or marked during
/// rejection counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    /// Fewer than two voters; the cell contributes no counts.
    TooFewVoters,
    /// All voters agree exactly, so the thresholds collapse; the cell
    /// contributes no counts.
    ZeroSpread,
    /// Two to four voters: processed, but the moment test is fragile.
    LowVoterCount,
}

/// A flagged cell, identified by stimulus and repetition index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedCell {
    pub stimulus: usize,
    pub repetition: usize,
    pub flag: CellFlag,
}

/// Outcome of the outlier-vote count and the two-threshold rejection rule.
#[derive(Debug, Clone)]
pub struct RejectionReport {
    /// High-outlier vote count per subject.
    pub p: Vec<usize>,
    /// Low-outlier vote count per subject.
    pub q: Vec<usize>,
    /// Present votes per subject.
    pub votes: Vec<usize>,
    /// `(p + q) / votes` per subject.
    pub ratio1: Vec<f64>,
    /// `|p - q| / (p + q)` per subject; `None` when `p + q = 0`.
    pub ratio2: Vec<Option<f64>>,
    pub rejected: BTreeSet<usize>,
    pub flagged_cells: Vec<FlaggedCell>,
}

/// Count outlier votes per subject and apply the two-threshold rejection
/// rule.
///
/// For every `(stimulus, repetition)` cell the votes' mean, central moments
/// and sample standard deviation (count minus one denominator) are taken
/// over the voters of that cell. Votes at least `e * sigma` above (below)
/// the mean count toward `p` (`q`), where `e` is 2 when the cell's kurtosis
/// lies in `[2, 4]` and `sqrt(20)` otherwise. A subject is rejected when at
/// least 5% of its votes are outliers and the high/low split is not too
/// skewed. Cells with fewer than two voters or zero spread contribute no
/// counts and are flagged.
pub fn bt500_reject(scores: &ScoreTensor) -> Result<RejectionReport> {
    let i_count = scores.subject_count();
    let mut p = vec![0usize; i_count];
    let mut q = vec![0usize; i_count];
    let mut flagged = Vec::new();

    for j in 0..scores.stimulus_count() {
        for r in 0..scores.repetitions() {
            let cell_votes: Vec<(usize, f64)> = (0..i_count)
                .filter_map(|i| scores.get(i, j, r).map(|u| (i, u)))
                .collect();
            let n = cell_votes.len();
            if n < 2 {
                if n > 0 {
                    flagged.push(FlaggedCell {
                        stimulus: j,
                        repetition: r,
                        flag: CellFlag::TooFewVoters,
                    });
                }
                continue;
            }
            let nf = n as f64;
            let mean = cell_votes.iter().map(|&(_, u)| u).sum::<f64>() / nf;
            let m2 = cell_votes
                .iter()
                .map(|&(_, u)| (u - mean).powi(2))
                .sum::<f64>()
                / nf;
            if m2 == 0.0 {
                flagged.push(FlaggedCell {
                    stimulus: j,
                    repetition: r,
                    flag: CellFlag::ZeroSpread,
                });
                continue;
            }
            if n <= 4 {
                flagged.push(FlaggedCell {
                    stimulus: j,
                    repetition: r,
                    flag: CellFlag::LowVoterCount,
                });
            }
            let m4 = cell_votes
                .iter()
                .map(|&(_, u)| (u - mean).powi(4))
                .sum::<f64>()
                / nf;
            let kurtosis = m4 / (m2 * m2);
            let coefficient = if (2.0..=4.0).contains(&kurtosis) {
                2.0
            } else {
                20.0f64.sqrt()
            };
            let sigma = (cell_votes
                .iter()
                .map(|&(_, u)| (u - mean).powi(2))
                .sum::<f64>()
                / (nf - 1.0))
                .sqrt();
            let high = mean + coefficient * sigma;
            let low = mean - coefficient * sigma;
            for &(i, u) in &cell_votes {
                if u >= high {
                    p[i] += 1;
                }
                if u <= low {
                    q[i] += 1;
                }
            }
        }
    }

    let votes = scores.subject_vote_counts();
    let mut ratio1 = vec![0.0; i_count];
    let mut ratio2 = vec![None; i_count];
    let mut rejected = BTreeSet::new();
    for i in 0..i_count {
        let total = (p[i] + q[i]) as f64;
        ratio1[i] = total / votes[i] as f64;
        if p[i] + q[i] > 0 {
            let skew = ((p[i] as f64 - q[i] as f64) / total).abs();
            ratio2[i] = Some(skew);
            if ratio1[i] >= REJECTION_RATIO_1 && skew < REJECTION_RATIO_2 {
                rejected.insert(i);
            }
        }
    }

    Ok(RejectionReport {
        p,
        q,
        votes,
        ratio1,
        ratio2,
        rejected,
        flagged_cells: flagged,
    })
}

/// Estimate each subject's bias as its mean residual against the
/// per-stimulus means, and return the bias-removed scores.
pub fn p913_bias_removal(scores: &ScoreTensor) -> Result<(Vec<f64>, ScoreTensor)> {
    let mos = mos_params(scores)?;
    let bias = subject_bias(scores, &mos.psi);
    let adjusted = scores.map_scores(|(i, _, _), u| u - bias[i])?;
    Ok((bias, adjusted))
}

fn flag_warnings(flagged: &[FlaggedCell], warnings: &mut Vec<String>) {
    let skipped = flagged
        .iter()
        .filter(|f| matches!(f.flag, CellFlag::TooFewVoters | CellFlag::ZeroSpread))
        .count();
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} stimulus/repetition cells contributed no outlier counts (fewer than two voters or zero spread)"
        ));
    }
    let low = flagged
        .iter()
        .filter(|f| f.flag == CellFlag::LowVoterCount)
        .count();
    if low > 0 {
        warnings.push(format!(
            "{low} stimulus/repetition cells have four or fewer voters; their moment test is unreliable"
        ));
    }
}

/// Reject outlier subjects, drop their votes, and fit plain MOS on the
/// remainder. Likelihood, NBIC and intervals use the surviving votes only.
pub fn bt500_pipeline(scores: &ScoreTensor) -> Result<FitReport> {
    let rejection = bt500_reject(scores)?;
    if rejection.rejected.len() == scores.subject_count() {
        return Err(Error::AllSubjectsRejected);
    }
    let kept = scores.retain_subjects(|i| !rejection.rejected.contains(&i))?;
    let mut fit = solve_mos(&kept)?;
    fit.method = Method::Bt500;
    fit.rejected_subjects = rejection.rejected;
    flag_warnings(&rejection.flagged_cells, &mut fit.warnings);
    Ok(fit)
}

/// Remove subject bias, reject outliers on the adjusted scores, and fit
/// plain MOS on the surviving adjusted votes. The parameter count adds one
/// bias per subject on top of the plain-MOS count.
pub fn p913_pipeline(scores: &ScoreTensor) -> Result<FitReport> {
    let (bias, adjusted) = p913_bias_removal(scores)?;
    let rejection = bt500_reject(&adjusted)?;
    if rejection.rejected.len() == scores.subject_count() {
        return Err(Error::AllSubjectsRejected);
    }
    let kept = adjusted.retain_subjects(|i| !rejection.rejected.contains(&i))?;
    let params = mos_params(&kept)?;
    let ll = mos_log_likelihood(&kept, &params)?;
    let num_observations = kept.vote_count();
    let num_parameters = 2 * scores.stimulus_count() + scores.subject_count();
    let psi_ci = ci_mos(&kept, &params)?;
    let mut warnings = Vec::new();
    flag_warnings(&rejection.flagged_cells, &mut warnings);
    Ok(FitReport {
        method: Method::P913,
        params: FittedParams::StimulusWithBias { mos: params, bias },
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
        rejected_subjects: rejection.rejected,
        warnings,
    })
}
