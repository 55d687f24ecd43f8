//! Confidence intervals, chi-square quantiles, NBIC and fit comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{residuals, ModelParams, MosParams};
use crate::tensor::ScoreTensor;

/// 95% two-sided normal coefficient used throughout.
pub const NORMAL_95: f64 = 1.96;

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Domain(format!(
                "interval bounds out of order: [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Self {
            lower: center - half_width,
            upper: center + half_width,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Agreement statistics between two per-stimulus score vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitComparison {
    /// Pearson linear correlation.
    pub plcc: f64,
    /// Spearman rank correlation, average ranks on ties.
    pub srocc: f64,
    /// Mean of `b - a`.
    pub diff_mean: f64,
    /// Population standard deviation of `b - a`.
    pub diff_std: f64,
    /// Root mean squared difference.
    pub rmse: f64,
}

// --- gamma and chi-square machinery -------------------------------------

// Lanczos approximation, g = 7, 9 terms.
const LANCZOS: [f64; 8] = [
    676.5203681218851,
    -1259.1392167224028,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507343278686905,
    -0.13857109526572012,
    9.984_369_578_019_572e-6,
    1.5056327351493116e-7,
];

fn ln_gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        // Reflection formula keeps the approximation in its stable range.
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = 0.999_999_999_999_809_9;
        for (i, &c) in LANCZOS.iter().enumerate() {
            acc += c / (x + i as f64 + 1.0);
        }
        let t = x + 7.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Regularized lower incomplete gamma function P(a, x).
///
/// Series expansion for `x < a + 1`, Lentz's continued fraction otherwise.
fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if log_prefix < -700.0 {
        return if x < a { 0.0 } else { 1.0 };
    }
    let eps = 1e-15;
    if x < a + 1.0 {
        // Ascending series.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > sum.abs() * eps {
            term *= x / (a + n);
            sum += term;
            n += 1.0;
        }
        sum * log_prefix.exp()
    } else {
        // Continued fraction for the upper tail Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..400 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < eps {
                break;
            }
        }
        1.0 - log_prefix.exp() * h
    }
}

/// Chi-square cumulative distribution function with `k` degrees of freedom.
pub fn chi_square_cdf(k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("chi-square needs k >= 1".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(reg_lower_gamma(k as f64 / 2.0, x / 2.0))
}

/// Chi-square percent point function (inverse CDF) with `k` degrees of
/// freedom, solved by bisection.
pub fn chi_square_ppf(k: usize, p: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("chi-square needs k >= 1".into()));
    }
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::Domain(format!(
            "chi-square probability must be in (0, 1), got {p}"
        )));
    }
    let kf = k as f64;
    let mut lo = 0.0;
    let mut hi = kf + 40.0 * (2.0 * kf).sqrt() + 100.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = chi_square_cdf(k, mid)?;
        if c < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

// --- confidence intervals ------------------------------------------------

/// Asymptotic 95% confidence intervals for all subject-model parameters.
///
/// Quality intervals pool every voter's consistency, so on complete data
/// they share a single length across stimuli. Bias intervals scale the
/// subject's inconsistency by the square root of its vote count; the
/// inconsistency interval is the chi-square interval for a standard
/// deviation estimated from `k_i` samples.
pub fn ci_mle(
    scores: &ScoreTensor,
    params: &ModelParams,
) -> Result<(Vec<Interval>, Vec<Interval>, Vec<Interval>)> {
    let res = residuals(scores, params)?; // also validates dimensions
    drop(res);
    let counts = scores.subject_vote_counts();
    for (i, &count) in counts.iter().enumerate() {
        if count > 0 && params.upsilon[i] <= 0.0 {
            return Err(Error::DegenerateVariance {
                subject: i,
                upsilon: params.upsilon[i],
            });
        }
        if count == 0 {
            return Err(Error::VotelessSubject { index: i });
        }
    }

    let mut weight_per_stimulus = vec![0.0; scores.stimulus_count()];
    for ((i, j, _), _) in scores.votes() {
        let u = params.upsilon[i];
        weight_per_stimulus[j] += 1.0 / (u * u);
    }
    let psi_ci = params
        .psi
        .iter()
        .zip(&weight_per_stimulus)
        .map(|(&psi, &w)| Interval::around(psi, NORMAL_95 / w.sqrt()))
        .collect();

    let mut delta_ci = Vec::with_capacity(params.delta.len());
    let mut upsilon_ci = Vec::with_capacity(params.upsilon.len());
    for i in 0..params.delta.len() {
        let k = counts[i];
        let ups = params.upsilon[i];
        delta_ci.push(Interval::around(
            params.delta[i],
            NORMAL_95 * ups / (k as f64).sqrt(),
        ));
        let hi_q = chi_square_ppf(k, 0.975)?;
        let lo_q = chi_square_ppf(k, 0.025)?;
        upsilon_ci.push(Interval {
            lower: (k as f64 / hi_q).sqrt() * ups,
            upper: (k as f64 / lo_q).sqrt() * ups,
        });
    }
    Ok((psi_ci, delta_ci, upsilon_ci))
}

/// Alternative per-stimulus quality intervals based on the residual spread
/// along the subject dimension. Looser than [`ci_mle`] in the presence of
/// inconsistent subjects, but differentiated per stimulus.
pub fn ci_alt(scores: &ScoreTensor, params: &ModelParams) -> Result<Vec<Interval>> {
    let res = residuals(scores, params)?;
    let j_count = scores.stimulus_count();
    let mut count = vec![0usize; j_count];
    let mut sum = vec![0.0; j_count];
    for (&(_, j, _), &eps) in &res {
        count[j] += 1;
        sum[j] += eps;
    }
    let mut var = vec![0.0; j_count];
    for (&(_, j, _), &eps) in &res {
        let mean = sum[j] / count[j] as f64;
        var[j] += (eps - mean) * (eps - mean);
    }
    Ok((0..j_count)
        .map(|j| {
            let n = count[j] as f64;
            let sd = (var[j] / n).sqrt();
            Interval::around(params.psi[j], NORMAL_95 * sd / n.sqrt())
        })
        .collect())
}

/// Quality intervals for the plain-MOS model.
pub fn ci_mos(scores: &ScoreTensor, params: &MosParams) -> Result<Vec<Interval>> {
    if params.psi.len() != scores.stimulus_count() {
        return Err(Error::DimensionMismatch {
            context: "psi length vs stimulus count",
            expected: scores.stimulus_count(),
            actual: params.psi.len(),
        });
    }
    let counts = scores.stimulus_vote_counts();
    Ok((0..params.psi.len())
        .map(|j| {
            let n = counts[j] as f64;
            Interval::around(params.psi[j], NORMAL_95 * params.upsilon[j] / n.sqrt())
        })
        .collect())
}

/// Bayesian Information Criterion normalized by the number of observations,
/// natural logarithm.
pub fn nbic(log_likelihood: f64, num_params: usize, num_obs: usize) -> Result<f64> {
    if num_obs == 0 {
        return Err(Error::Domain("NBIC needs at least one observation".into()));
    }
    let n = num_obs as f64;
    Ok((n.ln() * num_params as f64 - 2.0 * log_likelihood) / n)
}

/// Average ranks, ties resolved by the mean rank of the tied group.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Mean of 1-based ranks start+1 ..= end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a == 0.0 {
        return Err(Error::ZeroVariance {
            what: "first input",
        });
    }
    if var_b == 0.0 {
        return Err(Error::ZeroVariance {
            what: "second input",
        });
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// PLCC, SROCC, difference statistics and RMSE between two equally long
/// per-stimulus score vectors.
pub fn compare_fits(a: &[f64], b: &[f64]) -> Result<FitComparison> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "compared score vectors",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Domain(
            "comparison needs at least two stimuli".into(),
        ));
    }
    let plcc = pearson(a, b)?;
    let srocc = pearson(&average_ranks(a), &average_ranks(b))?;
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| y - x).collect();
    let diff_mean = diffs.iter().sum::<f64>() / n;
    let diff_var = diffs
        .iter()
        .map(|d| (d - diff_mean) * (d - diff_mean))
        .sum::<f64>()
        / n;
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    Ok(FitComparison {
        plcc,
        srocc,
        diff_mean,
        diff_std: diff_var.sqrt(),
        rmse,
    })
}
