//! Seeded synthetic panels, corruption simulation, and the experiment
//! runners for outlier robustness and confidence-interval coverage.
//!
//! Everything here is a pure function of its inputs and a 64-bit seed;
//! replays are bit-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{ModelParams, MosParams};
use crate::rng::Rng;
use crate::solver::{fit, FittedParams, Method};
use crate::tensor::{Cell, ScoreTensor};

/// Shape and masking of a synthetic panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelLayout {
    pub subjects: usize,
    pub stimuli: usize,
    pub repetitions: usize,
    /// Fraction of cells removed, in `[0, 1)`.
    pub missing_fraction: f64,
    pub seed: u64,
}

impl PanelLayout {
    pub fn complete(subjects: usize, stimuli: usize, repetitions: usize, seed: u64) -> Self {
        Self {
            subjects,
            stimuli,
            repetitions,
            missing_fraction: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.stimuli == 0 || self.repetitions == 0 {
            return Err(Error::InvalidConfig(
                "panel needs at least one subject, stimulus and repetition".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::InvalidConfig(format!(
                "missing fraction must be in [0, 1), got {}",
                self.missing_fraction
            )));
        }
        Ok(())
    }
}

fn synth_ids(count: usize, prefix: char) -> Vec<String> {
    (0..count).map(|k| format!("{prefix}{k:03}")).collect()
}

/// Lexicographic cell list with a seeded mask applied.
fn masked_cells(layout: &PanelLayout, rng: &mut Rng) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(layout.subjects * layout.stimuli * layout.repetitions);
    for i in 0..layout.subjects {
        for j in 0..layout.stimuli {
            for r in 0..layout.repetitions {
                cells.push((i, j, r));
            }
        }
    }
    let missing = (layout.missing_fraction * cells.len() as f64).floor() as usize;
    if missing == 0 {
        return cells;
    }
    let mut order: Vec<usize> = (0..cells.len()).collect();
    rng.shuffle(&mut order);
    let dropped: BTreeSet<usize> = order.into_iter().take(missing).collect();
    cells
        .into_iter()
        .enumerate()
        .filter(|(idx, _)| !dropped.contains(idx))
        .map(|(_, c)| c)
        .collect()
}

fn build_from_values(
    subjects: Vec<String>,
    stimuli: Vec<String>,
    repetitions: usize,
    values: BTreeMap<Cell, f64>,
) -> Result<ScoreTensor> {
    ScoreTensor::from_parts(subjects, stimuli, repetitions, values)
}

/// Draw a panel from the subject model: `psi[j] + delta[i] + upsilon[i] * z`
/// per present cell, with `z` standard normal from the seeded stream.
pub fn generate_synthetic(params: &ModelParams, layout: &PanelLayout) -> Result<ScoreTensor> {
    layout.validate()?;
    if params.psi.len() != layout.stimuli {
        return Err(Error::DimensionMismatch {
            context: "psi length vs layout stimuli",
            expected: layout.stimuli,
            actual: params.psi.len(),
        });
    }
    if params.delta.len() != layout.subjects {
        return Err(Error::DimensionMismatch {
            context: "delta length vs layout subjects",
            expected: layout.subjects,
            actual: params.delta.len(),
        });
    }
    let mut rng = Rng::seed_from_u64(layout.seed);
    let cells = masked_cells(layout, &mut rng);
    let mut values = BTreeMap::new();
    for (i, j, r) in cells {
        let u = params.psi[j] + params.delta[i] + params.upsilon[i] * rng.normal();
        values.insert((i, j, r), u);
    }
    build_from_values(
        synth_ids(layout.subjects, 's'),
        synth_ids(layout.stimuli, 'v'),
        layout.repetitions,
        values,
    )
}

/// Draw a panel from the plain-MOS model: `psi[j] + upsilon[j] * z`.
pub fn generate_synthetic_mos(params: &MosParams, layout: &PanelLayout) -> Result<ScoreTensor> {
    layout.validate()?;
    if params.psi.len() != layout.stimuli {
        return Err(Error::DimensionMismatch {
            context: "psi length vs layout stimuli",
            expected: layout.stimuli,
            actual: params.psi.len(),
        });
    }
    let mut rng = Rng::seed_from_u64(layout.seed);
    let cells = masked_cells(layout, &mut rng);
    let mut values = BTreeMap::new();
    for (i, j, r) in cells {
        values.insert((i, j, r), params.psi[j] + params.upsilon[j] * rng.normal());
    }
    build_from_values(
        synth_ids(layout.subjects, 's'),
        synth_ids(layout.stimuli, 'v'),
        layout.repetitions,
        values,
    )
}

/// Draw subject-model scores over the exact presence mask (and identifiers)
/// of an existing tensor.
pub fn generate_like(source: &ScoreTensor, params: &ModelParams, seed: u64) -> Result<ScoreTensor> {
    params.check_against(source)?;
    let mut rng = Rng::seed_from_u64(seed);
    let mut values = BTreeMap::new();
    for ((i, j, r), _) in source.votes() {
        let u = params.psi[j] + params.delta[i] + params.upsilon[i] * rng.normal();
        values.insert((i, j, r), u);
    }
    build_from_values(
        source.subject_ids().to_vec(),
        source.stimulus_ids().to_vec(),
        source.repetitions(),
        values,
    )
}

/// Plain-MOS-model scores over an existing tensor's mask.
pub fn generate_like_mos(
    source: &ScoreTensor,
    params: &MosParams,
    seed: u64,
) -> Result<ScoreTensor> {
    if params.psi.len() != source.stimulus_count() {
        return Err(Error::DimensionMismatch {
            context: "psi length vs stimulus count",
            expected: source.stimulus_count(),
            actual: params.psi.len(),
        });
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut values = BTreeMap::new();
    for ((i, j, r), _) in source.votes() {
        values.insert((i, j, r), params.psi[j] + params.upsilon[j] * rng.normal());
    }
    build_from_values(
        source.subject_ids().to_vec(),
        source.stimulus_ids().to_vec(),
        source.repetitions(),
        values,
    )
}

/// Random subject-model parameters for simulations: uniform quality and
/// inconsistency, mean-centered uniform bias.
pub fn sample_params(
    seed: u64,
    subjects: usize,
    stimuli: usize,
    psi_range: (f64, f64),
    delta_range: (f64, f64),
    upsilon_range: (f64, f64),
) -> ModelParams {
    let mut rng = Rng::seed_from_u64(seed);
    let psi = (0..stimuli)
        .map(|_| rng.range_f64(psi_range.0, psi_range.1))
        .collect();
    let mut delta: Vec<f64> = (0..subjects)
        .map(|_| rng.range_f64(delta_range.0, delta_range.1))
        .collect();
    let mean = delta.iter().sum::<f64>() / subjects as f64;
    for d in &mut delta {
        *d -= mean;
    }
    let upsilon = (0..subjects)
        .map(|_| rng.range_f64(upsilon_range.0, upsilon_range.1))
        .collect();
    ModelParams {
        psi,
        delta,
        upsilon,
    }
}

/// Corrupt the listed subjects by shuffling votes among their own stimuli.
///
/// Each vote of a listed subject is selected independently with probability
/// `prob`; the selected votes are then permuted among themselves, so each
/// subject's multiset of scores is preserved exactly. `prob = 1` shuffles
/// everything, `prob = 0` is the identity.
pub fn corrupt_shuffle(
    scores: &ScoreTensor,
    subjects: &BTreeSet<usize>,
    prob: f64,
    seed: u64,
) -> Result<ScoreTensor> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidConfig(format!(
            "corruption probability must be in [0, 1], got {prob}"
        )));
    }
    if let Some(&bad) = subjects.iter().find(|&&i| i >= scores.subject_count()) {
        return Err(Error::DimensionMismatch {
            context: "corrupted subject index",
            expected: scores.subject_count(),
            actual: bad,
        });
    }
    let mut values: BTreeMap<Cell, f64> = scores.votes().collect();
    let mut rng = Rng::seed_from_u64(seed);
    for &subject in subjects {
        let cells: Vec<Cell> = scores
            .votes()
            .filter(|&((i, _, _), _)| i == subject)
            .map(|(cell, _)| cell)
            .collect();
        let selected: Vec<Cell> = cells.into_iter().filter(|_| rng.bernoulli(prob)).collect();
        if selected.len() < 2 {
            continue;
        }
        let mut picked: Vec<f64> = selected.iter().map(|c| values[c]).collect();
        rng.shuffle(&mut picked);
        for (cell, v) in selected.iter().zip(picked) {
            values.insert(*cell, v);
        }
    }
    build_from_values(
        scores.subject_ids().to_vec(),
        scores.stimulus_ids().to_vec(),
        scores.repetitions(),
        values,
    )
}

/// One corruption level of a robustness curve.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RobustnessPoint {
    pub corrupted_subjects: usize,
    pub corruption_prob: f64,
    /// Mean over completed runs of the RMSE between the normalized
    /// corrupted-fit quality and the normalized clean-fit quality.
    pub mean_rmse: f64,
    pub completed_runs: usize,
    pub failures: Vec<String>,
}

/// Robustness curve of one method across corruption levels.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RobustnessCurve {
    pub method: Method,
    pub points: Vec<RobustnessPoint>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    (a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Sweep corruption levels and report, per method, the error between the
/// corrupted-panel fit and that method's own clean-panel fit.
///
/// Every method sees the same corrupted panels at each level and run. The
/// quality vectors are normalized by the mean and standard deviation of the
/// method's clean fit before the RMSE is taken. Solver failures on
/// corrupted panels are recorded per run and do not abort the sweep.
pub fn robustness_experiment(
    scores: &ScoreTensor,
    methods: &[Method],
    corrupt_counts: &[usize],
    prob: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<RobustnessCurve>> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be positive".into()));
    }
    if let Some(&bad) = corrupt_counts.iter().find(|&&c| c > scores.subject_count()) {
        return Err(Error::InvalidConfig(format!(
            "cannot corrupt {bad} of {} subjects",
            scores.subject_count()
        )));
    }

    // Per-method benchmark on the unaltered panel, plus normalization stats.
    let mut benchmarks = Vec::new();
    for &method in methods {
        let clean = fit(scores, method, None)?;
        let psi = clean.psi().to_vec();
        let (mean, std) = mean_std(&psi);
        if std == 0.0 {
            return Err(Error::ZeroVariance {
                what: "clean-fit quality scores",
            });
        }
        let normalized: Vec<f64> = psi.iter().map(|&x| (x - mean) / std).collect();
        benchmarks.push((method, mean, std, normalized));
    }

    let mut curves: Vec<RobustnessCurve> = methods
        .iter()
        .map(|&method| RobustnessCurve {
            method,
            points: Vec::new(),
        })
        .collect();

    for (level, &count) in corrupt_counts.iter().enumerate() {
        let mut rmses: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
        let mut failures: Vec<Vec<String>> = vec![Vec::new(); methods.len()];
        for run in 0..runs {
            let mut rng = Rng::stream(seed, (level * runs + run) as u64);
            let chosen: BTreeSet<usize> = rng
                .sample_indices(scores.subject_count(), count)
                .into_iter()
                .collect();
            let shuffle_seed = rng.next_u64();
            let corrupted = corrupt_shuffle(scores, &chosen, prob, shuffle_seed)?;
            for (m, (method, mean, std, normalized)) in benchmarks.iter().enumerate() {
                match fit(&corrupted, *method, None) {
                    Ok(report) => {
                        let got: Vec<f64> =
                            report.psi().iter().map(|&x| (x - mean) / std).collect();
                        rmses[m].push(rmse(&got, normalized));
                    }
                    Err(e) => failures[m].push(format!("run {run}: {e}")),
                }
            }
        }
        for (m, curve) in curves.iter_mut().enumerate() {
            let completed = rmses[m].len();
            let mean_rmse = if completed > 0 {
                rmses[m].iter().sum::<f64>() / completed as f64
            } else {
                f64::NAN
            };
            curve.points.push(RobustnessPoint {
                corrupted_subjects: count,
                corruption_prob: prob,
                mean_rmse,
                completed_runs: completed,
                failures: std::mem::take(&mut failures[m]),
            });
        }
    }
    Ok(curves)
}

/// One refit inside a coverage simulation.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CoverageRun {
    pub psi: Vec<f64>,
    pub delta: Option<Vec<f64>>,
    pub upsilon: Option<Vec<f64>>,
    pub rmse_psi: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Aggregate of a coverage simulation: the fraction of parameters whose
/// ground truth fell inside the refit's confidence interval.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SimResult {
    pub method: Method,
    pub runs: usize,
    pub coverage_psi: f64,
    /// Coverage under the alternative per-stimulus interval (subject model
    /// only).
    pub coverage_psi_alt: Option<f64>,
    pub coverage_delta: Option<f64>,
    pub coverage_upsilon: Option<f64>,
    pub mean_rmse_psi: f64,
    pub mean_iterations: f64,
    pub runtime_seconds: f64,
    pub per_run: Vec<CoverageRun>,
}

/// Fit the panel, treat the estimate as ground truth, repeatedly regenerate
/// synthetic panels over the same mask, refit, and tally how often each
/// true parameter lands inside its interval.
///
/// Supported methods: `mos`, `nr`, `ap`. The rejection pipelines have no
/// generative model of their own and are not accepted here.
pub fn coverage_experiment(
    scores: &ScoreTensor,
    method: Method,
    runs: usize,
    seed: u64,
) -> Result<SimResult> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be positive".into()));
    }
    match method {
        Method::Mos | Method::Nr | Method::Ap => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "coverage simulation supports mos, nr and ap; got {other}"
            )))
        }
    }
    let started = Instant::now();
    let truth_fit = fit(scores, method, None)?;
    let mut per_run = Vec::with_capacity(runs);
    let mut psi_hits = 0usize;
    let mut psi_total = 0usize;
    let mut psi_alt_hits = 0usize;
    let mut delta_hits = 0usize;
    let mut delta_total = 0usize;
    let mut upsilon_hits = 0usize;
    let mut iterations_sum = 0usize;
    let mut rmse_sum = 0.0;

    for run in 0..runs {
        let run_seed = Rng::stream(seed, run as u64).next_u64();
        let (synth, refit) = match &truth_fit.params {
            FittedParams::Stimulus(truth) => {
                let synth = generate_like_mos(scores, truth, run_seed)?;
                let refit = fit(&synth, method, None)?;
                (synth, refit)
            }
            FittedParams::Subject(truth) => {
                let synth = generate_like(scores, truth, run_seed)?;
                let refit = fit(&synth, method, None)?;
                (synth, refit)
            }
            FittedParams::StimulusWithBias { .. } => unreachable!("method checked above"),
        };
        drop(synth);

        let truth_psi = truth_fit.psi();
        let got_psi = refit.psi();
        rmse_sum += rmse(truth_psi, got_psi);
        iterations_sum += refit.iterations;

        if let Some(ci) = &refit.psi_ci {
            for (j, interval) in ci.iter().enumerate() {
                psi_total += 1;
                if interval.contains(truth_psi[j]) {
                    psi_hits += 1;
                }
            }
        }
        if let Some(ci) = &refit.psi_ci_alt {
            for (j, interval) in ci.iter().enumerate() {
                if interval.contains(truth_psi[j]) {
                    psi_alt_hits += 1;
                }
            }
        }
        let mut run_delta = None;
        let mut run_upsilon = None;
        if let (FittedParams::Subject(truth), FittedParams::Subject(got)) =
            (&truth_fit.params, &refit.params)
        {
            if let Some(ci) = &refit.delta_ci {
                for (i, interval) in ci.iter().enumerate() {
                    delta_total += 1;
                    if interval.contains(truth.delta[i]) {
                        delta_hits += 1;
                    }
                }
            }
            if let Some(ci) = &refit.upsilon_ci {
                for (i, interval) in ci.iter().enumerate() {
                    if interval.contains(truth.upsilon[i]) {
                        upsilon_hits += 1;
                    }
                }
            }
            run_delta = Some(got.delta.clone());
            run_upsilon = Some(got.upsilon.clone());
        }
        per_run.push(CoverageRun {
            psi: got_psi.to_vec(),
            delta: run_delta,
            upsilon: run_upsilon,
            rmse_psi: rmse(truth_psi, got_psi),
            iterations: refit.iterations,
            converged: refit.converged,
        });
    }

    let subject_model = matches!(truth_fit.params, FittedParams::Subject(_));
    Ok(SimResult {
        method,
        runs,
        coverage_psi: psi_hits as f64 / psi_total as f64,
        coverage_psi_alt: subject_model.then(|| psi_alt_hits as f64 / psi_total as f64),
        coverage_delta: subject_model.then(|| delta_hits as f64 / delta_total as f64),
        coverage_upsilon: subject_model.then(|| upsilon_hits as f64 / delta_total as f64),
        mean_rmse_psi: rmse_sum / runs as f64,
        mean_iterations: iterations_sum as f64 / runs as f64,
        runtime_seconds: started.elapsed().as_secs_f64(),
        per_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apply_zero_mean_bias;
    use crate::solver::{solve_ap, SolverConfig};

    fn small_params() -> ModelParams {
        sample_params(21, 6, 10, (1.0, 5.0), (-0.8, 0.8), (0.3, 0.9))
    }

    #[test]
    fn zero_upsilon_reproduces_the_model_exactly() {
        let params = ModelParams {
            psi: vec![1.0, 2.0, 3.0],
            delta: vec![0.5, -0.5],
            upsilon: vec![0.0, 0.0],
        };
        let layout = PanelLayout::complete(2, 3, 1, 7);
        let t = generate_synthetic(&params, &layout).unwrap();
        for ((i, j, _), u) in t.votes() {
            assert_eq!(u, params.psi[j] + params.delta[i]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = small_params();
        let layout = PanelLayout {
            subjects: 6,
            stimuli: 10,
            repetitions: 2,
            missing_fraction: 0.2,
            seed: 99,
        };
        let a = generate_synthetic(&params, &layout).unwrap();
        let b = generate_synthetic(&params, &layout).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(
            &params,
            &PanelLayout {
                seed: 100,
                ..layout
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unit_upsilon_noise_concentrates() {
        // Seed-pinned check that per-subject noise spread is near 1.
        let params = ModelParams {
            psi: (0..79).map(|j| 1.0 + (j as f64) * 0.05).collect(),
            delta: vec![0.0; 26],
            upsilon: vec![1.0; 26],
        };
        let layout = PanelLayout::complete(26, 79, 1, 23);
        let t = generate_synthetic(&params, &layout).unwrap();
        for i in 0..26 {
            let res: Vec<f64> = t
                .votes()
                .filter(|&((s, _, _), _)| s == i)
                .map(|((_, j, _), u)| u - params.psi[j])
                .collect();
            let n = res.len() as f64;
            let mean = res.iter().sum::<f64>() / n;
            let sd = (res.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((0.85..=1.15).contains(&sd), "subject {i}: sd {sd}");
        }
    }

    #[test]
    fn mos_generation_matches_ambiguity() {
        let params = MosParams {
            psi: vec![2.0; 40],
            upsilon: vec![0.0; 40],
        };
        let layout = PanelLayout::complete(5, 40, 1, 1);
        let t = generate_synthetic_mos(&params, &layout).unwrap();
        for ((_, j, _), u) in t.votes() {
            assert_eq!(u, params.psi[j]);
        }
        let b = generate_synthetic_mos(&params, &layout).unwrap();
        assert_eq!(t, b);
    }

    #[test]
    fn masking_rejects_voteless_layouts() {
        // Aggressive masking on a tiny panel eventually empties a line.
        let params = ModelParams {
            psi: vec![1.0, 2.0],
            delta: vec![0.0, 0.0],
            upsilon: vec![0.1, 0.1],
        };
        let mut saw_error = false;
        for seed in 0..40 {
            let layout = PanelLayout {
                subjects: 2,
                stimuli: 2,
                repetitions: 1,
                missing_fraction: 0.5,
                seed,
            };
            if generate_synthetic(&params, &layout).is_err() {
                saw_error = true;
                break;
            }
        }
        assert!(saw_error);
    }

    #[test]
    fn generate_like_preserves_mask() {
        let entries = [
            (0usize, 0usize, 0usize, 1.0),
            (0, 1, 0, 2.0),
            (1, 0, 0, 3.0),
            (1, 1, 0, 4.0),
            (2, 0, 0, 2.5),
        ];
        let source = ScoreTensor::from_sparse(3, 2, &entries).unwrap();
        let params = ModelParams {
            psi: vec![1.0, 2.0],
            delta: vec![0.0, 0.0, 0.0],
            upsilon: vec![0.5, 0.5, 0.5],
        };
        let synth = generate_like(&source, &params, 5).unwrap();
        assert_eq!(synth.vote_count(), source.vote_count());
        assert_eq!(synth.get(2, 1, 0), None);
        assert!(synth.get(2, 0, 0).is_some());
    }

    #[test]
    fn corrupt_identity_at_zero_probability() {
        let params = small_params();
        let t = generate_synthetic(&params, &PanelLayout::complete(6, 10, 1, 3)).unwrap();
        let subjects: BTreeSet<usize> = [0, 1, 2].into_iter().collect();
        let out = corrupt_shuffle(&t, &subjects, 0.0, 17).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn corrupt_preserves_multisets() {
        let params = small_params();
        let t = generate_synthetic(&params, &PanelLayout::complete(6, 10, 1, 3)).unwrap();
        let subjects: BTreeSet<usize> = [1, 4].into_iter().collect();
        let out = corrupt_shuffle(&t, &subjects, 1.0, 8).unwrap();
        for i in 0..6 {
            let collect = |tensor: &ScoreTensor| {
                let mut v: Vec<f64> = tensor
                    .votes()
                    .filter(|&((s, _, _), _)| s == i)
                    .map(|(_, u)| u)
                    .collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            };
            assert_eq!(collect(&t), collect(&out), "subject {i}");
            if !subjects.contains(&i) {
                // Untouched subjects keep positions, not just values.
                for ((s, j, r), u) in t.votes() {
                    if s == i {
                        assert_eq!(out.get(s, j, r), Some(u));
                    }
                }
            }
        }
        // A full shuffle of ten votes virtually never fixes every position.
        let moved = t
            .votes()
            .filter(|&((s, _, _), _)| subjects.contains(&s))
            .filter(|&((s, j, r), u)| out.get(s, j, r) != Some(u))
            .count();
        assert!(moved > 0);
    }

    #[test]
    fn corrupt_is_replayable() {
        let params = small_params();
        let t = generate_synthetic(&params, &PanelLayout::complete(6, 10, 1, 3)).unwrap();
        let subjects: BTreeSet<usize> = [2].into_iter().collect();
        let a = corrupt_shuffle(&t, &subjects, 0.5, 123).unwrap();
        let b = corrupt_shuffle(&t, &subjects, 0.5, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refit_recovers_generating_parameters() {
        let truth = apply_zero_mean_bias(&sample_params(
            31,
            12,
            30,
            (1.0, 5.0),
            (-0.7, 0.7),
            (0.0001, 0.0001),
        ));
        let layout = PanelLayout::complete(12, 30, 1, 77);
        let t = generate_synthetic(&truth, &layout).unwrap();
        let fit = solve_ap(&t, &SolverConfig::ap()).unwrap();
        let got = fit.params.subject_model().unwrap();
        for (a, b) in got.psi.iter().zip(&truth.psi) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn robustness_zero_corruption_is_zero_error() {
        let truth = small_params();
        let t = generate_synthetic(&truth, &PanelLayout::complete(6, 10, 1, 9)).unwrap();
        let curves =
            robustness_experiment(&t, &[Method::Mos, Method::Ap], &[0], 1.0, 3, 15).unwrap();
        for curve in curves {
            for point in curve.points {
                assert_eq!(point.completed_runs, 3);
                assert!(point.mean_rmse.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upsilon_coverage_trails_psi_coverage() {
        // The inconsistency estimate is biased low (fitting quality and
        // bias absorbs part of the residual spread), so its interval
        // covers less often than the quality interval.
        let truth = apply_zero_mean_bias(&sample_params(
            57,
            26,
            79,
            (1.0, 5.0),
            (-0.8, 0.8),
            (0.3, 0.7),
        ));
        let panel = generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 58)).unwrap();
        let sim = coverage_experiment(&panel, Method::Ap, 60, 59).unwrap();
        let upsilon = sim.coverage_upsilon.unwrap();
        assert!(
            upsilon < sim.coverage_psi,
            "upsilon {upsilon} vs psi {}",
            sim.coverage_psi
        );
    }

    #[test]
    fn coverage_rejects_pipeline_methods() {
        let truth = small_params();
        let t = generate_synthetic(&truth, &PanelLayout::complete(6, 10, 1, 9)).unwrap();
        assert!(coverage_experiment(&t, Method::Bt500, 2, 1).is_err());
    }

    #[test]
    fn coverage_runs_on_small_panel() {
        let truth = small_params();
        let t = generate_synthetic(&truth, &PanelLayout::complete(6, 10, 1, 9)).unwrap();
        let sim = coverage_experiment(&t, Method::Ap, 5, 33).unwrap();
        assert_eq!(sim.runs, 5);
        assert_eq!(sim.per_run.len(), 5);
        assert!(sim.coverage_psi >= 0.0 && sim.coverage_psi <= 1.0);
        assert!(sim.coverage_delta.is_some());
        let mos = coverage_experiment(&t, Method::Mos, 5, 33).unwrap();
        assert!(mos.coverage_delta.is_none());
    }
}
