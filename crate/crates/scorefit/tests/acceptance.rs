//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criterion 11 needs externally supplied dataset files and is skipped
//! with a notice when they are absent; see the README for the layout.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use scorefit::dataset::{parse_dataset, DatasetFormat};
use scorefit::diagnostics::{chi_square_cdf, chi_square_ppf, compare_fits};
use scorefit::legacy::{bt500_reject, REJECTION_RATIO_1, REJECTION_RATIO_2};
use scorefit::model::{apply_zero_mean_bias, derivatives, log_likelihood, ModelParams};
use scorefit::solver::{fit, solve_ap, solve_nr, Method, SolverConfig};
use scorefit::synthetic::{
    coverage_experiment, generate_synthetic, robustness_experiment, sample_params, PanelLayout,
};
use scorefit::tensor::{ScoreTensor, ScoreTensorBuilder};

fn conclude(number: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {number:>2} ({name}): {} [{detail}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number} ({name}) failed: {detail}");
}

/// Which parameter a finite-difference probe perturbs.
#[derive(Clone, Copy)]
enum Coordinate {
    Psi(usize),
    Delta(usize),
    Upsilon(usize),
}

fn perturbed(base: &ModelParams, coordinate: Coordinate, h: f64) -> ModelParams {
    let mut p = base.clone();
    match coordinate {
        Coordinate::Psi(j) => p.psi[j] += h,
        Coordinate::Delta(i) => p.delta[i] += h,
        Coordinate::Upsilon(i) => p.upsilon[i] += h,
    }
    p
}

fn read_first_order(d: &scorefit::model::Derivatives, coordinate: Coordinate) -> f64 {
    match coordinate {
        Coordinate::Psi(j) => d.d_psi[j],
        Coordinate::Delta(i) => d.d_delta[i],
        Coordinate::Upsilon(i) => d.d_upsilon[i],
    }
}

fn read_second_order(d: &scorefit::model::Derivatives, coordinate: Coordinate) -> f64 {
    match coordinate {
        Coordinate::Psi(j) => d.d2_psi[j],
        Coordinate::Delta(i) => d.d2_delta[i],
        Coordinate::Upsilon(i) => d.d2_upsilon[i],
    }
}

#[test]
fn criterion_01_gradient_correctness() {
    let started = Instant::now();
    let step = 1e-6;
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    let mut seed = 0u64;
    let mut instances = 0;
    while instances < 50 {
        seed += 1;
        let subjects = 2 + (seed as usize % 5); // 2..=6
        let stimuli = 2 + (seed as usize / 5 % 5);
        let repetitions = 1 + (seed as usize % 2);
        let params = sample_params(seed, subjects, stimuli, (1.0, 5.0), (-1.0, 1.0), (0.4, 1.5));
        let layout = PanelLayout {
            subjects,
            stimuli,
            repetitions,
            missing_fraction: 0.1,
            seed: seed.wrapping_mul(977),
        };
        let tensor = match generate_synthetic(&params, &layout) {
            Ok(t) => t,
            Err(_) => continue, // masking emptied a line; try another seed
        };
        instances += 1;
        // Evaluate the partials somewhere off the optimum.
        let probe = sample_params(
            seed ^ 0xd1f,
            subjects,
            stimuli,
            (1.0, 5.0),
            (-1.0, 1.0),
            (0.4, 1.5),
        );
        let analytic = derivatives(&tensor, &probe).unwrap();
        let mut coordinates = Vec::new();
        coordinates.extend((0..stimuli).map(Coordinate::Psi));
        coordinates.extend((0..subjects).map(Coordinate::Delta));
        coordinates.extend((0..subjects).map(Coordinate::Upsilon));
        for coordinate in coordinates {
            let hi = perturbed(&probe, coordinate, step);
            let lo = perturbed(&probe, coordinate, -step);
            // First order against the likelihood itself.
            let numeric = (log_likelihood(&tensor, &hi).unwrap()
                - log_likelihood(&tensor, &lo).unwrap())
                / (2.0 * step);
            let first = read_first_order(&analytic, coordinate);
            worst = worst.max((first - numeric).abs() / first.abs().max(1.0));
            // Second order against differenced first-order partials.
            let numeric2 = (read_first_order(&derivatives(&tensor, &hi).unwrap(), coordinate)
                - read_first_order(&derivatives(&tensor, &lo).unwrap(), coordinate))
                / (2.0 * step);
            let second = read_second_order(&analytic, coordinate);
            worst = worst.max((second - numeric2).abs() / second.abs().max(1.0));
            checked += 2;
        }
    }
    let elapsed = started.elapsed();
    let ok = worst < 1e-4 && elapsed.as_secs_f64() < 5.0;
    conclude(
        1,
        "gradient correctness",
        ok,
        &format!("{checked} partials over 50 instances, worst rel {worst:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_noiseless_recovery() {
    let started = Instant::now();
    let truth = apply_zero_mean_bias(&sample_params(
        202,
        10,
        20,
        (1.0, 5.0),
        (-1.0, 1.0),
        (0.0, 0.0),
    ));
    let matrix: Vec<Vec<f64>> = truth
        .delta
        .iter()
        .map(|d| truth.psi.iter().map(|p| p + d).collect())
        .collect();
    let tensor = ScoreTensor::from_complete(&matrix).unwrap();

    let mut worst: f64 = 0.0;
    for report in [
        solve_nr(&tensor, &SolverConfig::nr()).unwrap(),
        solve_ap(&tensor, &SolverConfig::ap()).unwrap(),
    ] {
        let got = report.params.subject_model().unwrap();
        for (a, b) in got.psi.iter().zip(&truth.psi) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in got.delta.iter().zip(&truth.delta) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = started.elapsed();
    let ok = worst < 1e-6 && elapsed.as_secs_f64() < 1.0;
    conclude(
        2,
        "noiseless recovery",
        ok,
        &format!("worst parameter error {worst:.2e}, {elapsed:.2?}"),
    );
}

fn agreement_panels() -> Vec<ScoreTensor> {
    (0..20u64)
        .map(|trial| {
            let truth = apply_zero_mean_bias(&sample_params(
                1000 + trial,
                26,
                79,
                (1.0, 5.0),
                (-1.0, 1.0),
                (0.3, 1.2),
            ));
            generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 5000 + trial)).unwrap()
        })
        .collect()
}

#[test]
fn criterion_03_solver_agreement() {
    let started = Instant::now();
    let mut max_gap: f64 = 0.0;
    let mut min_plcc: f64 = 1.0;
    for panel in agreement_panels() {
        let nr = solve_nr(&panel, &SolverConfig::nr()).unwrap();
        let ap = solve_ap(&panel, &SolverConfig::ap()).unwrap();
        for (a, b) in nr.psi().iter().zip(ap.psi()) {
            max_gap = max_gap.max((a - b).abs());
        }
        min_plcc = min_plcc.min(compare_fits(nr.psi(), ap.psi()).unwrap().plcc);
    }
    let elapsed = started.elapsed();
    let ok = max_gap <= 1e-3 && min_plcc > 0.99999 && elapsed.as_secs_f64() < 30.0;
    conclude(
        3,
        "solver agreement",
        ok,
        &format!("max gap {max_gap:.2e}, min PLCC {min_plcc:.7}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_04_ci_coverage() {
    let started = Instant::now();
    let truth = apply_zero_mean_bias(&sample_params(
        2404,
        26,
        79,
        (1.0, 5.0),
        (-1.0, 1.0),
        (0.3, 0.7),
    ));
    let panel = generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 2405)).unwrap();
    let sim = coverage_experiment(&panel, Method::Ap, 100, 2406).unwrap();
    let psi = sim.coverage_psi;
    let psi_alt = sim.coverage_psi_alt.unwrap();
    let delta = sim.coverage_delta.unwrap();
    let average = (psi + psi_alt + delta) / 3.0;
    let in_window = |x: f64| (0.90..=0.97).contains(&x);
    let elapsed = started.elapsed();
    let ok = in_window(psi)
        && in_window(psi_alt)
        && in_window(delta)
        && average < 0.95
        && elapsed.as_secs_f64() < 120.0;
    conclude(
        4,
        "ci coverage",
        ok,
        &format!(
            "psi {:.1}%, alt {:.1}%, delta {:.1}%, average {:.2}% (< 95%), {elapsed:.2?}",
            100.0 * psi,
            100.0 * psi_alt,
            100.0 * delta,
            100.0 * average
        ),
    );
}

#[test]
fn criterion_05_nbic_ordering() {
    let started = Instant::now();
    let mut wins = 0;
    for trial in 0..20u64 {
        let truth = sample_params(7000 + trial, 26, 79, (1.0, 5.0), (-1.5, 1.5), (0.25, 1.3));
        let panel =
            generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 7100 + trial)).unwrap();
        let ap = fit(&panel, Method::Ap, None).unwrap();
        let p913 = fit(&panel, Method::P913, None).unwrap();
        let mos = fit(&panel, Method::Mos, None).unwrap();
        if ap.nbic < p913.nbic && p913.nbic < mos.nbic {
            wins += 1;
        }
    }
    let elapsed = started.elapsed();
    let ok = wins >= 18 && elapsed.as_secs_f64() < 60.0;
    conclude(
        5,
        "nbic ordering",
        ok,
        &format!("ap < p913 < mos in {wins}/20 trials, {elapsed:.2?}"),
    );
}

fn robustness_panel() -> ScoreTensor {
    let truth = apply_zero_mean_bias(&sample_params(
        606,
        26,
        79,
        (1.0, 5.0),
        (-0.8, 0.8),
        (0.2, 0.6),
    ));
    generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 607)).unwrap()
}

#[test]
fn criterion_06_outlier_robustness() {
    let started = Instant::now();
    let panel = robustness_panel();
    let curves = robustness_experiment(
        &panel,
        &[Method::Mos, Method::P913, Method::Ap],
        &[8],
        1.0,
        10,
        608,
    )
    .unwrap();
    let rmse_of =
        |method: Method| curves.iter().find(|c| c.method == method).unwrap().points[0].mean_rmse;
    let mos = rmse_of(Method::Mos);
    let p913 = rmse_of(Method::P913);
    let ap = rmse_of(Method::Ap);
    let elapsed = started.elapsed();
    let ok = ap < p913 && p913 < mos && ap < 0.5 * mos && elapsed.as_secs_f64() < 120.0;
    conclude(
        6,
        "outlier robustness",
        ok,
        &format!("rmse ap {ap:.3} < p913 {p913:.3} < mos {mos:.3}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_07_corruption_saturation() {
    let started = Instant::now();
    let panel = robustness_panel();
    let probs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut mos_curve = Vec::new();
    let mut ap_curve = Vec::new();
    for prob in probs {
        let curves =
            robustness_experiment(&panel, &[Method::Mos, Method::Ap], &[10], prob, 10, 609)
                .unwrap();
        mos_curve.push(curves[0].points[0].mean_rmse);
        ap_curve.push(curves[1].points[0].mean_rmse);
    }
    // Increases over the first and second half of the sweep.
    let ap_first = ap_curve[2] - ap_curve[0];
    let ap_second = ap_curve[4] - ap_curve[2];
    let mos_first = mos_curve[2] - mos_curve[0];
    let mos_second = mos_curve[4] - mos_curve[2];
    let mos_linearity = (mos_second - mos_first).abs() / mos_first;
    let elapsed = started.elapsed();
    let ok = ap_second < ap_first && mos_linearity <= 0.25 && elapsed.as_secs_f64() < 120.0;
    conclude(
        7,
        "corruption saturation",
        ok,
        &format!(
            "ap increase {ap_first:.3} then {ap_second:.3} (saturates); mos within {:.0}% of linear, {elapsed:.2?}",
            100.0 * mos_linearity
        ),
    );
}

#[test]
fn criterion_08_rejection_skew_loophole() {
    let started = Instant::now();
    // Nine clean subjects vote a fixed grid on every stimulus; the tenth
    // plants two high outliers and one low one, inliers elsewhere.
    let clean: Vec<f64> = (0..9).map(|i| 2.6 + 0.1 * i as f64).collect();
    let offset = 3.5 * 0.2581988897471611;
    let mut builder = ScoreTensorBuilder::new();
    for j in 0..20 {
        for (i, &u) in clean.iter().enumerate() {
            builder
                .add_vote(&format!("s{i:03}"), &format!("v{j:03}"), 0, u)
                .unwrap();
        }
        let vote = match j {
            0 | 1 => 3.0 + offset,
            2 => 3.0 - offset,
            _ => 3.0,
        };
        builder
            .add_vote("s009", &format!("v{j:03}"), 0, vote)
            .unwrap();
    }
    let tensor = builder.build().unwrap();
    let report = bt500_reject(&tensor).unwrap();
    let i = 9;
    let ratio1 = report.ratio1[i];
    let ratio2 = report.ratio2[i].unwrap_or(f64::NAN);
    let elapsed = started.elapsed();
    let ok = report.p[i] == 2
        && report.q[i] == 1
        && (ratio1 - 0.15).abs() < 1e-12
        && (ratio2 - 1.0 / 3.0).abs() < 1e-12
        && ratio1 >= REJECTION_RATIO_1
        && ratio2 >= REJECTION_RATIO_2
        && !report.rejected.contains(&i)
        && elapsed.as_secs_f64() < 1.0;
    conclude(
        8,
        "rejection skew loophole",
        ok,
        &format!(
            "p=2 q=1, outlier fraction {ratio1:.2} >= 0.05 but skew {ratio2:.3} >= 0.3 keeps the subject, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_09_iteration_ordering() {
    let started = Instant::now();
    let mut ap_range = (usize::MAX, 0usize);
    let mut ordering_holds = true;
    for panel in agreement_panels() {
        let nr = solve_nr(&panel, &SolverConfig::nr()).unwrap();
        let ap = solve_ap(&panel, &SolverConfig::ap()).unwrap();
        ordering_holds &= ap.iterations < nr.iterations;
        ap_range.0 = ap_range.0.min(ap.iterations);
        ap_range.1 = ap_range.1.max(ap.iterations);
    }
    let elapsed = started.elapsed();
    let ok = ordering_holds && ap_range.0 >= 5 && ap_range.1 <= 100;
    conclude(
        9,
        "iteration ordering",
        ok,
        &format!(
            "ap iterations in [{}, {}], always fewer than nr, {elapsed:.2?}",
            ap_range.0, ap_range.1
        ),
    );
}

#[test]
fn criterion_10_chi_square_ppf() {
    let started = Instant::now();
    let median2 = chi_square_ppf(2, 0.5).unwrap();
    let mut ok = (median2 - 2.0 * (2.0f64).ln()).abs() < 1e-9;
    let mut worst: f64 = 0.0;
    for k in [1usize, 10, 100] {
        for p in [0.025, 0.5, 0.975] {
            let x = chi_square_ppf(k, p).unwrap();
            let back = chi_square_cdf(k, x).unwrap();
            worst = worst.max((back - p).abs());
        }
    }
    ok &= worst < 1e-8;
    let elapsed = started.elapsed();
    conclude(
        10,
        "chi-square percent point",
        ok,
        &format!(
            "ppf(2, 0.5) = 2 ln 2 within {:.1e}; worst cdf round trip {worst:.1e}, {elapsed:.2?}",
            (median2 - 2.0 * (2.0f64).ln()).abs()
        ),
    );
}

#[test]
fn criterion_11_dataset_conditional() {
    let dir = std::env::var("SCOREFIT_DATA_DIR").unwrap_or_else(|_| "data".to_string());
    let path = PathBuf::from(&dir).join("nflx_public.csv");
    if !path.exists() {
        println!(
            "criterion 11 (dataset-conditional): SKIP [no dataset at {}; set SCOREFIT_DATA_DIR]",
            path.display()
        );
        return;
    }
    let tensor = parse_dataset(&path, DatasetFormat::infer(&path)).unwrap();
    let ap = fit(&tensor, Method::Ap, None).unwrap();
    // The reference NBIC for this dataset assumes the full Gaussian
    // log-density; our likelihood omits the constant term, which shifts
    // NBIC by exactly ln(2*pi).
    let nbic_full_density = ap.nbic + (2.0 * std::f64::consts::PI).ln();
    let nbic_ok = (nbic_full_density - 2.52).abs() <= 0.02;
    let mean_ci = ap
        .psi_ci
        .as_ref()
        .map(|cis| cis.iter().map(|c| c.length()).sum::<f64>() / cis.len() as f64)
        .unwrap();
    let ci_ok = (mean_ci - 0.44).abs() <= 0.02;

    // The four scrambled subjects are the last four in file order.
    let i_count = tensor.subject_count();
    let scrambled: BTreeSet<usize> = (i_count - 4..i_count).collect();
    let rejection = bt500_reject(&tensor).unwrap();
    let caught = rejection.rejected.intersection(&scrambled).count();
    let spurious = rejection.rejected.difference(&scrambled).count();
    let rejection_ok = caught == 3 && spurious == 0;

    let ok = nbic_ok && ci_ok && rejection_ok;
    conclude(
        11,
        "dataset-conditional",
        ok,
        &format!(
            "full-density nbic {:.3} (want 2.52 +/- 0.02), mean ci {:.3} (want 0.44 +/- 0.02), rejection caught {caught}/4 scrambled",
            nbic_full_density, mean_ci
        ),
    );
}
