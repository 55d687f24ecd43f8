//! The three interval constructions side by side.
//!
//! The pooled quality interval shares one length across all stimuli on
//! complete data; the alternative per-stimulus interval differentiates but
//! loosens when erratic subjects inflate the residual spread. Inconsistency
//! gets the chi-square interval for an estimated standard deviation.
//!
//! Run with: cargo run --example confidence_intervals

use scorefit::diagnostics::{chi_square_ppf, ci_alt, ci_mle};
use scorefit::model::apply_zero_mean_bias;
use scorefit::solver::{solve_ap, SolverConfig};
use scorefit::synthetic::{corrupt_shuffle, generate_synthetic, sample_params, PanelLayout};

fn main() -> scorefit::Result<()> {
    let truth = apply_zero_mean_bias(&sample_params(
        5,
        20,
        30,
        (1.0, 5.0),
        (-0.8, 0.8),
        (0.3, 0.6),
    ));
    let clean = generate_synthetic(&truth, &PanelLayout::complete(20, 30, 1, 6))?;
    let corrupted = corrupt_shuffle(&clean, &[18, 19].into_iter().collect(), 1.0, 7)?;

    for (name, panel) in [("clean", &clean), ("2 subjects scrambled", &corrupted)] {
        let report = solve_ap(panel, &SolverConfig::ap())?;
        let params = report.params.subject_model().unwrap();
        let (psi_ci, _, upsilon_ci) = ci_mle(panel, params)?;
        let psi_ci2 = ci_alt(panel, params)?;
        let mean = |cis: &[scorefit::diagnostics::Interval]| {
            cis.iter().map(|c| c.length()).sum::<f64>() / cis.len() as f64
        };
        println!("{name}:");
        println!(
            "  pooled quality CI length      : {:.4} (same for every stimulus)",
            mean(&psi_ci)
        );
        println!(
            "  per-stimulus quality CI length: {:.4} (mean)",
            mean(&psi_ci2)
        );
        println!(
            "  inconsistency CI, subject 0   : [{:.3}, {:.3}] around {:.3}",
            upsilon_ci[0].lower, upsilon_ci[0].upper, params.upsilon[0]
        );
        println!();
    }

    // The chi-square quantiles behind the inconsistency interval.
    println!("chi-square percent points:");
    for k in [10usize, 30, 100] {
        println!(
            "  k = {k:>3}: 2.5% -> {:>8.3}, 97.5% -> {:>8.3}",
            chi_square_ppf(k, 0.025)?,
            chi_square_ppf(k, 0.975)?,
        );
    }
    Ok(())
}
