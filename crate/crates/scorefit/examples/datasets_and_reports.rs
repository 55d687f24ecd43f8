//! Round trip through the on-disk formats: write a dataset, parse it, fit
//! it, emit JSON and CSV reports, read them back, and compare two fits.
//!
//! Run with: cargo run --example datasets_and_reports

use scorefit::dataset::{dataset_to_string, parse_dataset_reader, DatasetFormat};
use scorefit::diagnostics::compare_fits;
use scorefit::model::apply_zero_mean_bias;
use scorefit::report::{build_report, report_from_str, report_to_string, CiMode, ReportFormat};
use scorefit::solver::{fit, Method};
use scorefit::synthetic::{generate_synthetic, sample_params, PanelLayout};
use std::path::Path;

fn main() -> scorefit::Result<()> {
    let truth = apply_zero_mean_bias(&sample_params(
        91,
        8,
        12,
        (1.0, 5.0),
        (-0.5, 0.5),
        (0.3, 0.6),
    ));
    let panel = generate_synthetic(&truth, &PanelLayout::complete(8, 12, 1, 92))?;

    // Dataset text round trip.
    let csv_text = dataset_to_string(&panel, DatasetFormat::Csv)?;
    println!(
        "dataset head:\n{}",
        csv_text.lines().take(3).collect::<Vec<_>>().join("\n")
    );
    let reparsed = parse_dataset_reader(
        csv_text.as_bytes(),
        Path::new("panel.csv"),
        DatasetFormat::Csv,
    )?;
    assert_eq!(reparsed, panel);
    println!("csv dataset round trip: exact\n");

    // Report round trips in both formats.
    let ap = fit(&panel, Method::Ap, None)?;
    let report = build_report(&ap, &panel, CiMode::Both);
    for format in [ReportFormat::Json, ReportFormat::Csv] {
        let text = report_to_string(&report, format)?;
        let back = report_from_str(&text, format)?;
        assert_eq!(back, report);
        println!(
            "{} report round trip: exact ({} bytes)",
            if format == ReportFormat::Json {
                "json"
            } else {
                "csv"
            },
            text.len()
        );
    }

    // Cross-method agreement straight from report files.
    let nr = fit(&panel, Method::Nr, None)?;
    let nr_report = build_report(&nr, &panel, CiMode::Both);
    let psi_a: Vec<f64> = report.stimuli.iter().map(|s| s.psi).collect();
    let psi_b: Vec<f64> = nr_report.stimuli.iter().map(|s| s.psi).collect();
    let agreement = compare_fits(&psi_a, &psi_b)?;
    println!(
        "\nap vs nr from the reports: PLCC {:.7}, RMSE {:.2e}",
        agreement.plcc, agreement.rmse
    );
    Ok(())
}
