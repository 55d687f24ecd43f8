//! Robustness to corrupted subjects: error growth as more subjects are
//! scrambled, and saturation as the corruption probability rises.
//!
//! Consistency weighting identifies scrambled subjects by their inflated
//! inconsistency and suppresses them, so its error curve flattens where
//! averaging methods keep degrading.
//!
//! Run with: cargo run --release --example outlier_robustness

use scorefit::model::apply_zero_mean_bias;
use scorefit::solver::Method;
use scorefit::synthetic::{generate_synthetic, robustness_experiment, sample_params, PanelLayout};

fn main() -> scorefit::Result<()> {
    let truth = apply_zero_mean_bias(&sample_params(
        71,
        26,
        79,
        (1.0, 5.0),
        (-0.8, 0.8),
        (0.2, 0.6),
    ));
    let panel = generate_synthetic(&truth, &PanelLayout::complete(26, 79, 1, 72))?;
    let methods = [Method::Mos, Method::Bt500, Method::P913, Method::Ap];

    println!("normalized quality RMSE vs number of fully scrambled subjects (10 runs each):");
    let counts = [0usize, 2, 4, 6, 8, 10, 12];
    let curves = robustness_experiment(&panel, &methods, &counts, 1.0, 10, 73)?;
    print!("{:>10}", "corrupted");
    for curve in &curves {
        print!("{:>9}", curve.method.to_string());
    }
    println!();
    for (row, &count) in counts.iter().enumerate() {
        print!("{count:>10}");
        for curve in &curves {
            print!("{:>9.3}", curve.points[row].mean_rmse);
        }
        println!();
    }

    println!("\nnormalized quality RMSE vs corruption probability (10 corrupted subjects):");
    println!("{:>6} {:>9} {:>9}", "prob", "mos", "ap");
    for prob in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let sweep = robustness_experiment(&panel, &[Method::Mos, Method::Ap], &[10], prob, 10, 74)?;
        println!(
            "{prob:>6.2} {:>9.3} {:>9.3}",
            sweep[0].points[0].mean_rmse, sweep[1].points[0].mean_rmse
        );
    }
    println!("\n(the ap column saturates; the mos column keeps growing)");
    Ok(())
}
