//! Hard subject rejection: outlier-vote counting, the two thresholds, and
//! the skewness loophole that lets a one-sided outlier escape.
//!
//! Run with: cargo run --example subject_rejection

use scorefit::legacy::{bt500_pipeline, bt500_reject};
use scorefit::model::apply_zero_mean_bias;
use scorefit::synthetic::{corrupt_shuffle, generate_synthetic, sample_params, PanelLayout};
use scorefit::tensor::ScoreTensorBuilder;

fn main() -> scorefit::Result<()> {
    // A scrambled subject produces outlier votes on both sides, so the
    // skew test passes and rejection catches it.
    let truth = apply_zero_mean_bias(&sample_params(
        41,
        20,
        40,
        (1.0, 5.0),
        (-0.5, 0.5),
        (0.25, 0.5),
    ));
    let clean = generate_synthetic(&truth, &PanelLayout::complete(20, 40, 1, 42))?;
    let panel = corrupt_shuffle(&clean, &[19].into_iter().collect(), 1.0, 43)?;
    let report = bt500_reject(&panel)?;
    println!("scrambled-subject panel:");
    for i in [0usize, 19] {
        println!(
            "  subject {i:>2}: p = {:>2}, q = {:>2}, outlier fraction = {:.3}, skew = {:?}, rejected = {}",
            report.p[i],
            report.q[i],
            report.ratio1[i],
            report.ratio2[i],
            report.rejected.contains(&i)
        );
    }
    let fit = bt500_pipeline(&panel)?;
    println!(
        "  pipeline: {} subject(s) rejected, NBIC {:.3}\n",
        fit.rejected_subjects.len(),
        fit.nbic
    );

    // The loophole: one subject votes far off on three stimuli, twice high
    // and once low. 15% of its votes are outliers, but the high/low split
    // is skewed enough (|2 - 1| / 3 >= 0.3) that the rule keeps it.
    let clean_votes: Vec<f64> = (0..9).map(|i| 2.6 + 0.1 * i as f64).collect();
    let offset = 3.5 * 0.2581988897471611;
    let mut builder = ScoreTensorBuilder::new();
    for j in 0..20 {
        for (i, &u) in clean_votes.iter().enumerate() {
            builder.add_vote(&format!("s{i}"), &format!("v{j}"), 0, u)?;
        }
        let vote = match j {
            0 | 1 => 3.0 + offset,
            2 => 3.0 - offset,
            _ => 3.0,
        };
        builder.add_vote("outlier", &format!("v{j}"), 0, vote)?;
    }
    let loophole = builder.build()?;
    let report = bt500_reject(&loophole)?;
    let i = 9;
    println!("skewed-outlier panel:");
    println!(
        "  outlier subject: p = {}, q = {}, outlier fraction = {:.3}, skew = {:.3}",
        report.p[i],
        report.q[i],
        report.ratio1[i],
        report.ratio2[i].unwrap()
    );
    println!(
        "  rejected: {} (fraction passes the 0.05 bar, skew fails the 0.3 bar)",
        report.rejected.contains(&i)
    );
    Ok(())
}
