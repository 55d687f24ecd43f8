//! Property tests for the model and solver invariants.

use proptest::prelude::*;

use scorefit::dataset::{dataset_to_string, parse_dataset_reader, DatasetFormat};
use scorefit::model::{apply_zero_mean_bias, log_likelihood, ModelParams};
use scorefit::solver::{solve_ap, solve_mos, SolverConfig};
use scorefit::synthetic::{corrupt_shuffle, generate_synthetic, sample_params, PanelLayout};
use scorefit::tensor::{ScoreTensor, ScoreTensorBuilder};

fn small_panel() -> impl Strategy<Value = (ScoreTensor, ModelParams)> {
    (2usize..6, 2usize..6, 0u64..1000).prop_map(|(subjects, stimuli, seed)| {
        let params = sample_params(seed, subjects, stimuli, (1.0, 5.0), (-1.0, 1.0), (0.3, 1.0));
        let tensor = generate_synthetic(
            &params,
            &PanelLayout::complete(subjects, stimuli, 1, seed.wrapping_add(1)),
        )
        .unwrap();
        (tensor, params)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn likelihood_is_invariant_under_constant_shift(
        (tensor, params) in small_panel(),
        shift in -10.0f64..10.0,
    ) {
        let base = log_likelihood(&tensor, &params).unwrap();
        let shifted = ModelParams {
            psi: params.psi.iter().map(|p| p + shift).collect(),
            delta: params.delta.iter().map(|d| d - shift).collect(),
            upsilon: params.upsilon.clone(),
        };
        let moved = log_likelihood(&tensor, &shifted).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn zero_mean_bias_preserves_likelihood((tensor, params) in small_panel()) {
        let normalized = apply_zero_mean_bias(&params);
        let sum: f64 = normalized.delta.iter().sum();
        prop_assert!(sum.abs() < 1e-10);
        let a = log_likelihood(&tensor, &params).unwrap();
        let b = log_likelihood(&tensor, &normalized).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn solver_is_shift_equivariant((tensor, _) in small_panel(), shift in -5.0f64..5.0) {
        let base = solve_ap(&tensor, &SolverConfig::ap()).unwrap();
        let moved_tensor = tensor.map_scores(|_, u| u + shift).unwrap();
        let moved = solve_ap(&moved_tensor, &SolverConfig::ap()).unwrap();
        let base_params = base.params.subject_model().unwrap();
        let moved_params = moved.params.subject_model().unwrap();
        for (a, b) in base_params.psi.iter().zip(&moved_params.psi) {
            prop_assert!((a + shift - b).abs() < 1e-8, "{a} + {shift} vs {b}");
        }
        for (a, b) in base_params.delta.iter().zip(&moved_params.delta) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in base_params.upsilon.iter().zip(&moved_params.upsilon) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn solver_is_permutation_equivariant((tensor, _) in small_panel(), flip in any::<bool>()) {
        // Reverse (or keep) the subject order and refit.
        let order: Vec<usize> = if flip {
            (0..tensor.subject_count()).rev().collect()
        } else {
            (0..tensor.subject_count()).collect()
        };
        let mut builder = ScoreTensorBuilder::new();
        for &i in &order {
            builder.touch_subject(&tensor.subject_ids()[i]);
        }
        for j in 0..tensor.stimulus_count() {
            builder.touch_stimulus(&tensor.stimulus_ids()[j]);
        }
        for ((i, j, r), u) in tensor.votes() {
            builder
                .add_vote(&tensor.subject_ids()[i], &tensor.stimulus_ids()[j], r, u)
                .unwrap();
        }
        let permuted = builder.build().unwrap();
        let base = solve_ap(&tensor, &SolverConfig::ap()).unwrap();
        let perm = solve_ap(&permuted, &SolverConfig::ap()).unwrap();
        let base_params = base.params.subject_model().unwrap();
        let perm_params = perm.params.subject_model().unwrap();
        for (a, b) in base_params.psi.iter().zip(&perm_params.psi) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for (new_index, &old_index) in order.iter().enumerate() {
            prop_assert!((base_params.delta[old_index] - perm_params.delta[new_index]).abs() < 1e-9);
            prop_assert!((base_params.upsilon[old_index] - perm_params.upsilon[new_index]).abs() < 1e-9);
        }
    }

    #[test]
    fn dataset_text_round_trips((tensor, _) in small_panel(), json in any::<bool>()) {
        let format = if json { DatasetFormat::Json } else { DatasetFormat::Csv };
        let text = dataset_to_string(&tensor, format).unwrap();
        let back = parse_dataset_reader(
            text.as_bytes(),
            std::path::Path::new("prop.data"),
            format,
        )
        .unwrap();
        prop_assert_eq!(back, tensor);
    }

    #[test]
    fn corruption_preserves_score_multisets(
        (tensor, _) in small_panel(),
        prob in 0.0f64..=1.0,
        seed in 0u64..500,
    ) {
        let subjects = [0usize, 1].into_iter().collect();
        let corrupted = corrupt_shuffle(&tensor, &subjects, prob, seed).unwrap();
        for i in 0..tensor.subject_count() {
            let mut a: Vec<f64> = tensor
                .votes()
                .filter(|&((s, _, _), _)| s == i)
                .map(|(_, u)| u)
                .collect();
            let mut b: Vec<f64> = corrupted
                .votes()
                .filter(|&((s, _, _), _)| s == i)
                .map(|(_, u)| u)
                .collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn mos_psi_intervals_share_length_on_complete_panels((tensor, _) in small_panel()) {
        let fit = solve_ap(&tensor, &SolverConfig::ap()).unwrap();
        let ci = fit.psi_ci.unwrap();
        for interval in &ci {
            // Equal half-widths by construction; reconstructing the length
            // from the bounds rounds in the last ulp of the bounds, which
            // dominates when the interval is much narrower than its center.
            let reference = ci[0].length();
            let slack = 1e-14 * (1.0 + interval.upper.abs().max(interval.lower.abs()));
            prop_assert!((interval.length() - reference).abs() <= slack);
        }
        // Every interval contains its point estimate.
        let params = fit.params.subject_model().unwrap();
        for (interval, &delta) in fit.delta_ci.as_ref().unwrap().iter().zip(&params.delta) {
            prop_assert!(interval.contains(delta));
        }
        for (interval, &upsilon) in fit.upsilon_ci.as_ref().unwrap().iter().zip(&params.upsilon) {
            prop_assert!(interval.contains(upsilon));
        }
        let mos = solve_mos(&tensor).unwrap();
        for (interval, &psi) in mos.psi_ci.as_ref().unwrap().iter().zip(mos.psi()) {
            prop_assert!(interval.contains(psi));
        }
    }
}
