use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ssvep_core::canonical::{cca_matrices, DEFAULT_RIDGE};
use ssvep_core::synthetic::{generate_ssvep, SynthSpec};
use ssvep_core::templates::{build_templates, window_range};
use ssvep_core::{canonical_correlations, sscca_correlations, sscca_recognize_baseline, EegEpoch};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Pair of partially correlated signals.
fn coupled(dz: usize, dy: usize, n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let shared = gaussian(dz.min(dy), n, seed);
    let z = gaussian(dz, dz.min(dy), seed + 1) * &shared + gaussian(dz, n, seed + 2);
    let y = gaussian(dy, dz.min(dy), seed + 3) * &shared + gaussian(dy, n, seed + 4) * 1.5;
    (z, y)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_channel_equals_abs_pearson(seed in 0u64..10_000, n in 20usize..400) {
        let (z, y) = coupled(1, 1, n, seed);
        let r = cca_matrices(&z, &y, 0.0).unwrap();
        prop_assert!((r.rho1() - pearson(z.as_slice(), y.as_slice()).abs()).abs() < 1e-9);
    }

    #[test]
    fn correlations_sorted_and_bounded(seed in 0u64..10_000, dz in 1usize..6, dy in 1usize..6) {
        let (z, y) = coupled(dz, dy, 200, seed);
        let r = cca_matrices(&z, &y, DEFAULT_RIDGE).unwrap();
        prop_assert_eq!(r.rank(), dz.min(dy));
        prop_assert!(r.correlations().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(r.correlations().iter().all(|c| (-1e-9..=1.0 + 1e-9).contains(c)));
    }

    #[test]
    fn symmetric_in_arguments(seed in 0u64..10_000, dz in 1usize..5, dy in 1usize..5) {
        let (z, y) = coupled(dz, dy, 150, seed);
        let a = cca_matrices(&z, &y, 0.0).unwrap();
        let b = cca_matrices(&y, &z, 0.0).unwrap();
        prop_assert_eq!(a.rank(), b.rank());
        for (p, q) in a.correlations().iter().zip(b.correlations()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn invariant_to_invertible_mixing(seed in 0u64..10_000) {
        let (z, y) = coupled(3, 3, 300, seed);
        // diagonally dominant, hence invertible and well conditioned
        let m = gaussian(3, 3, seed + 99) * 0.3 + DMatrix::identity(3, 3) * 2.0;
        let a = cca_matrices(&z, &y, 0.0).unwrap();
        let b = cca_matrices(&(m * &z), &y, 0.0).unwrap();
        for (p, q) in a.correlations().iter().zip(b.correlations()) {
            prop_assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn embedding_never_loses_correlation(seed in 0u64..10_000, tau in 0usize..4) {
        let (z, y) = coupled(3, 3, 250, seed);
        let z = EegEpoch::new(z, 256.0).unwrap();
        let y = EegEpoch::new(y, 256.0).unwrap();
        let emb = sscca_correlations(&z, &y, tau, DEFAULT_RIDGE).unwrap();
        let keep = 250 - tau;
        let plain = canonical_correlations(
            &z.slice(0..keep).unwrap(),
            &y.slice(0..keep).unwrap(),
            DEFAULT_RIDGE,
        )
        .unwrap();
        prop_assert!(emb.rho1() >= plain.rho1() - 1e-6);
    }

    #[test]
    fn baseline_choice_ignores_positive_scaling(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let templates: Vec<EegEpoch> = (0..4)
            .map(|i| EegEpoch::new(gaussian(3, 120, seed * 10 + i), 256.0).unwrap())
            .collect();
        let z = EegEpoch::new(gaussian(3, 120, seed * 10 + 7) + templates[2].data() * 0.5, 256.0).unwrap();
        let (a, _) = sscca_recognize_baseline(&z, &templates, 1, DEFAULT_RIDGE).unwrap();
        let (b, _) = sscca_recognize_baseline(&z.scaled(scale), &templates, 1, DEFAULT_RIDGE).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn matched_template_wins_at_high_snr() {
    let data = generate_ssvep(&SynthSpec::standard(10.0, 5)).unwrap();
    let target = data
        .stim_frequencies_hz()
        .iter()
        .position(|f| *f == 11.75)
        .unwrap();
    let window = window_range(&data, 0.0, 1.0).unwrap();
    let bank = build_templates(&data, &(1..15).collect::<Vec<_>>(), window.clone()).unwrap();
    let z = data.epoch(0, target, window).unwrap();
    let scores: Vec<f64> = bank
        .overall
        .iter()
        .map(|t| sscca_correlations(&z, t, 1, DEFAULT_RIDGE).unwrap().rho1())
        .collect();
    for (i, s) in scores.iter().enumerate() {
        if i != target {
            assert!(scores[target] > *s, "template {i}: {s} >= {}", scores[target]);
        }
    }
}

#[test]
fn noiseless_baseline_is_perfect() {
    let data = generate_ssvep(&SynthSpec::standard(f64::INFINITY, 1)).unwrap();
    let window = window_range(&data, 0.0, 1.0).unwrap();
    for test in [0, 7] {
        let train: Vec<usize> = (0..15).filter(|t| *t != test).collect();
        let bank = build_templates(&data, &train, window.clone()).unwrap();
        for f in 0..12 {
            let z = data.epoch(test, f, window.clone()).unwrap();
            let (idx, _) = sscca_recognize_baseline(&z, &bank.overall, 1, DEFAULT_RIDGE).unwrap();
            assert_eq!(idx, f);
        }
    }
}
